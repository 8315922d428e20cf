#include "nwo/synthesis.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace nwo {

namespace {

long ceil_to_long(const Rational& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.numerator().get_mpz_t(), q.denominator().get_mpz_t());
    if (!r.fits_slong_p())
        throw construction_error("ERR_PARTITION_SIZE", "partition size does not fit a machine word");
    return r.get_si();
}

bool is_integer(const Rational& q) { return q.denominator() == 1; }

// Distance from x to the nearest element of a sorted set.
Rational dist_to_set(const Rational& x, const std::vector<Rational>& sorted) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    Rational best(-1);
    if (it != sorted.end()) best = *it - x;
    if (it != sorted.begin()) {
        Rational d = x - *(it - 1);
        if (best.sign() < 0 || d < best) best = d;
    }
    return best; // negative only when the set is empty
}

bool set_contains(const std::vector<Rational>& sorted, const Rational& x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    return it != sorted.end() && *it == x;
}

} // namespace

std::vector<Rational> perturb_values(std::span<const Rational> nodes,
                                     std::span<const Rational> values, const Rational& epsilon,
                                     std::uint64_t seed, std::uint32_t max_retries,
                                     ConstructionLog* log) {
    if (nodes.size() < 2 || nodes.size() != values.size())
        throw input_error("ERR_PARTITION", "need matching nodes and values, at least two");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1]))
            throw input_error("ERR_PARTITION", "nodes must be strictly increasing");
    if (epsilon.sign() <= 0) throw input_error("ERR_EPSILON", "epsilon must be positive");

    const std::size_t count = nodes.size();
    const Rational bound12 = epsilon / Rational(12);

    // Jitter amplitude at node i is scaled by the shorter adjacent segment so
    // that per-segment slope changes stay below epsilon/12.
    std::vector<Rational> amp(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rational scale(1);
        if (i > 0) scale = rmin(scale, nodes[i] - nodes[i - 1]);
        if (i + 1 < count) scale = rmin(scale, nodes[i + 1] - nodes[i]);
        amp[i] = bound12 * scale / Rational(2);
    }

    std::vector<Rational> sorted_nodes(nodes.begin(), nodes.end());

    auto violations = [&](const std::vector<Rational>& w) {
        std::set<std::size_t> bad;
        // pairwise distinct
        std::vector<std::size_t> order(count);
        for (std::size_t i = 0; i < count; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return w[a] < w[b]; });
        for (std::size_t i = 0; i + 1 < count; ++i)
            if (w[order[i]] == w[order[i + 1]]) {
                bad.insert(order[i]);
                bad.insert(order[i + 1]);
            }
        for (std::size_t i = 0; i < count; ++i)
            if (!((w[i] - values[i]).abs() < bound12)) bad.insert(i);
        for (std::size_t j = 1; j < count; ++j) {
            const Rational len = nodes[j] - nodes[j - 1];
            const Rational dslope = ((w[j] - w[j - 1]) - (values[j] - values[j - 1])) / len;
            if (!(dslope.abs() < bound12)) {
                bad.insert(j - 1);
                bad.insert(j);
            }
            if (w[j] == w[j - 1]) continue; // already flagged as duplicate
            const Rational slope = (w[j] - w[j - 1]) / len;
            const Rational intercept_x = nodes[j] - w[j] / slope;
            if (set_contains(sorted_nodes, intercept_x)) {
                bad.insert(j - 1);
                bad.insert(j);
            }
        }
        return bad;
    };

    std::vector<Rational> w(values.begin(), values.end());
    SplitMix64 rng(seed);
    for (std::uint32_t attempt = 0; attempt <= max_retries; ++attempt) {
        auto bad = violations(w);
        if (bad.empty()) return w;
        if (log)
            log->note("perturb_values.retry", "attempt " + std::to_string(attempt) + ", " +
                                                  std::to_string(bad.size()) + " nodes rejected");
        for (std::size_t i : bad) w[i] = values[i] + jitter(rng, amp[i]);
    }
    throw construction_error("ERR_REJECTION_BUDGET",
                             "perturbation rejected too often; retry with finer perturbation");
}

PiecewiseModel smooth_gaps(const Polyline& h,
                           std::span<const std::pair<Rational, Rational>> gap_intervals,
                           const Rational& half_width) {
    const auto& xs = h.xs;
    const auto& ys = h.ys;
    if (xs.size() < 2 || xs.size() != ys.size())
        throw input_error("ERR_POLYLINE", "polyline needs matching xs/ys, at least two nodes");
    if (xs.front() != -half_width || xs.back() != half_width)
        throw input_error("ERR_POLYLINE", "polyline must span [-M, M]");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            throw input_error("ERR_POLYLINE", "polyline nodes must be strictly increasing");

    const std::size_t nseg = xs.size() - 1;
    std::vector<LinearFunc> lines(nseg);
    for (std::size_t j = 0; j < nseg; ++j) {
        const Rational slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
        lines[j] = {slope, ys[j] - slope * xs[j]};
    }

    std::vector<std::pair<Rational, Rational>> gaps(gap_intervals.begin(), gap_intervals.end());
    std::sort(gaps.begin(), gaps.end());

    // Each gap must contain exactly one interior node, strictly between its
    // neighbours; every corner (slope change) must be covered by a gap.
    std::vector<std::size_t> gap_node(gaps.size());
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        const auto& [lo, hi] = gaps[k];
        if (!(lo < hi) || !( -half_width < lo) || !(hi < half_width))
            throw input_error("ERR_GAP_PLACEMENT", "gap must be a nondegenerate interval in (-M, M)");
        std::size_t found = 0, node = 0;
        for (std::size_t i = 1; i + 1 < xs.size(); ++i)
            if (lo < xs[i] && xs[i] < hi) {
                ++found;
                node = i;
            }
        if (found != 1)
            throw input_error("ERR_GAP_PLACEMENT", "gap must contain exactly one breakpoint");
        if (!(xs[node - 1] < lo) || !(hi < xs[node + 1]))
            throw input_error("ERR_GAP_PLACEMENT",
                              "gap must stay strictly between neighbouring breakpoints");
        if (k > 0 && !(gaps[k - 1].second < lo))
            throw input_error("ERR_GAP_PLACEMENT", "gaps must be pairwise disjoint with separation");
        gap_node[k] = node;
    }
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        if (lines[i - 1].slope == lines[i].slope) continue; // no corner, gap optional
        bool covered = false;
        for (std::size_t k = 0; k < gaps.size(); ++k)
            if (gap_node[k] == i) covered = true;
        if (!covered)
            throw input_error("ERR_GAP_PLACEMENT",
                              "breakpoint " + xs[i].str() + " has a corner but no gap");
    }

    std::vector<AffinePiece> pieces;
    std::vector<GapBlend> blends;
    Rational cursor = -half_width;
    std::size_t seg = 0;
    for (std::size_t k = 0; k < gaps.size(); ++k) {
        const auto& [lo, hi] = gaps[k];
        const std::size_t node = gap_node[k];
        const LinearFunc& left = lines[node - 1];
        const LinearFunc& right = lines[node];
        if (left.slope.is_zero() || right.slope.is_zero())
            throw construction_error("ERR_SEGMENT_CONSTANT", "polyline segment has zero slope");
        pieces.push_back({cursor, lo, left.slope, left.intercept});
        blends.push_back(GapBlend::make(lo, hi, left, right));
        cursor = hi;
        seg = node;
    }
    const LinearFunc& last = lines[seg];
    if (last.slope.is_zero())
        throw construction_error("ERR_SEGMENT_CONSTANT", "polyline segment has zero slope");
    pieces.push_back({cursor, half_width, last.slope, last.intercept});

    return PiecewiseModel::assemble(half_width, std::move(pieces), std::move(blends));
}

ApproxResult build_nice_approximation(const InputFunction& f, const Rational& epsilon,
                                      const Rational& delta, const Rational& t,
                                      std::uint64_t seed, std::uint32_t max_retries,
                                      ConstructionLog* log, const Rational* mesh_cap) {
    const Rational M = f.half_width();
    if (epsilon.sign() <= 0 || delta.sign() <= 0)
        throw input_error("ERR_EPSILON", "epsilon and delta must be positive");
    if (!( -M < t && t < M)) throw input_error("ERR_T_PLACEMENT", "t must lie in (-M, M)");

    Rational r = f.mesh_for_oscillation(epsilon / Rational(12));
    if (mesh_cap && *mesh_cap < r) r = *mesh_cap;

    long n = std::max(8L, ceil_to_long(Rational(2) * M / r));
    // Nudge the partition until no node coincides with t.
    while (is_integer(Rational(static_cast<long>(n)) * (t + M) / (Rational(2) * M))) ++n;

    std::vector<Rational> nodes(static_cast<std::size_t>(n) + 1);
    std::vector<Rational> values(nodes.size());
    for (long i = 0; i <= n; ++i) {
        nodes[static_cast<std::size_t>(i)] = -M + Rational(2) * M * Rational(i, n);
        values[static_cast<std::size_t>(i)] = f.at(nodes[static_cast<std::size_t>(i)]);
    }

    std::vector<Rational> w = perturb_values(nodes, values, epsilon, seed, max_retries, log);

    // Segment intercepts; these are exactly the Newton images of the pieces.
    std::vector<Rational> forbidden{-M, M, t};
    for (std::size_t j = 1; j < nodes.size(); ++j) {
        const Rational slope = (w[j] - w[j - 1]) / (nodes[j] - nodes[j - 1]);
        forbidden.push_back(nodes[j] - w[j] / slope);
    }
    std::sort(forbidden.begin(), forbidden.end());
    forbidden.erase(std::unique(forbidden.begin(), forbidden.end()), forbidden.end());

    const Rational delta_share = delta / (Rational(8) * Rational(static_cast<long>(n - 1)));
    std::vector<std::pair<Rational, Rational>> gaps;
    gaps.reserve(nodes.size() - 2);
    for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
        Rational u = rmin((nodes[i] - nodes[i - 1]) / Rational(4),
                          (nodes[i + 1] - nodes[i]) / Rational(4));
        u = rmin(u, dist_to_set(nodes[i], forbidden) / Rational(2));
        u = rmin(u, delta_share);
        u = rmin(u, Rational(1, 12));
        gaps.emplace_back(nodes[i] - u, nodes[i] + u);
    }

    ApproxResult result{smooth_gaps({nodes, w}, gaps, M), {}, Rational(0), Rational(0)};
    result.family = certify_nice(result.model, {});

    // Independent validators; construction bookkeeping is never trusted.
    result.d1_bound = d1_bound_against_model(f, result.model);
    if (!(result.d1_bound < epsilon))
        throw construction_error("ERR_D1_BOUND", "certified d1 bound " + result.d1_bound.str() +
                                                     " does not beat epsilon");
    result.measure = measure_union(result.model, result.family);
    if (!(result.measure > Rational(2) * M - delta))
        throw construction_error("ERR_MEASURE", "family union measure too small");
    auto tpiece = result.model.piece_containing(t);
    if (!tpiece || !result.model.pieces()[*tpiece].strictly_contains(t))
        throw construction_error("ERR_T_PLACEMENT", "t not interior to the family union");
    return result;
}

Rational retarget_max_radius(const PiecewiseModel& g, std::size_t piece_id,
                             const Rational& epsilon) {
    if (piece_id >= g.pieces().size())
        throw input_error("ERR_FAMILY_MEMBER", "piece id out of range");
    const AffinePiece& J = g.pieces()[piece_id];
    const Rational z = J.newton_image();
    if (J.contains(z))
        throw input_error("ERR_RETARGET_PRE", "piece Newton image must lie outside the piece");
    const Rational dist = z < J.lo ? J.lo - z : z - J.hi;
    return dist * epsilon / (Rational(2) * J.slope.abs() + epsilon);
}

RetargetResult retarget(const PiecewiseModel& g, std::size_t piece_id, const Rational& x,
                        const Rational& y, const Rational& delta_radius,
                        const Rational& epsilon) {
    const AffinePiece J = g.pieces().at(piece_id);
    if (!J.strictly_contains(x))
        throw input_error("ERR_RETARGET_PRE", "x must be interior to the piece");
    if (delta_radius.sign() <= 0 || epsilon.sign() <= 0)
        throw input_error("ERR_RETARGET_PRE", "delta_radius and epsilon must be positive");

    const Rational z = J.newton_image();
    const Rational r_max = retarget_max_radius(g, piece_id, epsilon);
    if (!((y - z).abs() < r_max))
        throw construction_error("ERR_RETARGET_RADIUS",
                                 "target outside the admissible radius; maximal r = " + r_max.str());

    Rational gamma = rmin(delta_radius / Rational(3), Rational(1, 32));
    gamma = rmin(gamma, (x - J.lo) / Rational(4));
    gamma = rmin(gamma, (J.hi - x) / Rational(4));

    const Rational gx = J.value(x);
    const LinearFunc orig{J.slope, J.intercept};
    const LinearFunc center{gx / (x - y), gx - gx / (x - y) * x};

    const Rational two(2);
    GapBlend left_gap = GapBlend::make(x - two * gamma, x - gamma, orig, center);
    GapBlend right_gap = GapBlend::make(x + gamma, x + two * gamma, center, orig);

    // Certified d1 change over the modified window (the models agree outside).
    {
        Rational vsup(0), dsup(0);
        auto account = [&](const GapBlend& gap) {
            Polynomial diff{{gap.bridge.c0 - orig.intercept, gap.bridge.c1 - orig.slope,
                             gap.bridge.c2, gap.bridge.c3}};
            vsup = rmax(vsup, poly_sup_abs_bound(diff, gap.lo, gap.hi));
            dsup = rmax(dsup, poly_sup_abs_bound(diff.derivative(), gap.lo, gap.hi));
        };
        account(left_gap);
        account(right_gap);
        const Rational slope_diff = (center.slope - orig.slope).abs();
        dsup = rmax(dsup, slope_diff);
        vsup = rmax(vsup, gamma * slope_diff); // |center - orig| peaks at the window edge
        if (!(vsup + dsup < epsilon))
            throw construction_error("ERR_RETARGET_D1",
                                     "certified d1 change " + (vsup + dsup).str() +
                                         " does not stay below epsilon");
    }

    std::vector<AffinePiece> pieces;
    pieces.reserve(g.pieces().size() + 2);
    for (std::size_t i = 0; i < g.pieces().size(); ++i) {
        if (i == piece_id) continue;
        pieces.push_back(g.pieces()[i]);
    }
    pieces.push_back({J.lo, x - two * gamma, orig.slope, orig.intercept});
    pieces.push_back({x - gamma, x + gamma, center.slope, center.intercept});
    pieces.push_back({x + two * gamma, J.hi, orig.slope, orig.intercept});

    std::vector<GapBlend> gaps = g.gaps();
    gaps.push_back(std::move(left_gap));
    gaps.push_back(std::move(right_gap));

    RetargetResult out{PiecewiseModel::assemble(g.half_width(), std::move(pieces), std::move(gaps)),
                       0};
    auto center_id = out.model.piece_containing(x);
    if (!center_id || out.model.pieces()[*center_id].lo != x - gamma)
        throw construction_error("ERR_RETARGET_D1", "center piece lost during splice");
    out.center_piece = *center_id;
    return out;
}

void validate_cycle(const PiecewiseModel& model, const CyclicFamilyRef& cycle) {
    const std::size_t n1 = cycle.member_pieces.size();
    if (n1 < 2)
        throw input_error("ERR_CYCLE", "cyclic family needs at least two intervals");
    if (cycle.points.size() != n1)
        throw input_error("ERR_CYCLE", "cycle needs one landing point per interval");
    std::set<std::size_t> distinct(cycle.member_pieces.begin(), cycle.member_pieces.end());
    if (distinct.size() != n1) throw input_error("ERR_CYCLE", "cycle members must be distinct");
    for (std::size_t i = 0; i < n1; ++i) {
        if (cycle.member_pieces[i] >= model.pieces().size())
            throw input_error("ERR_CYCLE", "cycle member out of range");
        const AffinePiece& J = model.pieces()[cycle.member_pieces[i]];
        if (!J.strictly_contains(cycle.points[i]))
            throw validation_error("ERR_CYCLE", "cycle point not interior to its interval");
        const Rational image = J.newton_image();
        if (image != cycle.points[(i + 1) % n1])
            throw validation_error("ERR_CYCLE", "Newton image does not match the next cycle point");
    }
}

MultiplyResult multiply_cycle_period(const PiecewiseModel& g, const NiceFamily& family,
                                     const CyclicFamilyRef& cycle, const Rational& epsilon,
                                     const Rational& Delta, std::uint32_t m, const Rational& t,
                                     std::uint64_t seed, std::uint32_t max_retries,
                                     ConstructionLog* log, const Rational* window_cap) {
    validate_cycle(g, cycle);
    if (m < 1) throw input_error("ERR_MULTIPLIER", "m must be at least 1");
    if (epsilon.sign() <= 0 || Delta.sign() <= 0)
        throw input_error("ERR_EPSILON", "epsilon and Delta must be positive");

    const std::size_t n1 = cycle.member_pieces.size();
    bool t_inside = false;
    for (std::size_t id : cycle.member_pieces)
        if (g.pieces()[id].strictly_contains(t)) t_inside = true;
    if (!t_inside)
        throw input_error("ERR_T_PLACEMENT", "t must be interior to the cycle union");

    // Forbidden set: t and every family image, except the cycle points.
    std::vector<Rational> forbidden;
    forbidden.push_back(t);
    for (const PieceFate& fate : family.fates) forbidden.push_back(fate.image);
    std::sort(forbidden.begin(), forbidden.end());
    forbidden.erase(std::unique(forbidden.begin(), forbidden.end()), forbidden.end());
    for (const Rational& z : cycle.points)
        if (auto it = std::lower_bound(forbidden.begin(), forbidden.end(), z);
            it != forbidden.end() && *it == z)
            forbidden.erase(it);

    Rational r_min(-1), rho(-1);
    for (std::size_t i = 0; i < n1; ++i) {
        const Rational r = retarget_max_radius(g, cycle.member_pieces[i], epsilon);
        if (r_min.sign() < 0 || r < r_min) r_min = r;
        const AffinePiece& J = g.pieces()[cycle.member_pieces[i]];
        const Rational margin = rmin(cycle.points[i] - J.lo, J.hi - cycle.points[i]);
        if (rho.sign() < 0 || margin < rho) rho = margin;
    }
    const Rational spread = rmin(r_min, rho / Rational(2)) / Rational(2);
    const Rational h = spread / Rational(static_cast<long>(m));

    SplitMix64 rng(seed);
    std::vector<std::vector<Rational>> marks; // marks[i][j-1], marks[i][0] == z_i
    Rational window;
    bool placed = false;
    for (std::uint32_t attempt = 0; attempt <= max_retries && !placed; ++attempt) {
        const Rational jit =
            attempt == 0 ? h / Rational(4) : sample_in(rng, h / Rational(8), Rational(3) * h / Rational(8));
        marks.assign(n1, {});
        bool ok = true;
        Rational min_fdist(-1);
        for (std::size_t i = 0; i < n1 && ok; ++i) {
            for (std::uint32_t j = 0; j < m; ++j) {
                Rational p = cycle.points[i];
                if (j > 0) p += Rational(static_cast<long>(j)) * h + jit;
                if (set_contains(forbidden, p)) {
                    ok = false;
                    break;
                }
                const Rational fd = dist_to_set(p, forbidden);
                if (fd.sign() > 0 && (min_fdist.sign() < 0 || fd < min_fdist)) min_fdist = fd;
                marks[i].push_back(p);
            }
        }
        if (!ok) {
            if (log) log->note("multiply.placement_retry", "attempt " + std::to_string(attempt));
            continue;
        }
        window = rmin(h / Rational(4), rho / Rational(4));
        if (min_fdist.sign() > 0) window = rmin(window, min_fdist / Rational(4));
        // Measure removed is below (2/3) * window * m * (n+1) per the gap
        // lengths; the Delta budget gets a factor-2 safety margin.
        window = rmin(window, Rational(3) * Delta /
                                  (Rational(4) * Rational(static_cast<long>(m)) *
                                   Rational(static_cast<long>(n1))));
        if (window_cap) window = rmin(window, *window_cap);
        placed = true;
    }
    if (!placed)
        throw construction_error("ERR_PLACEMENT",
                                 "could not place cycle marks away from the forbidden set");

    // Rewire: marks[i][j] -> marks[i+1][j], marks[n][j] -> marks[0][j+1],
    // marks[n][m-1] -> marks[0][0].
    PiecewiseModel cur = g;
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::uint32_t j = 0; j < m; ++j) {
            Rational target;
            if (i + 1 < n1) target = marks[i + 1][j];
            else if (j + 1 < m) target = marks[0][j + 1];
            else target = marks[0][0];
            auto pid = cur.piece_containing(marks[i][j]);
            if (!pid)
                throw construction_error("ERR_PLACEMENT", "cycle mark not on an affine piece");
            RetargetResult res = retarget(cur, *pid, marks[i][j], target, window, epsilon);
            cur = std::move(res.model);
        }
    }

    MultiplyResult out{std::move(cur), {}, {}, Rational(0), Rational(0)};

    // Output family = (F \ J) u S: the untouched members plus every new piece
    // inside the old cycle union.
    {
        std::vector<std::pair<Rational, Rational>> old_cycle_intervals;
        for (std::size_t id : cycle.member_pieces) {
            const AffinePiece& J = g.pieces()[id];
            old_cycle_intervals.emplace_back(J.lo, J.hi);
        }
        std::vector<std::pair<Rational, Rational>> kept_members;
        for (std::size_t k = 0; k < family.members.size(); ++k) {
            const AffinePiece& p = g.pieces()[family.members[k]];
            bool in_cycle = false;
            for (std::size_t id : cycle.member_pieces)
                if (id == family.members[k]) in_cycle = true;
            if (!in_cycle) kept_members.emplace_back(p.lo, p.hi);
        }
        std::vector<std::size_t> member_ids;
        for (std::size_t i = 0; i < out.model.pieces().size(); ++i) {
            const AffinePiece& p = out.model.pieces()[i];
            bool member = false;
            for (const auto& [lo, hi] : old_cycle_intervals)
                if (lo <= p.lo && p.hi <= hi) member = true;
            for (const auto& [lo, hi] : kept_members)
                if (lo == p.lo && hi == p.hi) member = true;
            if (member) member_ids.push_back(i);
        }
        out.family = certify_nice(out.model, std::move(member_ids));
    }

    // New cycle in orbit order z_0 -> z_1 -> ... -> z_n -> marks[0][1] -> ...
    for (std::uint32_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < n1; ++i) {
            auto pid = out.model.piece_containing(marks[i][j]);
            if (!pid || !out.model.pieces()[*pid].strictly_contains(marks[i][j]))
                throw construction_error("ERR_PLACEMENT", "cycle mark lost during surgery");
            out.cycle.member_pieces.push_back(*pid);
            out.cycle.points.push_back(marks[i][j]);
            out.max_center_diameter =
                rmax(out.max_center_diameter, out.model.pieces()[*pid].length());
        }
    }
    validate_cycle(out.model, out.cycle);

    // Independent validators.
    std::vector<std::pair<Rational, Rational>> old_intervals;
    Rational old_measure(0);
    for (std::size_t id : cycle.member_pieces) {
        const AffinePiece& J = g.pieces()[id];
        old_intervals.emplace_back(J.lo, J.hi);
        old_measure += J.length();
    }
    if (!models_equal_outside(g, out.model, old_intervals))
        throw construction_error("ERR_MULTIPLY_LOCALITY", "model changed outside the cycle union");

    Rational new_measure(0);
    for (const AffinePiece& p : out.model.pieces())
        for (const auto& [lo, hi] : old_intervals)
            if (lo <= p.lo && p.hi <= hi) {
                new_measure += p.length();
                break;
            }
    out.measure_removed = old_measure - new_measure;
    if (!(out.measure_removed < Delta))
        throw construction_error("ERR_MEASURE", "measure removed exceeds Delta");

    const Rational d1 = d1_upper_bound(g, out.model);
    if (!(d1 < epsilon))
        throw construction_error("ERR_D1_BOUND", "certified d1 change exceeds epsilon");

    auto tpiece = out.model.piece_containing(t);
    if (!tpiece || !out.model.pieces()[*tpiece].strictly_contains(t))
        throw construction_error("ERR_T_PLACEMENT", "t lost from the interior of the new family");

    TrajectoryOutcome probe =
        classify(out.model, out.family, out.cycle.points[0], default_max_steps(out.model));
    if (probe.kind != TrajectoryOutcome::Kind::EventuallyPeriodic ||
        probe.period != m * static_cast<std::uint32_t>(n1))
        throw construction_error("ERR_PERIOD", "rebuilt cycle does not classify to period m(n+1)");

    return out;
}

namespace {

// Walk the fate graph from `start` (member order index); returns the member
// order indices of the first cycle of length >= 2 on the walk, if any.
std::optional<std::vector<std::size_t>> cycle_on_chain(const NiceFamily& family,
                                                       std::size_t start) {
    std::map<std::size_t, std::size_t> position;
    std::vector<std::size_t> chain;
    std::size_t cur = start;
    for (;;) {
        auto [it, fresh] = position.emplace(cur, chain.size());
        if (!fresh) {
            std::vector<std::size_t> cycle(chain.begin() + static_cast<long>(it->second),
                                           chain.end());
            if (cycle.size() >= 2) return cycle;
            return std::nullopt;
        }
        chain.push_back(cur);
        const PieceFate& fate = family.fates[cur];
        if (fate.kind == FateKind::Escapes) return std::nullopt;
        cur = fate.target;
    }
}

CyclicFamilyRef cycle_ref_from_members(const PiecewiseModel& model, const NiceFamily& family,
                                       const std::vector<std::size_t>& order_cycle) {
    CyclicFamilyRef ref;
    const std::size_t n1 = order_cycle.size();
    for (std::size_t k = 0; k < n1; ++k) {
        const std::size_t prev = order_cycle[(k + n1 - 1) % n1];
        ref.member_pieces.push_back(family.members[order_cycle[k]]);
        ref.points.push_back(family.fates[prev].image);
    }
    validate_cycle(model, ref);
    return ref;
}

struct CycleSearch {
    PiecewiseModel model;
    NiceFamily family;
    CyclicFamilyRef cycle;
};

CycleSearch find_or_make_cycle(PiecewiseModel model, NiceFamily family, const Rational& t,
                               const Rational& epsilon, std::uint64_t seed,
                               std::uint32_t max_retries, ConstructionLog* log) {
    // Member order index containing t.
    std::optional<std::size_t> start;
    for (std::size_t k = 0; k < family.members.size(); ++k)
        if (model.pieces()[family.members[k]].contains(t)) start = k;
    if (!start) throw input_error("ERR_T_PLACEMENT", "t does not lie in the family union");

    if (auto cyc = cycle_on_chain(family, *start))
        return {model, family, cycle_ref_from_members(model, family, *cyc)};

    for (std::size_t k = 0; k < family.members.size(); ++k)
        if (auto cyc = cycle_on_chain(family, k)) {
            if (log) log->note("tower.cycle", "using a cycle not reachable from t");
            return {model, family, cycle_ref_from_members(model, family, *cyc)};
        }

    // No exact cycle in the fate graph: close an approximate one with two
    // retargets. Need members A, B with N(A) interior to B and N(B) within
    // the admissible radius of Int(A).
    if (log) log->note("tower.cycle", "no fate-graph cycle; trying two-retarget closure");
    std::vector<Rational> avoid{t};
    for (const PieceFate& fate : family.fates) avoid.push_back(fate.image);
    std::sort(avoid.begin(), avoid.end());
    avoid.erase(std::unique(avoid.begin(), avoid.end()), avoid.end());

    SplitMix64 rng(seed);
    for (std::size_t a_idx = 0; a_idx < family.members.size(); ++a_idx) {
        const PieceFate& fa = family.fates[a_idx];
        if (fa.kind != FateKind::LandsIn || fa.target == a_idx) continue;
        const std::size_t b_idx = fa.target;
        const std::size_t a_pid = family.members[a_idx];
        const std::size_t b_pid = family.members[b_idx];
        const AffinePiece& A = model.pieces()[a_pid];
        const AffinePiece& B = model.pieces()[b_pid];
        if (B.contains(B.newton_image())) continue; // root piece, lemma inapplicable
        const Rational xa = fa.image;               // in Int(B)
        const Rational xb = B.newton_image();
        const Rational rb = retarget_max_radius(model, b_pid, epsilon);
        const Rational lo = rmax(A.lo, xb - rb);
        const Rational hi = rmin(A.hi, xb + rb);
        if (!(lo < hi)) continue;

        for (std::uint32_t attempt = 0; attempt <= max_retries; ++attempt) {
            const Rational u = sample_in(rng, lo, hi);
            if (!A.strictly_contains(u) || !((u - xb).abs() < rb) || set_contains(avoid, u))
                continue;
            const Rational d1a = dist_to_set(xa, [&] {
                std::vector<Rational> s = avoid;
                s.erase(std::remove(s.begin(), s.end(), xa), s.end());
                s.push_back(u);
                std::sort(s.begin(), s.end());
                return s;
            }());
            const Rational d2a = dist_to_set(u, avoid);
            if (d1a.sign() <= 0 || d2a.sign() <= 0) continue;
            try {
                RetargetResult r1 =
                    retarget(model, b_pid, xa, u, Rational(3) * d1a / Rational(4), epsilon);
                auto u_pid = r1.model.piece_containing(u);
                if (!u_pid) continue;
                RetargetResult r2 = retarget(r1.model, *u_pid, u, xa,
                                             Rational(3) * d2a / Rational(4), epsilon);
                NiceFamily fam2 = certify_nice(r2.model, {});
                CyclicFamilyRef ref;
                ref.member_pieces = {*r2.model.piece_containing(xa),
                                     *r2.model.piece_containing(u)};
                ref.points = {xa, u};
                validate_cycle(r2.model, ref);
                if (log) log->note("tower.cycle", "closed a 2-cycle with two retargets");
                return {std::move(r2.model), std::move(fam2), std::move(ref)};
            } catch (const Error& e) {
                if (log) log->note("tower.cycle_retry", e.code());
                continue;
            }
        }
    }
    throw construction_error("ERR_NO_CYCLE",
                             "no cycle is reachable or constructible within the epsilon budget");
}

} // namespace

RefinementTower build_tower(const InputFunction& f, std::uint32_t depth,
                            std::span<const std::uint32_t> multipliers,
                            const Rational& epsilon_budget,
                            std::span<const Rational> diameter_bounds, const Rational& t,
                            std::uint64_t seed, const TowerBudgets& budgets,
                            ConstructionLog* log) {
    if (depth < 1 || depth > 32) throw input_error("ERR_TOWER", "depth must be in [1, 32]");
    if (multipliers.size() != depth)
        throw input_error("ERR_TOWER", "need one multiplier slot per level");
    if (multipliers[0] != 1)
        throw input_error("ERR_TOWER", "level-1 multiplier slot must be 1 (unused)");
    for (std::size_t k = 1; k < multipliers.size(); ++k)
        if (multipliers[k] < 2)
            throw input_error("ERR_TOWER", "multipliers beyond the first level must be >= 2");
    if (epsilon_budget.sign() <= 0) throw input_error("ERR_EPSILON", "budget must be positive");

    std::vector<Rational> bounds(diameter_bounds.begin(), diameter_bounds.end());
    if (bounds.empty())
        for (std::uint32_t k = 1; k <= depth; ++k) bounds.push_back(Rational(1, k + 1));
    if (bounds.size() != depth)
        throw input_error("ERR_TOWER", "need one diameter bound per level");

    RefinementTower tower;
    tower.half_width = f.half_width();

    const Rational eps1 = epsilon_budget / Rational(4);
    const Rational mesh_cap = bounds[0] / Rational(2);
    ApproxResult base = build_nice_approximation(f, eps1 / Rational(2), eps1 / Rational(2), t,
                                                 seed, budgets.max_retries, log, &mesh_cap);
    CycleSearch found = find_or_make_cycle(std::move(base.model), std::move(base.family), t,
                                           eps1 / Rational(2), seed + 1, budgets.max_retries, log);

    TowerLevel level1;
    level1.model = std::move(found.model);
    level1.family = std::move(found.family);
    level1.cycle = std::move(found.cycle);
    level1.period = level1.cycle.member_pieces.size();
    level1.multiplier = 1;
    for (std::size_t id : level1.cycle.member_pieces)
        level1.max_diameter = rmax(level1.max_diameter, level1.model.pieces()[id].length());
    if (!(level1.max_diameter <= bounds[0]))
        throw construction_error("ERR_DIAMETER", "level-1 intervals exceed the diameter bound");
    tower.alpha.push_back(level1.period);
    tower.levels.push_back(std::move(level1));

    for (std::uint32_t k = 2; k <= depth; ++k) {
        const TowerLevel& prev = tower.levels.back();
        const std::uint32_t mk = multipliers[k - 1];
        Rational eps_k = epsilon_budget;
        for (std::uint32_t s = 0; s < k + 1; ++s) eps_k = eps_k / Rational(2);

        Rational cycle_measure(0);
        for (std::size_t id : prev.cycle.member_pieces)
            cycle_measure += prev.model.pieces()[id].length();
        const Rational Delta_k = cycle_measure / Rational(4);

        const Rational target_diam = rmin(bounds[k - 1], prev.max_diameter / Rational(2));
        const Rational window_cap = Rational(3) * target_diam / Rational(2);

        MultiplyResult next =
            multiply_cycle_period(prev.model, prev.family, prev.cycle, eps_k, Delta_k, mk,
                                  prev.cycle.points[0], seed + k, budgets.max_retries, log,
                                  &window_cap);

        // Spatial nesting: every new cycle interval inside some previous one.
        for (std::size_t id : next.cycle.member_pieces) {
            const AffinePiece& child = next.model.pieces()[id];
            bool nested = false;
            for (std::size_t pid : prev.cycle.member_pieces) {
                const AffinePiece& parent = prev.model.pieces()[pid];
                if (parent.lo <= child.lo && child.hi <= parent.hi) {
                    nested = true;
                    break;
                }
            }
            if (!nested)
                throw construction_error("ERR_NESTING", "new cycle interval escapes its parent");
        }

        TowerLevel level;
        level.model = std::move(next.model);
        level.family = std::move(next.family);
        level.cycle = std::move(next.cycle);
        level.period = prev.period * mk;
        level.multiplier = mk;
        level.max_diameter = next.max_center_diameter;
        if (!(level.max_diameter <= bounds[k - 1]) || !(level.max_diameter < prev.max_diameter))
            throw construction_error("ERR_DIAMETER", "diameter schedule violated at level " +
                                                         std::to_string(k));
        if (level.cycle.member_pieces.size() != level.period)
            throw construction_error("ERR_PERIOD", "cycle cardinality mismatch");
        tower.alpha.push_back(mk);
        tower.levels.push_back(std::move(level));
    }
    return tower;
}

bool models_equal_outside(const PiecewiseModel& a, const PiecewiseModel& b,
                          std::span<const std::pair<Rational, Rational>> intervals) {
    if (a.half_width() != b.half_width()) return false;

    std::vector<Rational> cuts;
    auto add_cuts = [&cuts](const PiecewiseModel& m) {
        for (const auto& p : m.pieces()) {
            cuts.push_back(p.lo);
            cuts.push_back(p.hi);
        }
        for (const auto& g : m.gaps()) {
            cuts.push_back(g.lo);
            cuts.push_back(g.hi);
            cuts.push_back(g.mid_lo);
            cuts.push_back(g.mid_hi);
        }
    };
    add_cuts(a);
    add_cuts(b);
    for (const auto& [lo, hi] : intervals) {
        cuts.push_back(lo);
        cuts.push_back(hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto local = [](const PiecewiseModel& m, const Rational& mid) -> CubicPoly {
        Segment s = m.locate(mid);
        if (s.kind == Segment::Kind::Piece) {
            const AffinePiece& p = m.pieces()[s.index];
            return CubicPoly{p.intercept, p.slope, Rational(0), Rational(0)};
        }
        const GapBlend& g = m.gaps()[s.index];
        if (mid < g.mid_lo) return CubicPoly{g.left.intercept, g.left.slope, Rational(0), Rational(0)};
        if (mid > g.mid_hi)
            return CubicPoly{g.right.intercept, g.right.slope, Rational(0), Rational(0)};
        return g.bridge;
    };

    // Exact function equality on every elementary subinterval outside the
    // excluded open intervals.
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Rational mid = (cuts[i] + cuts[i + 1]) / Rational(2);
        bool excluded = false;
        for (const auto& [lo, hi] : intervals)
            if (lo < mid && mid < hi) excluded = true;
        if (excluded) continue;
        if (cuts[i] < -a.half_width() || cuts[i + 1] > a.half_width()) continue;
        const CubicPoly pa = local(a, mid);
        const CubicPoly pb = local(b, mid);
        if (pa.c0 != pb.c0 || pa.c1 != pb.c1 || pa.c2 != pb.c2 || pa.c3 != pb.c3) return false;
    }
    return true;
}

} // namespace nwo
