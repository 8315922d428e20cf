#include "nwo/model.hpp"

#include <algorithm>

namespace nwo {

namespace {

// Hermite cubic through (x0, p0) with slope m0 and (x1, p1) with slope m1,
// expanded into power-basis coefficients.
CubicPoly hermite(const Rational& x0, const Rational& p0, const Rational& m0,
                  const Rational& x1, const Rational& p1, const Rational& m1) {
    const Rational h = x1 - x0;
    const Rational secant = (p1 - p0) / h;
    const Rational two(2), three(3);
    const Rational C = (three * secant - two * m0 - m1) / h;
    const Rational D = (m0 + m1 - two * secant) / (h * h);
    CubicPoly p;
    p.c3 = D;
    p.c2 = C - three * D * x0;
    p.c1 = m0 - two * C * x0 + three * D * x0 * x0;
    p.c0 = p0 - m0 * x0 + C * x0 * x0 - D * x0 * x0 * x0;
    return p;
}

// Exact range of the bridge derivative (a quadratic) over [lo, hi].
std::pair<Rational, Rational> quadratic_range(const CubicPoly& p, const Rational& lo,
                                              const Rational& hi) {
    const Rational a = p.derivative_at(lo);
    const Rational b = p.derivative_at(hi);
    Rational mn = rmin(a, b), mx = rmax(a, b);
    if (!p.c3.is_zero()) {
        const Rational vertex = -p.c2 / (Rational(3) * p.c3);
        if (lo < vertex && vertex < hi) {
            const Rational v = p.derivative_at(vertex);
            mn = rmin(mn, v);
            mx = rmax(mx, v);
        }
    }
    return {mn, mx};
}

} // namespace

GapBlend GapBlend::make(Rational lo, Rational hi, LinearFunc left, LinearFunc right) {
    if (!(lo < hi))
        throw validation_error("ERR_GAP_DEGENERATE", "gap interval must be nondegenerate");

    GapBlend g;
    g.lo = lo;
    g.hi = hi;
    g.left = left;
    g.right = right;

    if (left == right) {
        g.mid_lo = lo;
        g.mid_hi = hi;
        g.bridge = CubicPoly{left.intercept, left.slope, Rational(0), Rational(0)};
        g.deriv_min = g.deriv_max = left.slope;
        return g;
    }

    g.mid_lo = lo;
    g.mid_hi = hi;
    if (left.slope != right.slope) {
        const Rational cross = (right.intercept - left.intercept) / (left.slope - right.slope);
        if (lo < cross && cross < hi) {
            const Rational u = rmin(cross - lo, hi - cross);
            g.mid_lo = cross - u;
            g.mid_hi = cross + u;
        }
    }
    g.bridge = hermite(g.mid_lo, left.at(g.mid_lo), left.slope,
                       g.mid_hi, right.at(g.mid_hi), right.slope);

    auto [mn, mx] = quadratic_range(g.bridge, g.mid_lo, g.mid_hi);
    g.deriv_min = rmin(mn, rmin(left.slope, right.slope));
    g.deriv_max = rmax(mx, rmax(left.slope, right.slope));
    return g;
}

Rational GapBlend::value(const Rational& x) const {
    if (x < mid_lo) return left.at(x);
    if (x > mid_hi) return right.at(x);
    return bridge.at(x);
}

Rational GapBlend::derivative(const Rational& x) const {
    if (x < mid_lo) return left.slope;
    if (x > mid_hi) return right.slope;
    return bridge.derivative_at(x);
}

PiecewiseModel PiecewiseModel::assemble(Rational half_width, std::vector<AffinePiece> pieces,
                                        std::vector<GapBlend> gaps) {
    if (half_width.sign() <= 0)
        throw validation_error("ERR_DOMAIN", "half width M must be positive");
    for (const auto& p : pieces) {
        if (!(p.lo < p.hi))
            throw validation_error("ERR_PIECE_DEGENERATE", "piece interval must be nondegenerate");
        if (p.slope.is_zero())
            throw validation_error("ERR_PIECE_CONSTANT", "piece slope must be nonzero");
    }

    PiecewiseModel m;
    m.half_width_ = std::move(half_width);
    m.pieces_ = std::move(pieces);
    m.gaps_ = std::move(gaps);

    // Canonical storage order: piece and gap indices are positions in the
    // left-to-right sweep of the domain.
    std::sort(m.pieces_.begin(), m.pieces_.end(),
              [](const AffinePiece& a, const AffinePiece& b) { return a.lo < b.lo; });
    std::sort(m.gaps_.begin(), m.gaps_.end(),
              [](const GapBlend& a, const GapBlend& b) { return a.lo < b.lo; });

    m.order_.reserve(m.pieces_.size() + m.gaps_.size());
    for (std::size_t i = 0; i < m.pieces_.size(); ++i)
        m.order_.push_back({Segment::Kind::Piece, i});
    for (std::size_t i = 0; i < m.gaps_.size(); ++i)
        m.order_.push_back({Segment::Kind::Gap, i});

    auto seg_lo = [&m](const Segment& s) -> const Rational& {
        return s.kind == Segment::Kind::Piece ? m.pieces_[s.index].lo : m.gaps_[s.index].lo;
    };
    auto seg_hi = [&m](const Segment& s) -> const Rational& {
        return s.kind == Segment::Kind::Piece ? m.pieces_[s.index].hi : m.gaps_[s.index].hi;
    };
    std::sort(m.order_.begin(), m.order_.end(),
              [&](const Segment& a, const Segment& b) { return seg_lo(a) < seg_lo(b); });

    if (m.order_.empty())
        throw validation_error("ERR_DOMAIN_COVER", "model has no segments");

    const Rational M = m.half_width_;
    if (seg_lo(m.order_.front()) != -M || seg_hi(m.order_.back()) != M)
        throw validation_error("ERR_DOMAIN_COVER", "segments must cover exactly [-M, M]");

    auto value_at = [&m](const Segment& s, const Rational& x) {
        return s.kind == Segment::Kind::Piece ? m.pieces_[s.index].value(x)
                                              : m.gaps_[s.index].value(x);
    };
    auto deriv_at = [&m](const Segment& s, const Rational& x) {
        return s.kind == Segment::Kind::Piece ? m.pieces_[s.index].slope
                                              : m.gaps_[s.index].derivative(x);
    };

    for (std::size_t i = 0; i + 1 < m.order_.size(); ++i) {
        const Segment& a = m.order_[i];
        const Segment& b = m.order_[i + 1];
        const Rational& junction = seg_hi(a);
        if (junction != seg_lo(b))
            throw validation_error("ERR_DOMAIN_COVER",
                                   "segments must tile [-M, M] without holes or overlaps");
        if (value_at(a, junction) != value_at(b, junction))
            throw validation_error("ERR_C1_JUNCTION", "value mismatch at x = " + junction.str());
        if (deriv_at(a, junction) != deriv_at(b, junction))
            throw validation_error("ERR_C1_JUNCTION", "derivative mismatch at x = " + junction.str());
    }

    m.order_lo_.reserve(m.order_.size());
    for (const auto& s : m.order_) m.order_lo_.push_back(seg_lo(s));
    return m;
}

Segment PiecewiseModel::locate(const Rational& x) const {
    if (x < -half_width_ || x > half_width_)
        throw input_error("ERR_DOMAIN", "point " + x.str() + " outside [-M, M]");
    auto it = std::upper_bound(order_lo_.begin(), order_lo_.end(), x);
    std::size_t idx = static_cast<std::size_t>(it - order_lo_.begin());
    if (idx > 0) --idx;
    // x may sit on the junction shared with the previous segment; a piece wins
    // over a gap there (both sides agree on value and derivative anyway).
    if (x == order_lo_[idx] && idx > 0) {
        const Segment& here = order_[idx];
        const Segment& prev = order_[idx - 1];
        if (here.kind == Segment::Kind::Gap && prev.kind == Segment::Kind::Piece)
            return prev;
    }
    return order_[idx];
}

std::optional<std::size_t> PiecewiseModel::piece_containing(const Rational& x) const {
    if (x < -half_width_ || x > half_width_) return std::nullopt;
    Segment s = locate(x);
    if (s.kind == Segment::Kind::Piece) return s.index;
    return std::nullopt;
}

Rational PiecewiseModel::eval(const Rational& x) const {
    Segment s = locate(x);
    return s.kind == Segment::Kind::Piece ? pieces_[s.index].value(x) : gaps_[s.index].value(x);
}

Rational PiecewiseModel::eval_derivative(const Rational& x) const {
    Segment s = locate(x);
    return s.kind == Segment::Kind::Piece ? pieces_[s.index].slope : gaps_[s.index].derivative(x);
}

Rational newton_image_of_piece(const AffinePiece& piece) { return piece.newton_image(); }

NiceFamily certify_nice(const PiecewiseModel& model, std::vector<std::size_t> member_ids) {
    if (member_ids.empty()) {
        member_ids.resize(model.pieces().size());
        for (std::size_t i = 0; i < member_ids.size(); ++i) member_ids[i] = i;
    }
    for (std::size_t id : member_ids)
        if (id >= model.pieces().size())
            throw input_error("ERR_FAMILY_MEMBER", "member id out of range");

    std::sort(member_ids.begin(), member_ids.end(), [&](std::size_t a, std::size_t b) {
        return model.pieces()[a].lo < model.pieces()[b].lo;
    });
    for (std::size_t i = 0; i + 1 < member_ids.size(); ++i) {
        const auto& a = model.pieces()[member_ids[i]];
        const auto& b = model.pieces()[member_ids[i + 1]];
        if (!(a.hi < b.lo))
            throw validation_error("ERR_FAMILY_OVERLAP", "family members must be pairwise disjoint");
    }

    const Rational& M = model.half_width();
    NiceFamily fam;
    fam.members = member_ids;
    fam.fates.reserve(member_ids.size());

    // Sorted member lows for the landing search.
    std::vector<Rational> member_lo;
    member_lo.reserve(member_ids.size());
    for (std::size_t id : member_ids) member_lo.push_back(model.pieces()[id].lo);

    for (std::size_t id : member_ids) {
        const Rational image = model.pieces()[id].newton_image();
        if (image.abs() > M) {
            fam.fates.push_back({FateKind::Escapes, image});
            continue;
        }
        auto it = std::upper_bound(member_lo.begin(), member_lo.end(), image);
        std::size_t cand = static_cast<std::size_t>(it - member_lo.begin());
        if (cand > 0) --cand;
        const AffinePiece& target = model.pieces()[fam.members[cand]];
        if (target.strictly_contains(image)) {
            fam.fates.push_back({FateKind::LandsIn, image, cand});
            continue;
        }
        // Not nice: diagnose.
        for (std::size_t mid : fam.members) {
            const AffinePiece& mp = model.pieces()[mid];
            if (image == mp.lo || image == mp.hi)
                throw NotNiceError(id, image, NotNiceError::Reason::OnBoundary,
                                   "image " + image.str() + " of piece lies on a member boundary");
        }
        Segment s = model.locate(image);
        if (s.kind == Segment::Kind::Gap && model.gaps()[s.index].lo < image &&
            image < model.gaps()[s.index].hi)
            throw NotNiceError(id, image, NotNiceError::Reason::InGap,
                               "image " + image.str() + " of piece falls inside a gap");
        throw NotNiceError(id, image, NotNiceError::Reason::InNoMember,
                           "image " + image.str() + " lands in no member's interior");
    }
    return fam;
}

Rational measure_union(const PiecewiseModel& model, const NiceFamily& family) {
    Rational total(0);
    Rational prev_hi;
    bool first = true;
    for (std::size_t id : family.members) {
        const AffinePiece& p = model.pieces()[id];
        if (!first && !(prev_hi < p.lo))
            throw validation_error("ERR_FAMILY_OVERLAP", "family members must be pairwise disjoint");
        prev_hi = p.hi;
        first = false;
        total += p.length();
    }
    return total;
}

namespace {

// Local description of a model over an elementary interval: a cubic (pieces
// and flank lines are cubics with c2 = c3 = 0).
CubicPoly local_cubic(const PiecewiseModel& m, const Rational& mid) {
    Segment s = m.locate(mid);
    if (s.kind == Segment::Kind::Piece) {
        const AffinePiece& p = m.pieces()[s.index];
        return CubicPoly{p.intercept, p.slope, Rational(0), Rational(0)};
    }
    const GapBlend& g = m.gaps()[s.index];
    if (mid < g.mid_lo) return CubicPoly{g.left.intercept, g.left.slope, Rational(0), Rational(0)};
    if (mid > g.mid_hi) return CubicPoly{g.right.intercept, g.right.slope, Rational(0), Rational(0)};
    return g.bridge;
}

void append_breakpoints(const PiecewiseModel& m, std::vector<Rational>& out) {
    for (const auto& p : m.pieces()) {
        out.push_back(p.lo);
        out.push_back(p.hi);
    }
    for (const auto& g : m.gaps()) {
        out.push_back(g.lo);
        out.push_back(g.hi);
        out.push_back(g.mid_lo);
        out.push_back(g.mid_hi);
    }
}

} // namespace

Rational d1_upper_bound(const PiecewiseModel& m1, const PiecewiseModel& m2) {
    if (m1.half_width() != m2.half_width())
        throw input_error("ERR_DOMAIN_MISMATCH", "models must share the same [-M, M]");

    std::vector<Rational> cuts;
    append_breakpoints(m1, cuts);
    append_breakpoints(m2, cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    Rational value_sup(0), deriv_sup(0);
    const Rational two(2);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Rational& u = cuts[i];
        const Rational& v = cuts[i + 1];
        const Rational mid = (u + v) / two;
        CubicPoly a = local_cubic(m1, mid);
        CubicPoly b = local_cubic(m2, mid);
        CubicPoly d{a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2, a.c3 - b.c3};

        // sup |d'| over [u, v] is exact: d' is a quadratic.
        Rational dsup = rmax(d.derivative_at(u).abs(), d.derivative_at(v).abs());
        if (!d.c3.is_zero()) {
            const Rational vertex = -d.c2 / (Rational(3) * d.c3);
            if (u < vertex && vertex < v) dsup = rmax(dsup, d.derivative_at(vertex).abs());
        }
        deriv_sup = rmax(deriv_sup, dsup);

        Rational vsup;
        if (d.c3.is_zero() && d.c2.is_zero()) {
            vsup = rmax(d.at(u).abs(), d.at(v).abs());
        } else if (d.c3.is_zero()) {
            vsup = rmax(d.at(u).abs(), d.at(v).abs());
            const Rational vertex = -d.c1 / (two * d.c2);
            if (u < vertex && vertex < v) vsup = rmax(vsup, d.at(vertex).abs());
        } else {
            vsup = rmax(d.at(u).abs(), d.at(v).abs()) + (v - u) / two * dsup;
        }
        value_sup = rmax(value_sup, vsup);
    }
    return value_sup + deriv_sup;
}

} // namespace nwo
