#include "nwo/dynamics.hpp"

#include <algorithm>
#include <map>

namespace nwo {

StepResult newton_step(const PiecewiseModel& model, const Rational& x) {
    Segment s = model.locate(x);
    if (s.kind == Segment::Kind::Gap) {
        const GapBlend& g = model.gaps()[s.index];
        if (g.derivative(x).is_zero())
            return {StepResult::Kind::Undefined, Rational(0), UndefinedReason::ZeroDerivative};
        return {StepResult::Kind::Undefined, Rational(0), UndefinedReason::InGap};
    }
    const Rational image = model.pieces()[s.index].newton_image();
    if (image.abs() > model.half_width()) return {StepResult::Kind::Diverged, image};
    return {StepResult::Kind::Next, image};
}

std::uint32_t default_max_steps(const PiecewiseModel& model) {
    return static_cast<std::uint32_t>(4 * model.pieces().size() + 8);
}

namespace {

struct RationalLess {
    bool operator()(const Rational& a, const Rational& b) const { return a < b; }
};

// The member piece containing x, if any (members are sorted by interval).
std::optional<std::size_t> member_piece_at(const PiecewiseModel& model, const NiceFamily& family,
                                           const Rational& x) {
    auto it = std::upper_bound(
        family.members.begin(), family.members.end(), x,
        [&](const Rational& v, std::size_t id) { return v < model.pieces()[id].lo; });
    if (it == family.members.begin()) return std::nullopt;
    std::size_t id = *(it - 1);
    if (model.pieces()[id].contains(x)) return id;
    return std::nullopt;
}

} // namespace

TrajectoryOutcome classify(const PiecewiseModel& model, const NiceFamily& family,
                           const Rational& x, std::uint32_t max_steps) {
    TrajectoryOutcome out;
    if (!member_piece_at(model, family, x)) {
        out.kind = TrajectoryOutcome::Kind::Undefined;
        out.reason = UndefinedReason::InGap;
        return out;
    }

    std::map<Rational, std::uint32_t, RationalLess> seen; // orbit point -> step index
    std::vector<Rational> orbit;                          // orbit[k] = x_k
    orbit.push_back(x);
    seen.emplace(x, 0);

    Rational cur = x;
    for (std::uint32_t k = 0;; ++k) {
        auto pid = member_piece_at(model, family, cur);
        if (!pid) {
            // Cannot happen for certified families; surfaced for robustness.
            out.kind = TrajectoryOutcome::Kind::Undefined;
            out.reason = UndefinedReason::InGap;
            return out;
        }
        const AffinePiece& piece = model.pieces()[*pid];
        if (piece.value(cur).is_zero()) {
            out.kind = TrajectoryOutcome::Kind::ConvergesToRoot;
            out.root = cur;
            out.steps_to_land = k;
            return out;
        }
        if (k >= max_steps) {
            out.kind = TrajectoryOutcome::Kind::Undefined;
            out.reason = UndefinedReason::BudgetExceeded;
            return out;
        }
        const Rational image = piece.newton_image();
        if (image.abs() > model.half_width()) {
            out.kind = TrajectoryOutcome::Kind::Diverges;
            out.steps = k + 1;
            out.exit_value = image;
            return out;
        }
        auto [it, inserted] = seen.emplace(image, k + 1);
        if (!inserted) {
            const std::uint32_t j = it->second;
            out.kind = TrajectoryOutcome::Kind::EventuallyPeriodic;
            out.preperiod = j;
            out.period = k + 1 - j;
            out.cycle.assign(orbit.begin() + j, orbit.end());
            return out;
        }
        orbit.push_back(image);
        cur = image;
    }
}

OmegaLimit omega_limit(const PiecewiseModel& model, const NiceFamily& family, const Rational& x) {
    TrajectoryOutcome t = classify(model, family, x, default_max_steps(model));
    OmegaLimit w;
    switch (t.kind) {
        case TrajectoryOutcome::Kind::EventuallyPeriodic:
            w.kind = OmegaLimit::Kind::FiniteCycle;
            w.points = t.cycle;
            break;
        case TrajectoryOutcome::Kind::ConvergesToRoot:
            w.kind = OmegaLimit::Kind::RootSingleton;
            w.points.push_back(t.root);
            break;
        case TrajectoryOutcome::Kind::Diverges:
            w.kind = OmegaLimit::Kind::Divergent;
            break;
        default:
            w.kind = OmegaLimit::Kind::Undefined;
            break;
    }
    return w;
}

ContractionCertificate contraction_certificate(const PiecewiseModel& base, std::size_t piece_id,
                                               const Rational& epsilon) {
    if (piece_id >= base.pieces().size())
        throw input_error("ERR_FAMILY_MEMBER", "piece id out of range");
    const AffinePiece& piece = base.pieces()[piece_id];
    const Rational root = piece.newton_image();
    if (!piece.strictly_contains(root))
        throw input_error("ERR_CONTRACTION_PRE", "piece must contain its root strictly");
    if (!(epsilon.sign() > 0) || !(epsilon < Rational(1, 5)))
        throw input_error("ERR_CONTRACTION_PRE", "epsilon must satisfy 0 < epsilon < 1/5");
    if (root - epsilon < piece.lo || piece.hi < root + epsilon)
        throw input_error("ERR_CONTRACTION_PRE",
                          "[root - eps, root + eps] must be contained in the piece");

    const Rational a = piece.slope.abs();
    const Rational reach = rmax(piece.hi - root, root - piece.lo);
    const Rational c = rmax(reach, Rational(1));
    const Rational eta = epsilon * a / (c + epsilon);
    // Certify: for d1(base, g) < eta, |N(g,x) - root| <= d1 * c / (a - d1)
    //          < eta * c / (a - eta) <= epsilon on the whole piece.
    if (!(eta * c <= epsilon * (a - eta)))
        throw construction_error("ERR_CONTRACTION_BOUND", "eta certification failed");

    ContractionCertificate cert{base, piece_id, root, epsilon, eta, rmin(eta, a * epsilon)};
    return cert;
}

namespace {

// Sign of g - 0 at x, using exact evaluation.
int sign_at(const PiecewiseModel& g, const Rational& x) { return g.eval(x).sign(); }

} // namespace

HalvingReport verify_halving(const PiecewiseModel& g, const ContractionCertificate& cert,
                             std::span<const Rational> samples) {
    const AffinePiece& J = cert.base.pieces()[cert.piece_id];
    const int orientation = J.slope.sign();

    // g must be strictly monotone (same orientation) across J.
    for (const auto& p : g.pieces()) {
        if (p.hi <= J.lo || J.hi <= p.lo) continue;
        if (p.slope.sign() != orientation)
            throw verification_error("ERR_CERT_VIOLATION", "g is not strictly monotone on the piece");
    }
    for (const auto& gap : g.gaps()) {
        if (gap.hi <= J.lo || J.hi <= gap.lo) continue;
        if (gap.deriv_min.sign() != orientation || gap.deriv_max.sign() != orientation)
            throw verification_error("ERR_CERT_VIOLATION", "g is not strictly monotone on the piece");
    }
    const int slo = sign_at(g, J.lo);
    const int shi = sign_at(g, J.hi);
    if (slo != 0 && slo == shi)
        throw verification_error("ERR_CERT_VIOLATION", "g has no sign change over the piece");

    // Root bracket [wl, wh]; exact when the crossing lies on an affine piece.
    Rational wl, wh;
    bool exact = false;
    if (slo == 0) {
        wl = wh = J.lo;
        exact = true;
    } else if (shi == 0) {
        wl = wh = J.hi;
        exact = true;
    } else {
        wl = J.lo;
        wh = J.hi;
        // Narrow across segment junctions first.
        std::vector<Rational> cuts;
        for (const auto& p : g.pieces()) {
            if (p.hi <= J.lo || J.hi <= p.lo) continue;
            cuts.push_back(rmax(p.lo, J.lo));
            cuts.push_back(rmin(p.hi, J.hi));
        }
        for (const auto& gp : g.gaps()) {
            if (gp.hi <= J.lo || J.hi <= gp.lo) continue;
            cuts.push_back(rmax(gp.lo, J.lo));
            cuts.push_back(rmin(gp.hi, J.hi));
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            int sa = sign_at(g, cuts[i]);
            int sb = sign_at(g, cuts[i + 1]);
            if (sa == 0) {
                wl = wh = cuts[i];
                exact = true;
                break;
            }
            if (sb == 0) {
                wl = wh = cuts[i + 1];
                exact = true;
                break;
            }
            if (sa != sb) {
                wl = cuts[i];
                wh = cuts[i + 1];
                break;
            }
        }
        if (!exact) {
            Segment s = g.locate((wl + wh) / Rational(2));
            if (s.kind == Segment::Kind::Piece) {
                // Affine across the bracket: exact root.
                wl = wh = g.pieces()[s.index].newton_image();
                exact = true;
            }
        }
    }

    HalvingReport report;

    auto refine = [&]() {
        const Rational mid = (wl + wh) / Rational(2);
        const int sm = sign_at(g, mid);
        if (sm == 0) {
            wl = wh = mid;
            exact = true;
        } else if (sm == slo) {
            wl = mid;
        } else {
            wh = mid;
        }
    };

    for (const Rational& x : samples) {
        if (!J.contains(x))
            throw input_error("ERR_CONTRACTION_PRE", "sample outside the certified piece");
        Rational gx = g.eval(x);
        Rational gdx = g.eval_derivative(x);
        if (gdx.is_zero())
            throw verification_error("ERR_CERT_VIOLATION", "zero derivative at sample");
        const Rational nx = x - gx / gdx;
        ++report.checked;

        bool decided = false;
        for (int iter = 0; iter < 256 && !decided; ++iter) {
            if (exact) {
                const Rational& w = wl;
                if ((w - nx).abs() <= (w - x).abs() / Rational(2)) {
                    decided = true;
                } else {
                    report.pass = false;
                    report.counterexample = HalvingCounterexample{x, nx, wl, wh};
                    decided = true;
                }
                break;
            }
            // Conservative two-sided test against the bracket.
            const Rational lhs_max = rmax((wl - nx).abs(), (wh - nx).abs());
            Rational rhs_min(0);
            if (x < wl) rhs_min = (wl - x) / Rational(2);
            else if (x > wh) rhs_min = (x - wh) / Rational(2);
            if (lhs_max <= rhs_min) {
                decided = true;
                break;
            }
            Rational lhs_min(0);
            if (nx < wl) lhs_min = wl - nx;
            else if (nx > wh) lhs_min = nx - wh;
            const Rational rhs_max = rmax((wl - x).abs(), (wh - x).abs()) / Rational(2);
            if (lhs_min > rhs_max) {
                report.pass = false;
                report.counterexample = HalvingCounterexample{x, nx, wl, wh};
                decided = true;
                break;
            }
            refine();
        }
        if (!decided)
            throw verification_error("ERR_ROOT_BRACKET",
                                     "halving check undecidable at bracket resolution");
        if (!report.pass) break;
    }
    report.root_lo = wl;
    report.root_hi = wh;
    return report;
}

} // namespace nwo
