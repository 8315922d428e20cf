#include "nwo/input_function.hpp"

#include <algorithm>

namespace nwo {

Rational Polynomial::at(const Rational& x) const {
    Rational acc(0);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
    return acc;
}

Polynomial Polynomial::derivative() const {
    Polynomial d;
    for (std::size_t i = 1; i < coeffs.size(); ++i)
        d.coeffs.push_back(coeffs[i] * Rational(static_cast<long>(i)));
    return d;
}

Rational poly_sup_abs_bound(const Polynomial& p, const Rational& u, const Rational& v) {
    const std::size_t deg = p.degree();
    const Rational at_u = p.at(u).abs();
    const Rational at_v = p.at(v).abs();
    Rational ends = rmax(at_u, at_v);
    if (deg <= 1 || p.coeffs.size() <= 1) return ends;
    if (deg == 2) {
        const Rational& a2 = p.coeffs[2];
        if (!a2.is_zero()) {
            const Rational vertex = -p.coeffs[1] / (Rational(2) * a2);
            if (u < vertex && vertex < v) ends = rmax(ends, p.at(vertex).abs());
        }
        return ends;
    }
    const Rational dsup = poly_sup_abs_bound(p.derivative(), u, v);
    return ends + (v - u) / Rational(2) * dsup;
}

InputFunction InputFunction::make(Rational half_width, std::vector<Rational> breakpoints,
                                  std::vector<Polynomial> polys) {
    if (half_width.sign() <= 0) throw input_error("ERR_DOMAIN", "half width M must be positive");
    if (breakpoints.size() < 2 || polys.size() + 1 != breakpoints.size())
        throw input_error("ERR_INPUT_FUNCTION", "need p+1 breakpoints for p polynomial pieces");
    if (breakpoints.front() != -half_width || breakpoints.back() != half_width)
        throw input_error("ERR_INPUT_FUNCTION", "breakpoints must span [-M, M]");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw input_error("ERR_INPUT_FUNCTION", "breakpoints must be strictly increasing");
    for (std::size_t i = 0; i + 1 < polys.size(); ++i) {
        const Rational& z = breakpoints[i + 1];
        if (polys[i].at(z) != polys[i + 1].at(z))
            throw input_error("ERR_INPUT_FUNCTION", "value mismatch at breakpoint " + z.str());
        if (polys[i].derivative().at(z) != polys[i + 1].derivative().at(z))
            throw input_error("ERR_INPUT_FUNCTION",
                              "derivative mismatch at breakpoint " + z.str());
    }
    InputFunction f;
    f.half_width_ = std::move(half_width);
    f.breakpoints_ = std::move(breakpoints);
    f.polys_ = std::move(polys);
    return f;
}

std::size_t InputFunction::piece_at(const Rational& x) const {
    if (x < -half_width_ || x > half_width_)
        throw input_error("ERR_DOMAIN", "point outside [-M, M]");
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    std::size_t idx = static_cast<std::size_t>(it - breakpoints_.begin());
    if (idx > 0) --idx;
    if (idx >= polys_.size()) idx = polys_.size() - 1;
    return idx;
}

Rational InputFunction::at(const Rational& x) const { return polys_[piece_at(x)].at(x); }

Rational InputFunction::derivative_at(const Rational& x) const {
    return polys_[piece_at(x)].derivative().at(x);
}

namespace {

// sum_i |c_i| * i * M^(i-1) style coefficient bound for |p'| over [-M, M].
Rational deriv_coeff_bound(const Polynomial& p, const Rational& M) {
    Rational bound(0);
    Rational mpow(1);
    for (std::size_t i = 1; i < p.coeffs.size(); ++i) {
        bound += p.coeffs[i].abs() * Rational(static_cast<long>(i)) * mpow;
        mpow *= M;
    }
    return bound;
}

} // namespace

Rational InputFunction::deriv_bound() const {
    Rational b(0);
    for (const auto& p : polys_) b = rmax(b, deriv_coeff_bound(p, half_width_));
    return b;
}

Rational InputFunction::second_deriv_bound() const {
    Rational b(0);
    for (const auto& p : polys_) b = rmax(b, deriv_coeff_bound(p.derivative(), half_width_));
    return b;
}

Rational InputFunction::mesh_for_oscillation(const Rational& osc_bound) const {
    const Rational B = rmax(deriv_bound(), second_deriv_bound());
    // 2r * B < osc strictly, via the +1 in the denominator.
    const Rational r = osc_bound / (Rational(2) * B + Rational(1));
    return rmin(r, half_width_ / Rational(4));
}

Rational d1_bound_against_model(const InputFunction& f, const PiecewiseModel& g) {
    if (f.half_width() != g.half_width())
        throw input_error("ERR_DOMAIN_MISMATCH", "domains must agree");

    std::vector<Rational> cuts = f.breakpoints();
    for (const auto& p : g.pieces()) {
        cuts.push_back(p.lo);
        cuts.push_back(p.hi);
    }
    for (const auto& gap : g.gaps()) {
        cuts.push_back(gap.lo);
        cuts.push_back(gap.hi);
        cuts.push_back(gap.mid_lo);
        cuts.push_back(gap.mid_hi);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    auto model_local = [&g](const Rational& mid) -> Polynomial {
        Segment s = g.locate(mid);
        if (s.kind == Segment::Kind::Piece) {
            const AffinePiece& p = g.pieces()[s.index];
            return Polynomial{{p.intercept, p.slope}};
        }
        const GapBlend& gp = g.gaps()[s.index];
        if (mid < gp.mid_lo) return Polynomial{{gp.left.intercept, gp.left.slope}};
        if (mid > gp.mid_hi) return Polynomial{{gp.right.intercept, gp.right.slope}};
        return Polynomial{{gp.bridge.c0, gp.bridge.c1, gp.bridge.c2, gp.bridge.c3}};
    };

    Rational value_sup(0), deriv_sup(0);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const Rational& u = cuts[i];
        const Rational& v = cuts[i + 1];
        const Rational mid = (u + v) / Rational(2);

        Polynomial fp;
        {
            auto it = std::upper_bound(f.breakpoints().begin(), f.breakpoints().end(), mid);
            std::size_t idx = static_cast<std::size_t>(it - f.breakpoints().begin());
            if (idx > 0) --idx;
            if (idx >= f.polys().size()) idx = f.polys().size() - 1;
            fp = f.polys()[idx];
        }
        Polynomial gp = model_local(mid);

        Polynomial diff;
        diff.coeffs.resize(std::max(fp.coeffs.size(), gp.coeffs.size()), Rational(0));
        for (std::size_t k = 0; k < fp.coeffs.size(); ++k) diff.coeffs[k] += fp.coeffs[k];
        for (std::size_t k = 0; k < gp.coeffs.size(); ++k) diff.coeffs[k] -= gp.coeffs[k];

        value_sup = rmax(value_sup, poly_sup_abs_bound(diff, u, v));
        deriv_sup = rmax(deriv_sup, poly_sup_abs_bound(diff.derivative(), u, v));
    }
    return value_sup + deriv_sup;
}

} // namespace nwo
