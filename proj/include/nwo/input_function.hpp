#pragma once

#include <vector>

#include "nwo/model.hpp"
#include "nwo/rational.hpp"

namespace nwo {

struct Polynomial {
    std::vector<Rational> coeffs; // ascending powers; empty means 0

    Rational at(const Rational& x) const;
    Polynomial derivative() const;
    std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

// Certified upper bound on sup |p| over [u, v]. Exact through degree 2;
// higher degrees recurse through endpoint values plus half-width times a
// bound on |p'|.
Rational poly_sup_abs_bound(const Polynomial& p, const Rational& u, const Rational& v);

// C1 piecewise polynomial on [-M, M] with rational coefficients. The
// polynomial pieces make the modulus of continuity computable in closed form
// from coefficient bounds, which is what certified epsilon-closeness needs;
// black-box functions are rejected by construction.
class InputFunction {
public:
    static InputFunction make(Rational half_width, std::vector<Rational> breakpoints,
                              std::vector<Polynomial> polys);

    const Rational& half_width() const { return half_width_; }
    const std::vector<Rational>& breakpoints() const { return breakpoints_; }
    const std::vector<Polynomial>& polys() const { return polys_; }

    Rational at(const Rational& x) const;
    Rational derivative_at(const Rational& x) const;

    // Coefficient bounds on sup|f'| and sup|f''| over [-M, M].
    Rational deriv_bound() const;
    Rational second_deriv_bound() const;

    // Mesh r such that |x - y| < 2r forces both |f(x)-f(y)| and
    // |f'(x)-f'(y)| strictly below osc_bound.
    Rational mesh_for_oscillation(const Rational& osc_bound) const;

private:
    Rational half_width_;
    std::vector<Rational> breakpoints_; // -M = z_0 < ... < z_p = M
    std::vector<Polynomial> polys_;     // polys_[i] on [z_i, z_{i+1}]
    std::size_t piece_at(const Rational& x) const;
};

// Certified upper bound on sup|f - g| + sup|f' - g'| over [-M, M].
Rational d1_bound_against_model(const InputFunction& f, const PiecewiseModel& g);

} // namespace nwo
