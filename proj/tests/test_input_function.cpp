#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwo/input_function.hpp"
#include "nwo/json_io.hpp"

using namespace nwo;

namespace {
Rational R(long n, long d = 1) { return Rational(n, d); }
} // namespace

TEST_CASE("evaluation and derivative of a quadratic") {
    InputFunction f = InputFunction::make(R(2), {R(-2), R(2)},
                                          {Polynomial{{R(-1), R(0), R(1)}}}); // x^2 - 1
    CHECK(f.at(R(3, 2)) == R(5, 4));
    CHECK(f.derivative_at(R(3, 2)) == R(3));
    CHECK(f.at(R(-2)) == R(3));
    CHECK_THROWS_AS(f.at(R(5, 2)), Error);
}

TEST_CASE("construction validates C1 joins") {
    // x^2 on [-1,0], then 2x... value matches at 0 but derivative does not.
    CHECK_THROWS_AS(InputFunction::make(R(1), {R(-1), R(0), R(1)},
                                        {Polynomial{{R(0), R(0), R(1)}},
                                         Polynomial{{R(0), R(2)}}}),
                    Error);
    // x^2 on [-1,0] then 0 + 0x: derivative matches (0) and value matches (0).
    InputFunction ok = InputFunction::make(R(1), {R(-1), R(0), R(1)},
                                           {Polynomial{{R(0), R(0), R(1)}},
                                            Polynomial{{R(0), R(0)}}});
    CHECK(ok.at(R(1, 2)) == R(0));
    CHECK(ok.at(R(-1, 2)) == R(1, 4));
}

TEST_CASE("coefficient bounds and the oscillation mesh") {
    InputFunction f = InputFunction::make(R(2), {R(-2), R(2)},
                                          {Polynomial{{R(-1), R(0), R(1)}}});
    CHECK(f.deriv_bound() == R(4));        // sup |2x| over [-2,2]
    CHECK(f.second_deriv_bound() == R(2));
    const Rational osc(1, 120);
    const Rational r = f.mesh_for_oscillation(osc);
    // at separation 2r both oscillations stay strictly below the bound
    CHECK(R(2) * r * f.deriv_bound() < osc);
    CHECK(R(2) * r * f.second_deriv_bound() < osc);
}

TEST_CASE("poly sup bound is exact through degree two") {
    Polynomial q{{R(-1), R(0), R(1)}}; // x^2 - 1
    CHECK(poly_sup_abs_bound(q, R(-2), R(2)) == R(3));
    CHECK(poly_sup_abs_bound(q, R(-1, 2), R(1, 2)) == R(1)); // interior vertex
    Polynomial l{{R(1), R(-2)}};
    CHECK(poly_sup_abs_bound(l, R(0), R(3)) == R(5));
}

TEST_CASE("poly sup bound is certified for cubics") {
    Polynomial c{{R(0), R(-1), R(0), R(1)}}; // x^3 - x
    const Rational bound = poly_sup_abs_bound(c, R(-1), R(1));
    // true sup is 2/(3*sqrt(3)) ~ 0.385; the bound must dominate dense samples
    for (int i = 0; i <= 100; ++i) {
        const Rational x = R(-1) + R(2) * R(i, 100);
        CHECK(c.at(x).abs() <= bound);
    }
}

TEST_CASE("d1 bound against a model is exact for matching affine data") {
    InputFunction id = InputFunction::make(R(1), {R(-1), R(1)}, {Polynomial{{R(0), R(1)}}});
    PiecewiseModel m = PiecewiseModel::assemble(R(1), {{R(-1), R(1), R(1), R(0)}}, {});
    CHECK(d1_bound_against_model(id, m) == R(0));

    // x^2 vs the line x on [-1,1]: sup|x^2-x| = 2 at -1, sup|2x-1| = 3 at -1.
    InputFunction sq = InputFunction::make(R(1), {R(-1), R(1)},
                                           {Polynomial{{R(0), R(0), R(1)}}});
    CHECK(d1_bound_against_model(sq, m) == R(5));
}

TEST_CASE("input function JSON round trip") {
    InputFunction f = InputFunction::make(R(2), {R(-2), R(0), R(2)},
                                          {Polynomial{{R(0), R(0), R(1)}},
                                           Polynomial{{R(0), R(0), R(1)}}});
    Json j = input_function_to_json(f);
    InputFunction back = input_function_from_json(j);
    CHECK(input_function_to_json(back).dump() == j.dump());
    CHECK(back.at(R(1, 3)) == R(1, 9));
    Json bad = j;
    bad["pieces"][1]["coeffs"][1] = "1/3"; // breaks the C1 join at 0
    CHECK_THROWS_AS(input_function_from_json(bad), Error);
}
