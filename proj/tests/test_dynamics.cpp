#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "nwo/dynamics.hpp"
#include "nwo/json_io.hpp"
#include "nwo/rng.hpp"
#include "nwo/synthesis.hpp"

using namespace nwo;

namespace {

Rational R(long n, long d = 1) { return Rational(n, d); }

PiecewiseModel line_model(const Rational& M, const Rational& a, const Rational& b,
                          const std::vector<Rational>& cuts) {
    std::vector<AffinePiece> pieces;
    Rational lo = -M;
    for (const Rational& c : cuts) {
        pieces.push_back({lo, c, a, b});
        lo = c;
    }
    pieces.push_back({lo, M, a, b});
    return PiecewiseModel::assemble(M, std::move(pieces), {});
}

PiecewiseModel two_cycle_model() {
    std::vector<AffinePiece> pieces{{R(-3), R(0), R(1), R(-5, 2)},
                                    {R(0), R(1), R(1), R(-5, 2)},
                                    {R(2), R(3), R(1), R(-1, 2)}};
    std::vector<GapBlend> gaps{
        GapBlend::make(R(1), R(2), {R(1), R(-5, 2)}, {R(1), R(-1, 2)})};
    return PiecewiseModel::assemble(R(3), std::move(pieces), std::move(gaps));
}

// Independent oracle: iterate newton_step up to `budget` steps, detecting
// repeats by exact equality. Shares no code with classify.
struct OracleOutcome {
    enum class Kind { Diverges, Root, Periodic, OutOfBudget } kind;
    std::uint32_t period = 0;
    std::uint32_t preperiod = 0;
};

OracleOutcome oracle_classify(const PiecewiseModel& m, const Rational& x,
                              std::uint32_t budget) {
    std::map<Rational, std::uint32_t> seen;
    Rational cur = x;
    for (std::uint32_t k = 0;; ++k) {
        if (m.eval(cur).is_zero()) return {OracleOutcome::Kind::Root};
        if (k >= budget) return {OracleOutcome::Kind::OutOfBudget};
        auto [it, fresh] = seen.emplace(cur, k);
        if (!fresh) return {OracleOutcome::Kind::Periodic, k - it->second, it->second};
        StepResult s = newton_step(m, cur);
        if (s.kind == StepResult::Kind::Diverged) return {OracleOutcome::Kind::Diverges};
        REQUIRE(s.kind == StepResult::Kind::Next);
        cur = s.value;
    }
}

} // namespace

TEST_CASE("newton_step on pieces and gaps") {
    PiecewiseModel m = two_cycle_model();
    StepResult s = newton_step(m, R(3, 10));
    CHECK(s.kind == StepResult::Kind::Next);
    CHECK(s.value == R(5, 2));

    PiecewiseModel esc = line_model(R(2), R(1), R(-4), {R(0), R(1)});
    s = newton_step(esc, R(1, 2));
    CHECK(s.kind == StepResult::Kind::Diverged);
    CHECK(s.value == R(4));

    s = newton_step(m, R(3, 2)); // strictly inside the gap
    CHECK(s.kind == StepResult::Kind::Undefined);
    CHECK(s.reason == UndefinedReason::InGap);
}

TEST_CASE("classify the running examples") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});

    TrajectoryOutcome t = classify(m, fam, R(3, 10), 20);
    REQUIRE(t.kind == TrajectoryOutcome::Kind::EventuallyPeriodic);
    CHECK(t.preperiod == 1);
    CHECK(t.period == 2);
    REQUIRE(t.cycle.size() == 2);
    CHECK(t.cycle[0] == R(5, 2));
    CHECK(t.cycle[1] == R(1, 2));

    PiecewiseModel root = line_model(R(1), R(1), R(-1, 2), {});
    NiceFamily root_fam = certify_nice(root, {});
    t = classify(root, root_fam, R(9, 10), 20);
    REQUIRE(t.kind == TrajectoryOutcome::Kind::ConvergesToRoot);
    CHECK(t.root == R(1, 2));
    CHECK(t.steps_to_land == 1);
    // starting exactly at the root lands in zero steps
    t = classify(root, root_fam, R(1, 2), 20);
    CHECK(t.steps_to_land == 0);

    PiecewiseModel esc = line_model(R(2), R(1), R(-4), {});
    NiceFamily esc_fam = certify_nice(esc, {});
    t = classify(esc, esc_fam, R(1, 2), 20);
    REQUIRE(t.kind == TrajectoryOutcome::Kind::Diverges);
    CHECK(t.steps == 1);
    CHECK(t.exit_value == R(4));
}

TEST_CASE("classify outside the family union is undefined") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});
    TrajectoryOutcome t = classify(m, fam, R(3, 2), 20);
    CHECK(t.kind == TrajectoryOutcome::Kind::Undefined);
    CHECK(t.reason == UndefinedReason::InGap);
}

TEST_CASE("classify respects the step budget") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});
    TrajectoryOutcome t = classify(m, fam, R(3, 10), 1);
    CHECK(t.kind == TrajectoryOutcome::Kind::Undefined);
    CHECK(t.reason == UndefinedReason::BudgetExceeded);
}

TEST_CASE("classify agrees with the brute-force oracle on synthesized models") {
    InputFunction quad = InputFunction::make(R(2), {R(-2), R(2)},
                                             {Polynomial{{R(-1), R(0), R(1)}}});
    InputFunction affine = InputFunction::make(R(1), {R(-1), R(1)},
                                               {Polynomial{{R(3), R(1)}}});
    InputFunction ident = InputFunction::make(R(1), {R(-1), R(1)},
                                              {Polynomial{{R(0), R(1)}}});
    SplitMix64 rng(5);

    for (const InputFunction& f : {quad, affine, ident}) {
        ApproxResult res = build_nice_approximation(f, R(1, 4), R(1, 4), R(1, 3), 11, 200,
                                                    nullptr);
        const std::uint32_t member_count =
            static_cast<std::uint32_t>(res.family.members.size());
        for (int trial = 0; trial < 40; ++trial) {
            const std::size_t pick = rng.bounded(res.family.members.size());
            const AffinePiece& piece = res.model.pieces()[res.family.members[pick]];
            const Rational x = sample_in(rng, piece.lo, piece.hi);
            TrajectoryOutcome t = classify(res.model, res.family, x, member_count + 2);
            OracleOutcome o = oracle_classify(res.model, x, 10 * member_count + 10);
            switch (t.kind) {
                case TrajectoryOutcome::Kind::Diverges:
                    CHECK(o.kind == OracleOutcome::Kind::Diverges);
                    break;
                case TrajectoryOutcome::Kind::ConvergesToRoot:
                    CHECK(o.kind == OracleOutcome::Kind::Root);
                    break;
                case TrajectoryOutcome::Kind::EventuallyPeriodic:
                    CHECK(o.kind == OracleOutcome::Kind::Periodic);
                    CHECK(o.period == t.period);
                    break;
                default:
                    FAIL("classification must resolve within m+2 steps");
            }
        }
    }
}

TEST_CASE("reported periods are minimal") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});
    TrajectoryOutcome t = classify(m, fam, R(3, 10), 20);
    REQUIRE(t.kind == TrajectoryOutcome::Kind::EventuallyPeriodic);
    for (std::uint32_t d = 1; d < t.period; ++d) {
        if (t.period % d != 0) continue;
        bool all_match = true;
        for (std::size_t i = 0; i < t.cycle.size(); ++i)
            if (t.cycle[i] != t.cycle[(i + d) % t.cycle.size()]) all_match = false;
        CHECK(!all_match);
    }
}

TEST_CASE("omega limit wraps the trichotomy") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});
    OmegaLimit w = omega_limit(m, fam, R(3, 10));
    REQUIRE(w.kind == OmegaLimit::Kind::FiniteCycle);
    REQUIRE(w.points.size() == 2);
    CHECK(w.points[0] == R(5, 2));
    CHECK(w.points[1] == R(1, 2));

    PiecewiseModel root = line_model(R(1), R(1), R(-1, 2), {});
    w = omega_limit(root, certify_nice(root, {}), R(9, 10));
    REQUIRE(w.kind == OmegaLimit::Kind::RootSingleton);
    CHECK(w.points[0] == R(1, 2));

    PiecewiseModel esc = line_model(R(2), R(1), R(-4), {});
    w = omega_limit(esc, certify_nice(esc, {}), R(1, 2));
    CHECK(w.kind == OmegaLimit::Kind::Divergent);
}

TEST_CASE("contraction certificate values") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    CHECK(cert.root == R(0));
    CHECK(cert.eta == R(1, 11));
    CHECK(cert.delta == R(1, 11)); // min(1/11, 1 * 1/10)
    CHECK(cert.delta <= R(1, 10));

    PiecewiseModel steep = line_model(R(1), R(2), R(0), {});
    ContractionCertificate cert2 = contraction_certificate(steep, 0, R(1, 10));
    CHECK(cert2.eta == R(2, 11));
    CHECK(cert2.delta == rmin(cert2.eta, R(2) * R(1, 10)));

    CHECK_THROWS_AS(contraction_certificate(base, 0, R(1, 4)), Error);  // eps >= 1/5
    CHECK_THROWS_AS(contraction_certificate(base, 0, R(0)), Error);
    PiecewiseModel off = line_model(R(1), R(1), R(-2), {});
    CHECK_THROWS_AS(contraction_certificate(off, 0, R(1, 10)), Error); // root not interior
}

TEST_CASE("certified eta is maximal for the certified bound") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    const Rational c(1); // max(reach, 1)
    CHECK(cert.eta * c <= cert.epsilon * (R(1) - cert.eta));
    const Rational above = cert.eta + R(1, 1000);
    CHECK(!(above * c <= cert.epsilon * (R(1) - above)));
}

TEST_CASE("verify_halving on the unperturbed model is exact") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    std::vector<Rational> xs{R(-9, 10), R(-1, 2), R(0), R(1, 3), R(1)};
    HalvingReport rep = verify_halving(base, cert, xs);
    CHECK(rep.pass);
    CHECK(rep.root_lo == R(0));
    CHECK(rep.root_hi == R(0));
}

TEST_CASE("verify_halving under a constant shift inside delta") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    const Rational c = cert.delta / R(3);
    PiecewiseModel g = PiecewiseModel::assemble(R(1), {{R(-1), R(1), R(1), c}}, {});
    REQUIRE(d1_upper_bound(base, g) < cert.delta);
    std::vector<Rational> xs{R(-1), R(-1, 7), R(2, 5), R(9, 10)};
    HalvingReport rep = verify_halving(g, cert, xs);
    CHECK(rep.pass);
    CHECK(rep.root_lo == -c); // root moves to -c/a exactly
}

TEST_CASE("verify_halving flags a steep perturbation far outside delta") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    // Identity up to 7/10, slope 1/5 through [7/10, 9/10], slope 1 after;
    // Newton from 4/5 lands at -14/5, far past the halving bound.
    Polyline h{{R(-1), R(7, 10), R(9, 10), R(1)}, {R(-1), R(7, 10), R(37, 50), R(21, 25)}};
    std::vector<std::pair<Rational, Rational>> gaps{{R(69, 100), R(71, 100)},
                                                    {R(89, 100), R(91, 100)}};
    PiecewiseModel g = smooth_gaps(h, gaps, R(1));
    REQUIRE(d1_upper_bound(base, g) > cert.delta); // far outside the radius
    std::vector<Rational> xs{R(4, 5)};
    HalvingReport rep = verify_halving(g, cert, xs);
    CHECK(!rep.pass);
    REQUIRE(rep.counterexample.has_value());
    CHECK(rep.counterexample->x == R(4, 5));
    CHECK(rep.counterexample->step == R(-14, 5));
}

TEST_CASE("verify_halving rejects non-monotone perturbations") {
    PiecewiseModel base = line_model(R(1), R(1), R(0), {});
    ContractionCertificate cert = contraction_certificate(base, 0, R(1, 10));
    // slope flips sign in the middle
    Polyline h{{R(-1), R(-1, 4), R(1, 4), R(1)}, {R(-1), R(1, 10), R(-1, 10), R(1)}};
    std::vector<std::pair<Rational, Rational>> gaps{{R(-3, 10), R(-1, 5)}, {R(1, 5), R(3, 10)}};
    PiecewiseModel g = smooth_gaps(h, gaps, R(1));
    std::vector<Rational> xs{R(1, 2)};
    CHECK_THROWS_AS(verify_halving(g, cert, xs), Error);
}

TEST_CASE("outcome serialization carries the witnesses") {
    PiecewiseModel m = two_cycle_model();
    NiceFamily fam = certify_nice(m, {1, 2});
    TrajectoryOutcome t = classify(m, fam, R(3, 10), 20);
    Json j = outcome_to_json(R(3, 10), t);
    CHECK(j["outcome"] == "periodic");
    CHECK(j["period"] == 2);
    CHECK(j["cycle"][0] == "5/2");
    CHECK(j["cycle"][1] == "1/2");
}
