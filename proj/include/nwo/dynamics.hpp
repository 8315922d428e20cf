#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nwo/model.hpp"

namespace nwo {

enum class UndefinedReason { ZeroDerivative, InGap, BudgetExceeded };

struct StepResult {
    enum class Kind { Next, Diverged, Undefined };
    Kind kind;
    Rational value; // next point, or the exact exit value when diverged
    UndefinedReason reason = UndefinedReason::InGap;
};

// One exact Newton step. On a piece the result is the piece's Newton image;
// strictly inside a gap the step is deliberately unclassified (Undefined).
StepResult newton_step(const PiecewiseModel& model, const Rational& x);

struct TrajectoryOutcome {
    enum class Kind { Diverges, ConvergesToRoot, EventuallyPeriodic, Undefined };
    Kind kind;

    std::uint32_t steps = 0;      // Diverges: index of the first iterate outside [-M, M]
    Rational exit_value;          // Diverges
    Rational root;                // ConvergesToRoot
    std::uint32_t steps_to_land = 0;
    std::uint32_t preperiod = 0;  // EventuallyPeriodic
    std::uint32_t period = 0;
    std::vector<Rational> cycle;
    UndefinedReason reason = UndefinedReason::BudgetExceeded;
};

std::uint32_t default_max_steps(const PiecewiseModel& model);

// Exact trichotomy for x in the union of a certified family. After the first
// step the orbit consists of piece images (at most one per member), so for a
// family with m members a repeat, root hit, or exit occurs within m+1 steps.
TrajectoryOutcome classify(const PiecewiseModel& model, const NiceFamily& family,
                           const Rational& x, std::uint32_t max_steps);

struct OmegaLimit {
    enum class Kind { FiniteCycle, RootSingleton, Divergent, Undefined };
    Kind kind;
    std::vector<Rational> points;
};

OmegaLimit omega_limit(const PiecewiseModel& model, const NiceFamily& family, const Rational& x);

// Quantitative convergence data for a piece with an interior root: every g
// with d1_upper_bound(base, g) < delta keeps Newton orbits started in the
// piece inside it and halves the distance to g's root at each step.
struct ContractionCertificate {
    PiecewiseModel base;
    std::size_t piece_id;
    Rational root;
    Rational epsilon;
    Rational eta;
    Rational delta;
};

// Requires 0 < epsilon < 1/5 and [root - eps, root + eps] inside the piece.
// eta is the largest value with  eta * max(D, 1) / (|a| - eta) <= epsilon,
// where D is the farthest distance from the root to a piece endpoint; any g
// with d1 < eta maps the piece into (root - eps, root + eps).
ContractionCertificate contraction_certificate(const PiecewiseModel& base, std::size_t piece_id,
                                               const Rational& epsilon);

struct HalvingCounterexample {
    Rational x;
    Rational step;      // N(g, x)
    Rational root_lo;   // certified bracket of g's root (root_lo == root_hi when exact)
    Rational root_hi;
};

struct HalvingReport {
    bool pass = true;
    std::size_t checked = 0;
    Rational root_lo, root_hi;
    std::optional<HalvingCounterexample> counterexample;
};

// Locates g's unique root in the certified piece (exactly when it falls on an
// affine piece of g, by certified bisection bracket otherwise) and checks
// |w - N(g,x)| <= |w - x| / 2 at every sample.
HalvingReport verify_halving(const PiecewiseModel& g, const ContractionCertificate& cert,
                             std::span<const Rational> samples);

} // namespace nwo
