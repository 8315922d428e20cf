#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nwo/dynamics.hpp"
#include "nwo/input_function.hpp"
#include "nwo/model.hpp"
#include "nwo/rng.hpp"

namespace nwo {

// JSON-lines audit trail of every rejection and retry during construction.
struct ConstructionLog {
    struct Entry {
        std::string event;
        std::string detail;
    };
    std::vector<Entry> entries;

    void note(std::string event, std::string detail) {
        entries.push_back({std::move(event), std::move(detail)});
    }
};

struct Polyline {
    std::vector<Rational> xs; // strictly increasing, spanning [-M, M]
    std::vector<Rational> ys;
};

// Perturbs node values until (i) they are pairwise distinct and epsilon/12
// close to the originals, (ii) every segment slope moved by less than
// epsilon/12, (iii) every segment's x-intercept avoids the node set.
// Deterministic per seed; only violating indices are re-jittered.
std::vector<Rational> perturb_values(std::span<const Rational> nodes,
                                     std::span<const Rational> values, const Rational& epsilon,
                                     std::uint64_t seed, std::uint32_t max_retries,
                                     ConstructionLog* log);

// C1 model equal to the polyline off the gaps; each gap must contain exactly
// one interior node, strictly between its neighbours. Bridge derivatives stay
// inside the hull of the two adjacent slopes.
PiecewiseModel smooth_gaps(const Polyline& h,
                           std::span<const std::pair<Rational, Rational>> gap_intervals,
                           const Rational& half_width);

struct ApproxResult {
    PiecewiseModel model;
    NiceFamily family;
    Rational d1_bound; // certified, against the input function
    Rational measure;  // of the family union
};

// The constructive approximation: a nice model within epsilon of f (d1),
// whose family covers more than 2M - delta and contains t in its interior.
// All four conclusions are re-verified by independent validators before
// returning. mesh_cap, when set, further limits the partition mesh.
ApproxResult build_nice_approximation(const InputFunction& f, const Rational& epsilon,
                                      const Rational& delta, const Rational& t,
                                      std::uint64_t seed, std::uint32_t max_retries,
                                      ConstructionLog* log,
                                      const Rational* mesh_cap = nullptr);

// Largest admissible retarget radius for the piece: targets y must satisfy
// |y - N(g, J)| < r with |a| r / (dist(N(g,J), J) - r) < epsilon / 2.
Rational retarget_max_radius(const PiecewiseModel& g, std::size_t piece_id,
                             const Rational& epsilon);

struct RetargetResult {
    PiecewiseModel model;
    std::size_t center_piece; // index in the new model; N(center) == y exactly
};

// Local surgery: equal to g outside (x - delta_radius, x + delta_radius),
// affine on a neighbourhood of x with Newton image exactly y, certified d1
// change below epsilon.
RetargetResult retarget(const PiecewiseModel& g, std::size_t piece_id, const Rational& x,
                        const Rational& y, const Rational& delta_radius, const Rational& epsilon);

// Cyclic subfamily: pieces J_0..J_n with N(J_i) = points[(i+1) mod n+1],
// landing strictly inside member (i+1) mod n+1; points[i] lies in Int(J_i).
struct CyclicFamilyRef {
    std::vector<std::size_t> member_pieces;
    std::vector<Rational> points;
};

void validate_cycle(const PiecewiseModel& model, const CyclicFamilyRef& cycle);

struct MultiplyResult {
    PiecewiseModel model;
    NiceFamily family;
    CyclicFamilyRef cycle; // the m(n+1) new cycle pieces in orbit order
    Rational measure_removed;
    Rational max_center_diameter;
};

// Splits each cycle interval around m marked points and rewires the Newton
// images so every trajectory entering the old cycle is eventually periodic
// with period exactly m * (n+1). The model is untouched outside the cycle
// union; measure removed stays below Delta. window_cap, when set, bounds the
// carving windows (and hence the new cycle interval diameters).
MultiplyResult multiply_cycle_period(const PiecewiseModel& g, const NiceFamily& family,
                                     const CyclicFamilyRef& cycle, const Rational& epsilon,
                                     const Rational& Delta, std::uint32_t m, const Rational& t,
                                     std::uint64_t seed, std::uint32_t max_retries,
                                     ConstructionLog* log,
                                     const Rational* window_cap = nullptr);

struct TowerLevel {
    PiecewiseModel model;
    NiceFamily family;
    CyclicFamilyRef cycle;
    std::uint64_t period = 0;
    std::uint32_t multiplier = 1; // 1 at the base level
    Rational max_diameter;
};

struct RefinementTower {
    Rational half_width;
    std::vector<TowerLevel> levels;
    // alpha(1) = base period, alpha(k) = multiplier m_k for k >= 2, so the
    // level-k cycle count is always alpha(1) * ... * alpha(k).
    std::vector<std::uint64_t> alpha;
};

struct TowerBudgets {
    std::uint32_t max_retries = 200;
};

// Nested cyclic refinements: level 1 is a nice approximation of f together
// with a cycle reachable from t (located in the certified fate graph, or
// closed with at most two retargets when only an approximate cycle exists);
// level k+1 multiplies the period by multipliers[k]. Per-level epsilon shares
// follow the dyadic schedule epsilon_budget * 2^-(k+1).
RefinementTower build_tower(const InputFunction& f, std::uint32_t depth,
                            std::span<const std::uint32_t> multipliers,
                            const Rational& epsilon_budget,
                            std::span<const Rational> diameter_bounds, const Rational& t,
                            std::uint64_t seed, const TowerBudgets& budgets,
                            ConstructionLog* log);

// True when the two models agree exactly (same pieces and gap data) outside
// the given closed intervals.
bool models_equal_outside(const PiecewiseModel& a, const PiecewiseModel& b,
                          std::span<const std::pair<Rational, Rational>> intervals);

} // namespace nwo
