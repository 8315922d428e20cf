#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nwo/errors.hpp"

namespace nwo {

// Finite-depth prefix of an adding-machine base sequence; every entry >= 2.
struct AlphaSequence {
    std::vector<std::uint32_t> entries;

    std::size_t depth() const { return entries.size(); }
    static AlphaSequence make(std::vector<std::uint32_t> entries);
};

struct OdometerElement {
    std::vector<std::uint32_t> digits; // digits[i] in {0, ..., alpha[i]-1}
};

// Allocation-free kernels over digit spans. alpha, x (and y) must have equal
// lengths; out may alias x.
void add_one_digits(std::span<const std::uint32_t> alpha, std::span<const std::uint32_t> x,
                    std::span<std::uint32_t> out);
void add_digits(std::span<const std::uint32_t> alpha, std::span<const std::uint32_t> x,
                std::span<const std::uint32_t> y, std::span<std::uint32_t> out);
// x_1 + x_2 a_1 + x_3 a_1 a_2 + ... over the first k digits. Requires the
// depth-k cylinder count to fit in 64 bits.
std::uint64_t encode_mixed_radix(std::span<const std::uint32_t> alpha,
                                 std::span<const std::uint32_t> x, std::size_t k);
// alpha(1) * ... * alpha(k), checked against overflow / budget.
std::uint64_t cylinder_count(std::span<const std::uint32_t> alpha, std::size_t k,
                             std::uint64_t budget);

OdometerElement add_one(const AlphaSequence& alpha, const OdometerElement& x);
OdometerElement add(const AlphaSequence& alpha, const OdometerElement& x,
                    const OdometerElement& y);

// Per-prime total p-adic valuation across the declared depth. A valuation
// clamped at `cap` is recorded in `capped`.
struct PrimeProfile {
    std::map<std::uint64_t, std::uint64_t> valuations; // prime -> total valuation
    std::vector<std::uint64_t> capped;                 // primes whose count hit the cap
};

PrimeProfile m_alpha_profile(const AlphaSequence& alpha, std::uint64_t primes_up_to,
                             std::uint64_t cap = UINT64_MAX);

enum class ConjugacyVerdict { EqualProfile, Differ, Inconclusive };

struct ConjugacyResult {
    ConjugacyVerdict verdict;
    std::uint64_t witness_prime = 0;
    std::uint64_t valuation_alpha = 0;
    std::uint64_t valuation_beta = 0;
};

// Declared-depth semantics: profiles compared prime by prime up to P.
// Differ is only reported when both profiles are cap-free.
ConjugacyResult conjugate_up_to_depth(const AlphaSequence& alpha, const AlphaSequence& beta,
                                      std::uint64_t primes_up_to);

struct OrbitCheckResult {
    bool pass = true;
    std::uint64_t steps = 0;
    std::optional<std::uint64_t> duplicate_code; // first depth-k prefix seen twice
    std::optional<std::uint64_t> at_step;
};

using OdometerStepFn =
    std::function<void(std::span<const std::uint32_t>, std::span<const std::uint32_t>,
                       std::span<std::uint32_t>)>;

// Verifies the +1 orbit of zero visits all depth-k cylinders exactly once in
// m_k steps. An alternative step function can be injected (mutation tests).
OrbitCheckResult orbit_cylinder_check(const AlphaSequence& alpha, std::size_t k,
                                      std::uint64_t budget,
                                      const OdometerStepFn& step = add_one_digits);

std::vector<std::uint64_t> primes_up_to(std::uint64_t n);

} // namespace nwo
