#include "nwo/odometer.hpp"

#include <algorithm>

namespace nwo {

AlphaSequence AlphaSequence::make(std::vector<std::uint32_t> entries) {
    if (entries.empty())
        throw input_error("ERR_ALPHA", "alpha sequence must be nonempty");
    for (std::uint32_t e : entries)
        if (e < 2) throw input_error("ERR_ALPHA", "alpha entries must be >= 2");
    return AlphaSequence{std::move(entries)};
}

void add_one_digits(std::span<const std::uint32_t> alpha, std::span<const std::uint32_t> x,
                    std::span<std::uint32_t> out) {
    // z_1 = (x_1 + 1) mod a_1; z_{i+1} = x_{i+1} when z_i >= x_i, else
    // (x_{i+1} + 1) mod a_{i+1}.
    std::uint32_t prev_x = x[0];
    std::uint32_t z = (x[0] + 1) % alpha[0];
    bool carry = z < prev_x;
    out[0] = z;
    for (std::size_t i = 1; i < alpha.size(); ++i) {
        prev_x = x[i];
        z = carry ? (x[i] + 1) % alpha[i] : x[i];
        carry = carry && z < prev_x;
        out[i] = z;
    }
}

void add_digits(std::span<const std::uint32_t> alpha, std::span<const std::uint32_t> x,
                std::span<const std::uint32_t> y, std::span<std::uint32_t> out) {
    // Digit-wise addition with rightward carry.
    std::uint32_t carry = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const std::uint32_t s = x[i] + y[i] + carry;
        carry = s >= alpha[i] ? 1 : 0;
        out[i] = carry ? s - alpha[i] : s;
    }
}

std::uint64_t cylinder_count(std::span<const std::uint32_t> alpha, std::size_t k,
                             std::uint64_t budget) {
    if (k > alpha.size()) throw input_error("ERR_ALPHA", "prefix depth exceeds declared depth");
    std::uint64_t m = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (m > budget / alpha[i])
            throw input_error("ERR_BUDGET", "cylinder count exceeds exhaustion budget");
        m *= alpha[i];
    }
    return m;
}

std::uint64_t encode_mixed_radix(std::span<const std::uint32_t> alpha,
                                 std::span<const std::uint32_t> x, std::size_t k) {
    std::uint64_t code = 0;
    std::uint64_t weight = 1;
    for (std::size_t i = 0; i < k; ++i) {
        code += weight * x[i];
        weight *= alpha[i];
    }
    return code;
}

namespace {

void check_element(const AlphaSequence& alpha, const OdometerElement& x) {
    if (x.digits.size() != alpha.depth())
        throw input_error("ERR_ODOMETER_DEPTH", "element depth must match alpha depth");
    for (std::size_t i = 0; i < x.digits.size(); ++i)
        if (x.digits[i] >= alpha.entries[i])
            throw input_error("ERR_ODOMETER_DIGIT", "digit out of range at index " +
                                                        std::to_string(i + 1));
}

} // namespace

OdometerElement add_one(const AlphaSequence& alpha, const OdometerElement& x) {
    check_element(alpha, x);
    OdometerElement z;
    z.digits.resize(alpha.depth());
    add_one_digits(alpha.entries, x.digits, z.digits);
    return z;
}

OdometerElement add(const AlphaSequence& alpha, const OdometerElement& x,
                    const OdometerElement& y) {
    check_element(alpha, x);
    check_element(alpha, y);
    OdometerElement z;
    z.digits.resize(alpha.depth());
    add_digits(alpha.entries, x.digits, y.digits, z.digits);
    return z;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t n) {
    std::vector<std::uint64_t> primes;
    for (std::uint64_t c = 2; c <= n; ++c) {
        bool prime = true;
        for (std::uint64_t d = 2; d * d <= c; ++d)
            if (c % d == 0) {
                prime = false;
                break;
            }
        if (prime) primes.push_back(c);
    }
    return primes;
}

PrimeProfile m_alpha_profile(const AlphaSequence& alpha, std::uint64_t up_to, std::uint64_t cap) {
    PrimeProfile profile;
    for (std::uint64_t p : primes_up_to(up_to)) {
        std::uint64_t total = 0;
        bool capped = false;
        for (std::uint32_t e : alpha.entries) {
            std::uint64_t v = e;
            while (v % p == 0 && total < cap) {
                ++total;
                v /= p;
            }
            if (total >= cap) {
                capped = true;
                break;
            }
        }
        profile.valuations[p] = total;
        if (capped) profile.capped.push_back(p);
    }
    return profile;
}

ConjugacyResult conjugate_up_to_depth(const AlphaSequence& alpha, const AlphaSequence& beta,
                                      std::uint64_t up_to) {
    const PrimeProfile pa = m_alpha_profile(alpha, up_to);
    const PrimeProfile pb = m_alpha_profile(beta, up_to);
    const bool cap_free = pa.capped.empty() && pb.capped.empty();

    for (const auto& [p, va] : pa.valuations) {
        const std::uint64_t vb = pb.valuations.at(p);
        if (va != vb) {
            if (!cap_free) return {ConjugacyVerdict::Inconclusive, p, va, vb};
            return {ConjugacyVerdict::Differ, p, va, vb};
        }
    }
    if (!cap_free) return {ConjugacyVerdict::Inconclusive};
    return {ConjugacyVerdict::EqualProfile};
}

OrbitCheckResult orbit_cylinder_check(const AlphaSequence& alpha, std::size_t k,
                                      std::uint64_t budget, const OdometerStepFn& step) {
    const std::uint64_t m = cylinder_count(alpha.entries, k, budget);
    std::span<const std::uint32_t> a(alpha.entries.data(), k);

    std::vector<std::uint32_t> x(k, 0);
    std::vector<bool> visited(m, false);

    OrbitCheckResult result;
    for (std::uint64_t s = 0; s < m; ++s) {
        const std::uint64_t code = encode_mixed_radix(a, x, k);
        if (visited[code]) {
            result.pass = false;
            result.duplicate_code = code;
            result.at_step = s;
            result.steps = s;
            return result;
        }
        visited[code] = true;
        step(a, x, x);
    }
    result.steps = m;
    // All m cylinders visited iff no duplicate occurred in m steps.
    if (std::find(visited.begin(), visited.end(), false) != visited.end()) result.pass = false;
    return result;
}

} // namespace nwo
