#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nwo/synthesis.hpp"

namespace nwo {

struct TowerCheckFailure {
    std::uint32_t level; // 1-based
    std::string check;   // "cardinality", "refinement", "cyclic_permutation", "diameter"
    std::string detail;
};

struct TowerVerifyReport {
    bool pass = true;
    std::vector<TowerCheckFailure> failures;
    std::map<std::uint64_t, std::uint64_t> prime_valuations; // of prod alpha(i)
    std::vector<std::uint64_t> covered_primes;               // positive valuation
};

// Finite-depth witness of the adding-machine realization conditions: at each
// level the cycle cardinality equals the alpha product, level k+1 intervals
// refine level k with exactly alpha(k+1) children per parent, the Newton map
// cyclically permutes the level's intervals (checked exactly on the interval
// landing points, the map being constant on each piece), and the interval
// diameters decay strictly.
TowerVerifyReport verify_tower(const RefinementTower& tower, std::uint64_t primes_up_to);

} // namespace nwo
