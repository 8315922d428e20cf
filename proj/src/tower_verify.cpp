#include "nwo/tower_verify.hpp"

#include "nwo/dynamics.hpp"
#include "nwo/odometer.hpp"

namespace nwo {

TowerVerifyReport verify_tower(const RefinementTower& tower, std::uint64_t up_to) {
    TowerVerifyReport report;
    auto fail = [&report](std::uint32_t level, std::string check, std::string detail) {
        report.pass = false;
        report.failures.push_back({level, std::move(check), std::move(detail)});
    };

    if (tower.levels.empty() || tower.alpha.size() != tower.levels.size()) {
        fail(0, "cardinality", "tower must carry one alpha entry per level");
        return report;
    }

    std::uint64_t expected = 1;
    for (std::size_t k = 0; k < tower.levels.size(); ++k) {
        const std::uint32_t lvl = static_cast<std::uint32_t>(k + 1);
        const TowerLevel& level = tower.levels[k];
        expected *= tower.alpha[k];

        // (1) cardinality: |P_k| = alpha(1) * ... * alpha(k).
        if (tower.alpha[k] < 2)
            fail(lvl, "cardinality", "alpha entry below 2");
        if (level.period != expected)
            fail(lvl, "cardinality",
                 "period " + std::to_string(level.period) + " != alpha product " +
                     std::to_string(expected));
        if (level.cycle.member_pieces.size() != level.period)
            fail(lvl, "cardinality",
                 "cycle lists " + std::to_string(level.cycle.member_pieces.size()) +
                     " intervals, period says " + std::to_string(level.period));

        const std::size_t n = level.cycle.member_pieces.size();
        bool structure_ok = n >= 2 && level.cycle.points.size() == n;
        for (std::size_t i = 0; structure_ok && i < n; ++i)
            if (level.cycle.member_pieces[i] >= level.model.pieces().size()) structure_ok = false;
        if (!structure_ok) {
            fail(lvl, "cyclic_permutation", "cycle structure malformed");
            continue;
        }

        // (3) cyclic permutation, exactly: N(J_i) = z_{i+1} interior to J_{i+1}.
        bool cyclic_ok = true;
        Rational max_diam(0);
        for (std::size_t i = 0; i < n; ++i) {
            const AffinePiece& J = level.model.pieces()[level.cycle.member_pieces[i]];
            max_diam = rmax(max_diam, J.length());
            const AffinePiece& next = level.model.pieces()[level.cycle.member_pieces[(i + 1) % n]];
            const Rational image = J.newton_image();
            if (image != level.cycle.points[(i + 1) % n] || !next.strictly_contains(image)) {
                fail(lvl, "cyclic_permutation",
                     "interval " + std::to_string(i) + " does not map into the next interval");
                cyclic_ok = false;
                break;
            }
            if (!J.strictly_contains(level.cycle.points[i])) {
                fail(lvl, "cyclic_permutation",
                     "cycle point " + std::to_string(i) + " not interior to its interval");
                cyclic_ok = false;
                break;
            }
        }
        if (cyclic_ok) {
            TrajectoryOutcome probe = classify(level.model, level.family, level.cycle.points[0],
                                               default_max_steps(level.model));
            if (probe.kind != TrajectoryOutcome::Kind::EventuallyPeriodic ||
                probe.period != level.period)
                fail(lvl, "cyclic_permutation",
                     "classify from the level representative does not yield the level period");
        }

        // (4) diameter decay toward the configured schedule.
        if (max_diam != level.max_diameter)
            fail(lvl, "diameter", "stored max diameter disagrees with the intervals");
        if (k > 0 && !(max_diam < tower.levels[k - 1].max_diameter))
            fail(lvl, "diameter", "diameters must decrease strictly");

        // (2) refinement: every level-k interval nests in a level-(k-1) one,
        // and each parent holds exactly alpha(k) children.
        if (k > 0) {
            const TowerLevel& parent_level = tower.levels[k - 1];
            std::vector<std::size_t> children_per_parent(parent_level.cycle.member_pieces.size(),
                                                         0);
            for (std::size_t i = 0; i < n; ++i) {
                const AffinePiece& child = level.model.pieces()[level.cycle.member_pieces[i]];
                bool nested = false;
                for (std::size_t p = 0; p < parent_level.cycle.member_pieces.size(); ++p) {
                    const AffinePiece& parent =
                        parent_level.model.pieces()[parent_level.cycle.member_pieces[p]];
                    if (parent.lo <= child.lo && child.hi <= parent.hi) {
                        nested = true;
                        ++children_per_parent[p];
                        break;
                    }
                }
                if (!nested) {
                    fail(lvl, "refinement",
                         "interval " + std::to_string(i) + " = [" + child.lo.str() + ", " +
                             child.hi.str() + "] lies in no parent interval");
                    break;
                }
            }
            for (std::size_t p = 0; p < children_per_parent.size(); ++p) {
                if (children_per_parent[p] != 0 &&
                    children_per_parent[p] != tower.alpha[k]) {
                    fail(lvl, "refinement",
                         "parent " + std::to_string(p) + " holds " +
                             std::to_string(children_per_parent[p]) + " children, expected " +
                             std::to_string(tower.alpha[k]));
                    break;
                }
            }
        }
    }

    // Infinity-adic evidence at this finite depth: which primes divide the
    // alpha product so far.
    std::vector<std::uint32_t> entries;
    for (std::uint64_t a : tower.alpha)
        if (a >= 2 && a <= UINT32_MAX) entries.push_back(static_cast<std::uint32_t>(a));
    if (!entries.empty()) {
        PrimeProfile profile = m_alpha_profile(AlphaSequence::make(std::move(entries)), up_to);
        report.prime_valuations = profile.valuations;
        for (const auto& [p, v] : profile.valuations)
            if (v > 0) report.covered_primes.push_back(p);
    }
    return report;
}

} // namespace nwo
