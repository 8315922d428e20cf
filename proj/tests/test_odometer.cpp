#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nwo/json_io.hpp"
#include "nwo/odometer.hpp"
#include "nwo/rng.hpp"
#include "nwo/tower_verify.hpp"

using namespace nwo;

namespace {

AlphaSequence A(std::vector<std::uint32_t> e) { return AlphaSequence::make(std::move(e)); }
OdometerElement E(std::vector<std::uint32_t> d) { return OdometerElement{std::move(d)}; }

OdometerElement one(const AlphaSequence& alpha) {
    OdometerElement e;
    e.digits.assign(alpha.depth(), 0);
    e.digits[0] = 1;
    return e;
}

InputFunction cubic_with_cycle() {
    return InputFunction::make(Rational(2), {Rational(-2), Rational(2)},
                               {Polynomial{{Rational(2), Rational(-2), Rational(0), Rational(1)}}});
}

} // namespace

TEST_CASE("alpha sequences reject entries below two") {
    CHECK_THROWS_AS(A({2, 1, 3}), Error);
    CHECK_THROWS_AS(A({}), Error);
}

TEST_CASE("add_one spec examples") {
    CHECK(add_one(A({2, 2, 2}), E({0, 0, 0})).digits == std::vector<std::uint32_t>{1, 0, 0});
    CHECK(add_one(A({2, 2, 2}), E({1, 1, 0})).digits == std::vector<std::uint32_t>{0, 0, 1});
    CHECK(add_one(A({2, 3}), E({1, 2})).digits == std::vector<std::uint32_t>{0, 0});
}

TEST_CASE("add spec examples") {
    const AlphaSequence a23 = A({2, 3});
    CHECK(add(a23, E({1, 1}), E({0, 0})).digits == std::vector<std::uint32_t>{1, 1});
    CHECK(add(a23, E({1, 1}), E({1, 1})).digits == std::vector<std::uint32_t>{0, 0});
    CHECK_THROWS_AS(add(a23, E({1, 3}), E({0, 0})), Error); // digit out of range
    CHECK_THROWS_AS(add(a23, E({1}), E({0, 0})), Error);     // depth mismatch
}

TEST_CASE("encode_mixed_radix spec examples") {
    const AlphaSequence a23 = A({2, 3});
    CHECK(encode_mixed_radix(a23.entries, E({0, 0}).digits, 2) == 0);
    CHECK(encode_mixed_radix(a23.entries, E({1, 2}).digits, 2) == 5);
    const AlphaSequence a222 = A({2, 2, 2});
    CHECK(encode_mixed_radix(a222.entries, E({0, 0, 1}).digits, 3) == 4);
}

TEST_CASE("mixed-radix oracle, exhaustive at small depth") {
    // For every alpha with depth <= 4 and entries in {2,3,4}, and every x:
    // encode(add_one(x)) = encode(x) + 1 mod m, and both +1 definitions agree.
    std::vector<std::uint32_t> entries;
    const std::uint32_t choices[] = {2, 3, 4};
    for (std::size_t depth = 1; depth <= 4; ++depth) {
        std::vector<std::size_t> pick(depth, 0);
        for (;;) {
            entries.clear();
            for (std::size_t i = 0; i < depth; ++i) entries.push_back(choices[pick[i]]);
            const AlphaSequence alpha = A(entries);
            const std::uint64_t m = cylinder_count(alpha.entries, depth, UINT64_MAX);
            OdometerElement x;
            x.digits.assign(depth, 0);
            const OdometerElement unit = one(alpha);
            for (std::uint64_t v = 0; v < m; ++v) {
                CHECK(encode_mixed_radix(alpha.entries, x.digits, depth) == v);
                const OdometerElement next = add_one(alpha, x);
                CHECK(encode_mixed_radix(alpha.entries, next.digits, depth) == (v + 1) % m);
                const OdometerElement carry_next = add(alpha, x, unit);
                CHECK(carry_next.digits == next.digits);
                x = next;
            }
            // odometer-style advance over the alpha choices themselves
            std::size_t i = 0;
            while (i < depth && ++pick[i] == 3) pick[i++] = 0;
            if (i == depth) break;
        }
    }
}

TEST_CASE("add matches integer addition mod m on sampled pairs") {
    SplitMix64 rng(17);
    const AlphaSequence alpha = A({5, 2, 6, 3});
    const std::uint64_t m = cylinder_count(alpha.entries, 4, UINT64_MAX);
    for (int trial = 0; trial < 2000; ++trial) {
        OdometerElement x, y;
        for (std::uint32_t e : alpha.entries) {
            x.digits.push_back(static_cast<std::uint32_t>(rng.bounded(e)));
            y.digits.push_back(static_cast<std::uint32_t>(rng.bounded(e)));
        }
        const std::uint64_t cx = encode_mixed_radix(alpha.entries, x.digits, 4);
        const std::uint64_t cy = encode_mixed_radix(alpha.entries, y.digits, 4);
        const OdometerElement z = add(alpha, x, y);
        CHECK(encode_mixed_radix(alpha.entries, z.digits, 4) == (cx + cy) % m);
    }
}

TEST_CASE("add is commutative and associative with zero identity, exhaustively") {
    const AlphaSequence alpha = A({2, 3, 2});
    const std::uint64_t m = cylinder_count(alpha.entries, 3, UINT64_MAX);
    auto decode = [&](std::uint64_t v) {
        OdometerElement e;
        for (std::uint32_t a : alpha.entries) {
            e.digits.push_back(static_cast<std::uint32_t>(v % a));
            v /= a;
        }
        return e;
    };
    OdometerElement zero = decode(0);
    for (std::uint64_t i = 0; i < m; ++i) {
        const OdometerElement x = decode(i);
        CHECK(add(alpha, x, zero).digits == x.digits);
        for (std::uint64_t j = 0; j < m; ++j) {
            const OdometerElement y = decode(j);
            CHECK(add(alpha, x, y).digits == add(alpha, y, x).digits);
            for (std::uint64_t k = 0; k < m; k += 3) {
                const OdometerElement z = decode(k);
                CHECK(add(alpha, add(alpha, x, y), z).digits ==
                      add(alpha, x, add(alpha, y, z)).digits);
            }
        }
    }
}

TEST_CASE("prime profiles") {
    PrimeProfile p = m_alpha_profile(A({2}), 7);
    CHECK(p.valuations[2] == 1);
    CHECK(p.valuations[3] == 0);
    CHECK(p.valuations[5] == 0);
    CHECK(p.valuations[7] == 0);

    p = m_alpha_profile(A({6, 10, 15}), 7);
    CHECK(p.valuations[2] == 2);
    CHECK(p.valuations[3] == 2);
    CHECK(p.valuations[5] == 2);
    CHECK(p.valuations[7] == 0);

    p = m_alpha_profile(A({4, 4}), 3);
    CHECK(p.valuations[2] == 4);
}

TEST_CASE("profiles are additive under concatenation") {
    std::vector<std::uint32_t> a{4, 6, 9}, b{10, 8};
    std::vector<std::uint32_t> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    PrimeProfile pa = m_alpha_profile(A(a), 13);
    PrimeProfile pb = m_alpha_profile(A(b), 13);
    PrimeProfile pab = m_alpha_profile(A(ab), 13);
    for (const auto& [prime, v] : pab.valuations)
        CHECK(v == pa.valuations[prime] + pb.valuations[prime]);
}

TEST_CASE("profiles depend only on the multiset of entries") {
    PrimeProfile p1 = m_alpha_profile(A({4, 6, 9, 10}), 13);
    PrimeProfile p2 = m_alpha_profile(A({10, 9, 4, 6}), 13);
    CHECK(p1.valuations == p2.valuations);
}

TEST_CASE("conjugacy verdicts") {
    // reflexivity
    CHECK(conjugate_up_to_depth(A({2, 3, 4}), A({2, 3, 4}), 13).verdict ==
          ConjugacyVerdict::EqualProfile);
    // symmetry
    const AlphaSequence a = A({2, 2}), b = A({3, 3});
    ConjugacyResult r1 = conjugate_up_to_depth(a, b, 13);
    ConjugacyResult r2 = conjugate_up_to_depth(b, a, 13);
    CHECK(r1.verdict == ConjugacyVerdict::Differ);
    CHECK(r2.verdict == ConjugacyVerdict::Differ);
    CHECK(r1.witness_prime == 2);
    CHECK(r1.valuation_alpha == 2);
    CHECK(r1.valuation_beta == 0);

    // (2,3,2,3,...) at depth 50 vs (6,6,...) at depth 25: equal profiles
    std::vector<std::uint32_t> alt;
    for (int i = 0; i < 25; ++i) {
        alt.push_back(2);
        alt.push_back(3);
    }
    std::vector<std::uint32_t> sixes(25, 6);
    ConjugacyResult r = conjugate_up_to_depth(A(alt), A(sixes), 13);
    CHECK(r.verdict == ConjugacyVerdict::EqualProfile);
    PrimeProfile p = m_alpha_profile(A(alt), 13);
    CHECK(p.valuations[2] == 25);
    CHECK(p.valuations[3] == 25);
    CHECK(p.valuations[5] == 0);

    // capped profiles yield Inconclusive rather than a Differ verdict
    PrimeProfile capped = m_alpha_profile(A({4, 4}), 3, 2);
    CHECK(capped.capped == std::vector<std::uint64_t>{2});
}

TEST_CASE("orbit cylinder check passes on honest prefixes") {
    OrbitCheckResult r = orbit_cylinder_check(A({2}), 1, 1000);
    CHECK(r.pass);
    CHECK(r.steps == 2);
    r = orbit_cylinder_check(A({2, 3}), 2, 1000);
    CHECK(r.pass);
    CHECK(r.steps == 6);
    CHECK_THROWS_AS(orbit_cylinder_check(A({100, 100, 100}), 3, 1000), Error); // budget
}

TEST_CASE("orbit cylinder check catches a carry-free +1 at the first wrap") {
    auto no_carry = [](std::span<const std::uint32_t> alpha, std::span<const std::uint32_t> x,
                       std::span<std::uint32_t> out) {
        for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = x[i];
        out[0] = (x[0] + 1) % alpha[0];
    };
    OrbitCheckResult r = orbit_cylinder_check(A({2, 3}), 2, 1000, no_carry);
    CHECK(!r.pass);
    REQUIRE(r.at_step.has_value());
    CHECK(*r.at_step == 2); // (0,0) -> (1,0) -> (0,0): duplicate at the wrap
    CHECK(*r.duplicate_code == 0);
}

TEST_CASE("verify_tower passes on a built tower and reports the prime evidence") {
    std::vector<std::uint32_t> mults{1, 2, 3};
    RefinementTower tower = build_tower(cubic_with_cycle(), 3, mults, Rational(4), {},
                                        Rational(1, 3), 9, TowerBudgets{}, nullptr);
    TowerVerifyReport rep = verify_tower(tower, 13);
    CHECK(rep.pass);
    CHECK(rep.failures.empty());
    CHECK(rep.prime_valuations[2] >= 2);
    CHECK(rep.prime_valuations[3] >= 1);
}

TEST_CASE("verify_tower localizes single-field corruptions") {
    std::vector<std::uint32_t> mults{1, 2};
    RefinementTower tower = build_tower(cubic_with_cycle(), 2, mults, Rational(4), {},
                                        Rational(1, 3), 9, TowerBudgets{}, nullptr);
    REQUIRE(verify_tower(tower, 13).pass);

    SUBCASE("wrong period fails the cardinality check at its level") {
        RefinementTower bad = tower;
        bad.levels[1].period += 1;
        TowerVerifyReport rep = verify_tower(bad, 13);
        CHECK(!rep.pass);
        bool found = false;
        for (const auto& f : rep.failures)
            if (f.level == 2 && f.check == "cardinality") found = true;
        CHECK(found);
    }

    SUBCASE("displaced interval fails the refinement check at its level") {
        RefinementTower bad = tower;
        // point a level-2 cycle slot at a piece far outside every parent
        const PiecewiseModel& m2 = bad.levels[1].model;
        const AffinePiece& parent0 =
            tower.levels[0].model.pieces()[tower.levels[0].cycle.member_pieces[0]];
        std::size_t outsider = m2.pieces().size();
        for (std::size_t i = 0; i < m2.pieces().size(); ++i) {
            bool in_parent = false;
            for (std::size_t pid : tower.levels[0].cycle.member_pieces) {
                const AffinePiece& par = tower.levels[0].model.pieces()[pid];
                if (par.lo <= m2.pieces()[i].lo && m2.pieces()[i].hi <= par.hi) in_parent = true;
            }
            if (!in_parent) outsider = i;
        }
        (void)parent0;
        REQUIRE(outsider < m2.pieces().size());
        bad.levels[1].cycle.member_pieces[0] = outsider;
        TowerVerifyReport rep = verify_tower(bad, 13);
        CHECK(!rep.pass);
        bool found = false;
        for (const auto& f : rep.failures)
            if (f.level == 2 && (f.check == "refinement" || f.check == "cyclic_permutation"))
                found = true;
        CHECK(found);
    }

    SUBCASE("reordered cycle fails the cyclic permutation check at its level") {
        RefinementTower bad = tower;
        auto& cyc = bad.levels[1].cycle;
        std::swap(cyc.member_pieces[0], cyc.member_pieces[1]);
        std::swap(cyc.points[0], cyc.points[1]);
        TowerVerifyReport rep = verify_tower(bad, 13);
        CHECK(!rep.pass);
        bool found = false;
        for (const auto& f : rep.failures)
            if (f.level == 2 && f.check == "cyclic_permutation") found = true;
        CHECK(found);
    }

    SUBCASE("inflated stored diameter fails the diameter check") {
        RefinementTower bad = tower;
        bad.levels[1].max_diameter = bad.levels[1].max_diameter * Rational(2);
        TowerVerifyReport rep = verify_tower(bad, 13);
        CHECK(!rep.pass);
        bool found = false;
        for (const auto& f : rep.failures)
            if (f.level == 2 && f.check == "diameter") found = true;
        CHECK(found);
    }
}

TEST_CASE("alpha JSON parsing") {
    CHECK(alpha_from_json(Json::parse("[2,3,4]")).entries ==
          std::vector<std::uint32_t>{2, 3, 4});
    CHECK(alpha_from_json(Json::parse("{\"alpha\":[2,2]}")).entries ==
          std::vector<std::uint32_t>{2, 2});
    CHECK_THROWS_AS(alpha_from_json(Json::parse("[2,1]")), Error);
    CHECK_THROWS_AS(alpha_from_json(Json::parse("[2,-3]")), Error);
}
