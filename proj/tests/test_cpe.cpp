#include "ebla/cpe.hpp"
#include "ebla/harness.hpp"
#include "ebla/rng.hpp"

#include <doctest.h>

#include <set>

using namespace ebla;

namespace {

// Reference-dependent utility with the lottery as its own reference point, written
// out directly: gains weigh eta, losses eta * lambda.
Rational self_referenced(const std::vector<Rational>& v, const Rational& eta, const Rational& lambda, const ExactLottery& f) {
    Rational u(0);
    for (std::size_t s = 0; s < v.size(); ++s)
        for (std::size_t r = 0; r < v.size(); ++r) {
            const Rational d = v[s] - v[r];
            const Rational gl = d >= 0 ? Rational(eta * d) : Rational(eta * lambda * d);
            u += f.probs[s] * f.probs[r] * (v[s] + gl);
        }
    return u;
}

ExactAttainability random_attainability(CounterRng& rng, int m, std::optional<SchoolId> outside) {
    ExactAttainability P;
    P.num_schools = m;
    P.outside = outside;
    for (AttainabilityState s = 1; s < (1U << m); ++s) {
        if (outside && !attainable(s, *outside)) continue;
        P.add(s, Rational(1 + static_cast<long>(rng.below(9))));
    }
    const Rational t = P.total();
    for (auto& [s, q] : P.mass) q /= t;
    return P;
}

// Independent TRM test: each prefix is a contiguous block of preference ranks.
bool trm_by_ranks(const Rol& rol, const Rol& order) {
    int lo = 1 << 20, hi = -1;
    for (int k = 0; k < rol.size(); ++k) {
        const int rank = order.position_of(rol[k]);
        lo = std::min(lo, rank);
        hi = std::max(hi, rank);
        if (hi - lo != k) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("closed-form utility equals the self-referenced double sum") {
    CounterRng rng(31, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + static_cast<int>(rng.below(4));
        std::vector<Rational> v;
        for (int s = 0; s < m; ++s) v.emplace_back(static_cast<long>(rng.below(50)));
        ExactLottery f{std::vector<Rational>(static_cast<std::size_t>(m))};
        Rational t(0);
        for (auto& p : f.probs) t += (p = Rational(static_cast<long>(rng.below(7))));
        if (t == 0) continue;
        for (auto& p : f.probs) p /= t;
        const Rational eta(static_cast<long>(rng.below(4)), 2);
        const Rational lambda = Rational(1) + Rational(static_cast<long>(rng.below(8)), 3);
        CHECK(cpe_utility<Rational>(v, eta * (lambda - 1), f) == self_referenced(v, eta, lambda, f));
        CHECK(utility_wrt_reference<Rational>(v, eta, lambda, f, f) == self_referenced(v, eta, lambda, f));
    }
}

TEST_CASE("degenerate and classical cases") {
    const std::vector<double> v{100, 30, 0};
    Lottery sure{{0, 1, 0}};
    CHECK(cpe_utility<double>(v, 3.0, sure) == doctest::Approx(30));
    Lottery coin{{0.5, 0, 0.5}};
    CHECK(cpe_utility<double>(v, 0.0, coin) == doctest::Approx(50));
    CHECK(cpe_utility<double>(v, 1.0, coin) == doctest::Approx(25));
    const auto t = StudentType({100, 30, 0}, {0, 0, 0}, 2.0, 1.5);
    CHECK(cpe_utility(t, coin) == doctest::Approx(25));
    CHECK(utility_wrt_reference(t, coin, sure) ==
          doctest::Approx(0.5 * (100 + 2 * 70) + 0.5 * (0 - 2 * 1.5 * 30)));
}

TEST_CASE("worked example argmax at a few loss-dominance levels") {
    const auto P = harness::example_attainability(Rational(1, 4), Rational(1, 20));
    const std::vector<Rational> v{100, 30, 0};
    auto best = [&](Rational L) { return optimal_rols<Rational>(v, L, P); };
    CHECK(best(0).argmax == std::vector<Rol>{Rol{1, 2, 3}});
    CHECK(best(5).argmax == std::vector<Rol>{Rol{3, 1, 2}});
    for (int k = 0; k <= 100; ++k) CHECK_FALSE(best(Rational(k, 20)).contains(Rol{1, 3, 2}));
    const auto trm = optimal_rol_trm<Rational>(v, Rational(3, 2), P);
    CHECK(trm.value == best(Rational(3, 2)).value);
}

TEST_CASE("canonical search covers outcome classes") {
    const auto P = harness::example_attainability(Rational(1, 4), Rational(1, 20));
    const std::vector<Rational> v{100, 30, 0};
    for (int k = 0; k <= 40; ++k) {
        const Rational L(k, 8);
        const auto res = optimal_rols<Rational>(v, L, P);
        Rational brute = cpe_utility<Rational>(v, L, induced_lottery(Rol{1, 2, 3}, P));
        for (const auto& r : all_rols(3)) brute = std::max(brute, cpe_utility<Rational>(v, L, induced_lottery(r, P)));
        CHECK(res.value == brute);
    }
    CHECK_THROWS_AS(optimal_rols<double>(std::vector<double>(8, 1.0), 1.0, AttainabilityDistribution{8, {}, {}}),
                    std::length_error);
}

TEST_CASE("adjacent flip criterion predicts the sign of the swap gain") {
    CounterRng rng(32, 0);
    int nonzero = 0;
    for (int trial = 0; trial < 150; ++trial) {
        const int m = 3 + static_cast<int>(rng.below(2));
        std::vector<Rational> v;
        std::set<long> used;
        while (static_cast<int>(v.size()) < m) {
            const long x = static_cast<long>(rng.below(60));
            if (used.insert(x).second) v.emplace_back(x);
        }
        const auto P = random_attainability(rng, m, std::nullopt);
        const Rational L(1 + static_cast<long>(rng.below(12)), 4);
        for (const auto& rol : all_rols(m))
            for (int pos = 0; pos + 1 < m; ++pos) {
                const Rational gain = swap_gain<Rational>(v, L, rol, pos, P);
                const int sign = gain > 0 ? 1 : (gain < 0 ? -1 : 0);
                REQUIRE(flip_predicted_sign<Rational>(v, L, rol, pos, P) == sign);
                nonzero += sign != 0;
            }
    }
    CHECK(nonzero > 0);
}

TEST_CASE("swap mass") {
    const auto P = harness::example_attainability(Rational(1, 4), Rational(1, 20));
    CHECK(swap_mass(Rol{1, 2, 3}, 0, P) == Rational(1, 16));
    CHECK(swap_mass(Rol{1, 2, 3}, 1, P) == Rational(57, 160));
    CHECK(swap_mass(Rol{2, 3, 1}, 0, P) == Rational(1, 16) + Rational(57, 160));
}

TEST_CASE("TRM enumeration and classifiers") {
    std::vector<Rol> four;
    for (auto d : {"1234", "2134", "2314", "2341", "3214", "3241", "3421", "4321"}) four.push_back(Rol::from_digits(d));
    CHECK(trm_enumerate(4) == four);
    for (int m = 1; m <= 6; ++m) {
        CHECK(trm_enumerate(m).size() == (std::size_t{1} << (m - 1)));
        const Rol id = Rol::identity(m);
        std::size_t count = 0;
        for (const auto& r : all_rols(m)) {
            const bool expect = trm_by_ranks(r, id);
            const auto c = is_top_rank_monotone(r, id);
            REQUIRE(c.is_trm == expect);
            REQUIRE(is_trm_interval(r, id) == expect);
            CHECK(c.witness.has_value() == !expect);
            count += expect;
        }
        CHECK(count == (std::size_t{1} << (m - 1)));
    }
    // A non-identity preference order relabels the schools.
    const Rol order{3, 1, 2};
    CHECK(is_top_rank_monotone(Rol{1, 3, 2}, order).is_trm);
    CHECK_FALSE(is_top_rank_monotone(Rol{2, 3, 1}, order).is_trm);
}

TEST_CASE("TRM up to truncation") {
    const Rol id = Rol::identity(4);
    CHECK(is_trm_up_to_truncation(Rol{2, 3, 4, 1}, id, 4));
    CHECK_FALSE(is_trm_up_to_truncation(Rol{2, 4, 1, 3}, id, 4));
    CHECK(is_trm_up_to_truncation(Rol{2, 1, 3, 4}, id, 3));
    CHECK_FALSE(is_trm_up_to_truncation(Rol{1, 2, 4, 3}, id, 3));
    CHECK_FALSE(is_trm_up_to_truncation(Rol{1, 3, 4, 2}, id, 4));
    CHECK(is_trm_up_to_truncation(Rol{4, 1, 2, 3}, id, 4));
    CHECK(is_trm_up_to_truncation(Rol{3, 2, 4, 1}, id, 4));
}

TEST_CASE("truthful_order") {
    const std::vector<double> v{5, 9, 1};
    CHECK(truthful_order(v) == Rol{2, 1, 3});
    const std::vector<double> tie{5, 5, 1};
    CHECK_THROWS_WITH(truthful_order(tie), "indifference unsupported");
}

TEST_CASE("truthful bound check") {
    // Lambda = 2: thresholds 1/2 and 1/4.
    CHECK(truthful_bound_check(0.6, 2.0) == BoundVerdict::TruthStrict);
    CHECK(truthful_bound_check(0.2, 2.0) == BoundVerdict::MisreportStrict);
    CHECK(truthful_bound_check(0.4, 2.0) == BoundVerdict::Indeterminate);
    CHECK(truthful_bound_check(0.5, 2.0) == BoundVerdict::Indeterminate);
    CHECK(truthful_bound_check(0.3, 1.0) == BoundVerdict::TruthStrict);
    CHECK_THROWS_AS(truthful_bound_check(0.5, 0.5), std::invalid_argument);
    CHECK(std::string(to_string(BoundVerdict::MisreportStrict)) == "MisreportStrict");
}

TEST_CASE("drop consistency") {
    const Rol id = Rol::identity(4);
    CHECK(drop_consistency_check(Rol{1, 2, 3, 4}, id, 4));
    CHECK(drop_consistency_check(Rol{4, 1, 2, 3}, id, 4));
    CHECK_FALSE(drop_consistency_check(Rol{1, 2, 4, 3}, id, 4));
    CHECK_FALSE(drop_consistency_check(Rol{2, 4, 1, 3}, id, 4));
    // The outside option ranked third: school 4 is worse, so dropping it is fine.
    CHECK(drop_consistency_check(Rol{1, 3, 2, 4}, id, 2));
    CHECK(drop_consistency_check(Rol{2, 1, 3, 4}, id, 1));
}
