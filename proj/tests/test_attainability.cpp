#include "ebla/attainability.hpp"
#include "ebla/harness.hpp"
#include "ebla/rng.hpp"

#include <doctest.h>

using namespace ebla;

namespace {

Rational rand_rational(CounterRng& rng, int den) { return Rational(static_cast<long>(rng.below(static_cast<std::uint64_t>(den + 1))), den); }

std::vector<IndependentSampler> example_samplers(double eps) {
    IndependentSampler s;
    s.support = {{{100, 30, 0}, 0.0, 1.0, 1.0 - eps}, {{30, 100, 0}, 0.0, 1.0, eps}};
    return {s, s};
}

}  // namespace

TEST_CASE("state bit strings") {
    CHECK(state_to_bits(state_from_bits("101"), 3) == "101");
    CHECK(state_from_bits("001") == 4U);
    CHECK(attainable(state_from_bits("011"), 2));
    CHECK_FALSE(attainable(state_from_bits("011"), 1));
}

TEST_CASE("example attainability matches the closed form") {
    CounterRng rng(21, 0);
    for (int trial = 0; trial < 40; ++trial) {
        const Rational w = rand_rational(rng, 24);
        const Rational e = rand_rational(rng, 20);
        const auto P = harness::example_attainability(w, e);
        const Rational one(1);
        CHECK(P.probability(state_from_bits("111")) == w * w);
        CHECK(P.probability(state_from_bits("011")) == 2 * w * (one - w) * (one - e));
        CHECK(P.probability(state_from_bits("101")) == 2 * w * (one - w) * e);
        CHECK(P.probability(state_from_bits("001")) == (one - w) * (one - w));
        CHECK(P.total() == one);
        CHECK(P.violations().empty());
    }
}

TEST_CASE("induced lottery follows the first attainable school") {
    const auto P = harness::example_attainability(Rational(1, 4), Rational(1, 20));
    const auto f = induced_lottery(Rol{1, 2, 3}, P);
    CHECK(f[1] == Rational(13, 160));
    CHECK(f[2] == Rational(57, 160));
    CHECK(f[3] == Rational(9, 16));
    const auto g = induced_lottery(Rol{2, 1, 3}, P);
    CHECK(g[2] == Rational(67, 160));
    CHECK(g[1] == Rational(3, 160));
    const auto h = induced_lottery(Rol{3, 1, 2}, P);
    CHECK(h[3] == Rational(1));

    // Direct definition for random distributions over 4 schools.
    CounterRng rng(22, 0);
    for (int trial = 0; trial < 50; ++trial) {
        ExactAttainability Q;
        Q.num_schools = 4;
        for (AttainabilityState s = 1; s < 16; ++s) Q.add(s, Rational(static_cast<long>(rng.below(5))));
        if (Q.total() == 0) continue;
        const Rational t = Q.total();
        for (auto& [s, q] : Q.mass) q /= t;
        for (const auto& rol : all_rols(4)) {
            const auto lot = induced_lottery(rol, Q);
            Rational sum(0);
            for (int k = 0; k < 4; ++k) {
                Rational expect(0);
                for (const auto& [s, q] : Q.mass) {
                    bool earlier = false;
                    for (int l = 0; l < k; ++l) earlier = earlier || attainable(s, rol[l]);
                    if (!earlier && attainable(s, rol[k])) expect += q;
                }
                CHECK(lot[rol[k]] == expect);
                sum += lot[rol[k]];
            }
            CHECK(sum == 1);
        }
    }
}

TEST_CASE("lottery rejects states with nothing attainable") {
    AttainabilityDistribution P;
    P.num_schools = 2;
    P.add(0, 0.5);
    P.add(3, 0.5);
    CHECK_THROWS_AS(induced_lottery(Rol{1, 2}, P), std::domain_error);
}

TEST_CASE("support and exclusivity predicates") {
    const auto P = harness::example_attainability(Rational(1, 4), Rational(1, 20));
    CHECK(has_full_support(P));
    CHECK_FALSE(is_exclusive(P, 1));
    const auto Q = harness::example_attainability(Rational(1, 4), Rational(0));
    CHECK_FALSE(has_full_support(Q));
    ExactAttainability R;
    R.num_schools = 2;
    R.add(1, Rational(1, 2));
    R.add(2, Rational(1, 2));
    CHECK_FALSE(has_full_support(R));
    CHECK(is_exclusive(R, 1));
    R.add(3, Rational(1, 4));
    CHECK(has_full_support(R));
}

TEST_CASE("Monte Carlo agrees with the exact distribution") {
    const Instance inst{3, {1, 1, 3}, SchoolId{3}, 3};
    const double w = 0.4, e = 0.2;
    const auto exact = to_double(harness::example_attainability(exact_rational(w), exact_rational(e)));
    const auto mc = mc_attainability(w, inst, example_samplers(e), 40000, 7);
    CHECK(mc.replications == 40000);
    for (const auto& [s, q] : exact.mass) {
        const double se = std::sqrt(q * (1 - q) / 40000.0);
        CHECK(std::abs(mc.distribution.probability(s) - q) <= 5 * se + 1e-12);
    }
    CHECK(total_variation(mc.distribution, exact) <= 5 * std::sqrt(static_cast<double>(exact.mass.size()) / 40000.0));
}

TEST_CASE("Monte Carlo is thread independent") {
    const Instance inst{3, {1, 1, 3}, SchoolId{3}, 3};
    const auto a = mc_attainability(0.3, inst, example_samplers(0.1), 5000, 99, truthful_strategy(), da_student_proposing, 1);
    const auto b = mc_attainability(0.3, inst, example_samplers(0.1), 5000, 99, truthful_strategy(), da_student_proposing, 4);
    CHECK(a.distribution.mass == b.distribution.mass);
    const auto c = mc_attainability(0.3, inst, example_samplers(0.1), 5000, 100);
    CHECK(c.distribution.mass != a.distribution.mass);
}

TEST_CASE("joint-support attainability matches scenario enumeration") {
    const Instance inst{3, {1, 1, 3}, SchoolId{3}, 3};
    const StudentType focal = StudentType::with_score({100, 30, 0}, 0.5, 1.0);
    std::vector<JointTypeProfile> others{
        {{StudentType::with_score({100, 30, 0}, 0.8, 0.0), StudentType::with_score({30, 100, 0}, 0.2, 0.0)}, 0.5},
        {{StudentType::with_score({30, 100, 0}, 0.9, 0.0), StudentType::with_score({30, 100, 0}, 0.7, 0.0)}, 0.5}};
    auto truthful = [](StudentId, const StudentType& t) { return Rol::truthful(t.values()); };
    const auto P = exact_attainability(focal, others, inst, truthful);
    // First world: one rival above in school 1, school 2 free. Second: both rivals above, filling 1 and 2.
    CHECK(P.probability(state_from_bits("011")) == doctest::Approx(0.5));
    CHECK(P.probability(state_from_bits("001")) == doctest::Approx(0.5));
}
