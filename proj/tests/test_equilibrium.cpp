#include "ebla/equilibrium.hpp"
#include "ebla/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace ebla;

namespace {

double binom_below(int trials, double p, int q) {
    double total = 0.0;
    for (int k = 0; k < q && k <= trials; ++k) {
        double c = 1.0;
        for (int j = 0; j < k; ++j) c = c * (trials - j) / (j + 1);
        total += c * std::pow(p, k) * std::pow(1 - p, trials - k);
    }
    return total;
}

}  // namespace

TEST_CASE("order statistic probability") {
    const auto G = ScoreLaw::uniform();
    for (double w : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0})
        for (int n = 1; n <= 6; ++n)
            for (int q = 1; q <= 4; ++q) CHECK(order_stat_prob(w, n, q, G) == doctest::Approx(q >= n ? 1.0 : binom_below(n - 1, 1 - w, q)));
    CHECK(order_stat_prob(0.3, 4, 2, G) == doctest::Approx(std::pow(0.3, 3) + 3 * 0.09 * 0.7));
    CHECK_THROWS_AS(order_stat_prob(1.5, 3, 1, G), std::domain_error);
}

TEST_CASE("apply decision and gain agree") {
    for (double L : {0.5, 1.0, 2.0, 4.0})
        for (int k = 1; k < 100; ++k) {
            const double f = k / 100.0;
            const double gain = f * 10 - L * f * (1 - f) * 10;
            CHECK(elite_apply_gain(f, L, 10) == doctest::Approx(gain));
            if (std::abs(f - (1 - 1 / L)) > 1e-9) CHECK(elite_apply_decision(f, L) == (gain > 0));
        }
    CHECK(elite_apply_decision(0.5, 2.0));
    CHECK(elite_adjacency_reduction({5, 5}, 0.7, 2.0) == EliteListing::ListAllElite);
    CHECK(elite_adjacency_reduction({5, 5}, 0.3, 2.0) == EliteListing::ListNone);
    CHECK_THROWS(elite_adjacency_reduction({5, 4}, 0.7, 2.0));
}

TEST_CASE("closed-form elite cutoffs") {
    EliteProblem two;
    const auto c2 = elite_cutoffs(two);
    CHECK(std::abs(c2.cutoffs[0] - 0.5) < 1e-9);
    EliteProblem three;
    three.n = 3;
    const auto c3 = elite_cutoffs(three);
    CHECK(std::abs(c3.cutoffs[0] - std::sqrt(0.5)) < 1e-9);
    CHECK(elite_attainability(three, c3.cutoffs, c3.cutoffs[0]) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(verify_cbne(three, c3) <= 1e-9);
    // Lambda = 3 with four students and two seats: f(c) = c^3 + 3 c^2 (1 - c) = 2/3.
    EliteProblem four;
    four.n = 4;
    four.q = 2;
    four.lambda_levels = {3.0};
    const auto c4 = elite_cutoffs(four);
    const double c = c4.cutoffs[0];
    CHECK(std::pow(c, 3) + 3 * c * c * (1 - c) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("cutoffs fall as loss dominance falls") {
    EliteProblem p;
    p.n = 4;
    p.lambda_levels = {1.5, 2.0, 4.0};
    p.level_probs = {0.3, 0.3, 0.4};
    const auto c = elite_cutoffs(p);
    REQUIRE(c.cutoffs.size() == 3);
    CHECK(c.cutoffs[0] < c.cutoffs[1]);
    CHECK(c.cutoffs[1] < c.cutoffs[2]);
    CHECK(verify_cbne(p, c) <= 1e-9);
    const auto j = to_json(c);
    CHECK(j.size() == 3);
    CHECK(j[0]["cutoff"].get<double>() == c.cutoffs[0]);
}

TEST_CASE("elite problem validation") {
    EliteProblem p;
    p.level_probs = {0.5};
    CHECK_FALSE(p.violations().empty());
    p.level_probs = {1.0};
    p.lambda_levels = {-1.0};
    CHECK_FALSE(p.violations().empty());
    CHECK_THROWS(elite_cutoffs(p));
}

TEST_CASE("sequential example verdict") {
    // Truth gives v_pref w.p. eps else v_other; deviation gives v_other surely.
    for (int i = 1; i <= 20; ++i)
        for (int j = 1; j <= 20; ++j) {
            const double eps = i / 21.0, L = j / 4.0;
            const double truth = eps * 10 + (1 - eps) * 4 - L * eps * (1 - eps) * 6;
            const auto verdict = sequential_cpe_osp_example(eps, L, 10, 4);
            if (std::abs(truth - 4) > 1e-9) CHECK((verdict == SequentialVerdict::Not) == (truth < 4));
        }
    CHECK(sequential_cpe_osp_example(0.5, 2.0, 10, 4) == SequentialVerdict::TruthfulIsSeqCPE);
    CHECK(std::string(to_string(SequentialVerdict::Not)) == "Not");
}

TEST_CASE("evaluator attainability matches direct enumeration") {
    const Instance inst{3, {1, 1, 2}, SchoolId{3}, 2};
    const StudentType a = StudentType::with_score({10, 6, 0}, 0.4, 1.0);
    const StudentType b = StudentType::with_score({4, 9, 0}, 0.7, 1.0);
    const StudentType b2 = StudentType::with_score({9, 4, 0}, 0.6, 1.0);
    const auto game = make_joint_game(inst, {{{a, b}, 0.25}, {{a, b2}, 0.75}});
    CHECK(game.violations().empty());
    CHECK(game.num_types(0) == 1);
    CHECK(game.num_types(1) == 2);
    std::vector<std::vector<int>> choice(2);
    choice[0] = {0};
    for (const auto& t : game.type_spaces[1]) {
        const auto truthful = canonicalize_rol(Rol::truthful(t.values()), 3);
        const auto it = std::find(game.strategies.begin(), game.strategies.end(), truthful);
        choice[1].push_back(static_cast<int>(it - game.strategies.begin()));
    }
    const auto sigma = MixedStrategyProfile::pure(game, choice);
    GameEvaluator eval(game);
    const auto P = eval.attainability(sigma, 0, 0);
    auto truthful = [](StudentId, const StudentType& t) { return Rol::truthful(t.values()); };
    const auto Q = exact_attainability(a, {{{b}, 0.25}, {{b2}, 0.75}}, inst, truthful);
    CHECK(total_variation(P, Q) < 1e-12);
}

TEST_CASE("fixed point on small games") {
    EliteProblem p;
    p.n = 1;
    const auto solo = make_discretized_elite_game(p, 4);
    const auto cert = cbne_fixed_point(solo);
    CHECK(cert.converged);
    CHECK(cert.max_regret <= 1e-9);

    p.n = 2;
    const auto game = make_discretized_elite_game(p, 6);
    const auto c2 = cbne_fixed_point(game);
    CHECK(c2.converged);
    CHECK(c2.max_regret <= 1e-6);
    GameEvaluator eval(game);
    const auto rep = verify_cbne(c2.profile, eval);
    CHECK(rep.max_regret == doctest::Approx(c2.max_regret).epsilon(1e-6));
    CHECK(c2.profile.violations().empty());
    const auto j = to_json(c2, game);
    CHECK(j["converged"].get<bool>());
    CHECK(j["strategies"].size() == static_cast<std::size_t>(game.num_strategies()));
}

TEST_CASE("uniform profile is not an equilibrium of the elite game") {
    EliteProblem p;
    p.n = 2;
    const auto game = make_discretized_elite_game(p, 6);
    const auto rep = verify_cbne(MixedStrategyProfile::uniform(game), game);
    CHECK(rep.max_regret > 1e-3);
}
