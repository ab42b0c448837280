#include "ebla/cpe.hpp"
#include "ebla/harness.hpp"
#include "ebla/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace ebla::harness {

ExactAttainability example_attainability(const Rational& omega, const Rational& eps) {
    if (omega < 0 || omega > 1) throw std::invalid_argument("omega must lie in [0, 1]");
    if (eps < 0 || eps > 1) throw std::invalid_argument("eps must lie in [0, 1]");
    const Instance instance{3, {1, 1, 3}, SchoolId{3}, 3};
    const ReportDistribution<Rational> rival{{Rol{1, 2, 3}, Rational(1) - eps}, {Rol{2, 1, 3}, eps}};
    return exact_attainability_common_scores<Rational>(instance, omega, {rival, rival});
}

namespace {

SweepPoint sweep_point(const Rational& x, const std::vector<Rational>& values, const Rational& lambda,
                       const ExactAttainability& P) {
    SweepPoint pt{x, {}, {}};
    for (const auto& rol : all_rols(3)) pt.utilities.push_back(cpe_utility<Rational>(values, lambda, induced_lottery(rol, P)));
    pt.argmax = optimal_rols<Rational>(values, lambda, P).argmax;
    return pt;
}

}  // namespace

ExampleResult run_example(const ExampleConfig& c) {
    if (c.values.size() != 3) throw std::invalid_argument("the example has three schools");
    if (!(c.values[0] > c.values[1] && c.values[1] > c.values[2]))
        throw std::invalid_argument("values must be strictly decreasing");
    if (c.values[2] != 0) throw std::invalid_argument("the outside option (school 3) has value 0");
    if (c.lambda_steps < 1 || c.omega_steps < 1 || c.lambda_max <= 0) throw std::invalid_argument("invalid grid");
    ExampleResult out;
    out.attainability = example_attainability(c.omega, c.eps);
    for (const auto& rol : all_rols(3)) out.lotteries.emplace_back(rol, induced_lottery(rol, out.attainability));
    for (int k = 0; k <= c.lambda_steps; ++k) {
        const Rational lambda = c.lambda_max * k / c.lambda_steps;
        out.lambda_sweep.push_back(sweep_point(lambda, c.values, lambda, out.attainability));
    }
    for (int k = 0; k <= c.omega_steps; ++k) {
        const Rational omega = Rational(k, c.omega_steps);
        out.omega_sweep.push_back(sweep_point(omega, c.values, c.fixed_lambda, example_attainability(omega, c.eps)));
    }
    return out;
}

CsvTable attainability_csv(const ExactAttainability& P) {
    CsvTable t;
    t.header = {"state", "prob_rational", "prob_decimal"};
    for (const auto& [state, q] : P.mass)
        t.rows.push_back({state_to_bits(state, P.num_schools), to_fraction_string(q), to_decimal_string(q)});
    return t;
}

CsvTable lotteries_csv(const std::vector<std::pair<Rol, ExactLottery>>& lotteries) {
    CsvTable t;
    t.header = {"rol"};
    const int m = lotteries.empty() ? 0 : lotteries.front().first.size();
    for (int s = 1; s <= m; ++s) t.header.push_back("f_" + std::to_string(s));
    for (const auto& [rol, f] : lotteries) {
        std::vector<std::string> row{rol.to_string()};
        for (const auto& p : f.probs) row.push_back(to_fraction_string(p));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable sweep_csv(const std::vector<SweepPoint>& sweep, const std::string& x_name) {
    CsvTable t;
    t.header = {x_name, "rol", "utility"};
    const auto rols = all_rols(3);
    for (const auto& pt : sweep)
        for (std::size_t r = 0; r < rols.size(); ++r)
            t.rows.push_back({to_decimal_string(pt.x), rols[r].to_string(), to_decimal_string(pt.utilities[r])});
    return t;
}

EliteStats simulate_elite(const EliteProblem& problem, const EliteCutoffs& cutoffs, std::uint64_t replications,
                          std::uint64_t seed, unsigned threads) {
    if (auto v = problem.violations(); !v.empty()) throw std::invalid_argument("invalid elite problem: " + v.front());
    const int n = problem.n;
    const std::vector<int> caps{problem.q, n};
    const std::vector<std::vector<double>> values(static_cast<std::size_t>(n), std::vector<double>{problem.v, 0.0});
    const Rol apply{1, 2}, abstain{2, 1};

    struct Counts {
        std::uint64_t applied = 0, filled = 0, displaced = 0, envy = 0;
    };
    threads = std::max(1U, threads);
    std::vector<Counts> counts(threads);
    auto worker = [&](unsigned t) {
        auto& c = counts[t];
        for (std::uint64_t r = t; r < replications; r += threads) {
            CounterRng rng(seed, r);
            std::vector<double> scores(static_cast<std::size_t>(n));
            std::vector<Rol> reports;
            for (int i = 0; i < n; ++i) {
                const std::size_t level = rng.discrete(problem.level_probs);
                double s = problem.score_law.quantile(rng.uniform());
                for (int j = 0; j < i; ++j)
                    if (scores[static_cast<std::size_t>(j)] == s) s = std::nextafter(s, -1.0);
                scores[static_cast<std::size_t>(i)] = s;
                const bool applies = s >= cutoffs.cutoffs[level];
                c.applied += applies;
                reports.push_back(applies ? apply : abstain);
            }
            const auto priorities = common_priorities(scores, 2);
            const auto alloc = da_student_proposing(reports, priorities, caps);
            double best_abstainer = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i)
                if (reports[static_cast<std::size_t>(i)] == abstain)
                    best_abstainer = std::max(best_abstainer, scores[static_cast<std::size_t>(i)]);
            for (int i = 0; i < n; ++i)
                if (alloc[i] == 1) {
                    ++c.filled;
                    if (scores[static_cast<std::size_t>(i)] < best_abstainer) ++c.displaced;
                }
            if (!justified_envy_pairs(alloc, values, priorities, caps).empty()) ++c.envy;
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    Counts total;
    for (const auto& c : counts) {
        total.applied += c.applied;
        total.filled += c.filled;
        total.displaced += c.displaced;
        total.envy += c.envy;
    }
    EliteStats s;
    s.replications = replications;
    if (replications == 0) return s;
    const double R = static_cast<double>(replications);
    const double seats = static_cast<double>(std::min(problem.q, n)) * R;
    s.apply_rate = static_cast<double>(total.applied) / (R * n);
    s.vacancy_rate = 1.0 - static_cast<double>(total.filled) / seats;
    s.displaced_rate = total.filled ? static_cast<double>(total.displaced) / static_cast<double>(total.filled) : 0.0;
    s.envy_rate = static_cast<double>(total.envy) / R;
    s.envy_standard_error = std::sqrt(s.envy_rate * (1.0 - s.envy_rate) / R);
    return s;
}

}  // namespace ebla::harness
