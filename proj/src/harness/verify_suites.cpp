#include "ebla/cpe.hpp"
#include "ebla/equilibrium.hpp"
#include "ebla/harness.hpp"
#include "ebla/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace ebla::harness {

namespace {

using Clock = std::chrono::steady_clock;

class Tally {
public:
    explicit Tally(std::string name) : start_(Clock::now()) { r_.name = std::move(name); }

    void check(bool ok, const std::function<std::string()>& describe) {
        ++r_.checks;
        if (!ok) {
            r_.passed = false;
            if (r_.failures.size() < 20) r_.failures.push_back(describe());
        }
    }
    void note(std::string s) { r_.notes.push_back(std::move(s)); }
    SuiteResult finish() {
        r_.seconds = std::chrono::duration<double>(Clock::now() - start_).count();
        return r_;
    }

private:
    SuiteResult r_;
    Clock::time_point start_;
};

double uniform_in(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::string join(const std::vector<Rol>& rols) {
    std::string s;
    for (const auto& r : rols) s += (s.empty() ? "" : " ") + r.to_string();
    return s;
}

std::string describe(const RandomCpeInstance& x) {
    std::ostringstream os;
    os.precision(17);
    os << "v=(";
    for (std::size_t k = 0; k < x.values.size(); ++k) os << (k ? "," : "") << x.values[k];
    os << ") Lambda=" << x.loss_dominance << " P={";
    for (const auto& [state, q] : x.P.mass) os << state_to_bits(state, x.P.num_schools) << ":" << q << " ";
    os << "}";
    return os.str();
}

Rol canonical_truthful(const RandomCpeInstance& x) {
    const Rol order = truthful_order(std::span<const double>(x.values));
    return x.P.outside ? canonicalize_rol(order, *x.P.outside) : order;
}

bool member_is_trm(const Rol& r, const Rol& order, const std::optional<SchoolId>& outside) {
    return outside ? is_trm_up_to_truncation(r, order, *outside) : is_top_rank_monotone(r, order).is_trm;
}

SuiteResult merge(const std::string& name, std::vector<SuiteResult> parts) {
    SuiteResult out;
    out.name = name;
    for (auto& p : parts) {
        out.passed = out.passed && p.passed;
        out.checks += p.checks;
        out.seconds += p.seconds;
        for (auto& f : p.failures) out.failures.push_back(p.name + ": " + f);
        for (auto& n : p.notes) out.notes.push_back(p.name + ": " + n);
    }
    return out;
}

}  // namespace

RandomCpeInstance random_full_support_instance(CounterRng& rng, int m, bool with_outside, double lambda_lo,
                                               double lambda_hi) {
    RandomCpeInstance x;
    const int real = with_outside ? m - 1 : m;
    for (;;) {
        x.values.clear();
        for (int s = 0; s < real; ++s) x.values.push_back(std::round(uniform_in(rng, 1.0, 100.0) * 100.0) / 100.0);
        if (with_outside) x.values.push_back(0.0);
        auto sorted = x.values;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) break;
    }
    x.loss_dominance = uniform_in(rng, lambda_lo, lambda_hi);
    x.P.num_schools = m;
    if (with_outside) x.P.outside = m;
    // Skewed weights so that marginals spread over (0, 1).
    const double tilt = std::exp(uniform_in(rng, -3.0, 3.0));
    std::vector<double> w;
    double total = 0.0;
    const std::uint32_t combos = 1U << real;
    for (std::uint32_t c = 0; c < combos; ++c) {
        double u = std::pow(uniform_in(rng, 0.02, 1.0), 2.0);
        if (c & 1U) u *= tilt;  // school 1 attainable
        if (!with_outside && c == 0) u = 0.0;
        w.push_back(u);
        total += u;
    }
    for (std::uint32_t c = 0; c < combos; ++c) {
        if (w[c] == 0.0) continue;
        AttainabilityState state = c;
        if (with_outside) state = with_school(state, m);
        x.P.add(state, w[c] / total);
    }
    return x;
}

SuiteResult suite_optimality(std::uint64_t seed, int instances) {
    Tally t("optimality");
    CounterRng rng(seed, 1);
    for (int k = 0; k < instances; ++k) {
        const int m = 3 + k % 3;
        const bool outside = (k / 3) % 2 == 1;
        const auto x = random_full_support_instance(rng, m, outside, 1.0 + 1e-9, 6.0);
        t.check(has_full_support(x.P), [&] { return "instance lacks full support: " + describe(x); });
        const auto best = optimal_rols<double>(x.values, x.loss_dominance, x.P);
        const Rol order = truthful_order(std::span<const double>(x.values));
        for (const auto& r : best.argmax)
            t.check(member_is_trm(r, order, x.P.outside),
                    [&] { return "optimal ROL " + r.to_string() + " is not TRM for " + describe(x); });
    }
    return t.finish();
}

SuiteResult suite_fosd(std::uint64_t seed, int instances) {
    Tally t("fosd");
    CounterRng rng(seed, 2);
    for (int k = 0; k < instances; ++k) {
        const int m = 2 + k % 4;
        const auto x = random_full_support_instance(rng, m, k % 2 == 1, 0.0, 1.0);
        const auto best = optimal_rols<double>(x.values, x.loss_dominance, x.P);
        t.check(best.contains(canonical_truthful(x)),
                [&] { return "truthful ROL missing from argmax {" + join(best.argmax) + "} for " + describe(x); });
    }
    return t.finish();
}

SuiteResult suite_optimality_coverage(std::uint64_t seed, int budget) {
    Tally t("optimality-coverage");
    CounterRng rng(seed, 3);
    const auto targets = trm_enumerate(4);
    std::set<Rol> found;
    int tries = 0;
    const std::vector<double> base{0.0};
    for (; tries < budget && found.size() < targets.size(); ++tries) {
        // v1 > v2 > v3 > v4 so the truthful order is 1234.
        std::vector<double> v(4);
        double acc = 0.0;
        for (int s = 3; s >= 0; --s) v[static_cast<std::size_t>(s)] = acc += std::round(uniform_in(rng, 1.0, 40.0));
        const double lambda = std::exp(uniform_in(rng, 0.0, std::log(60.0)));
        AttainabilityDistribution P;
        P.num_schools = 4;
        // Sparse core plus a thin layer on every state keeps full support.
        std::vector<double> w(16, 1e-4);
        w[0] = 0.0;
        const int core = 1 + static_cast<int>(rng.below(3));
        for (int c = 0; c < core; ++c) w[1 + rng.below(15)] += uniform_in(rng, 0.05, 1.0);
        double total = 0.0;
        for (double x : w) total += x;
        for (std::uint32_t s = 1; s < 16; ++s) P.add(s, w[s] / total);
        const auto best = optimal_rols<double>(v, lambda, P);
        if (best.unique()) found.insert(best.argmax.front());
    }
    for (const auto& target : targets)
        t.check(found.count(target) > 0, [&] { return "no instance found where " + target.to_string() + " is uniquely optimal"; });
    t.note("searched " + std::to_string(tries) + " instances, covered " + std::to_string(found.size()) + "/8 TRM ROLs");
    return t.finish();
}

SuiteResult suite_bounds(std::uint64_t seed, int instances) {
    Tally t("bounds");
    CounterRng rng(seed, 4);
    int strict_truth = 0, strict_misreport = 0, indeterminate = 0;
    for (int k = 0; k < instances; ++k) {
        const int m = 2 + k % 4;
        const auto x = random_full_support_instance(rng, m, k % 2 == 1, 1.0, 6.0);
        const Rol order = truthful_order(std::span<const double>(x.values));
        const SchoolId top = order.top();
        t.check(!is_exclusive(x.P, top), [&] { return "top school exclusive in " + describe(x); });
        const auto verdict = truthful_bound_check(x.P.marginal(top), x.loss_dominance);
        const auto best = optimal_rols<double>(x.values, x.loss_dominance, x.P);
        const Rol truthful = canonical_truthful(x);
        if (verdict == BoundVerdict::TruthStrict) {
            ++strict_truth;
            t.check(best.unique() && best.contains(truthful),
                    [&] { return "TruthStrict but argmax {" + join(best.argmax) + "} for " + describe(x); });
        } else if (verdict == BoundVerdict::MisreportStrict) {
            ++strict_misreport;
            t.check(!best.contains(truthful),
                    [&] { return "MisreportStrict but truthful optimal for " + describe(x); });
        } else {
            ++indeterminate;
        }
    }
    t.note("verdicts: TruthStrict " + std::to_string(strict_truth) + ", MisreportStrict " +
           std::to_string(strict_misreport) + ", Indeterminate " + std::to_string(indeterminate));
    t.check(strict_truth > 0 && strict_misreport > 0, [] { return "sample did not exercise both strict verdicts"; });
    return t.finish();
}

SuiteResult suite_trm(int max_count_m, int max_agree_m) {
    Tally t("trm");
    for (int m = 1; m <= max_count_m; ++m) {
        const auto fam = trm_enumerate(m);
        t.check(fam.size() == (std::size_t{1} << (m - 1)),
                [&] { return "m=" + std::to_string(m) + ": " + std::to_string(fam.size()) + " TRM ROLs"; });
        const Rol id = Rol::identity(m);
        for (const auto& r : fam)
            t.check(is_trm_interval(r, id), [&] { return r.to_string() + " enumerated but not an interval growth"; });
    }
    for (int m = 1; m <= max_agree_m; ++m) {
        const Rol id = Rol::identity(m);
        // A second truthful order checks that classification is relative to it.
        std::vector<SchoolId> rev(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) rev[static_cast<std::size_t>(k)] = (k * 3) % m + 1;
        std::set<SchoolId> uniq(rev.begin(), rev.end());
        const Rol other = uniq.size() == static_cast<std::size_t>(m) ? Rol(rev) : Rol::identity(m);
        std::size_t count = 0;
        for (const auto& r : all_rols(m))
            for (const Rol* order : {&id, &other}) {
                const auto c = is_top_rank_monotone(r, *order);
                const bool interval = is_trm_interval(r, *order);
                t.check(c.is_trm == interval, [&] {
                    return "classifiers disagree on " + r.to_string() + " vs order " + order->to_string();
                });
                t.check(c.is_trm != c.witness.has_value(), [&] { return "witness invariant broken for " + r.to_string(); });
                if (order == &id && c.is_trm) ++count;
            }
        t.check(count == (std::size_t{1} << (m - 1)), [&] { return "m=" + std::to_string(m) + ": classifier count " + std::to_string(count); });
    }
    const std::vector<Rol> table{Rol::from_digits("1234"), Rol::from_digits("2134"), Rol::from_digits("2314"),
                                 Rol::from_digits("2341"), Rol::from_digits("3214"), Rol::from_digits("3241"),
                                 Rol::from_digits("3421"), Rol::from_digits("4321")};
    t.check(trm_enumerate(4) == table, [] { return "m=4 family differs from the expected eight lists"; });
    return t.finish();
}

SuiteResult suite_flip(std::uint64_t seed, int instances) {
    Tally t("flip");
    CounterRng rng(seed, 5);
    for (int k = 0; k < instances; ++k) {
        const int m = 2 + k % 3;
        std::vector<Rational> v;
        Rational acc(0);
        for (int s = 0; s < m; ++s) {
            acc += Rational(static_cast<long>(1 + rng.below(9)), static_cast<long>(1 + rng.below(4)));
            v.push_back(acc);
        }
        for (int s = m - 1; s > 0; --s) std::swap(v[static_cast<std::size_t>(s)], v[rng.below(static_cast<std::uint64_t>(s) + 1)]);
        ExactAttainability P;
        P.num_schools = m;
        std::vector<Rational> w;
        Rational total(0);
        for (std::uint32_t st = 1; st < (1U << m); ++st) {
            w.emplace_back(static_cast<long>(rng.below(5)));
            total += w.back();
        }
        if (total == 0) {
            w.back() = 1;
            total = 1;
        }
        for (std::uint32_t st = 1; st < (1U << m); ++st) P.add(st, w[st - 1] / total);
        const Rational L = k % 10 == 0 ? Rational(0) : Rational(static_cast<long>(rng.below(40)), static_cast<long>(1 + rng.below(7)));
        for (const auto& rol : all_rols(m))
            for (int pos = 0; pos + 1 < m; ++pos) {
                const Rational g = swap_gain<Rational>(v, L, rol, pos, P);
                const int sign = g > 0 ? 1 : (g < 0 ? -1 : 0);
                const int predicted = flip_predicted_sign<Rational>(v, L, rol, pos, P);
                t.check(sign == predicted, [&] {
                    return "ROL " + rol.to_string() + " position " + std::to_string(pos) + ": gain sign " +
                           std::to_string(sign) + " vs criterion " + std::to_string(predicted);
                });
            }
    }
    return t.finish();
}

SuiteResult suite_equivalence(std::uint64_t seed, int pairs) {
    Tally t("equivalence");
    CounterRng rng(seed, 6);
    for (int k = 0; k < pairs; ++k) {
        const int m = 2 + k % 5;
        std::vector<double> v, f;
        double total = 0.0;
        for (int s = 0; s < m; ++s) {
            v.push_back(uniform_in(rng, -50.0, 100.0));
            f.push_back(rng.uniform());
            total += f.back();
        }
        for (double& x : f) x /= total;
        const double eta = uniform_in(rng, 0.0, 3.0), lambda = uniform_in(rng, 1.0, 4.0);
        const Lottery F{f};
        const double a = cpe_utility<double>(v, eta * (lambda - 1.0), F);
        const double b = utility_wrt_reference<double>(v, eta, lambda, F, F);
        t.check(std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}), [&] {
            std::ostringstream os;
            os.precision(17);
            os << "pair " << k << ": " << a << " vs " << b;
            return os.str();
        });
    }
    // Exact check on the worked example's truthful lottery.
    const std::vector<Rational> v{100, 30, 0};
    const ExactLottery F{{Rational(13, 160), Rational(57, 160), Rational(90, 160)}};
    const Rational eta(1), lambda(5, 2);
    const Rational direct = Rational(3010, 160) - Rational(3, 2) * Rational(322770, 25600);
    t.check(cpe_utility<Rational>(v, eta * (lambda - 1), F) == direct, [] { return "exact example value differs"; });
    t.check(utility_wrt_reference<Rational>(v, eta, lambda, F, F) == direct, [] { return "exact reference value differs"; });
    return t.finish();
}

SuiteResult suite_equilibrium(std::uint64_t seed, unsigned threads) {
    Tally t("equilibrium");
    // Closed forms: one seat among two or three uniform scores.
    {
        EliteProblem p;
        p.n = 2;
        const auto c = elite_cutoffs(p);
        t.check(std::abs(c.cutoffs[0] - 0.5) <= 1e-9, [&] { return "n=2 cutoff " + std::to_string(c.cutoffs[0]); });
        t.check(verify_cbne(p, c) <= 1e-9, [] { return "n=2 cutoff profile has regret"; });
        p.n = 3;
        const auto c3 = elite_cutoffs(p);
        t.check(std::abs(c3.cutoffs[0] - std::sqrt(0.5)) <= 1e-9, [&] { return "n=3 cutoff " + std::to_string(c3.cutoffs[0]); });
    }
    // Random multi-level problems: monotone cutoffs, zero regret.
    CounterRng rng(seed, 7);
    for (int k = 0; k < 60; ++k) {
        EliteProblem p;
        p.n = 2 + static_cast<int>(rng.below(6));
        p.q = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(p.n - 1)));
        const int levels = 1 + static_cast<int>(rng.below(3));
        p.lambda_levels = {0.0};
        std::vector<double> lv;
        for (int l = 0; l < levels; ++l) lv.push_back(uniform_in(rng, 1.05, 10.0));
        std::sort(lv.begin(), lv.end());
        p.lambda_levels.insert(p.lambda_levels.end(), lv.begin(), lv.end());
        p.level_probs.clear();
        double total = 0.0;
        for (std::size_t l = 0; l < p.lambda_levels.size(); ++l) {
            p.level_probs.push_back(uniform_in(rng, 0.1, 1.0));
            total += p.level_probs.back();
        }
        for (double& x : p.level_probs) x /= total;
        p.level_probs.back() = 1.0 - std::accumulate(p.level_probs.begin(), p.level_probs.end() - 1, 0.0);
        const auto c = elite_cutoffs(p);
        for (std::size_t l = 1; l < c.cutoffs.size(); ++l) {
            const bool interior = c.cutoffs[l - 1] > p.score_law.lower();
            const bool ok = interior ? c.cutoffs[l] > c.cutoffs[l - 1] : c.cutoffs[l] >= c.cutoffs[l - 1];
            t.check(ok, [&] { return "cutoffs not increasing in problem " + std::to_string(k); });
        }
        const double regret = verify_cbne(p, c);
        t.check(regret <= 1e-9, [&] { return "elite regret " + std::to_string(regret) + " in problem " + std::to_string(k); });
    }
    // Monte Carlo attainability at each cutoff under the full DA game.
    {
        EliteProblem p;
        p.n = 3;
        p.lambda_levels = {0.0, 2.0, 4.0};
        p.level_probs = {0.3, 0.4, 0.3};
        const auto c = elite_cutoffs(p);
        const Instance inst{2, {p.q, p.n}, SchoolId{2}, p.n};
        IndependentSampler s;
        for (std::size_t l = 0; l < p.lambda_levels.size(); ++l)
            s.support.push_back({{p.v, 0.0}, 1.0, 1.0 + p.lambda_levels[l], p.level_probs[l]});
        const std::vector<IndependentSampler> others(static_cast<std::size_t>(p.n - 1), s);
        const SampledStrategy cutoff_play = [&](StudentId, const std::vector<double>&, double ld, double score) {
            std::size_t l = 0;
            while (l + 1 < p.lambda_levels.size() && std::abs(p.lambda_levels[l] - ld) > 1e-9) ++l;
            return score >= c.cutoffs[l] ? Rol{1, 2} : Rol{2, 1};
        };
        for (std::size_t l = 1; l < c.cutoffs.size(); ++l) {
            const auto est = mc_attainability(c.cutoffs[l], inst, others, 100000, seed + l, cutoff_play,
                                              da_student_proposing, threads);
            const double f = est.distribution.marginal(1);
            const double se = std::sqrt(f * (1.0 - f) / 100000.0);
            const double target = 1.0 - 1.0 / p.lambda_levels[l];
            t.check(std::abs(f - target) <= 4.5 * se, [&] {
                return "simulated attainability " + std::to_string(f) + " vs " + std::to_string(target);
            });
        }
    }
    // Finite-type fixed point on a 20-point grid.
    {
        EliteProblem p;
        p.n = 3;
        const auto game = make_discretized_elite_game(p, 20);
        CbneOptions opt;
        opt.tol = 1e-7;
        opt.threads = threads;
        const auto cert = cbne_fixed_point(game, opt);
        t.check(cert.converged && cert.max_regret <= 1e-6, [&] { return "grid game did not converge"; });
        const auto rep = verify_cbne(cert.profile, game, opt.tol);
        t.check(!cert.converged || rep.max_regret <= opt.tol, [] { return "certificate regret differs from verification"; });
        const auto scores = elite_grid_scores(p, 20);
        const double analytic = elite_cutoffs(p).cutoffs[0];
        for (int i = 0; i < p.n; ++i) {
            const auto& rows = cert.profile.probs[static_cast<std::size_t>(i)];
            int first = 20;
            bool shaped = true;
            for (int k = 0; k < 20; ++k) {
                const bool applies = rows[static_cast<std::size_t>(k)][0] > 0.5;
                if (applies && first == 20) first = k;
                if (!applies && first < 20) shaped = false;
            }
            t.check(shaped, [&] { return "grid strategy not cutoff-shaped for student " + std::to_string(i); });
            const double boundary = first * 0.05;
            t.check(std::abs(boundary - analytic) <= 0.05, [&] {
                return "grid cutoff " + std::to_string(boundary) + " vs analytic " + std::to_string(analytic);
            });
        }
        GameEvaluator eval(game);
        const auto mapped = nash_map(eval, cert.profile);
        if (cert.max_regret == 0.0)
            t.check(mapped.probs == cert.profile.probs, [] { return "zero-regret profile is not a fixed point of the map"; });
    }
    // Two students with both scores below 1 - 1/Lambda.
    {
        EliteProblem p;
        p.n = 2;
        const auto c = elite_cutoffs(p);
        const std::vector<double> scores{0.3, 0.2};
        std::vector<Rol> reports;
        for (double s : scores) reports.push_back(s >= c.cutoffs[0] ? Rol{1, 2} : Rol{2, 1});
        const std::vector<int> caps{1, 2};
        const auto pri = common_priorities(scores, 2);
        const std::vector<std::vector<double>> values{{1.0, 0.0}, {1.0, 0.0}};
        const auto da = da_student_proposing(reports, pri, caps);
        t.check(da[0] == 2 && da[1] == 2, [] { return "both students should attend the district school"; });
        t.check(!justified_envy_pairs(da, values, pri, caps).empty(), [] { return "equilibrium allocation shows no envy"; });
        const auto sd = serial_dictatorship(scores, caps, truthful_chooser(values));
        t.check(justified_envy_pairs(sd, values, pri, caps).empty(), [] { return "serial dictatorship allocation unstable"; });
        const auto stable = stable_allocations(values, pri, caps);
        t.check(stable.size() == 1 && stable.front() == sd, [] { return "serial dictatorship misses the unique stable allocation"; });

        const auto game = make_discretized_elite_game(p, 20);
        const auto cert = cbne_fixed_point(game, {});
        const auto grid = elite_grid_scores(p, 20);
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 20; ++k)
                if (grid[static_cast<std::size_t>(k)] < 0.5)
                    t.check(cert.profile.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][1] == 1.0,
                            [&] { return "low score type applies in the two-student game"; });
        std::vector<std::vector<int>> apply_all(2, std::vector<int>(20, 0));
        const auto truthful = verify_cbne(MixedStrategyProfile::pure(game, apply_all), game);
        for (int i = 0; i < 2; ++i) {
            double worst = 0.0;
            for (const auto& r : truthful.regrets)
                if (r.student == i) worst = std::max(worst, r.regret);
            t.check(worst > 0.0, [&] { return "truthful play has no regret for student " + std::to_string(i); });
        }
    }
    // Single student: immediate pure CPE.
    {
        const Instance inst{3, {1, 1, 1}, SchoolId{3}, 1};
        const auto game = make_independent_game(inst, {{StudentType::with_score({100, 30, 0}, 0.5, 2.0)}}, {{1.0}});
        const auto cert = cbne_fixed_point(game, {});
        t.check(cert.converged && cert.iterations == 1 && cert.max_regret == 0.0,
                [] { return "single-student game did not converge in one step"; });
    }
    // Sequential example grid.
    for (int i = 1; i <= 100; ++i)
        for (int j = 1; j <= 100; ++j) {
            const double eps = i / 101.0, lambda = j / 20.0;
            const Rational e = exact_rational(eps), L = exact_rational(lambda);
            const bool below = e * L < L - 1;  // eps < 1 - 1/Lambda
            const auto verdict = sequential_cpe_osp_example(eps, lambda, 1.0, 0.0);
            t.check((verdict == SequentialVerdict::Not) == below, [&] {
                return "sequential verdict wrong at eps=" + std::to_string(eps) + " Lambda=" + std::to_string(lambda);
            });
        }
    return t.finish();
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"optimality", "bounds", "trm", "flip", "equivalence", "equilibrium"};
    return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, unsigned threads) {
    if (name == "optimality")
        return merge("optimality", {suite_optimality(seed), suite_fosd(seed), suite_optimality_coverage(seed)});
    if (name == "bounds") return suite_bounds(seed);
    if (name == "trm") return suite_trm();
    if (name == "flip") return suite_flip(seed);
    if (name == "equivalence") return suite_equivalence(seed);
    if (name == "equilibrium") return suite_equilibrium(seed, threads);
    throw std::invalid_argument("unknown suite '" + name + "'");
}

}  // namespace ebla::harness
