#include "ebla/equilibrium.hpp"

#include "ebla/cpe.hpp"
#include "ebla/rational.hpp"

#include <boost/math/special_functions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ebla {

namespace {

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0, comp_ = 0.0;
};

/// P(Binomial(trials, p) < q).
double binomial_below(int q, int trials, double p) {
    if (q > trials) return 1.0;
    CompensatedSum sum;
    for (int k = 0; k < q; ++k)
        sum.add(boost::math::binomial_coefficient<double>(static_cast<unsigned>(trials), static_cast<unsigned>(k)) *
                std::pow(p, k) * std::pow(1.0 - p, trials - k));
    return std::clamp(sum.value(), 0.0, 1.0);
}

/// Probability that a given other student outranks a score-omega applicant
/// and applies, when level k applies from cutoffs[k] upward.
double blocking_probability(const EliteProblem& problem, const std::vector<double>& cutoffs, double omega) {
    CompensatedSum a;
    for (std::size_t k = 0; k < problem.level_probs.size(); ++k)
        a.add(problem.level_probs[k] * (1.0 - problem.score_law.cdf(std::max(omega, cutoffs[k]))));
    return std::clamp(a.value(), 0.0, 1.0);
}

std::size_t first_max(const std::vector<double>& u) {
    return static_cast<std::size_t>(std::max_element(u.begin(), u.end()) - u.begin());
}

}  // namespace

std::vector<std::string> EliteProblem::violations() const {
    std::vector<std::string> out;
    if (n < 1) out.emplace_back("n >= 1 violated");
    if (q < 1) out.emplace_back("q >= 1 violated");
    if (!(v > 0.0)) out.emplace_back("elite value v > 0 violated");
    if (lambda_levels.empty()) out.emplace_back("at least one loss-dominance level required");
    if (lambda_levels.size() != level_probs.size()) out.emplace_back("one probability per level required");
    for (std::size_t k = 0; k < lambda_levels.size(); ++k) {
        if (lambda_levels[k] < 0.0) out.emplace_back("loss dominance must be nonnegative");
        if (k > 0 && !(lambda_levels[k] > lambda_levels[k - 1])) out.emplace_back("levels must be strictly ascending");
    }
    double total = 0.0;
    for (double p : level_probs) {
        if (p < 0.0) out.emplace_back("negative level probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) out.emplace_back("level probabilities do not sum to 1");
    for (const auto& v : score_law.violations()) out.push_back(v);
    return out;
}

double order_stat_prob(double omega, int n, int q, const ScoreLaw& G) {
    if (omega < G.lower() || omega > G.upper()) throw std::domain_error("score outside the score law's support");
    if (q >= n) return 1.0;
    return binomial_below(q, n - 1, 1.0 - G.cdf(omega));
}

bool elite_apply_decision(double f, double loss_dominance) {
    if (loss_dominance < 0.0) throw std::invalid_argument("loss dominance must be nonnegative");
    return f >= 1.0 - 1.0 / loss_dominance;
}

const char* to_string(EliteListing l) { return l == EliteListing::ListAllElite ? "ListAllElite" : "ListNone"; }

EliteListing elite_adjacency_reduction(const std::vector<double>& elite_values, double f_all, double loss_dominance) {
    if (elite_values.empty()) throw std::invalid_argument("no elite schools");
    for (double v : elite_values)
        if (v != elite_values.front()) throw std::invalid_argument("elite schools must share one value");
    if (loss_dominance == 0.0) return f_all > 0.0 ? EliteListing::ListAllElite : EliteListing::ListNone;
    return f_all > 0.0 && elite_apply_decision(f_all, loss_dominance) ? EliteListing::ListAllElite
                                                                      : EliteListing::ListNone;
}

double elite_attainability(const EliteProblem& problem, const std::vector<double>& cutoffs, double omega) {
    if (problem.q >= problem.n) return 1.0;
    return binomial_below(problem.q, problem.n - 1, blocking_probability(problem, cutoffs, omega));
}

double elite_apply_gain(double f, double loss_dominance, double v) { return f * v - loss_dominance * f * (1.0 - f) * v; }

EliteCutoffs elite_cutoffs(const EliteProblem& problem, double tol) {
    if (auto v = problem.violations(); !v.empty()) throw std::invalid_argument("invalid elite problem: " + v.front());
    const double lo = problem.score_law.lower(), hi = problem.score_law.upper();
    const std::size_t L = problem.lambda_levels.size();
    EliteCutoffs out{problem.lambda_levels, std::vector<double>(L, lo), 0};
    // Working cutoffs: levels not yet solved sit at the bottom of the support,
    // which is where they must lie relative to the level being solved.
    std::vector<double> work(L, lo);
    double ceiling = hi;
    for (std::size_t k = L; k-- > 0;) {
        const double Lk = problem.lambda_levels[k];
        const double target = 1.0 - 1.0 / Lk;
        auto f = [&](double omega) { return elite_attainability(problem, work, omega); };
        double c = lo;
        if (Lk > 1.0 && f(lo) < target) {
            double a = lo, b = ceiling;
            int steps = 0;
            while (b - a > tol) {
                if (++steps > 500) throw std::runtime_error("cutoff bisection did not converge");
                const double mid = 0.5 * (a + b);
                if (f(mid) >= target) b = mid;
                else a = mid;
            }
            out.bisection_steps += steps;
            c = b;
        }
        out.cutoffs[k] = work[k] = c;
        ceiling = c;
    }
    return out;
}

double verify_cbne(const EliteProblem& problem, const EliteCutoffs& cutoffs, int points) {
    const double lo = problem.score_law.lower(), hi = problem.score_law.upper();
    std::vector<double> grid;
    for (int p = 0; p < points; ++p) grid.push_back(lo + (hi - lo) * p / std::max(1, points - 1));
    for (double c : cutoffs.cutoffs) {
        grid.push_back(c);
        grid.push_back(std::max(lo, std::nextafter(c, -std::numeric_limits<double>::infinity())));
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < problem.lambda_levels.size(); ++k)
        for (double omega : grid) {
            const double f = elite_attainability(problem, cutoffs.cutoffs, omega);
            const double gain = elite_apply_gain(f, problem.lambda_levels[k], problem.v);
            const bool applies = omega >= cutoffs.cutoffs[k];
            worst = std::max(worst, applies ? -gain : gain);
        }
    return worst;
}

MixedStrategyProfile elite_cutoff_profile(const EliteProblem& problem, const EliteCutoffs& cutoffs, int grid_size) {
    const auto scores = elite_grid_scores(problem, grid_size);
    std::vector<int> row;
    for (std::size_t l = 0; l < problem.lambda_levels.size(); ++l)
        for (double s : scores) row.push_back(s >= cutoffs.cutoffs[l] ? 0 : 1);  // 0: elite first
    MixedStrategyProfile p;
    for (int i = 0; i < problem.n; ++i) {
        p.probs.emplace_back();
        for (int choice : row) {
            std::vector<double> r(2, 0.0);
            r[static_cast<std::size_t>(choice)] = 1.0;
            p.probs.back().push_back(r);
        }
    }
    return p;
}

// ---- finite games ------------------------------------------------------------------------------

MixedStrategyProfile nash_map(const GameEvaluator& eval, const MixedStrategyProfile& sigma) {
    const auto& game = eval.game();
    MixedStrategyProfile out = sigma;
    for (int i = 0; i < game.num_students(); ++i)
        for (int t = 0; t < game.num_types(i); ++t) {
            auto& row = out.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            const auto u = eval.utilities(sigma, i, t);
            double avg = 0.0;
            for (std::size_t r = 0; r < u.size(); ++r) avg += row[r] * u[r];
            double total = 1.0;
            std::vector<double> phi(u.size());
            for (std::size_t r = 0; r < u.size(); ++r) {
                phi[r] = std::max(0.0, u[r] - avg);
                total += phi[r];
            }
            for (std::size_t r = 0; r < u.size(); ++r) row[r] = (row[r] + phi[r]) / total;
        }
    return out;
}

CbneReport verify_cbne(const MixedStrategyProfile& profile, const GameEvaluator& eval, double tol) {
    const auto& game = eval.game();
    CbneReport rep;
    for (int i = 0; i < game.num_students(); ++i)
        for (int t = 0; t < game.num_types(i); ++t) {
            TypeRegret tr;
            tr.student = i;
            tr.type = t;
            tr.utilities = eval.utilities(profile, i, t);
            const auto& row = profile.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
            const double best = *std::max_element(tr.utilities.begin(), tr.utilities.end());
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t r = 0; r < row.size(); ++r)
                if (row[r] > 0.0) {
                    lo = std::min(lo, tr.utilities[r]);
                    hi = std::max(hi, tr.utilities[r]);
                }
            tr.regret = std::max(0.0, best - lo);
            tr.support_spread = hi - lo;
            rep.max_regret = std::max(rep.max_regret, tr.regret);
            if (tr.support_spread > tol) rep.support_indifferent = false;
            rep.regrets.push_back(std::move(tr));
        }
    return rep;
}

CbneReport verify_cbne(const MixedStrategyProfile& profile, const FiniteDaGame& game, double tol) {
    GameEvaluator eval(game);
    return verify_cbne(profile, eval, tol);
}

namespace {

/// Exhaustive search over pure profiles of a tiny game.
std::optional<MixedStrategyProfile> pure_profile_search(const GameEvaluator& eval, double tol, int& evaluated) {
    const auto& game = eval.game();
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < game.num_students(); ++i)
        for (int t = 0; t < game.num_types(i); ++t) slots.emplace_back(i, t);
    const int S = game.num_strategies();
    std::vector<int> code(slots.size(), 0);
    while (true) {
        std::vector<std::vector<int>> choice(static_cast<std::size_t>(game.num_students()));
        for (std::size_t k = 0; k < slots.size(); ++k) choice[static_cast<std::size_t>(slots[k].first)].push_back(code[k]);
        auto profile = MixedStrategyProfile::pure(game, choice);
        ++evaluated;
        if (verify_cbne(profile, eval, tol).max_regret <= tol) return profile;
        std::size_t k = slots.size();
        while (k-- > 0) {
            if (++code[k] < S) break;
            code[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) return std::nullopt;
    }
}

}  // namespace

CbneCertificate cbne_fixed_point(const FiniteDaGame& game, const CbneOptions& options) {
    GameEvaluator eval(game, options.threads);
    const double d = std::clamp(options.damping, 0.0, 1.0);
    const double d_step = d > 0.0 ? d : 1.0;

    // Start from the best response to uniform play.
    const auto uniform = MixedStrategyProfile::uniform(game);
    std::vector<std::vector<int>> br(static_cast<std::size_t>(game.num_students()));
    for (int i = 0; i < game.num_students(); ++i)
        for (int t = 0; t < game.num_types(i); ++t)
            br[static_cast<std::size_t>(i)].push_back(static_cast<int>(first_max(eval.utilities(uniform, i, t))));
    MixedStrategyProfile sigma = MixedStrategyProfile::pure(game, br);

    CbneCertificate cert;
    cert.method = "nash-map";
    MixedStrategyProfile best_profile = sigma;
    double best_regret = std::numeric_limits<double>::infinity();
    std::vector<TypeRegret> best_regrets;

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        cert.iterations = iter;
        auto rep = verify_cbne(sigma, eval, options.tol);
        if (rep.max_regret < best_regret) {
            best_regret = rep.max_regret;
            best_profile = sigma;
            best_regrets = rep.regrets;
        }
        if (rep.max_regret <= options.tol) break;

        // Every few steps try the current profile restricted to near-best strategies.
        if (iter % 10 == 0) {
            MixedStrategyProfile trimmed = sigma;
            std::size_t slot = 0;
            for (auto& student : trimmed.probs)
                for (auto& row : student) {
                    const auto& u = rep.regrets[slot++].utilities;
                    const double best = *std::max_element(u.begin(), u.end());
                    double mass = 0.0;
                    for (std::size_t r = 0; r < row.size(); ++r) {
                        if (u[r] < best - 1e-3 * std::max(1.0, std::abs(best))) row[r] = 0.0;
                        mass += row[r];
                    }
                    if (mass == 0.0) row[first_max(u)] = mass = 1.0;
                    for (double& x : row) x /= mass;
                }
            auto trimmed_rep = verify_cbne(trimmed, eval, options.tol);
            if (trimmed_rep.max_regret <= options.tol) {
                best_regret = trimmed_rep.max_regret;
                best_profile = std::move(trimmed);
                best_regrets = std::move(trimmed_rep.regrets);
                break;
            }
        }

        // Damped map step using the utilities already evaluated.
        std::size_t slot = 0;
        for (int i = 0; i < game.num_students(); ++i)
            for (int t = 0; t < game.num_types(i); ++t, ++slot) {
                auto& row = sigma.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
                const auto& u = rep.regrets[slot].utilities;
                double avg = 0.0;
                for (std::size_t r = 0; r < u.size(); ++r) avg += row[r] * u[r];
                double total = 1.0;
                std::vector<double> phi(u.size());
                for (std::size_t r = 0; r < u.size(); ++r) total += phi[r] = std::max(0.0, u[r] - avg);
                const double best = *std::max_element(u.begin(), u.end());
                double mass = 0.0;
                for (std::size_t r = 0; r < u.size(); ++r) {
                    row[r] = (1.0 - d_step) * row[r] + d_step * (row[r] + phi[r]) / total;
                    if (row[r] < options.prune_mass && u[r] < best - options.tol) row[r] = 0.0;
                    mass += row[r];
                }
                for (double& x : row) x /= mass;
            }
    }

    cert.profile = best_profile;
    cert.max_regret = best_regret;
    cert.regrets = best_regrets;
    cert.converged = best_regret <= options.tol;

    const bool tiny = game.num_students() <= 2 && game.num_strategies() <= 6 &&
                      std::all_of(game.type_spaces.begin(), game.type_spaces.end(),
                                  [](const auto& s) { return s.size() <= 3; });
    if (!cert.converged && options.pure_fallback && tiny) {
        int evaluated = 0;
        if (auto found = pure_profile_search(eval, options.tol, evaluated)) {
            auto rep = verify_cbne(*found, eval, options.tol);
            cert.profile = *found;
            cert.max_regret = rep.max_regret;
            cert.regrets = rep.regrets;
            cert.converged = true;
            cert.method = "pure-enumeration";
            cert.iterations += evaluated;
        }
    }
    return cert;
}

// ---- sequential example ---------------------------------------------------------------------

const char* to_string(SequentialVerdict v) { return v == SequentialVerdict::TruthfulIsSeqCPE ? "TruthfulIsSeqCPE" : "Not"; }

SequentialVerdict sequential_cpe_osp_example(double eps, double loss_dominance, double v_pref, double v_other) {
    if (!(v_pref > v_other)) throw std::invalid_argument("v_pref must exceed v_other");
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("eps must lie in [0, 1]");
    if (loss_dominance < 0.0) throw std::invalid_argument("loss dominance must be nonnegative");
    const Rational e = exact_rational(eps);
    const std::vector<Rational> values{exact_rational(v_pref), exact_rational(v_other)};
    const Rational L = exact_rational(loss_dominance);
    const ExactLottery truthful{{e, Rational(1) - e}};
    const ExactLottery sure{{Rational(0), Rational(1)}};
    const Rational u_truth = cpe_utility<Rational>(values, L, truthful);
    const Rational u_sure = cpe_utility<Rational>(values, L, sure);
    return u_truth >= u_sure ? SequentialVerdict::TruthfulIsSeqCPE : SequentialVerdict::Not;
}

// ---- serialization ------------------------------------------------------------------------------

nlohmann::json to_json(const CbneCertificate& cert, const FiniteDaGame& game) {
    nlohmann::json j;
    j["converged"] = cert.converged;
    j["method"] = cert.method;
    j["iterations"] = cert.iterations;
    j["max_regret"] = cert.max_regret;
    auto& strategies = j["strategies"] = nlohmann::json::array();
    for (const auto& r : game.strategies) strategies.push_back(r.to_string());
    j["profile"] = cert.profile.probs;
    auto& regrets = j["regrets"] = nlohmann::json::array();
    for (const auto& r : cert.regrets)
        regrets.push_back({{"student", r.student}, {"type", r.type}, {"regret", r.regret}});
    return j;
}

nlohmann::json to_json(const EliteCutoffs& cutoffs) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t k = 0; k < cutoffs.cutoffs.size(); ++k)
        j.push_back({{"lambda", cutoffs.lambda_levels[k]}, {"cutoff", cutoffs.cutoffs[k]}});
    return j;
}

}  // namespace ebla
