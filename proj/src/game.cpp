#include "ebla/game.hpp"

#include "ebla/cpe.hpp"
#include "ebla/equilibrium.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ebla {

namespace {

bool same_type(const StudentType& a, const StudentType& b) {
    return a.values() == b.values() && a.priorities() == b.priorities() && a.eta() == b.eta() &&
           a.lambda() == b.lambda();
}

std::uint64_t checked_power(std::uint64_t base, int exp, std::uint64_t cap) {
    std::uint64_t out = 1;
    for (int k = 0; k < exp; ++k) {
        if (base != 0 && out > cap / base) throw std::length_error("game too large to tabulate");
        out *= base;
    }
    return out;
}

bool has_ties(const PriorityTable& table) {
    for (const auto& row : table) {
        std::vector<double> sorted(row);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return true;
    }
    return false;
}

/// Strict priorities: ties broken by the position of each student in `order`.
PriorityTable break_ties(const PriorityTable& table, const std::vector<int>& order) {
    const std::size_t n = order.size();
    std::vector<std::size_t> pos(n);
    for (std::size_t k = 0; k < n; ++k) pos[static_cast<std::size_t>(order[k])] = k;
    PriorityTable out(table.size(), std::vector<double>(n));
    for (std::size_t s = 0; s < table.size(); ++s) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (table[s][a] != table[s][b]) return table[s][a] > table[s][b];
            return pos[a] < pos[b];
        });
        for (std::size_t r = 0; r < n; ++r) out[s][idx[r]] = static_cast<double>(n - r);
    }
    return out;
}

}  // namespace

std::vector<std::string> FiniteDaGame::violations() const {
    std::vector<std::string> out;
    for (const auto& v : validate_instance(instance)) out.push_back(v);
    if (num_students() != instance.num_students) out.emplace_back("type spaces do not match the student count");
    if (strategies.empty()) out.emplace_back("strategy set is empty");
    for (const auto& r : strategies)
        if (r.size() != instance.num_schools) out.emplace_back("strategy " + r.to_string() + " has wrong length");
    if (joint_types.size() != joint_probs.size()) out.emplace_back("joint table and probabilities differ in size");
    double total = 0.0;
    for (std::size_t j = 0; j < joint_types.size(); ++j) {
        total += joint_probs[j];
        if (joint_probs[j] < 0.0) out.emplace_back("negative joint probability");
        if (static_cast<int>(joint_types[j].size()) != num_students())
            out.emplace_back("joint profile has wrong length");
        else
            for (int i = 0; i < num_students(); ++i)
                if (joint_types[j][static_cast<std::size_t>(i)] < 0 ||
                    joint_types[j][static_cast<std::size_t>(i)] >= num_types(i))
                    out.emplace_back("joint profile references unknown type");
    }
    if (std::abs(total - 1.0) > 1e-12) out.emplace_back("joint probabilities do not sum to 1");
    int seats = 0;
    for (int c : instance.capacities) seats += c;
    if (!instance.outside_option && seats < instance.num_students)
        out.emplace_back("without an outside option total capacity must cover every student");
    return out;
}

FiniteDaGame make_independent_game(const Instance& instance, std::vector<std::vector<StudentType>> type_spaces,
                                   const std::vector<std::vector<double>>& marginals, const Mechanism& mechanism) {
    if (type_spaces.size() != marginals.size()) throw std::invalid_argument("one marginal per student required");
    FiniteDaGame game;
    game.instance = instance;
    game.mechanism = mechanism;
    game.strategies = canonical_rols(instance.num_schools, instance.outside_option);
    const std::size_t n = type_spaces.size();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (type_spaces[i].size() != marginals[i].size())
            throw std::invalid_argument("marginal length differs from type space");
        total *= type_spaces[i].size();
        if (total > 5'000'000) throw std::length_error("joint type table exceeds 5e6 profiles");
    }
    std::vector<int> idx(n, 0);
    for (std::uint64_t j = 0; j < total; ++j) {
        double p = 1.0;
        for (std::size_t i = 0; i < n; ++i) p *= marginals[i][static_cast<std::size_t>(idx[i])];
        if (p > 0.0) {
            game.joint_types.push_back(idx);
            game.joint_probs.push_back(p);
        }
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < static_cast<int>(type_spaces[i].size())) break;
            idx[i] = 0;
        }
    }
    game.type_spaces = std::move(type_spaces);
    return game;
}

FiniteDaGame make_joint_game(const Instance& instance, const std::vector<JointTypeProfile>& support,
                             const Mechanism& mechanism) {
    FiniteDaGame game;
    game.instance = instance;
    game.mechanism = mechanism;
    game.strategies = canonical_rols(instance.num_schools, instance.outside_option);
    game.type_spaces.resize(static_cast<std::size_t>(instance.num_students));
    for (const auto& profile : support) {
        if (static_cast<int>(profile.types.size()) != instance.num_students)
            throw std::invalid_argument("joint profile has wrong number of students");
        std::vector<int> idx;
        for (std::size_t i = 0; i < profile.types.size(); ++i) {
            auto& space = game.type_spaces[i];
            auto it = std::find_if(space.begin(), space.end(),
                                   [&](const StudentType& t) { return same_type(t, profile.types[i]); });
            if (it == space.end()) {
                space.push_back(profile.types[i]);
                it = std::prev(space.end());
            }
            idx.push_back(static_cast<int>(it - space.begin()));
        }
        game.joint_types.push_back(std::move(idx));
        game.joint_probs.push_back(profile.probability);
    }
    return game;
}

MixedStrategyProfile MixedStrategyProfile::uniform(const FiniteDaGame& game) {
    MixedStrategyProfile p;
    const double u = 1.0 / game.num_strategies();
    for (int i = 0; i < game.num_students(); ++i)
        p.probs.emplace_back(static_cast<std::size_t>(game.num_types(i)),
                             std::vector<double>(static_cast<std::size_t>(game.num_strategies()), u));
    return p;
}

MixedStrategyProfile MixedStrategyProfile::pure(const FiniteDaGame& game, const std::vector<std::vector<int>>& choice) {
    MixedStrategyProfile p;
    for (int i = 0; i < game.num_students(); ++i) {
        p.probs.emplace_back();
        for (int t = 0; t < game.num_types(i); ++t) {
            std::vector<double> row(static_cast<std::size_t>(game.num_strategies()), 0.0);
            row.at(static_cast<std::size_t>(choice.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(t)))) = 1.0;
            p.probs.back().push_back(std::move(row));
        }
    }
    return p;
}

std::vector<std::string> MixedStrategyProfile::violations(double tol) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < probs.size(); ++i)
        for (std::size_t t = 0; t < probs[i].size(); ++t) {
            double sum = 0.0;
            for (double x : probs[i][t]) {
                if (x < 0.0) out.push_back("negative probability for student " + std::to_string(i));
                sum += x;
            }
            if (std::abs(sum - 1.0) > tol)
                out.push_back("strategy of student " + std::to_string(i) + " type " + std::to_string(t) +
                              " does not sum to 1");
        }
    return out;
}

GameEvaluator::GameEvaluator(const FiniteDaGame& game, unsigned threads, std::uint64_t cap) : game_(game) {
    if (auto v = game.violations(); !v.empty()) throw std::invalid_argument("invalid game: " + v.front());
    const int n = game.num_students();
    const std::size_t S = static_cast<std::size_t>(game.num_strategies());
    const std::size_t J = game.joint_types.size();
    const std::uint64_t others = checked_power(S, n - 1, cap);
    if (others * J * static_cast<std::uint64_t>(n) > cap) throw std::length_error("game too large to tabulate");

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::vector<int>> tie_orders;
    do tie_orders.push_back(order);
    while (std::next_permutation(order.begin(), order.end()));

    // per_profile[j][i][a] -> aggregated states
    std::vector<std::vector<std::vector<std::vector<Entry>>>> per_profile(J);
    auto work = [&](std::size_t j) {
        std::vector<StudentType> types;
        for (int i = 0; i < n; ++i)
            types.push_back(game.type_spaces[static_cast<std::size_t>(i)][static_cast<std::size_t>(game.joint_types[j][static_cast<std::size_t>(i)])]);
        const PriorityTable raw = priorities_from_types(types);
        std::vector<PriorityTable> tables;
        if (has_ties(raw))
            for (const auto& o : tie_orders) tables.push_back(break_ties(raw, o));
        else
            tables.push_back(raw);
        const double w = 1.0 / static_cast<double>(tables.size());

        auto& slot = per_profile[j];
        slot.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            slot[static_cast<std::size_t>(i)].resize(others);
            for (std::uint64_t a = 0; a < others; ++a) {
                std::vector<Rol> reports(static_cast<std::size_t>(n), game.strategies.front());
                std::uint64_t code = a;
                for (int k = n - 1; k >= 0; --k) {
                    if (k == i) continue;
                    reports[static_cast<std::size_t>(k)] = game.strategies[code % S];
                    code /= S;
                }
                auto& cell = slot[static_cast<std::size_t>(i)][a];
                for (const auto& table : tables) {
                    const auto state = probe_state(i, table, reports, game.instance.capacities, game.mechanism);
                    auto it = std::find_if(cell.begin(), cell.end(), [&](const Entry& e) { return e.state == state; });
                    if (it == cell.end()) cell.push_back({state, w});
                    else it->weight += w;
                }
            }
        }
    };
    threads = std::max(1U, threads);
    if (threads == 1) {
        for (std::size_t j = 0; j < J; ++j) work(j);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::size_t j = t; j < J; j += threads) work(j);
            });
        for (auto& th : pool) th.join();
    }

    offsets_.assign(static_cast<std::size_t>(n), std::vector<std::vector<std::uint32_t>>(J));
    for (std::size_t j = 0; j < J; ++j)
        for (int i = 0; i < n; ++i) {
            auto& off = offsets_[static_cast<std::size_t>(i)][j];
            off.reserve(others + 1);
            for (std::uint64_t a = 0; a < others; ++a) {
                off.push_back(static_cast<std::uint32_t>(entries_.size()));
                const auto& cell = per_profile[j][static_cast<std::size_t>(i)][a];
                entries_.insert(entries_.end(), cell.begin(), cell.end());
            }
            off.push_back(static_cast<std::uint32_t>(entries_.size()));
        }
}

AttainabilityDistribution GameEvaluator::attainability(const MixedStrategyProfile& sigma, StudentId i, int t) const {
    const int n = game_.num_students();
    const std::size_t S = static_cast<std::size_t>(game_.num_strategies());
    const int m = game_.instance.num_schools;
    std::vector<double> dense(std::size_t{1} << m, 0.0);
    double conditional = 0.0;
    for (std::size_t j = 0; j < game_.joint_types.size(); ++j) {
        const auto& profile = game_.joint_types[j];
        if (profile[static_cast<std::size_t>(i)] != t) continue;
        const double pj = game_.joint_probs[j];
        if (pj == 0.0) continue;
        conditional += pj;
        const auto& off = offsets_[static_cast<std::size_t>(i)][j];
        const std::size_t A = off.size() - 1;
        for (std::size_t a = 0; a < A; ++a) {
            double w = pj;
            std::size_t code = a;
            for (int k = n - 1; k >= 0 && w != 0.0; --k) {
                if (k == i) continue;
                w *= sigma.probs[static_cast<std::size_t>(k)][static_cast<std::size_t>(profile[static_cast<std::size_t>(k)])][code % S];
                code /= S;
            }
            if (w == 0.0) continue;
            for (std::uint32_t e = off[a]; e < off[a + 1]; ++e) dense[entries_[e].state] += w * entries_[e].weight;
        }
    }
    AttainabilityDistribution P;
    P.num_schools = m;
    P.outside = game_.instance.outside_option;
    if (conditional <= 0.0) return P;  // type never drawn
    for (std::size_t s = 0; s < dense.size(); ++s)
        if (dense[s] > 0.0) P.mass[static_cast<AttainabilityState>(s)] = dense[s] / conditional;
    return P;
}

std::vector<double> GameEvaluator::utilities(const MixedStrategyProfile& sigma, StudentId i, int t) const {
    const auto P = attainability(sigma, i, t);
    const auto& theta = game_.type_spaces[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    std::vector<double> u;
    u.reserve(game_.strategies.size());
    for (const auto& r : game_.strategies) u.push_back(cpe_utility(theta, induced_lottery(r, P)));
    return u;
}

std::vector<double> elite_grid_scores(const EliteProblem& problem, int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("grid size must be positive");
    const double lo = problem.score_law.lower(), hi = problem.score_law.upper();
    std::vector<double> out;
    for (int k = 0; k < grid_size; ++k) out.push_back(lo + (hi - lo) * (k + 0.5) / grid_size);
    return out;
}

FiniteDaGame make_discretized_elite_game(const EliteProblem& problem, int grid_size) {
    if (auto v = problem.violations(); !v.empty()) throw std::invalid_argument("invalid elite problem: " + v.front());
    Instance instance{2, {problem.q, problem.n}, SchoolId{2}, problem.n};
    const double lo = problem.score_law.lower(), hi = problem.score_law.upper();
    const auto scores = elite_grid_scores(problem, grid_size);
    std::vector<StudentType> space;
    std::vector<double> marginal;
    // type index = level * grid_size + cell
    for (std::size_t l = 0; l < problem.lambda_levels.size(); ++l)
        for (int k = 0; k < grid_size; ++k) {
            const double a = lo + (hi - lo) * k / grid_size, b = lo + (hi - lo) * (k + 1) / grid_size;
            space.push_back(StudentType::with_score({problem.v, 0.0}, scores[static_cast<std::size_t>(k)],
                                                    problem.lambda_levels[l]));
            marginal.push_back(problem.level_probs[l] * (problem.score_law.cdf(b) - problem.score_law.cdf(a)));
        }
    std::vector<std::vector<StudentType>> spaces(static_cast<std::size_t>(problem.n), space);
    std::vector<std::vector<double>> marginals(static_cast<std::size_t>(problem.n), marginal);
    return make_independent_game(instance, std::move(spaces), marginals);
}

}  // namespace ebla
