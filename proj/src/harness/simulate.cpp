#include "ebla/cpe.hpp"
#include "ebla/equilibrium.hpp"
#include "ebla/harness.hpp"
#include "ebla/rng.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

namespace ebla::harness {

Mechanism mechanism_by_name(const std::string& name) {
    if (name == "da") return da_student_proposing;
    if (name == "ttc") return ttc;
    if (name == "immediate-acceptance") return immediate_acceptance;
    throw std::invalid_argument("unknown mechanism '" + name + "' (da, ttc, immediate-acceptance)");
}

namespace {

/// Ranks per school with ties broken by a uniformly drawn order of students.
PriorityTable strict_priorities(const PriorityTable& raw, CounterRng& rng) {
    const std::size_t n = raw.empty() ? 0 : raw.front().size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    std::vector<std::size_t> pos(n);
    for (std::size_t k = 0; k < n; ++k) pos[order[k]] = k;
    PriorityTable out(raw.size(), std::vector<double>(n));
    for (std::size_t s = 0; s < raw.size(); ++s) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (raw[s][a] != raw[s][b]) return raw[s][a] > raw[s][b];
            return pos[a] < pos[b];
        });
        for (std::size_t r = 0; r < n; ++r) out[s][idx[r]] = static_cast<double>(n - r);
    }
    return out;
}

Rol canonical(const Rol& r, const Instance& instance) {
    return instance.outside_option ? canonicalize_rol(r, *instance.outside_option) : r;
}

bool report_is_trm(const Rol& report, const Rol& order, const Instance& instance) {
    return instance.outside_option ? is_trm_up_to_truncation(report, order, *instance.outside_option)
                                   : is_top_rank_monotone(report, order).is_trm;
}

struct Replication {
    bool stable = false;
    int truthful = 0, trm = 0;
    double match_value = 0.0;
};

}  // namespace

nlohmann::json simulate(const Scenario& sc, unsigned threads) {
    const auto mechanism = mechanism_by_name(sc.mechanism);
    const Instance& inst = sc.instance;
    const int n = inst.num_students, m = inst.num_schools;

    nlohmann::json out;
    out["seed"] = sc.seed;
    out["replications"] = sc.replications;
    out["mechanism"] = sc.mechanism;
    out["strategy"] = sc.strategy;

    std::optional<FiniteDaGame> game;
    std::optional<CbneCertificate> cert;
    if (sc.strategy == "cbne") {
        game = make_joint_game(inst, sc.types.joint(), mechanism);
        CbneOptions opt;
        opt.threads = threads;
        cert = cbne_fixed_point(*game, opt);
        out["equilibrium"] = to_json(*cert, *game);
    }

    threads = std::max(1U, threads);
    std::vector<Replication> reps(sc.replications);
    auto worker = [&](unsigned t) {
        for (std::uint64_t r = t; r < sc.replications; r += threads) {
            CounterRng rng(sc.seed, r);
            std::vector<StudentType> types;
            std::vector<Rol> reports;
            if (sc.types.is_joint()) {
                const auto& joint = sc.types.joint();
                std::vector<double> w;
                for (const auto& p : joint) w.push_back(p.probability);
                const std::size_t j = rng.discrete(w);
                types = joint[j].types;
                for (int i = 0; i < n; ++i) {
                    if (cert) {
                        const int t_idx = game->joint_types[j][static_cast<std::size_t>(i)];
                        const auto& row = cert->profile.probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(t_idx)];
                        reports.push_back(game->strategies[rng.discrete(row)]);
                    } else {
                        reports.push_back(Rol::truthful(types[static_cast<std::size_t>(i)].values()));
                    }
                }
            } else {
                for (const auto& sampler : sc.types.samplers()) {
                    std::vector<double> w;
                    for (const auto& p : sampler.support) w.push_back(p.probability);
                    const auto& point = sampler.support[rng.discrete(w)];
                    const double score = sampler.score_law.quantile(rng.uniform());
                    types.emplace_back(point.values, std::vector<double>(static_cast<std::size_t>(m), score), point.eta,
                                       point.lambda);
                    reports.push_back(Rol::truthful(point.values));
                }
            }
            const auto priorities = strict_priorities(priorities_from_types(types), rng);
            const auto alloc = mechanism(reports, priorities, inst.capacities);
            std::vector<std::vector<double>> values;
            for (const auto& t : types) values.push_back(t.values());
            auto& rec = reps[r];
            rec.stable = justified_envy_pairs(alloc, values, priorities, inst.capacities).empty();
            for (int i = 0; i < n; ++i) {
                const auto& v = types[static_cast<std::size_t>(i)].values();
                const Rol order = Rol::truthful(v);
                rec.truthful += canonical(reports[static_cast<std::size_t>(i)], inst) == canonical(order, inst);
                rec.trm += report_is_trm(reports[static_cast<std::size_t>(i)], order, inst);
                if (alloc[i] != kUnmatched) rec.match_value += v[static_cast<std::size_t>(alloc[i] - 1)];
            }
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    nlohmann::json stats = nlohmann::json::object();
    if (sc.replications > 0) {
        std::uint64_t stable = 0, truthful = 0, trm = 0;
        double value = 0.0;
        for (const auto& rec : reps) {  // serial order keeps sums thread-independent
            stable += rec.stable;
            truthful += static_cast<std::uint64_t>(rec.truthful);
            trm += static_cast<std::uint64_t>(rec.trm);
            value += rec.match_value;
        }
        const double R = static_cast<double>(sc.replications);
        stats["stability_rate"] = static_cast<double>(stable) / R;
        stats["truthful_report_rate"] = static_cast<double>(truthful) / (R * n);
        stats["trm_report_rate"] = static_cast<double>(trm) / (R * n);
        stats["average_match_value"] = value / (R * n);
    }
    out["statistics"] = stats;

    if (sc.focal) {
        const auto& f = *sc.focal;
        std::vector<IndependentSampler> others(sc.types.samplers().begin() + 1, sc.types.samplers().end());
        auto& focal = out["focal"] = nlohmann::json::array();
        for (std::size_t k = 0; k < f.scores.size(); ++k) {
            const auto est = mc_attainability(f.scores[k], inst, others, sc.replications, splitmix64(sc.seed) + k,
                                              truthful_strategy(), mechanism, threads);
            nlohmann::json entry;
            entry["score"] = f.scores[k];
            auto& states = entry["attainability"] = nlohmann::json::array();
            for (const auto& [state, p] : est.distribution.mass)
                states.push_back({{"state", state_to_bits(state, m)},
                                  {"probability", p},
                                  {"standard_error", est.standard_error.at(state)}});
            if (sc.replications > 0 && m <= kDefaultExhaustiveCap) {
                const auto best = optimal_rols<double>(f.values, f.loss_dominance, est.distribution);
                auto& arg = entry["optimal_rols"] = nlohmann::json::array();
                for (const auto& r : best.argmax) arg.push_back(r.to_string());
                entry["optimal_utility"] = best.value;
                const auto truthful_lottery = induced_lottery(Rol::truthful(f.values), est.distribution);
                entry["truthful_lottery"] = truthful_lottery.probs;
            }
            focal.push_back(std::move(entry));
        }
    }
    return out;
}

}  // namespace ebla::harness
