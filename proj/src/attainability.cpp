#include "ebla/attainability.hpp"
#include "ebla/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace ebla {

std::string state_to_bits(AttainabilityState state, int num_schools) {
    std::string bits;
    for (SchoolId s = 1; s <= num_schools; ++s) bits += attainable(state, s) ? '1' : '0';
    return bits;
}

AttainabilityState state_from_bits(std::string_view bits) {
    AttainabilityState state = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] == '1') state = with_school(state, static_cast<SchoolId>(k + 1));
        else if (bits[k] != '0') throw std::invalid_argument("malformed state bit string");
    }
    return state;
}

Rol probe_rol(SchoolId s, int m) {
    std::vector<SchoolId> r{s};
    for (SchoolId t = 1; t <= m; ++t)
        if (t != s) r.push_back(t);
    return Rol(std::move(r));
}

AttainabilityState probe_state(StudentId focal, const PriorityTable& priorities, std::vector<Rol> reports,
                               std::span<const int> capacities, const Mechanism& mechanism) {
    const int m = static_cast<int>(capacities.size());
    AttainabilityState state = 0;
    for (SchoolId s = 1; s <= m; ++s) {
        reports[static_cast<std::size_t>(focal)] = probe_rol(s, m);
        if (mechanism(reports, priorities, capacities)[focal] == s) state = with_school(state, s);
    }
    return state;
}

AttainabilityDistribution exact_attainability(const StudentType& focal, const std::vector<JointTypeProfile>& others,
                                              const Instance& instance,
                                              const std::function<Rol(StudentId, const StudentType&)>& strategy,
                                              const Mechanism& mechanism, std::uint64_t cap) {
    if (others.size() > cap) throw std::length_error("support exceeds cap");
    std::vector<AttainabilityScenario<double>> scenarios;
    scenarios.reserve(others.size());
    for (const auto& profile : others) {
        std::vector<StudentType> all{focal};
        all.insert(all.end(), profile.types.begin(), profile.types.end());
        std::vector<Rol> reports{Rol::identity(instance.num_schools)};
        for (std::size_t j = 0; j < profile.types.size(); ++j)
            reports.push_back(strategy(static_cast<StudentId>(j + 1), profile.types[j]));
        scenarios.push_back({priorities_from_types(all), std::move(reports), profile.probability});
    }
    return attainability_from_scenarios<double>(0, instance, scenarios, mechanism);
}

SampledStrategy truthful_strategy() {
    return [](StudentId, const std::vector<double>& values, double, double) { return Rol::truthful(values); };
}

McAttainability mc_attainability(double focal_score, const Instance& instance,
                                 const std::vector<IndependentSampler>& others, std::uint64_t replications,
                                 std::uint64_t seed, const SampledStrategy& strategy, const Mechanism& mechanism,
                                 unsigned threads) {
    const int m = instance.num_schools;
    threads = std::max(1U, threads);
    std::vector<std::map<AttainabilityState, std::uint64_t>> counts(threads);

    auto worker = [&](unsigned t) {
        for (std::uint64_t r = t; r < replications; r += threads) {
            CounterRng rng(seed, r);
            std::vector<double> scores{focal_score};
            std::vector<Rol> reports{Rol::identity(m)};
            for (std::size_t j = 0; j < others.size(); ++j) {
                const auto& sampler = others[j];
                std::vector<double> weights;
                for (const auto& point : sampler.support) weights.push_back(point.probability);
                const auto& point = sampler.support[rng.discrete(weights)];
                const double score = sampler.score_law.quantile(rng.uniform());
                scores.push_back(score);
                reports.push_back(strategy(static_cast<StudentId>(j + 1), point.values,
                                           point.eta * (point.lambda - 1.0), score));
            }
            // Continuous scores tie with probability zero; nudge exact ties deterministically.
            for (std::size_t j = 1; j < scores.size(); ++j)
                for (std::size_t i = 0; i < j; ++i)
                    if (scores[j] == scores[i]) scores[j] = std::nextafter(scores[j], -1.0);
            const auto priorities = common_priorities(scores, m);
            ++counts[t][probe_state(0, priorities, reports, instance.capacities, mechanism)];
        }
    };
    if (threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }

    std::map<AttainabilityState, std::uint64_t> merged;
    for (const auto& c : counts)
        for (const auto& [state, k] : c) merged[state] += k;

    McAttainability out;
    out.replications = replications;
    out.distribution.num_schools = m;
    out.distribution.outside = instance.outside_option;
    if (replications == 0) return out;
    const double R = static_cast<double>(replications);
    for (const auto& [state, k] : merged) {
        const double p = static_cast<double>(k) / R;
        out.distribution.mass[state] = p;
        out.standard_error[state] = std::sqrt(p * (1.0 - p) / R);
    }
    return out;
}

double total_variation(const AttainabilityDistribution& a, const AttainabilityDistribution& b) {
    double tv = 0.0;
    for (const auto& [state, p] : a.mass) tv += std::abs(p - b.probability(state));
    for (const auto& [state, p] : b.mass)
        if (!a.mass.count(state)) tv += std::abs(p);
    return 0.5 * tv;
}

}  // namespace ebla
