#pragma once

// Template definitions for attainability.hpp.

#include <algorithm>
#include <numeric>

namespace ebla {

template <class T>
BasicAttainability<T> exact_attainability_common_scores(const Instance& instance, const T& focal_cdf,
                                                        const std::vector<ReportDistribution<T>>& others,
                                                        const Mechanism& mechanism, std::uint64_t cap) {
    const std::size_t k = others.size();
    const int m = instance.num_schools;
    if (k >= 20) throw std::length_error("too many students for exact enumeration");
    std::uint64_t work = 1;
    for (std::size_t j = 0; j < k; ++j) {
        work *= (others[j].size() * (j + 1) * 2);
        if (work > cap) throw std::length_error("exact attainability enumeration exceeds cap");
    }
    const T above_p = T(1) - focal_cdf;
    const T below_p = focal_cdf;

    BasicAttainability<T> P;
    P.num_schools = m;
    P.outside = instance.outside_option;

    std::vector<Rol> reports(k + 1, Rol::identity(m));
    for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
        std::vector<int> above, below;
        T subset_p(1);
        for (std::size_t j = 0; j < k; ++j) {
            if ((mask >> j) & 1U) {
                above.push_back(static_cast<int>(j) + 1);
                subset_p *= above_p;
            } else {
                below.push_back(static_cast<int>(j) + 1);
                subset_p *= below_p;
            }
        }
        if (subset_p == T(0)) continue;
        auto factorial = [](std::size_t x) {
            std::uint64_t f = 1;
            for (std::size_t t = 2; t <= x; ++t) f *= t;
            return f;
        };
        const T order_weight = T(1) / T(factorial(above.size()) * factorial(below.size()));
        std::sort(above.begin(), above.end());
        do {
            std::sort(below.begin(), below.end());
            do {
                // Highest score first: above group, focal, below group.
                std::vector<double> scores(k + 1, 0.0);
                double rank = static_cast<double>(k + 1);
                for (int j : above) scores[static_cast<std::size_t>(j)] = rank--;
                scores[0] = rank--;
                for (int j : below) scores[static_cast<std::size_t>(j)] = rank--;
                const PriorityTable priorities = common_priorities(scores, m);
                // Odometer over report choices.
                std::vector<std::size_t> idx(k, 0);
                for (;;) {
                    T p = subset_p * order_weight;
                    for (std::size_t j = 0; j < k; ++j) {
                        reports[j + 1] = others[j][idx[j]].first;
                        p *= others[j][idx[j]].second;
                    }
                    if (p != T(0))
                        P.add(probe_state(0, priorities, reports, instance.capacities, mechanism), p);
                    std::size_t j = 0;
                    for (; j < k; ++j) {
                        if (++idx[j] < others[j].size()) break;
                        idx[j] = 0;
                    }
                    if (j == k) break;
                }
            } while (std::next_permutation(below.begin(), below.end()));
        } while (std::next_permutation(above.begin(), above.end()));
    }
    return P;
}

}  // namespace ebla
