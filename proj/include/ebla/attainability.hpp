#pragma once

#include "ebla/mechanisms.hpp"
#include "ebla/model.hpp"
#include "ebla/rational.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebla {

/// Bit s-1 of a state is A_s.
using AttainabilityState = std::uint32_t;

inline bool attainable(AttainabilityState state, SchoolId s) { return (state >> (s - 1)) & 1U; }
inline AttainabilityState with_school(AttainabilityState state, SchoolId s) { return state | (1U << (s - 1)); }

/// "A_1 A_2 ... A_m" as a bit string, e.g. "101".
std::string state_to_bits(AttainabilityState state, int num_schools);
AttainabilityState state_from_bits(std::string_view bits);

/// Probability mass over attainability states, stored sparsely.
template <class T>
struct BasicAttainability {
    int num_schools = 0;
    std::optional<SchoolId> outside;
    std::map<AttainabilityState, T> mass;

    void add(AttainabilityState state, const T& p) {
        if (p == T(0)) return;
        mass[state] += p;
    }
    T probability(AttainabilityState state) const {
        auto it = mass.find(state);
        return it == mass.end() ? T(0) : it->second;
    }
    /// p_s = P(A_s = 1).
    T marginal(SchoolId s) const {
        T p(0);
        for (const auto& [state, q] : mass)
            if (attainable(state, s)) p += q;
        return p;
    }
    T total() const {
        T p(0);
        for (const auto& [state, q] : mass) p += q;
        return p;
    }
    /// Empty when the distribution satisfies its invariants.
    std::vector<std::string> violations(double tol = 1e-12) const {
        std::vector<std::string> out;
        for (const auto& [state, q] : mass) {
            if (q < T(0)) out.push_back("negative mass at state " + state_to_bits(state, num_schools));
            if (outside && q > T(0) && !attainable(state, *outside))
                out.push_back("outside option unattainable at state " + state_to_bits(state, num_schools));
        }
        if (std::abs(to_double(T(total() - T(1)))) > tol) out.emplace_back("mass does not sum to 1");
        return out;
    }
};

using AttainabilityDistribution = BasicAttainability<double>;
using ExactAttainability = BasicAttainability<Rational>;

/// Match probabilities over schools 1..m (index s-1).
template <class T>
struct BasicLottery {
    std::vector<T> probs;

    const T& operator[](SchoolId s) const { return probs[static_cast<std::size_t>(s - 1)]; }
    T& operator[](SchoolId s) { return probs[static_cast<std::size_t>(s - 1)]; }
    int size() const { return static_cast<int>(probs.size()); }
    friend bool operator==(const BasicLottery&, const BasicLottery&) = default;
};

using Lottery = BasicLottery<double>;
using ExactLottery = BasicLottery<Rational>;

/// f_{s_k} = P(A_{s_l} = 0 for l < k, A_{s_k} = 1). Throws std::domain_error when
/// a state with positive mass leaves every school unattainable.
template <class T>
BasicLottery<T> induced_lottery(const Rol& rol, const BasicAttainability<T>& P) {
    BasicLottery<T> f{std::vector<T>(static_cast<std::size_t>(rol.size()), T(0))};
    for (const auto& [state, q] : P.mass) {
        bool placed = false;
        for (SchoolId s : rol)
            if (attainable(state, s)) {
                f[s] += q;
                placed = true;
                break;
            }
        if (!placed && q != T(0)) throw std::domain_error("state with no attainable school has positive mass");
    }
    return f;
}

/// Every state of the non-outside schools carries positive mass.
template <class T>
bool has_full_support(const BasicAttainability<T>& P) {
    std::vector<SchoolId> real;
    for (SchoolId s = 1; s <= P.num_schools; ++s)
        if (!P.outside || s != *P.outside) real.push_back(s);
    const std::uint32_t combos = 1U << real.size();
    for (std::uint32_t c = 0; c < combos; ++c) {
        AttainabilityState state = 0;
        for (std::size_t k = 0; k < real.size(); ++k)
            if ((c >> k) & 1U) state = with_school(state, real[k]);
        if (P.outside) state = with_school(state, *P.outside);
        if (state == 0) continue;  // no school attainable: impossible without an outside option
        if (!(P.probability(state) > T(0))) return false;
    }
    return true;
}

/// Every positive-mass state with A_s = 1 has some other school unattainable.
template <class T>
bool is_exclusive(const BasicAttainability<T>& P, SchoolId s) {
    const AttainabilityState all = (P.num_schools >= 32) ? ~0U : ((1U << P.num_schools) - 1U);
    for (const auto& [state, q] : P.mass)
        if (q > T(0) && attainable(state, s) && state == all) return false;
    return true;
}

/// One realization seen by the focal student: priorities of every student,
/// the other students' reports (the focal entry is ignored), and its weight.
template <class T>
struct AttainabilityScenario {
    PriorityTable priorities;
    std::vector<Rol> reports;
    T probability;
};

/// ROL that puts s first and the rest ascending; used to probe attainability.
Rol probe_rol(SchoolId s, int m);

/// Attainability state of the focal student in one realization, probing each
/// school with `mechanism`.
AttainabilityState probe_state(StudentId focal, const PriorityTable& priorities, std::vector<Rol> reports,
                               std::span<const int> capacities, const Mechanism& mechanism);

template <class T>
BasicAttainability<T> attainability_from_scenarios(StudentId focal, const Instance& instance,
                                                   std::span<const AttainabilityScenario<T>> scenarios,
                                                   const Mechanism& mechanism = da_student_proposing) {
    BasicAttainability<T> P;
    P.num_schools = instance.num_schools;
    P.outside = instance.outside_option;
    for (const auto& sc : scenarios) {
        if (sc.probability == T(0)) continue;
        P.add(probe_state(focal, sc.priorities, sc.reports, instance.capacities, mechanism), sc.probability);
    }
    return P;
}

/// Reports of one other student and their probabilities.
template <class T>
using ReportDistribution = std::vector<std::pair<Rol, T>>;

/// Exact attainability under common priorities with i.i.d. scores: each other
/// student independently outranks the focal student with probability
/// 1 - G(omega); conditional on the set above, all orderings inside each group
/// are equally likely. `focal_cdf` is G(omega). The focal student is index 0.
/// Throws std::length_error when the enumeration exceeds `cap` scenarios.
template <class T>
BasicAttainability<T> exact_attainability_common_scores(const Instance& instance, const T& focal_cdf,
                                                        const std::vector<ReportDistribution<T>>& others,
                                                        const Mechanism& mechanism = da_student_proposing,
                                                        std::uint64_t cap = 5'000'000);

/// Exact attainability for a finite joint type support: the focal student's type
/// is fixed, `others` lists realized types of the others with probabilities,
/// and each other student reports via `strategy`. The focal student is index 0.
AttainabilityDistribution exact_attainability(const StudentType& focal, const std::vector<JointTypeProfile>& others,
                                              const Instance& instance,
                                              const std::function<Rol(StudentId, const StudentType&)>& strategy,
                                              const Mechanism& mechanism = da_student_proposing,
                                              std::uint64_t cap = 5'000'000);

struct McAttainability {
    AttainabilityDistribution distribution;
    std::map<AttainabilityState, double> standard_error;
    std::uint64_t replications = 0;
};

/// Strategy used by the other students in sampled worlds.
using SampledStrategy = std::function<Rol(StudentId, const std::vector<double>& values, double loss_dominance, double score)>;
SampledStrategy truthful_strategy();

/// Monte Carlo estimate under common priorities. The focal student (index 0)
/// has score `focal_score`; each other student is drawn from its sampler.
/// Replication r uses substream (seed, r), so results do not depend on `threads`.
McAttainability mc_attainability(double focal_score, const Instance& instance,
                                 const std::vector<IndependentSampler>& others, std::uint64_t replications,
                                 std::uint64_t seed, const SampledStrategy& strategy = truthful_strategy(),
                                 const Mechanism& mechanism = da_student_proposing, unsigned threads = 1);

/// Total-variation distance between two distributions.
double total_variation(const AttainabilityDistribution& a, const AttainabilityDistribution& b);

template <class T>
AttainabilityDistribution to_double(const BasicAttainability<T>& P) {
    AttainabilityDistribution out;
    out.num_schools = P.num_schools;
    out.outside = P.outside;
    for (const auto& [state, q] : P.mass) out.mass[state] = to_double(q);
    return out;
}

}  // namespace ebla

#include "ebla/detail/attainability_impl.hpp"
