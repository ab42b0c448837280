#pragma once

#include "ebla/attainability.hpp"
#include "ebla/model.hpp"
#include "ebla/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ebla {

// ---- utility ---------------------------------------------------------------------------

/// Expected utility of lottery F judged against reference lottery G with a linear
/// gain-loss term: gains weighted by eta, losses by eta * lambda.
template <class T>
T utility_wrt_reference(std::span<const T> values, const T& eta, const T& lambda, const BasicLottery<T>& F,
                        const BasicLottery<T>& G) {
    T total(0);
    const std::size_t m = values.size();
    for (std::size_t s = 0; s < m; ++s) {
        if (F.probs[s] == T(0)) continue;
        T inner(0);
        for (std::size_t r = 0; r < m; ++r) {
            const T diff = values[s] - values[r];
            const T gain_loss = diff >= T(0) ? T(eta * diff) : T(eta * lambda * diff);
            inner += (values[s] + gain_loss) * G.probs[r];
        }
        total += F.probs[s] * inner;
    }
    return total;
}

/// Choice-acclimated utility: the lottery is its own reference point. Classical
/// expectation minus loss dominance times the probability-weighted pairwise spread.
template <class T>
T cpe_utility(std::span<const T> values, const T& loss_dominance, const BasicLottery<T>& F) {
    const std::size_t m = values.size();
    T classical(0), spread(0);
    for (std::size_t s = 0; s < m; ++s) {
        classical += F.probs[s] * values[s];
        for (std::size_t r = s + 1; r < m; ++r) {
            const T d = values[s] > values[r] ? T(values[s] - values[r]) : T(values[r] - values[s]);
            spread += F.probs[s] * F.probs[r] * d;
        }
    }
    return classical - loss_dominance * spread;
}

inline double cpe_utility(const StudentType& theta, const Lottery& F) {
    return cpe_utility<double>(theta.values(), theta.loss_dominance(), F);
}
inline double utility_wrt_reference(const StudentType& theta, const Lottery& F, const Lottery& G) {
    const double eta = theta.eta(), lambda = theta.lambda();
    return utility_wrt_reference<double>(theta.values(), eta, lambda, F, G);
}

// ---- optimal ROL search ----------------------------------------------------------------

template <class T>
struct RolSearchResult {
    std::vector<Rol> argmax;  // canonical ROLs, lexicographic
    T value;
    bool unique() const { return argmax.size() == 1; }
    bool contains(const Rol& r) const { return std::find(argmax.begin(), argmax.end(), r) != argmax.end(); }
};

inline constexpr int kDefaultExhaustiveCap = 7;

namespace detail {

/// Ties: exact for rationals; for doubles |a - b| <= tol * max(1, value scale).
inline bool tied(const Rational& a, const Rational& b, double) { return a == b; }
inline bool tied(double a, double b, double tol) { return std::abs(a - b) <= tol; }

template <class T>
double value_scale(std::span<const T> values) {
    double scale = 1.0;
    for (const auto& v : values) scale = std::max(scale, std::abs(to_double(v)));
    return scale;
}

template <class T>
RolSearchResult<T> argmax_over(std::span<const T> values, const T& loss_dominance, const BasicAttainability<T>& P,
                               const std::vector<Rol>& candidates, double tie_tol) {
    const double tol = tie_tol * value_scale(values);
    std::vector<std::pair<Rol, T>> scored;
    scored.reserve(candidates.size());
    for (const auto& rol : candidates) scored.emplace_back(rol, cpe_utility<T>(values, loss_dominance, induced_lottery(rol, P)));
    T best = scored.front().second;
    for (const auto& [rol, u] : scored)
        if (u > best) best = u;
    RolSearchResult<T> out{{}, best};
    for (const auto& [rol, u] : scored)
        if (tied(u, best, tol)) out.argmax.push_back(rol);
    std::sort(out.argmax.begin(), out.argmax.end());
    return out;
}

}  // namespace detail

/// ROLs over school ids ordered by the truthful preference order
/// (position k holds the k-th most preferred school).
Rol truthful_order(std::span<const double> values);
Rol truthful_order(std::span<const Rational> values);

/// All top-rank monotone permutations of 1..m (truthful order 1..m), lexicographic.
std::vector<Rol> trm_enumerate(int m);

/// TRM candidates relabelled to `order`, canonicalized against the outside option.
std::vector<Rol> trm_candidates(const Rol& order, std::optional<SchoolId> outside);

/// Exhaustive CPE search over canonical ROLs. Throws std::length_error when m > cap.
template <class T>
RolSearchResult<T> optimal_rols(std::span<const T> values, const T& loss_dominance, const BasicAttainability<T>& P,
                                int cap = kDefaultExhaustiveCap, double tie_tol = 1e-12) {
    if (P.num_schools > cap) throw std::length_error("optimal_rols: school count exceeds exhaustive cap");
    return detail::argmax_over<T>(values, loss_dominance, P, canonical_rols(P.num_schools, P.outside), tie_tol);
}

/// Same contract as optimal_rols restricted to top-rank monotone ROLs.
template <class T>
RolSearchResult<T> optimal_rol_trm(std::span<const T> values, const T& loss_dominance, const BasicAttainability<T>& P,
                                   int cap = 20, double tie_tol = 1e-12) {
    if (P.num_schools > cap) throw std::length_error("optimal_rol_trm: school count exceeds cap");
    return detail::argmax_over<T>(values, loss_dominance, P, trm_candidates(truthful_order(values), P.outside), tie_tol);
}

inline RolSearchResult<double> optimal_rols(const StudentType& theta, const AttainabilityDistribution& P,
                                            int cap = kDefaultExhaustiveCap) {
    const double ld = theta.loss_dominance();
    return optimal_rols<double>(theta.values(), ld, P, cap);
}
inline RolSearchResult<double> optimal_rol_trm(const StudentType& theta, const AttainabilityDistribution& P) {
    const double ld = theta.loss_dominance();
    return optimal_rol_trm<double>(theta.values(), ld, P);
}

// ---- adjacent swaps ----------------------------------------------------------------------

/// Probability that the schools at positions pos and pos+1 are both attainable
/// while every school ranked earlier is not.
template <class T>
T swap_mass(const Rol& rol, int pos, const BasicAttainability<T>& P) {
    T eps(0);
    for (const auto& [state, q] : P.mass) {
        bool earlier = false;
        for (int k = 0; k < pos && !earlier; ++k) earlier = attainable(state, rol[k]);
        if (!earlier && attainable(state, rol[pos]) && attainable(state, rol[pos + 1])) eps += q;
    }
    return eps;
}

/// Pair at positions (pos, pos+1): x is the more valued school, y the other.
/// Returns U(x ranked before y) - U(y ranked before x).
template <class T>
T swap_gain(std::span<const T> values, const T& loss_dominance, const Rol& rol, int pos, const BasicAttainability<T>& P) {
    const SchoolId a = rol[pos], b = rol[pos + 1];
    const bool a_better = values[static_cast<std::size_t>(a - 1)] > values[static_cast<std::size_t>(b - 1)];
    const Rol x_first = a_better ? rol : rol.with_swap(pos);
    const Rol y_first = a_better ? rol.with_swap(pos) : rol;
    return cpe_utility<T>(values, loss_dominance, induced_lottery(x_first, P)) -
           cpe_utility<T>(values, loss_dominance, induced_lottery(y_first, P));
}

/// Bracketed term of the adjacent-flip criterion, evaluated on the lottery f of
/// the ROL ranking x before y with swap mass eps:
///   -sum_{v_s >= v_x} f_s + eps + sum_{v_y < v_s < v_x} f_s (v_x + v_y - 2 v_s)/(v_x - v_y) + sum_{v_s <= v_y} f_s
template <class T>
T flip_bracket(std::span<const T> values, const BasicLottery<T>& f, const T& eps, SchoolId x, SchoolId y) {
    const T vx = values[static_cast<std::size_t>(x - 1)];
    const T vy = values[static_cast<std::size_t>(y - 1)];
    T term = eps;
    for (std::size_t s = 0; s < values.size(); ++s) {
        const T& v = values[s];
        if (v >= vx) term -= f.probs[s];
        else if (v <= vy) term += f.probs[s];
        else term += f.probs[s] * (vx + vy - T(2) * v) / (vx - vy);
    }
    return term;
}

/// Sign predicted by the flip criterion for U(x first) - U(y first):
/// +1 if eps/Lambda > eps * bracket, -1 if <, 0 on equality (or eps = 0).
template <class T>
int flip_predicted_sign(std::span<const T> values, const T& loss_dominance, const Rol& rol, int pos,
                        const BasicAttainability<T>& P, double tol = 0.0) {
    const SchoolId a = rol[pos], b = rol[pos + 1];
    const bool a_better = values[static_cast<std::size_t>(a - 1)] > values[static_cast<std::size_t>(b - 1)];
    const SchoolId x = a_better ? a : b, y = a_better ? b : a;
    const Rol x_first = a_better ? rol : rol.with_swap(pos);
    const T eps = swap_mass(x_first, pos, P);
    if (eps == T(0)) return 0;
    if (loss_dominance == T(0)) return 1;
    // eps/L vs eps*bracket  <=>  1 vs L*bracket (eps > 0, L > 0)
    const T lhs = T(1) - loss_dominance * flip_bracket<T>(values, induced_lottery(x_first, P), eps, x, y);
    if (detail::tied(lhs, T(0), tol)) return 0;
    return lhs > T(0) ? 1 : -1;
}

// ---- top-rank monotonicity ----------------------------------------------------------------

struct TrmClassification {
    Rol rol;
    Rol truthful_order;
    bool is_trm = false;
    /// Two schools in ROL order whose relative order breaks the property.
    std::optional<std::pair<SchoolId, SchoolId>> witness;
};

/// Schools preferred over the top-ranked one must appear in reversed preference
/// order; all others in preserved preference order.
TrmClassification is_top_rank_monotone(const Rol& rol, const Rol& truthful_order);

/// Equivalent test: every prefix of the ROL is a contiguous block of the
/// truthful order.
bool is_trm_interval(const Rol& rol, const Rol& truthful_order);

/// TRM after choosing the most favourable order for the schools ranked behind
/// the outside option (they do not affect the lottery).
bool is_trm_up_to_truncation(const Rol& rol, const Rol& truthful_order, SchoolId outside);

// ---- bounds and truncation ------------------------------------------------------------------

enum class BoundVerdict { TruthStrict, MisreportStrict, Indeterminate };

const char* to_string(BoundVerdict v);

/// Bounds on the top school's attainability probability. Caller attests that the
/// top school is not exclusive. Throws std::invalid_argument when Lambda < 1.
BoundVerdict truthful_bound_check(double p1, double loss_dominance);

/// False iff some school preferred to the outside option is dropped while a
/// school preferred to it is listed.
bool drop_consistency_check(const Rol& rol, const Rol& truthful_order, SchoolId outside);

}  // namespace ebla
