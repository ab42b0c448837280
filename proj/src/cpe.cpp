#include "ebla/cpe.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <stdexcept>

namespace ebla {

namespace {

template <class T>
Rol truthful_order_impl(std::span<const T> values) {
    std::vector<SchoolId> order(values.size());
    for (std::size_t s = 0; s < values.size(); ++s) order[s] = static_cast<SchoolId>(s + 1);
    std::stable_sort(order.begin(), order.end(), [&](SchoolId a, SchoolId b) {
        return values[static_cast<std::size_t>(a - 1)] > values[static_cast<std::size_t>(b - 1)];
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (values[static_cast<std::size_t>(order[k] - 1)] == values[static_cast<std::size_t>(order[k - 1] - 1)])
            throw std::invalid_argument("indifference unsupported");
    return Rol(std::move(order));
}

/// rank[s - 1] = position of school s in the truthful order (0 = most preferred).
std::vector<int> ranks_of(const Rol& truthful_order) {
    std::vector<int> rank(static_cast<std::size_t>(truthful_order.size()));
    for (int k = 0; k < truthful_order.size(); ++k) rank[static_cast<std::size_t>(truthful_order[k] - 1)] = k;
    return rank;
}

}  // namespace

Rol truthful_order(std::span<const double> values) { return truthful_order_impl(values); }
Rol truthful_order(std::span<const Rational> values) { return truthful_order_impl(values); }

std::vector<Rol> trm_enumerate(int m) {
    if (m < 1) throw std::invalid_argument("trm_enumerate: m >= 1 required");
    std::vector<Rol> out;
    std::vector<SchoolId> seq;
    // Grow a contiguous block one school at a time, to the left or to the right.
    std::function<void(int, int)> grow = [&](int lo, int hi) {
        if (lo == 1 && hi == m) {
            out.emplace_back(seq);
            return;
        }
        if (lo > 1) {
            seq.push_back(lo - 1);
            grow(lo - 1, hi);
            seq.pop_back();
        }
        if (hi < m) {
            seq.push_back(hi + 1);
            grow(lo, hi + 1);
            seq.pop_back();
        }
    };
    for (int top = 1; top <= m; ++top) {
        seq = {top};
        grow(top, top);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Rol> trm_candidates(const Rol& order, std::optional<SchoolId> outside) {
    std::set<Rol> unique;
    for (const auto& base : trm_enumerate(order.size())) {
        std::vector<SchoolId> r;
        for (SchoolId k : base) r.push_back(order[k - 1]);
        Rol rol(std::move(r));
        unique.insert(outside ? canonicalize_rol(rol, *outside) : rol);
    }
    return {unique.begin(), unique.end()};
}

TrmClassification is_top_rank_monotone(const Rol& rol, const Rol& order) {
    if (rol.size() != order.size()) throw std::invalid_argument("ROL and truthful order differ in length");
    const auto rank = ranks_of(order);
    TrmClassification out{rol, order, true, std::nullopt};
    const int top = rank[static_cast<std::size_t>(rol.top() - 1)];
    std::optional<SchoolId> last_preferred, last_other;
    for (int k = 1; k < rol.size(); ++k) {
        const SchoolId s = rol[k];
        const int r = rank[static_cast<std::size_t>(s - 1)];
        auto& last = r < top ? last_preferred : last_other;
        if (last) {
            const int prev = rank[static_cast<std::size_t>(*last - 1)];
            // Preferred schools must come in reversed order, the rest in preserved order.
            const bool ok = r < top ? r < prev : r > prev;
            if (!ok) {
                out.is_trm = false;
                out.witness = std::make_pair(*last, s);
                return out;
            }
        }
        last = s;
    }
    return out;
}

bool is_trm_interval(const Rol& rol, const Rol& order) {
    if (rol.size() != order.size()) throw std::invalid_argument("ROL and truthful order differ in length");
    const auto rank = ranks_of(order);
    int lo = rank[static_cast<std::size_t>(rol.top() - 1)], hi = lo;
    for (int k = 1; k < rol.size(); ++k) {
        const int r = rank[static_cast<std::size_t>(rol[k] - 1)];
        if (r == lo - 1) lo = r;
        else if (r == hi + 1) hi = r;
        else return false;
    }
    return true;
}

bool is_trm_up_to_truncation(const Rol& rol, const Rol& order, SchoolId outside) {
    const auto rank = ranks_of(order);
    int lo = rank[static_cast<std::size_t>(rol.top() - 1)], hi = lo;
    // Whatever follows the outside option can be reordered to extend the block.
    for (int k = 1; k < rol.size() && rol[k - 1] != outside; ++k) {
        const int r = rank[static_cast<std::size_t>(rol[k] - 1)];
        if (r == lo - 1) lo = r;
        else if (r == hi + 1) hi = r;
        else return false;
    }
    return true;
}

const char* to_string(BoundVerdict v) {
    switch (v) {
        case BoundVerdict::TruthStrict: return "TruthStrict";
        case BoundVerdict::MisreportStrict: return "MisreportStrict";
        case BoundVerdict::Indeterminate: return "Indeterminate";
    }
    return "?";
}

BoundVerdict truthful_bound_check(double p1, double loss_dominance) {
    if (loss_dominance < 1.0) throw std::invalid_argument("truthful_bound_check requires loss dominance >= 1");
    const double upper = 1.0 - 1.0 / loss_dominance;
    if (p1 > upper) return BoundVerdict::TruthStrict;
    if (p1 < upper / 2.0) return BoundVerdict::MisreportStrict;
    return BoundVerdict::Indeterminate;
}

bool drop_consistency_check(const Rol& rol, const Rol& order, SchoolId outside) {
    const auto rank = ranks_of(order);
    const int cut = rol.position_of(outside);
    const int outside_rank = rank[static_cast<std::size_t>(outside - 1)];
    int best_listed = rol.size();
    for (int k = 0; k < cut; ++k) best_listed = std::min(best_listed, rank[static_cast<std::size_t>(rol[k] - 1)]);
    for (int k = cut + 1; k < rol.size(); ++k) {
        const int r = rank[static_cast<std::size_t>(rol[k] - 1)];
        if (r < outside_rank && best_listed < r) return false;
    }
    return true;
}

}  // namespace ebla
