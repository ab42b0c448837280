#include "ebla/mechanisms.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ebla {

namespace {

void check_market(std::span<const Rol> rols, const PriorityTable& priorities, std::span<const int> capacities) {
    const auto m = capacities.size();
    if (priorities.size() != m) throw std::invalid_argument("priority table must have one row per school");
    for (const auto& rol : rols)
        if (static_cast<std::size_t>(rol.size()) != m) throw std::invalid_argument("ROL length differs from school count");
    for (const auto& row : priorities) {
        if (row.size() != rols.size()) throw std::invalid_argument("priority row must cover every student");
        std::vector<double> sorted(row);
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("duplicate priority values at one school");
    }
}

double value_of(const std::vector<double>& v, SchoolId s) {
    return s == kUnmatched ? -std::numeric_limits<double>::infinity() : v[static_cast<std::size_t>(s - 1)];
}

}  // namespace

Allocation da_student_proposing(std::span<const Rol> rols, const PriorityTable& priorities,
                                std::span<const int> capacities) {
    check_market(rols, priorities, capacities);
    const std::size_t n = rols.size();
    const std::size_t m = capacities.size();
    std::vector<std::size_t> next(n, 0);
    std::vector<SchoolId> match(n, kUnmatched);
    std::vector<std::vector<StudentId>> held(m), proposals(m);

    for (;;) {
        bool any = false;
        for (auto& p : proposals) p.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (match[i] != kUnmatched || next[i] >= m) continue;
            const SchoolId s = rols[i][static_cast<int>(next[i]++)];
            proposals[static_cast<std::size_t>(s - 1)].push_back(static_cast<StudentId>(i));
            any = true;
        }
        if (!any) break;
        for (std::size_t s = 0; s < m; ++s) {
            if (proposals[s].empty()) continue;
            auto& pool = held[s];
            pool.insert(pool.end(), proposals[s].begin(), proposals[s].end());
            const auto& w = priorities[s];
            std::sort(pool.begin(), pool.end(), [&](StudentId a, StudentId b) {
                return w[static_cast<std::size_t>(a)] > w[static_cast<std::size_t>(b)];
            });
            const auto cap = static_cast<std::size_t>(capacities[s]);
            for (std::size_t k = 0; k < pool.size(); ++k)
                match[static_cast<std::size_t>(pool[k])] = k < cap ? static_cast<SchoolId>(s + 1) : kUnmatched;
            if (pool.size() > cap) pool.resize(cap);
        }
    }
    return Allocation{std::move(match)};
}

Allocation ttc(std::span<const Rol> rols, const PriorityTable& priorities, std::span<const int> capacities) {
    check_market(rols, priorities, capacities);
    const std::size_t n = rols.size();
    const std::size_t m = capacities.size();
    std::vector<int> seats(capacities.begin(), capacities.end());
    std::vector<SchoolId> match(n, kUnmatched);
    std::vector<bool> active(n, true);

    for (;;) {
        // Students point at their best school with a seat; schools at their best active student.
        std::vector<SchoolId> student_points(n, kUnmatched);
        bool any_student = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (SchoolId s : rols[i])
                if (seats[static_cast<std::size_t>(s - 1)] > 0) {
                    student_points[i] = s;
                    break;
                }
            if (student_points[i] == kUnmatched) active[i] = false;
            else any_student = true;
        }
        if (!any_student) break;
        std::vector<StudentId> school_points(m, -1);
        for (std::size_t s = 0; s < m; ++s) {
            if (seats[s] <= 0) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i)
                if (active[i] && priorities[s][i] > best) {
                    best = priorities[s][i];
                    school_points[s] = static_cast<StudentId>(i);
                }
        }
        // Follow student -> school -> student from any active student until a repeat.
        std::size_t start = 0;
        while (!active[start]) ++start;
        std::vector<int> visit(n, -1);
        std::vector<StudentId> path;
        StudentId cur = static_cast<StudentId>(start);
        while (visit[static_cast<std::size_t>(cur)] < 0) {
            visit[static_cast<std::size_t>(cur)] = static_cast<int>(path.size());
            path.push_back(cur);
            const SchoolId s = student_points[static_cast<std::size_t>(cur)];
            cur = school_points[static_cast<std::size_t>(s - 1)];
        }
        for (std::size_t k = static_cast<std::size_t>(visit[static_cast<std::size_t>(cur)]); k < path.size(); ++k) {
            const auto i = static_cast<std::size_t>(path[k]);
            const SchoolId s = student_points[i];
            match[i] = s;
            --seats[static_cast<std::size_t>(s - 1)];
            active[i] = false;
        }
    }
    return Allocation{std::move(match)};
}

Allocation immediate_acceptance(std::span<const Rol> rols, const PriorityTable& priorities,
                                std::span<const int> capacities) {
    check_market(rols, priorities, capacities);
    const std::size_t n = rols.size();
    const std::size_t m = capacities.size();
    std::vector<int> seats(capacities.begin(), capacities.end());
    std::vector<SchoolId> match(n, kUnmatched);
    for (std::size_t round = 0; round < m; ++round) {
        std::vector<std::vector<StudentId>> applicants(m);
        for (std::size_t i = 0; i < n; ++i)
            if (match[i] == kUnmatched) {
                const SchoolId s = rols[i][static_cast<int>(round)];
                applicants[static_cast<std::size_t>(s - 1)].push_back(static_cast<StudentId>(i));
            }
        for (std::size_t s = 0; s < m; ++s) {
            auto& pool = applicants[s];
            std::sort(pool.begin(), pool.end(), [&](StudentId a, StudentId b) {
                return priorities[s][static_cast<std::size_t>(a)] > priorities[s][static_cast<std::size_t>(b)];
            });
            for (StudentId i : pool) {
                if (seats[s] == 0) break;
                match[static_cast<std::size_t>(i)] = static_cast<SchoolId>(s + 1);
                --seats[s];
            }
        }
    }
    return Allocation{std::move(match)};
}

Allocation serial_dictatorship(std::span<const double> scores, std::span<const int> capacities,
                               const Chooser& choose) {
    std::vector<StudentId> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](StudentId a, StudentId b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (scores[static_cast<std::size_t>(order[k])] == scores[static_cast<std::size_t>(order[k - 1])])
            throw std::invalid_argument("tie in serial dictatorship scores");
    std::vector<int> remaining(capacities.begin(), capacities.end());
    std::vector<SchoolId> match(scores.size(), kUnmatched);
    for (StudentId i : order) {
        if (std::all_of(remaining.begin(), remaining.end(), [](int c) { return c <= 0; })) break;
        const SchoolId s = choose(i, remaining);
        if (s == kUnmatched) continue;
        if (s < 1 || s > static_cast<int>(remaining.size()) || remaining[static_cast<std::size_t>(s - 1)] <= 0)
            throw std::logic_error("chooser picked a school without free seats");
        --remaining[static_cast<std::size_t>(s - 1)];
        match[static_cast<std::size_t>(i)] = s;
    }
    return Allocation{std::move(match)};
}

Chooser truthful_chooser(std::vector<std::vector<double>> values) {
    return [values = std::move(values)](StudentId i, std::span<const int> remaining) {
        const auto& v = values.at(static_cast<std::size_t>(i));
        SchoolId best = kUnmatched;
        for (std::size_t s = 0; s < remaining.size(); ++s)
            if (remaining[s] > 0 && (best == kUnmatched || v[s] > v[static_cast<std::size_t>(best - 1)]))
                best = static_cast<SchoolId>(s + 1);
        return best;
    };
}

std::set<std::pair<StudentId, SchoolId>> justified_envy_pairs(const Allocation& alloc,
                                                              const std::vector<std::vector<double>>& values,
                                                              const PriorityTable& priorities,
                                                              std::span<const int> capacities) {
    std::set<std::pair<StudentId, SchoolId>> out;
    const std::size_t n = alloc.assignment.size();
    const std::size_t m = capacities.size();
    std::vector<int> filled(m, 0);
    for (SchoolId s : alloc.assignment)
        if (s != kUnmatched) ++filled[static_cast<std::size_t>(s - 1)];
    for (std::size_t i = 0; i < n; ++i) {
        const double current = value_of(values[i], alloc.assignment[i]);
        for (std::size_t s = 0; s < m; ++s) {
            const auto school = static_cast<SchoolId>(s + 1);
            if (school == alloc.assignment[i] || !(values[i][s] > current)) continue;
            bool justified = filled[s] < capacities[s];
            for (std::size_t j = 0; j < n && !justified; ++j)
                justified = alloc.assignment[j] == school && priorities[s][i] > priorities[s][j];
            if (justified) out.emplace(static_cast<StudentId>(i), school);
        }
    }
    return out;
}

std::set<std::pair<StudentId, SchoolId>> justified_envy_pairs(const Allocation& alloc,
                                                              std::span<const StudentType> types,
                                                              std::span<const int> capacities) {
    std::vector<std::vector<double>> values;
    for (const auto& t : types) values.push_back(t.values());
    return justified_envy_pairs(alloc, values, priorities_from_types(types), capacities);
}

StrategyProofnessResult strategy_proofness_check(const Mechanism& mechanism, const PriorityTable& priorities,
                                                 std::span<const int> capacities,
                                                 const std::vector<std::vector<std::vector<double>>>& values_grid,
                                                 std::uint64_t cap) {
    const int m = static_cast<int>(capacities.size());
    const int n = priorities.empty() ? 0 : static_cast<int>(priorities.front().size());
    const auto perms = all_rols(m);
    const std::uint64_t per_profile_others = [&] {
        std::uint64_t k = 1;
        for (int j = 1; j < n; ++j) k *= perms.size();
        return k;
    }();
    const std::uint64_t total = values_grid.size() * static_cast<std::uint64_t>(n) * per_profile_others * (perms.size() + 1);
    if (total > cap) throw std::length_error("strategy-proofness enumeration exceeds cap");

    // Outcomes depend only on the report profile, so each profile is run once.
    std::uint64_t profiles = per_profile_others * perms.size();
    std::vector<std::optional<Allocation>> memo(profiles <= 4'000'000 ? profiles : 0);
    StrategyProofnessResult result;
    auto outcome = [&](const std::vector<std::size_t>& idx) {
        std::uint64_t code = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) code = code * perms.size() + idx[j];
        if (!memo.empty() && memo[code]) return (*memo[code]);
        std::vector<Rol> reports;
        for (std::size_t k : idx) reports.push_back(perms[k]);
        ++result.evaluations;
        Allocation a = mechanism(reports, priorities, capacities);
        if (!memo.empty()) memo[code] = a;
        return a;
    };
    auto index_of = [&](const Rol& r) {
        return static_cast<std::size_t>(std::lower_bound(perms.begin(), perms.end(), r) - perms.begin());
    };

    for (std::size_t g = 0; g < values_grid.size(); ++g) {
        const auto& values = values_grid[g];
        for (int i = 0; i < n; ++i) {
            const auto& vi = values[static_cast<std::size_t>(i)];
            const Rol truth = Rol::truthful(vi);
            // Odometer over the other students' reports.
            std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
            for (;;) {
                idx[static_cast<std::size_t>(i)] = index_of(truth);
                const SchoolId honest = outcome(idx)[i];
                for (std::size_t d = 0; d < perms.size(); ++d) {
                    if (perms[d] == truth) continue;
                    auto deviated = idx;
                    deviated[static_cast<std::size_t>(i)] = d;
                    const SchoolId got = outcome(deviated)[i];
                    if (value_of(vi, got) > value_of(vi, honest)) {
                        std::vector<Rol> reports;
                        for (std::size_t k : idx) reports.push_back(perms[k]);
                        result.violation = StrategyProofnessViolation{i, reports, perms[d], honest, got, g};
                        return result;
                    }
                }
                int j = 0;
                for (; j < n; ++j) {
                    if (j == i) continue;
                    if (++idx[static_cast<std::size_t>(j)] < perms.size()) break;
                    idx[static_cast<std::size_t>(j)] = 0;
                }
                if (j == n) break;
            }
        }
    }
    return result;
}

std::vector<Allocation> stable_allocations(const std::vector<std::vector<double>>& values,
                                           const PriorityTable& priorities, std::span<const int> capacities,
                                           std::uint64_t cap) {
    const std::size_t n = values.size();
    const std::size_t m = capacities.size();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        total *= (m + 1);
        if (total > cap) throw std::length_error("stable-set enumeration exceeds cap");
    }
    std::vector<Allocation> out;
    std::vector<SchoolId> a(n, kUnmatched);
    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t c = code;
        std::vector<int> load(m, 0);
        bool feasible = true;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<SchoolId>(c % (m + 1));
            c /= (m + 1);
            if (a[i] != kUnmatched && ++load[static_cast<std::size_t>(a[i] - 1)] > capacities[static_cast<std::size_t>(a[i] - 1)])
                feasible = false;
        }
        if (!feasible) continue;
        Allocation alloc{a};
        // Staying unmatched when a school is acceptable is blocked by the vacancy rule.
        if (justified_envy_pairs(alloc, values, priorities, capacities).empty()) out.push_back(alloc);
    }
    return out;
}

bool is_student_optimal_stable(const Allocation& alloc, const std::vector<std::vector<double>>& values,
                               const PriorityTable& priorities, std::span<const int> capacities,
                               std::uint64_t cap) {
    if (!justified_envy_pairs(alloc, values, priorities, capacities).empty()) return false;
    for (const auto& other : stable_allocations(values, priorities, capacities, cap))
        for (std::size_t i = 0; i < values.size(); ++i)
            if (value_of(values[i], other.assignment[i]) > value_of(values[i], alloc.assignment[i])) return false;
    return true;
}

bool is_student_optimal_stable(const Allocation& alloc, std::span<const StudentType> types,
                               std::span<const int> capacities, std::uint64_t cap) {
    std::vector<std::vector<double>> values;
    for (const auto& t : types) values.push_back(t.values());
    return is_student_optimal_stable(alloc, values, priorities_from_types(types), capacities, cap);
}

std::vector<double> values_from_rol(const Rol& rol) {
    std::vector<double> v(static_cast<std::size_t>(rol.size()));
    for (int k = 0; k < rol.size(); ++k) v[static_cast<std::size_t>(rol[k] - 1)] = rol.size() - k;
    return v;
}

}  // namespace ebla
