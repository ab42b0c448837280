#pragma once

#include "ebla/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

namespace ebla {

/// A static allocation rule: reported ROLs + school priorities + capacities -> allocation.
using Mechanism =
    std::function<Allocation(std::span<const Rol>, const PriorityTable&, std::span<const int> capacities)>;

/// Student-proposing deferred acceptance. Proposals are processed round by round,
/// school by school in id order. Throws std::invalid_argument when a school
/// gives two students the same priority.
Allocation da_student_proposing(std::span<const Rol> rols, const PriorityTable& priorities,
                                std::span<const int> capacities);

/// Top trading cycles with per-school seat counters.
Allocation ttc(std::span<const Rol> rols, const PriorityTable& priorities, std::span<const int> capacities);

/// Immediate acceptance ("Boston"): round k assigns students to their k-th choice
/// permanently. Not strategy-proof; kept as a negative fixture for the checker.
Allocation immediate_acceptance(std::span<const Rol> rols, const PriorityTable& priorities,
                                std::span<const int> capacities);

/// Residual capacity per school when a chooser is asked to pick.
using Chooser = std::function<SchoolId(StudentId, std::span<const int> remaining)>;

/// Students pick in descending score order from schools with seats left.
/// Throws on tied scores or when a chooser picks a full school.
Allocation serial_dictatorship(std::span<const double> scores, std::span<const int> capacities,
                               const Chooser& choose);

/// Chooser that takes the highest-valued school with a free seat.
Chooser truthful_chooser(std::vector<std::vector<double>> values);

/// All (student, school) pairs with justified envy. A seat left empty counts as
/// a vacancy the school prefers any student to.
std::set<std::pair<StudentId, SchoolId>> justified_envy_pairs(const Allocation& alloc,
                                                              std::span<const StudentType> types,
                                                              std::span<const int> capacities);
std::set<std::pair<StudentId, SchoolId>> justified_envy_pairs(const Allocation& alloc,
                                                              const std::vector<std::vector<double>>& values,
                                                              const PriorityTable& priorities,
                                                              std::span<const int> capacities);

struct StrategyProofnessViolation {
    StudentId student = 0;
    std::vector<Rol> reports;  // profile with the student's true ROL
    Rol deviation;
    SchoolId truthful_outcome = kUnmatched;
    SchoolId deviation_outcome = kUnmatched;
    std::size_t cardinal_profile = 0;  // index into the values grid
};

struct StrategyProofnessResult {
    std::optional<StrategyProofnessViolation> violation;
    std::uint64_t evaluations = 0;  // distinct mechanism runs
    bool passed() const { return !violation.has_value(); }
};

/// Exhaustive check for one market (priorities + capacities). For every cardinal
/// profile in the grid, every student, every report profile of the others and
/// every deviation, the truthful outcome must be weakly better. Throws
/// std::length_error when the enumeration would exceed `cap` outcome lookups.
StrategyProofnessResult strategy_proofness_check(const Mechanism& mechanism, const PriorityTable& priorities,
                                                 std::span<const int> capacities,
                                                 const std::vector<std::vector<std::vector<double>>>& values_grid,
                                                 std::uint64_t cap = 50'000'000);

/// Brute force over all feasible allocations (schools or unmatched).
/// Throws std::length_error when (m+1)^n exceeds `cap`.
std::vector<Allocation> stable_allocations(const std::vector<std::vector<double>>& values,
                                           const PriorityTable& priorities, std::span<const int> capacities,
                                           std::uint64_t cap = 2'000'000);

bool is_student_optimal_stable(const Allocation& alloc, const std::vector<std::vector<double>>& values,
                               const PriorityTable& priorities, std::span<const int> capacities,
                               std::uint64_t cap = 2'000'000);
bool is_student_optimal_stable(const Allocation& alloc, std::span<const StudentType> types,
                               std::span<const int> capacities, std::uint64_t cap = 2'000'000);

/// Values that rank schools exactly as a ROL does (top gets m, last gets 1).
std::vector<double> values_from_rol(const Rol& rol);

}  // namespace ebla
