#pragma once

#include "ebla/attainability.hpp"
#include "ebla/mechanisms.hpp"
#include "ebla/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ebla {

/// A finite Bayesian game over ROLs: each student has a finite type space, the
/// joint law over type profiles is an explicit table, and every student chooses
/// among the same canonical ROLs. Ties in priorities are broken uniformly at random.
struct FiniteDaGame {
    Instance instance;
    std::vector<std::vector<StudentType>> type_spaces;  // per student
    std::vector<std::vector<int>> joint_types;          // joint_types[j][i]: type index of student i
    std::vector<double> joint_probs;
    std::vector<Rol> strategies;
    Mechanism mechanism = da_student_proposing;

    int num_students() const { return static_cast<int>(type_spaces.size()); }
    int num_types(StudentId i) const { return static_cast<int>(type_spaces[static_cast<std::size_t>(i)].size()); }
    int num_strategies() const { return static_cast<int>(strategies.size()); }
    /// Empty when consistent.
    std::vector<std::string> violations() const;
};

/// Independent marginals: student i draws type t with probability marginals[i][t].
FiniteDaGame make_independent_game(const Instance& instance, std::vector<std::vector<StudentType>> type_spaces,
                                   const std::vector<std::vector<double>>& marginals,
                                   const Mechanism& mechanism = da_student_proposing);

/// Arbitrary correlation through an explicit joint table; identical types of a
/// student across profiles share one type index.
FiniteDaGame make_joint_game(const Instance& instance, const std::vector<JointTypeProfile>& support,
                             const Mechanism& mechanism = da_student_proposing);

/// sigma[i][t][r]: probability that student i of type t reports strategies[r].
struct MixedStrategyProfile {
    std::vector<std::vector<std::vector<double>>> probs;

    static MixedStrategyProfile uniform(const FiniteDaGame& game);
    static MixedStrategyProfile pure(const FiniteDaGame& game, const std::vector<std::vector<int>>& choice);
    std::vector<std::string> violations(double tol = 1e-12) const;
};

/// Attainability of every (student, type) pair is linear in the others' mixed
/// strategies. This table caches, for each joint profile, student and pure
/// report profile of the others, the focal student's attainability states.
class GameEvaluator {
public:
    /// Throws std::length_error when the cache would exceed `cap` entries.
    explicit GameEvaluator(const FiniteDaGame& game, unsigned threads = 1, std::uint64_t cap = 20'000'000);

    const FiniteDaGame& game() const { return game_; }
    /// Conditional attainability of student i with type t given the profile.
    AttainabilityDistribution attainability(const MixedStrategyProfile& sigma, StudentId i, int t) const;
    /// CPE utility of each strategy for student i of type t.
    std::vector<double> utilities(const MixedStrategyProfile& sigma, StudentId i, int t) const;

private:
    struct Entry {
        AttainabilityState state;
        double weight;
    };
    const FiniteDaGame& game_;
    // states_[i][j] holds, for each pure report profile of the others (mixed radix,
    // students in index order skipping i), a slice [begin, end) into entries_.
    std::vector<std::vector<std::vector<std::uint32_t>>> offsets_;
    std::vector<Entry> entries_;
};

/// Elite school problem on a score grid: school 1 is elite (capacity q, value v),
/// school 2 is the district outside option (value 0). Each student draws a grid
/// cell of the score law and a loss-dominance level independently; the cell
/// midpoint is the representative score.
struct EliteProblem;
FiniteDaGame make_discretized_elite_game(const EliteProblem& problem, int grid_size);

/// Representative scores of make_discretized_elite_game's grid, ascending.
std::vector<double> elite_grid_scores(const EliteProblem& problem, int grid_size);

}  // namespace ebla
