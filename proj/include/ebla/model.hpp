#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ebla {

/// Schools are identified by 1..m; students by 0-based index.
using SchoolId = int;
using StudentId = int;

inline constexpr SchoolId kUnmatched = 0;

struct Instance {
    int num_schools = 0;
    std::vector<int> capacities;  // capacities[s - 1]
    std::optional<SchoolId> outside_option;
    int num_students = 0;

    int capacity(SchoolId s) const { return capacities.at(static_cast<std::size_t>(s - 1)); }
};

/// Private type of a student: cardinal values, priority scores at each school,
/// and the gain-loss parameters. Loss dominance is eta * (lambda - 1).
class StudentType {
public:
    StudentType() = default;
    StudentType(std::vector<double> values, std::vector<double> priorities, double eta, double lambda);

    /// eta = 1, lambda = 1 + loss_dominance.
    static StudentType with_loss_dominance(std::vector<double> values, std::vector<double> priorities,
                                           double loss_dominance);
    /// Common priorities: every school sees the same score.
    static StudentType with_score(std::vector<double> values, double score, double loss_dominance);

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& priorities() const { return priorities_; }
    double value(SchoolId s) const { return values_.at(static_cast<std::size_t>(s - 1)); }
    double priority(SchoolId s) const { return priorities_.at(static_cast<std::size_t>(s - 1)); }
    double eta() const { return eta_; }
    double lambda() const { return lambda_; }
    double loss_dominance() const { return loss_dominance_; }
    int num_schools() const { return static_cast<int>(values_.size()); }

private:
    std::vector<double> values_;
    std::vector<double> priorities_;
    double eta_ = 0.0;
    double lambda_ = 1.0;
    double loss_dominance_ = 0.0;
};

/// A rank-ordered list: a permutation of 1..m, position 0 is the top report.
class Rol {
public:
    Rol() = default;
    explicit Rol(std::vector<SchoolId> ranking);
    Rol(std::initializer_list<SchoolId> ranking) : Rol(std::vector<SchoolId>(ranking)) {}

    /// Parses a digit string such as "2314" (m <= 9).
    static Rol from_digits(std::string_view digits);
    /// Schools in descending order of value. Ties are rejected.
    static Rol truthful(std::span<const double> values);
    static Rol identity(int m);

    int size() const { return static_cast<int>(ranking_.size()); }
    SchoolId operator[](int pos) const { return ranking_[static_cast<std::size_t>(pos)]; }
    SchoolId top() const { return ranking_.front(); }
    /// 0-based position of school s.
    int position_of(SchoolId s) const;
    const std::vector<SchoolId>& ranking() const { return ranking_; }
    auto begin() const { return ranking_.begin(); }
    auto end() const { return ranking_.end(); }

    Rol with_swap(int pos) const;  // swaps positions pos and pos+1

    /// "1234" when m <= 9, otherwise "1-2-...-m".
    std::string to_string() const;

    friend bool operator==(const Rol&, const Rol&) = default;
    friend auto operator<=>(const Rol&, const Rol&) = default;

private:
    std::vector<SchoolId> ranking_;
};

struct Allocation {
    std::vector<SchoolId> assignment;  // assignment[i], kUnmatched when unassigned

    SchoolId operator[](StudentId i) const { return assignment[static_cast<std::size_t>(i)]; }
    std::vector<StudentId> students_at(SchoolId s) const;
    friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// priorities[s - 1][i]: school s's score for student i, higher is better.
using PriorityTable = std::vector<std::vector<double>>;

PriorityTable priorities_from_types(std::span<const StudentType> types);
PriorityTable common_priorities(std::span<const double> scores, int num_schools);

/// Distribution of the priority score. Uniform on [0,1] or a tabulated,
/// piecewise-linear monotone CDF.
class ScoreLaw {
public:
    static ScoreLaw uniform();
    static ScoreLaw tabulated(std::vector<double> xs, std::vector<double> cdf);

    double cdf(double x) const;
    double quantile(double u) const;
    double lower() const { return xs_.front(); }
    double upper() const { return xs_.back(); }
    bool is_uniform() const { return uniform_; }
    const std::vector<double>& points() const { return xs_; }
    const std::vector<double>& cdf_values() const { return cdf_; }
    /// Empty when the table is a valid CDF.
    std::vector<std::string> violations() const;

private:
    bool uniform_ = true;
    std::vector<double> xs_{0.0, 1.0};
    std::vector<double> cdf_{0.0, 1.0};
};

/// One support point of a per-student type sampler: cardinal values and
/// gain-loss parameters. The score comes from the sampler's score law.
struct TypeSupportPoint {
    std::vector<double> values;
    double eta = 0.0;
    double lambda = 1.0;
    double probability = 1.0;
};

struct IndependentSampler {
    std::vector<TypeSupportPoint> support;
    ScoreLaw score_law = ScoreLaw::uniform();
};

struct JointTypeProfile {
    std::vector<StudentType> types;
    double probability = 0.0;
};

struct TypeDistribution {
    std::variant<std::vector<JointTypeProfile>, std::vector<IndependentSampler>> law;

    bool is_joint() const { return std::holds_alternative<std::vector<JointTypeProfile>>(law); }
    const std::vector<JointTypeProfile>& joint() const { return std::get<std::vector<JointTypeProfile>>(law); }
    const std::vector<IndependentSampler>& samplers() const { return std::get<std::vector<IndependentSampler>>(law); }
};

/// Lists every violated invariant; empty means valid.
std::vector<std::string> validate_instance(const Instance& instance, const TypeDistribution& types);
std::vector<std::string> validate_instance(const Instance& instance);

/// Rewrites everything ranked after the outside option in ascending id order.
/// Throws std::invalid_argument if the outside option is not in the ROL.
Rol canonicalize_rol(const Rol& rol, SchoolId outside);

/// relabel[s - 1] is the preference rank (1 = best) of school s.
/// Throws std::invalid_argument("indifference unsupported") on ties.
std::vector<int> relabel_by_preference(std::span<const double> values);
std::vector<int> invert_permutation(std::span<const int> perm);

/// All m! permutations in lexicographic order.
std::vector<Rol> all_rols(int m);
/// One representative per outcome-equivalence class (all_rols when no outside option).
std::vector<Rol> canonical_rols(int m, std::optional<SchoolId> outside);

}  // namespace ebla
