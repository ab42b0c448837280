#pragma once

#include "ebla/attainability.hpp"
#include "ebla/equilibrium.hpp"
#include "ebla/model.hpp"
#include "ebla/rational.hpp"
#include "ebla/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebla::harness {

// ---- csv ----------------------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines;  // source line of each row when parsed

    /// Index of a column, or -1.
    int column(std::string_view name) const;
    friend bool operator==(const CsvTable& a, const CsvTable& b) { return a.header == b.header && a.rows == b.rows; }
};

/// Error with a "source:line: message" text.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

CsvTable parse_csv(std::string_view text, const std::string& source = "<input>");
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const CsvTable& table);
std::string to_csv_string(const CsvTable& table);

enum class Format { Csv, Json };

struct OutputOptions {
    std::filesystem::path out_dir = ".";
    Format format = Format::Csv;
};

/// Writes `stem`.csv, or `stem`.json as an array of row objects. Returns the path.
std::filesystem::path emit_table(const OutputOptions& out, const std::string& stem, const CsvTable& table);
std::filesystem::path emit_json(const OutputOptions& out, const std::string& stem, const nlohmann::json& j);
nlohmann::json table_to_json(const CsvTable& table);

// ---- worked example ----------------------------------------------------------------------------

struct ExampleConfig {
    Rational omega{1, 4};
    Rational eps{1, 20};
    std::vector<Rational> values{100, 30, 0};
    Rational fixed_lambda{3, 2};
    int lambda_steps = 100;  // grid 0, 0.05, ..., 5
    Rational lambda_max{5};
    int omega_steps = 100;   // grid 0, 0.01, ..., 1
};

/// Attainability of a student ranking 1 > 2 > 3 with score omega when two
/// truthful rivals with uniform scores prefer school 2 first with probability eps.
ExactAttainability example_attainability(const Rational& omega, const Rational& eps);

struct SweepPoint {
    Rational x;
    std::vector<Rational> utilities;  // per ROL in all_rols(3) order
    std::vector<Rol> argmax;          // canonical argmax
};

struct ExampleResult {
    ExactAttainability attainability;
    std::vector<std::pair<Rol, ExactLottery>> lotteries;  // all 3! ROLs
    std::vector<SweepPoint> lambda_sweep;
    std::vector<SweepPoint> omega_sweep;
};

ExampleResult run_example(const ExampleConfig& config);
CsvTable attainability_csv(const ExactAttainability& P);
CsvTable lotteries_csv(const std::vector<std::pair<Rol, ExactLottery>>& lotteries);
CsvTable sweep_csv(const std::vector<SweepPoint>& sweep, const std::string& x_name);

// ---- ROL classification -------------------------------------------------------------------------

struct ClassifiedRow {
    std::string priority_score;
    Rol rol;
    std::uint64_t count = 0;
    bool is_truthful = false;
    bool is_trm = false;
};

struct TrmShare {
    std::string priority_score;  // "all" for the overall row
    std::uint64_t total = 0;
    std::uint64_t trm = 0;
    double share() const { return total == 0 ? 0.0 : static_cast<double>(trm) / static_cast<double>(total); }
};

struct ClassifyResult {
    int num_schools = 0;
    Rol truthful_order;
    std::vector<ClassifiedRow> rows;
    std::vector<TrmShare> per_score;  // in order of first appearance
    TrmShare overall;
};

/// Input columns priority_score, rol, count; any is_truthful / is_trm columns
/// are recomputed. `truthful_order` defaults to ascending ids.
ClassifyResult classify_rols(const CsvTable& input, std::optional<Rol> truthful_order = std::nullopt);
CsvTable classified_csv(const ClassifyResult& result);
CsvTable share_csv(const ClassifyResult& result);

// ---- elite problem ----------------------------------------------------------------------------

struct EliteStats {
    std::uint64_t replications = 0;
    double apply_rate = 0.0;           // share of students listing the elite school
    double vacancy_rate = 0.0;         // share of elite seats left empty
    double displaced_rate = 0.0;       // share of filled elite seats held by a student outscored by an abstainer
    double envy_rate = 0.0;            // share of replications with justified envy
    double envy_standard_error = 0.0;
};

/// Monte Carlo of static DA under the cutoff strategies. Replication r uses
/// substream (seed, r).
EliteStats simulate_elite(const EliteProblem& problem, const EliteCutoffs& cutoffs, std::uint64_t replications,
                          std::uint64_t seed, unsigned threads = 1);

// ---- scenarios ----------------------------------------------------------------------------------

struct FocalSpec {
    std::vector<double> values;
    double loss_dominance = 0.0;
    std::vector<double> scores;  // one attainability estimate per score
};

struct Scenario {
    Instance instance;
    TypeDistribution types;
    std::uint64_t seed = 0;
    std::uint64_t replications = 1000;
    std::string mechanism = "da";  // da | ttc | immediate-acceptance
    std::string strategy = "truthful";  // truthful | cbne (joint supports only)
    std::optional<FocalSpec> focal;
};

/// YAML (or JSON) scenario. Schema errors carry "source:line:column: message".
Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

Mechanism mechanism_by_name(const std::string& name);

/// Deterministic per seed and independent of `threads`.
nlohmann::json simulate(const Scenario& scenario, unsigned threads = 1);

// ---- verification suites ------------------------------------------------------------------------

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::uint64_t checks = 0;
    std::vector<std::string> failures;
    std::vector<std::string> notes;
    double seconds = 0.0;
};

const std::vector<std::string>& suite_names();
/// Throws std::invalid_argument on an unknown suite.
SuiteResult run_suite(const std::string& name, std::uint64_t seed = 20240601, unsigned threads = 1);

// individual suites (also used by the acceptance runner)
SuiteResult suite_optimality(std::uint64_t seed, int instances = 500);
SuiteResult suite_optimality_coverage(std::uint64_t seed, int budget = 200000);
SuiteResult suite_fosd(std::uint64_t seed, int instances = 500);
SuiteResult suite_bounds(std::uint64_t seed, int instances = 500);
SuiteResult suite_trm(int max_count_m = 8, int max_agree_m = 7);
SuiteResult suite_flip(std::uint64_t seed, int instances = 50);
SuiteResult suite_equivalence(std::uint64_t seed, int pairs = 1000);
SuiteResult suite_equilibrium(std::uint64_t seed, unsigned threads = 1);

/// Random attainability with every state of the non-outside schools at
/// positive probability. Values are distinct; with an outside option its value is 0.
struct RandomCpeInstance {
    std::vector<double> values;
    double loss_dominance = 0.0;
    AttainabilityDistribution P;
};
RandomCpeInstance random_full_support_instance(CounterRng& rng, int m, bool with_outside, double lambda_lo,
                                               double lambda_hi);

}  // namespace ebla::harness
