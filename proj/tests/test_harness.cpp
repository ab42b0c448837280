#include "ebla/harness.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ebla;
using namespace ebla::harness;

namespace {

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

const char* kScenario = R"(schools: 3
capacities: [1, 1, 3]
outside_option: 3
students: 3
type_distribution:
  independent:
    - score_law: uniform
      support:
        - {values: [100, 30, 0], loss_dominance: 1.5, probability: 0.95}
        - {values: [30, 100, 0], loss_dominance: 1.5, probability: 0.05}
seed: 3
replications: 4000
focal:
  values: [100, 30, 0]
  loss_dominance: 1.5
  scores: [0.25]
)";

}  // namespace

TEST_CASE("csv parsing") {
    const auto t = parse_csv("a,b,c\n1,\"x,y\",3\n\n4,\"he said \"\"hi\"\"\",6\n");
    CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "x,y");
    CHECK(t.rows[1][1] == "he said \"hi\"");
    CHECK(t.lines == std::vector<int>{2, 4});
    CHECK(t.column("c") == 2);
    CHECK(t.column("z") == -1);
    CHECK(parse_csv(to_csv_string(t)) == t);
    const auto msg = error_of([] { parse_csv("a,b\n1,2\n3\n", "f.csv"); });
    CHECK(msg.find("f.csv:3") != std::string::npos);
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), InputError);
}

TEST_CASE("worked example tables") {
    const auto r = run_example(ExampleConfig{});
    const auto t = attainability_csv(r.attainability);
    REQUIRE(t.rows.size() == 4);
    std::map<std::string, std::string> by_state;
    for (const auto& row : t.rows) by_state[row[0]] = row[1];
    CHECK(by_state["111"] == "1/16");
    CHECK(by_state["011"] == "57/160");
    CHECK(by_state["101"] == "3/160");
    CHECK(by_state["001"] == "9/16");
    CHECK(lotteries_csv(r.lotteries).rows.size() == 6);
    CHECK(r.lambda_sweep.size() == 101);
    CHECK(r.omega_sweep.size() == 101);
    CHECK(r.lambda_sweep.back().x == Rational(5));
    const auto s = sweep_csv(r.lambda_sweep, "lambda");
    CHECK(s.header.front() == "lambda");
    CHECK(s.rows.size() == 101 * 6);
    ExampleConfig bad;
    bad.values = {30, 100, 0};
    CHECK_THROWS(run_example(bad));
}

TEST_CASE("classification of the bundled counts") {
    const auto result = classify_rols(read_csv(EBLA_DATA_DIR "/rol_counts_by_priority.csv"));
    CHECK(result.num_schools == 4);
    std::set<std::string> trm;
    for (const auto& row : result.rows)
        if (row.is_trm) trm.insert(row.rol.to_string());
    CHECK(trm == std::set<std::string>{"1234", "2134", "2314", "2341", "3214", "3241", "3421", "4321"});
    CHECK(result.per_score.size() == 10);
    CHECK(std::round(result.overall.share() * 1000) == 875);
    const auto round_trip = classify_rols(classified_csv(result));
    CHECK(classified_csv(round_trip) == classified_csv(result));
    CHECK(share_csv(result).rows.size() == 11);
}

TEST_CASE("classification input errors name the line") {
    CHECK(error_of([] { classify_rols(parse_csv("priority_score,rol,count\n1,1234,5\n1,1224,3\n", "x.csv")); })
              .find("line 3") != std::string::npos);
    CHECK(error_of([] { classify_rols(parse_csv("priority_score,rol,count\n1,1234,-5\n", "x.csv")); })
              .find("line 2") != std::string::npos);
    CHECK_THROWS(classify_rols(parse_csv("priority_score,count\n1,5\n")));
    CHECK_THROWS(classify_rols(parse_csv("priority_score,rol,count\n1,1234,5\n1,123,3\n")));
}

TEST_CASE("scenario parsing and errors") {
    const auto sc = parse_scenario(kScenario);
    CHECK(sc.instance.num_schools == 3);
    CHECK(sc.instance.outside_option == 3);
    CHECK(sc.replications == 4000);
    REQUIRE(sc.focal.has_value());
    CHECK(sc.types.samplers().size() == 3);

    std::string typo = kScenario;
    typo.replace(typo.find("capacities"), 10, "capacitees");
    const auto msg = error_of([&] { parse_scenario(typo, "s.yaml"); });
    CHECK(msg.find("s.yaml:2:") != std::string::npos);

    std::string bad_cap = kScenario;
    bad_cap.replace(bad_cap.find("[1, 1, 3]"), 9, "[1, 1, 2]");
    CHECK(error_of([&] { parse_scenario(bad_cap, "s.yaml"); }).find("outside option capacity") != std::string::npos);

    std::string bad_mech = kScenario;
    bad_mech += "mechanism: boston\n";
    CHECK_THROWS(parse_scenario(bad_mech));
    CHECK_THROWS(parse_scenario("schools: [\n"));
}

TEST_CASE("simulation is deterministic and thread independent") {
    const auto sc = parse_scenario(kScenario);
    const auto a = simulate(sc, 1);
    const auto b = simulate(sc, 4);
    CHECK(a == b);
    auto other = sc;
    other.seed = 4;
    CHECK(simulate(other, 1) != a);
    // Focal estimate near the exact example values at omega = 1/4.
    const auto& states = a["focal"][0]["attainability"];
    for (const auto& s : states) {
        const auto bits = s["state"].get<std::string>();
        const double expect = bits == "001" ? 9.0 / 16 : bits == "011" ? 57.0 / 160 : bits == "101" ? 3.0 / 160 : 1.0 / 16;
        CHECK(std::abs(s["probability"].get<double>() - expect) <= 5 * s["standard_error"].get<double>() + 1e-3);
    }
    CHECK(a["statistics"]["stability_rate"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("zero replications") {
    auto sc = parse_scenario(kScenario);
    sc.replications = 0;
    const auto j = simulate(sc, 1);
    CHECK(j["replications"].get<int>() == 0);
    CHECK(j["statistics"].empty());
}

TEST_CASE("elite simulation") {
    EliteProblem p;
    p.lambda_levels = {0.0, 2.0};
    p.level_probs = {0.5, 0.5};
    const auto c = elite_cutoffs(p);
    const auto a = simulate_elite(p, c, 20000, 5, 1);
    const auto b = simulate_elite(p, c, 20000, 5, 3);
    CHECK(a.envy_rate == b.envy_rate);
    CHECK(a.apply_rate == b.apply_rate);
    // Envy needs a loss-averse abstainer outscoring an applicant: probability 1/8.
    CHECK(a.envy_rate > 0.0);
    CHECK(std::abs(a.envy_rate - 0.125) <= 5 * a.envy_standard_error);
}

TEST_CASE("suite registry") {
    CHECK(suite_names().size() == 6);
    CHECK_THROWS_AS(run_suite("nope"), std::invalid_argument);
    const auto r = run_suite("trm");
    CHECK(r.passed);
    CHECK(r.checks > 0);
}

TEST_CASE("output emission") {
    const auto dir = std::filesystem::temp_directory_path() / "ebla_harness_test";
    std::filesystem::remove_all(dir);
    CsvTable t{{"x", "y"}, {{"1", "a"}, {"2", "b"}}, {}};
    const auto csv = emit_table({dir, Format::Csv}, "t", t);
    CHECK(read_csv(csv) == t);
    const auto json = emit_table({dir, Format::Json}, "t", t);
    std::ifstream in(json);
    const auto j = nlohmann::json::parse(in);
    CHECK(j.size() == 2);
    CHECK(j[1]["y"] == "b");
    std::filesystem::remove_all(dir);
}
