#include "ebla/cpe.hpp"
#include "ebla/equilibrium.hpp"
#include "ebla/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace ebla;
using namespace ebla::harness;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const auto& x : split(s, ',')) out.push_back(to_double(parse_rational(x)));
    return out;
}

struct Globals {
    std::uint64_t seed = 20240601;
    bool seed_given = false;
    std::string out_dir = ".";
    std::string format = "csv";
    unsigned threads = 1;

    OutputOptions output() const { return {out_dir, format == "json" ? Format::Json : Format::Csv}; }
};

int cmd_example(const Globals& g, const std::string& omega, const std::string& eps, const std::string& values,
                const std::string& lambda) {
    ExampleConfig c;
    c.omega = parse_rational(omega);
    c.eps = parse_rational(eps);
    c.values.clear();
    for (const auto& v : split(values, ',')) c.values.push_back(parse_rational(v));
    c.fixed_lambda = parse_rational(lambda);
    const auto result = run_example(c);
    const auto out = g.output();
    std::cout << "attainability (A1 A2 A3):\n";
    for (const auto& [state, q] : result.attainability.mass)
        std::cout << "  " << state_to_bits(state, 3) << "  " << to_fraction_string(q) << "\n";
    std::cout << "lotteries (f_1, f_2, f_3):\n";
    for (const auto& [rol, f] : result.lotteries) {
        std::cout << "  " << rol.to_string();
        for (const auto& p : f.probs) std::cout << "  " << to_fraction_string(p);
        std::cout << "\n";
    }
    for (const auto& p : {emit_table(out, "attainability", attainability_csv(result.attainability)),
                          emit_table(out, "lotteries", lotteries_csv(result.lotteries)),
                          emit_table(out, "sweep_lambda", sweep_csv(result.lambda_sweep, "lambda")),
                          emit_table(out, "sweep_omega", sweep_csv(result.omega_sweep, "omega"))})
        std::cout << "wrote " << p.string() << "\n";
    return 0;
}

int cmd_classify(const Globals& g, const std::string& file, const std::string& order) {
    std::optional<Rol> truthful;
    if (!order.empty()) truthful = Rol::from_digits(order);
    const auto result = classify_rols(read_csv(file), truthful);
    const auto shares = share_csv(result);
    std::cout << "priority_score  total  trm  share\n";
    for (const auto& row : shares.rows)
        std::cout << "  " << row[0] << "  " << row[1] << "  " << row[2] << "  " << row[4] << "%\n";
    const auto out = g.output();
    std::cout << "wrote " << emit_table(out, "classified", classified_csv(result)).string() << "\n";
    std::cout << "wrote " << emit_table(out, "trm_shares", shares).string() << "\n";
    return 0;
}

struct EliteArgs {
    int n = 2, q = 1;
    double v = 1.0;
    std::string levels = "2", probs = "1";
    std::uint64_t replications = 100000;
    double tol = 1e-12;
    int grid = 0;
};

int cmd_elite(const Globals& g, const EliteArgs& a) {
    EliteProblem p;
    p.n = a.n;
    p.q = a.q;
    p.v = a.v;
    p.lambda_levels = parse_doubles(a.levels);
    p.level_probs = parse_doubles(a.probs);
    if (auto v = p.violations(); !v.empty()) throw std::invalid_argument("invalid elite problem: " + v.front());
    const auto c = elite_cutoffs(p, a.tol);
    const auto stats = simulate_elite(p, c, a.replications, g.seed, g.threads);
    std::cout.precision(12);
    CsvTable cut;
    cut.header = {"lambda", "probability", "cutoff"};
    for (std::size_t k = 0; k < c.cutoffs.size(); ++k) {
        std::ostringstream l, pr, cv;
        l.precision(12);
        pr.precision(12);
        cv.precision(12);
        l << p.lambda_levels[k];
        pr << p.level_probs[k];
        cv << c.cutoffs[k];
        cut.rows.push_back({l.str(), pr.str(), cv.str()});
        std::cout << "Lambda " << p.lambda_levels[k] << "  cutoff " << c.cutoffs[k] << "\n";
    }
    const double regret = verify_cbne(p, c);
    CsvTable st;
    st.header = {"metric", "value"};
    auto add = [&](const std::string& k, double x) {
        std::ostringstream os;
        os.precision(12);
        os << x;
        st.rows.push_back({k, os.str()});
        std::cout << k << "  " << os.str() << "\n";
    };
    add("replications", static_cast<double>(stats.replications));
    add("cutoff_regret", regret);
    add("apply_rate", stats.apply_rate);
    add("vacancy_rate", stats.vacancy_rate);
    add("displaced_rate", stats.displaced_rate);
    add("envy_rate", stats.envy_rate);
    add("envy_standard_error", stats.envy_standard_error);
    const auto out = g.output();
    std::cout << "wrote " << emit_table(out, "elite_cutoffs", cut).string() << "\n";
    std::cout << "wrote " << emit_table(out, "elite_stats", st).string() << "\n";
    if (a.grid > 0) {
        const auto game = make_discretized_elite_game(p, a.grid);
        CbneOptions opt;
        opt.threads = g.threads;
        const auto cert = cbne_fixed_point(game, opt);
        std::cout << "grid game: converged " << (cert.converged ? "yes" : "no") << ", max regret " << cert.max_regret
                  << ", iterations " << cert.iterations << "\n";
        std::cout << "wrote " << emit_json(out, "elite_grid_certificate", to_json(cert, game)).string() << "\n";
    }
    return 0;
}

int cmd_simulate(const Globals& g, const std::string& file, long long replications) {
    auto sc = load_scenario(file);
    if (g.seed_given) sc.seed = g.seed;
    if (replications >= 0) sc.replications = static_cast<std::uint64_t>(replications);
    const auto result = simulate(sc, g.threads);
    std::cout << result.dump(2) << "\n";
    std::cerr << "wrote " << emit_json(g.output(), "simulation", result).string() << "\n";
    return 0;
}

int cmd_verify(const Globals& g, const std::string& suite) {
    std::vector<std::string> names;
    if (suite == "all") names = suite_names();
    else names = {suite};
    bool ok = true;
    for (const auto& name : names) {
        const auto r = run_suite(name, g.seed, g.threads);
        std::printf("%s %s (%llu checks, %.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    static_cast<unsigned long long>(r.checks), r.seconds);
        for (const auto& n : r.notes) std::printf("  note: %s\n", n.c_str());
        for (const auto& f : r.failures) std::printf("  fail: %s\n", f.c_str());
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"School-choice simulation under expectation-based loss aversion"};
    app.require_subcommand(1);
    Globals g;
    auto* seed = app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for emitted files")->capture_default_str();
    app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

    std::string omega = "1/4", eps = "1/20", values = "100,30,0", lambda = "3/2";
    auto* ex = app.add_subcommand("example", "Worked three-school example: attainability, lotteries, sweeps");
    ex->add_option("--omega", omega, "Focal score")->capture_default_str();
    ex->add_option("--eps", eps, "Probability a rival prefers school 2")->capture_default_str();
    ex->add_option("--values", values, "Values of schools 1,2,3")->capture_default_str();
    ex->add_option("--lambda", lambda, "Loss dominance for the score sweep")->capture_default_str();

    std::string csv_file, order;
    auto* cl = app.add_subcommand("classify-rols", "Classify submitted ROLs as truthful / top-rank monotone");
    cl->add_option("file", csv_file, "CSV with priority_score,rol,count")->required()->check(CLI::ExistingFile);
    cl->add_option("--truthful-order", order, "Truthful order as digits (default ascending ids)");

    EliteArgs ea;
    auto* el = app.add_subcommand("elite", "Elite-school cutoffs and Monte Carlo statistics");
    el->add_option("--n", ea.n, "Students")->capture_default_str();
    el->add_option("--q", ea.q, "Elite seats")->capture_default_str();
    el->add_option("--v", ea.v, "Elite value")->capture_default_str();
    el->add_option("--levels", ea.levels, "Ascending loss-dominance levels, comma separated")->capture_default_str();
    el->add_option("--probs", ea.probs, "Level probabilities, comma separated")->capture_default_str();
    el->add_option("--replications", ea.replications, "Monte Carlo replications")->capture_default_str();
    el->add_option("--tol", ea.tol, "Bisection tolerance")->capture_default_str();
    el->add_option("--grid", ea.grid, "Also solve the game on a score grid of this size")->capture_default_str();

    std::string scenario;
    long long reps = -1;
    auto* si = app.add_subcommand("simulate", "Run a scenario file");
    si->add_option("scenario", scenario, "YAML or JSON scenario")->required()->check(CLI::ExistingFile);
    si->add_option("--replications", reps, "Override the scenario's replication count");

    std::string suite;
    auto* ve = app.add_subcommand("verify", "Run a property suite");
    ve->add_option("suite", suite, "optimality, bounds, trm, flip, equivalence, equilibrium or all")->required();

    for (auto* sub : {ex, cl, el, si, ve}) sub->fallthrough();
    CLI11_PARSE(app, argc, argv);
    g.seed_given = seed->count() > 0;

    try {
        if (*ex) return cmd_example(g, omega, eps, values, lambda);
        if (*cl) return cmd_classify(g, csv_file, order);
        if (*el) return cmd_elite(g, ea);
        if (*si) return cmd_simulate(g, scenario, reps);
        if (*ve) {
            if (suite != "all" && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end()) {
                std::cerr << "error: unknown suite '" << suite << "'\n";
                return 2;
            }
            return cmd_verify(g, suite);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
