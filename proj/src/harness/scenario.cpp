#include "ebla/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

namespace ebla::harness {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
        const auto mark = node.Mark();
        if (mark.is_null()) throw InputError(source_ + ": " + message);
        throw InputError(source_ + ":" + std::to_string(mark.line + 1) + ":" + std::to_string(mark.column + 1) + ": " +
                         message);
    }

    YAML::Node required(const YAML::Node& map, const char* key) const {
        if (!map.IsMap()) fail(map, "expected a mapping");
        YAML::Node n = map[key];
        if (!n) fail(map, std::string("missing field '") + key + "'");
        return n;
    }

    template <class T>
    T as(const YAML::Node& node, const char* what) const {
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, std::string("field '") + what + "' has the wrong type");
        }
    }

    template <class T>
    std::vector<T> list(const YAML::Node& node, const char* what) const {
        if (!node.IsSequence()) fail(node, std::string("field '") + what + "' must be a list");
        std::vector<T> out;
        for (const auto& item : node) out.push_back(as<T>(item, what));
        return out;
    }

    void only_keys(const YAML::Node& map, std::initializer_list<const char*> keys) const {
        if (!map.IsMap()) fail(map, "expected a mapping");
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, "unknown field '" + key + "'");
        }
    }

private:
    std::string source_;
};

ScoreLaw parse_score_law(const Reader& rd, const YAML::Node& node) {
    if (!node) return ScoreLaw::uniform();
    if (node.IsScalar()) {
        if (node.as<std::string>() == "uniform") return ScoreLaw::uniform();
        rd.fail(node, "unknown score law '" + node.as<std::string>() + "'");
    }
    rd.only_keys(node, {"points", "cdf"});
    const auto xs = rd.list<double>(rd.required(node, "points"), "points");
    const auto cdf = rd.list<double>(rd.required(node, "cdf"), "cdf");
    try {
        auto law = ScoreLaw::tabulated(xs, cdf);
        if (auto v = law.violations(); !v.empty()) rd.fail(node, v.front());
        return law;
    } catch (const std::invalid_argument& e) {
        rd.fail(node, e.what());
    }
}

StudentType parse_student_type(const Reader& rd, const YAML::Node& node, int m) {
    rd.only_keys(node, {"values", "priorities", "score", "eta", "lambda", "loss_dominance"});
    const auto values = rd.list<double>(rd.required(node, "values"), "values");
    if (static_cast<int>(values.size()) != m) rd.fail(node, "values must list one entry per school");
    std::vector<double> priorities;
    if (node["priorities"]) priorities = rd.list<double>(node["priorities"], "priorities");
    else if (node["score"]) priorities.assign(static_cast<std::size_t>(m), rd.as<double>(node["score"], "score"));
    else rd.fail(node, "missing field 'priorities' or 'score'");
    if (static_cast<int>(priorities.size()) != m) rd.fail(node, "priorities must list one entry per school");
    try {
        if (node["loss_dominance"]) {
            if (node["eta"] || node["lambda"]) rd.fail(node, "give either loss_dominance or eta/lambda");
            return StudentType::with_loss_dominance(values, priorities, rd.as<double>(node["loss_dominance"], "loss_dominance"));
        }
        return StudentType(values, priorities, rd.as<double>(rd.required(node, "eta"), "eta"),
                           rd.as<double>(rd.required(node, "lambda"), "lambda"));
    } catch (const std::invalid_argument& e) {
        rd.fail(node, e.what());
    }
}

TypeSupportPoint parse_support_point(const Reader& rd, const YAML::Node& node, int m) {
    rd.only_keys(node, {"values", "eta", "lambda", "loss_dominance", "probability"});
    TypeSupportPoint p;
    p.values = rd.list<double>(rd.required(node, "values"), "values");
    if (static_cast<int>(p.values.size()) != m) rd.fail(node, "values must list one entry per school");
    if (node["loss_dominance"]) {
        p.eta = 1.0;
        p.lambda = 1.0 + rd.as<double>(node["loss_dominance"], "loss_dominance");
    } else {
        p.eta = rd.as<double>(rd.required(node, "eta"), "eta");
        p.lambda = rd.as<double>(rd.required(node, "lambda"), "lambda");
    }
    if (p.eta < 0.0) rd.fail(node, "eta >= 0 violated");
    if (p.lambda < 1.0) rd.fail(node, "lambda >= 1 violated");
    p.probability = node["probability"] ? rd.as<double>(node["probability"], "probability") : 1.0;
    return p;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
    Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw InputError(source + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1) +
                         ": " + e.msg);
    }
    if (!root || !root.IsMap()) throw InputError(source + ": scenario must be a mapping");
    rd.only_keys(root, {"schools", "capacities", "outside_option", "students", "type_distribution", "seed",
                        "replications", "mechanism", "strategy", "focal"});

    Scenario sc;
    const auto schools = rd.required(root, "schools");
    sc.instance.num_schools = rd.as<int>(schools, "schools");
    if (sc.instance.num_schools < 1 || sc.instance.num_schools > 16) rd.fail(schools, "schools must be in 1..16");
    const int m = sc.instance.num_schools;
    const auto caps = rd.required(root, "capacities");
    sc.instance.capacities = rd.list<int>(caps, "capacities");
    if (static_cast<int>(sc.instance.capacities.size()) != m) rd.fail(caps, "capacities must list one entry per school");
    if (root["outside_option"] && !root["outside_option"].IsNull())
        sc.instance.outside_option = rd.as<int>(root["outside_option"], "outside_option");
    const auto students = rd.required(root, "students");
    sc.instance.num_students = rd.as<int>(students, "students");
    if (sc.instance.num_students < 1) rd.fail(students, "students must be positive");
    const int n = sc.instance.num_students;
    for (std::size_t k = 0; k < caps.size(); ++k)
        if (sc.instance.capacities[k] < 1)
            rd.fail(caps[k], "capacity >= 1 violated at school " + std::to_string(k + 1));
    if (sc.instance.outside_option) {
        const SchoolId o = *sc.instance.outside_option;
        if (o < 1 || o > m) rd.fail(root["outside_option"], "outside option must be one of the schools 1..m");
        if (sc.instance.capacity(o) < n)
            rd.fail(root["outside_option"], "outside option capacity must be >= number of students");
    }
    if (root["seed"]) sc.seed = rd.as<std::uint64_t>(root["seed"], "seed");
    if (root["replications"]) sc.replications = rd.as<std::uint64_t>(root["replications"], "replications");
    if (root["mechanism"]) {
        sc.mechanism = rd.as<std::string>(root["mechanism"], "mechanism");
        try {
            mechanism_by_name(sc.mechanism);
        } catch (const std::invalid_argument& e) {
            rd.fail(root["mechanism"], e.what());
        }
    }
    if (root["strategy"]) {
        sc.strategy = rd.as<std::string>(root["strategy"], "strategy");
        if (sc.strategy != "truthful" && sc.strategy != "cbne")
            rd.fail(root["strategy"], "strategy must be 'truthful' or 'cbne'");
    }

    const auto td = rd.required(root, "type_distribution");
    rd.only_keys(td, {"independent", "joint_support"});
    if (td["independent"] && td["joint_support"]) rd.fail(td, "give either 'independent' or 'joint_support'");
    if (const auto ind = td["independent"]) {
        if (!ind.IsSequence() || ind.size() == 0) rd.fail(ind, "'independent' must be a nonempty list of samplers");
        if (ind.size() != 1 && static_cast<int>(ind.size()) != n)
            rd.fail(ind, "'independent' must hold one sampler or one per student");
        std::vector<IndependentSampler> samplers;
        for (const auto& node : ind) {
            rd.only_keys(node, {"score_law", "support"});
            IndependentSampler s;
            s.score_law = parse_score_law(rd, node["score_law"]);
            const auto support = rd.required(node, "support");
            if (!support.IsSequence() || support.size() == 0) rd.fail(support, "'support' must be a nonempty list");
            double total = 0.0;
            for (const auto& p : support) {
                s.support.push_back(parse_support_point(rd, p, m));
                total += s.support.back().probability;
            }
            if (std::abs(total - 1.0) > 1e-12) rd.fail(support, "support probabilities must sum to 1");
            samplers.push_back(std::move(s));
        }
        if (samplers.size() == 1) samplers.assign(static_cast<std::size_t>(n), samplers.front());
        sc.types.law = std::move(samplers);
    } else if (const auto joint = td["joint_support"]) {
        if (!joint.IsSequence() || joint.size() == 0) rd.fail(joint, "'joint_support' must be a nonempty list");
        std::vector<JointTypeProfile> profiles;
        for (const auto& node : joint) {
            rd.only_keys(node, {"probability", "types"});
            JointTypeProfile p;
            p.probability = rd.as<double>(rd.required(node, "probability"), "probability");
            const auto types = rd.required(node, "types");
            if (!types.IsSequence() || static_cast<int>(types.size()) != n)
                rd.fail(types, "'types' must list one type per student");
            for (const auto& t : types) p.types.push_back(parse_student_type(rd, t, m));
            profiles.push_back(std::move(p));
        }
        sc.types.law = std::move(profiles);
    } else {
        rd.fail(td, "type_distribution needs 'independent' or 'joint_support'");
    }
    if (auto v = validate_instance(sc.instance, sc.types); !v.empty()) rd.fail(root, v.front());
    if (sc.strategy == "cbne" && !sc.types.is_joint()) rd.fail(root["strategy"], "cbne strategy requires joint_support");

    if (const auto focal = root["focal"]) {
        rd.only_keys(focal, {"values", "loss_dominance", "scores"});
        if (sc.types.is_joint()) rd.fail(focal, "focal block requires independent samplers");
        FocalSpec f;
        f.values = rd.list<double>(rd.required(focal, "values"), "values");
        if (static_cast<int>(f.values.size()) != m) rd.fail(focal, "focal values must list one entry per school");
        f.loss_dominance = rd.as<double>(rd.required(focal, "loss_dominance"), "loss_dominance");
        if (f.loss_dominance < 0.0) rd.fail(focal, "loss_dominance must be nonnegative");
        const auto scores = rd.required(focal, "scores");
        f.scores = rd.list<double>(scores, "scores");
        sc.focal = std::move(f);
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

}  // namespace ebla::harness
