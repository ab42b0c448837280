#include "ebla/model.hpp"
#include "ebla/rational.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ebla {

// ---- rational helpers ------------------------------------------------------

Rational parse_rational(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty()) throw std::invalid_argument("empty rational");
    using boost::multiprecision::cpp_int;
    auto parse_int = [&](const std::string& digits) {
        if (digits.empty() || digits == "-" || digits == "+")
            throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
        std::size_t start = (digits[0] == '-' || digits[0] == '+') ? 1 : 0;
        for (std::size_t k = start; k < digits.size(); ++k)
            if (!std::isdigit(static_cast<unsigned char>(digits[k])))
                throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
        return cpp_int(digits[0] == '+' ? digits.substr(1) : digits);
    };
    if (auto slash = s.find('/'); slash != std::string::npos) {
        cpp_int num = parse_int(s.substr(0, slash));
        cpp_int den = parse_int(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        return Rational(num, den);
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
        std::string whole = s.substr(0, dot);
        std::string frac = s.substr(dot + 1);
        bool negative = !whole.empty() && whole[0] == '-';
        if (whole.empty() || whole == "-" || whole == "+") whole += "0";
        if (frac.empty()) frac = "0";
        cpp_int w = parse_int(whole);
        cpp_int f = parse_int(frac);
        cpp_int scale = 1;
        for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
        Rational r = Rational(boost::multiprecision::abs(w)) + Rational(f, scale);
        return negative ? Rational(-r) : r;
    }
    return Rational(parse_int(s));
}

std::string to_fraction_string(const Rational& r) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(r) << '/' << boost::multiprecision::denominator(r);
    return os.str();
}

std::string to_decimal_string(const Rational& r, int significant_digits) {
    boost::multiprecision::cpp_dec_float_50 x =
        boost::multiprecision::cpp_dec_float_50(boost::multiprecision::numerator(r)) /
        boost::multiprecision::cpp_dec_float_50(boost::multiprecision::denominator(r));
    std::ostringstream os;
    os.precision(significant_digits);
    os << x;
    return os.str();
}

Rational exact_rational(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("non-finite value has no rational form");
    int exponent = 0;
    double mantissa = std::frexp(x, &exponent);
    // 53-bit integer mantissa scaled by a power of two.
    auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
    exponent -= 53;
    Rational r(scaled);
    boost::multiprecision::cpp_int pow2 = 1;
    pow2 <<= std::abs(exponent);
    return exponent >= 0 ? Rational(r * pow2) : Rational(r / pow2);
}

// ---- StudentType -------------------------------------------------------------

StudentType::StudentType(std::vector<double> values, std::vector<double> priorities, double eta, double lambda)
    : values_(std::move(values)),
      priorities_(std::move(priorities)),
      eta_(eta),
      lambda_(lambda),
      loss_dominance_(eta * (lambda - 1.0)) {
    if (eta < 0.0) throw std::invalid_argument("eta must be >= 0");
    if (lambda < 1.0) throw std::invalid_argument("lambda must be >= 1");
    if (!priorities_.empty() && priorities_.size() != values_.size())
        throw std::invalid_argument("values and priorities differ in length");
}

StudentType StudentType::with_loss_dominance(std::vector<double> values, std::vector<double> priorities,
                                             double loss_dominance) {
    if (loss_dominance < 0.0) throw std::invalid_argument("loss dominance must be >= 0");
    return StudentType(std::move(values), std::move(priorities), 1.0, 1.0 + loss_dominance);
}

StudentType StudentType::with_score(std::vector<double> values, double score, double loss_dominance) {
    std::vector<double> priorities(values.size(), score);
    return with_loss_dominance(std::move(values), std::move(priorities), loss_dominance);
}

// ---- Rol -----------------------------------------------------------------------

Rol::Rol(std::vector<SchoolId> ranking) : ranking_(std::move(ranking)) {
    std::vector<bool> seen(ranking_.size() + 1, false);
    for (SchoolId s : ranking_) {
        if (s < 1 || s > static_cast<int>(ranking_.size()) || seen[static_cast<std::size_t>(s)])
            throw std::invalid_argument("ROL is not a permutation of 1..m");
        seen[static_cast<std::size_t>(s)] = true;
    }
}

Rol Rol::from_digits(std::string_view digits) {
    std::vector<SchoolId> r;
    for (char c : digits) {
        if (c < '1' || c > '9') throw std::invalid_argument("malformed ROL '" + std::string(digits) + "'");
        r.push_back(c - '0');
    }
    if (r.empty()) throw std::invalid_argument("empty ROL");
    return Rol(std::move(r));
}

Rol Rol::truthful(std::span<const double> values) {
    auto rank = relabel_by_preference(values);
    std::vector<SchoolId> r(values.size());
    for (std::size_t s = 0; s < values.size(); ++s) r[static_cast<std::size_t>(rank[s] - 1)] = static_cast<int>(s) + 1;
    return Rol(std::move(r));
}

Rol Rol::identity(int m) {
    std::vector<SchoolId> r(static_cast<std::size_t>(m));
    std::iota(r.begin(), r.end(), 1);
    return Rol(std::move(r));
}

int Rol::position_of(SchoolId s) const {
    auto it = std::find(ranking_.begin(), ranking_.end(), s);
    if (it == ranking_.end()) throw std::out_of_range("school not in ROL");
    return static_cast<int>(it - ranking_.begin());
}

Rol Rol::with_swap(int pos) const {
    if (pos < 0 || pos + 1 >= size()) throw std::out_of_range("swap position");
    auto r = ranking_;
    std::swap(r[static_cast<std::size_t>(pos)], r[static_cast<std::size_t>(pos) + 1]);
    return Rol(std::move(r));
}

std::string Rol::to_string() const {
    std::string out;
    const bool digits = size() <= 9;
    for (std::size_t k = 0; k < ranking_.size(); ++k) {
        if (!digits && k > 0) out += '-';
        out += std::to_string(ranking_[k]);
    }
    return out;
}

std::vector<StudentId> Allocation::students_at(SchoolId s) const {
    std::vector<StudentId> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == s) out.push_back(static_cast<StudentId>(i));
    return out;
}

PriorityTable priorities_from_types(std::span<const StudentType> types) {
    if (types.empty()) return {};
    const int m = types.front().num_schools();
    PriorityTable table(static_cast<std::size_t>(m), std::vector<double>(types.size()));
    for (std::size_t i = 0; i < types.size(); ++i)
        for (int s = 1; s <= m; ++s) table[static_cast<std::size_t>(s - 1)][i] = types[i].priority(s);
    return table;
}

PriorityTable common_priorities(std::span<const double> scores, int num_schools) {
    return PriorityTable(static_cast<std::size_t>(num_schools), std::vector<double>(scores.begin(), scores.end()));
}

// ---- ScoreLaw --------------------------------------------------------------------

ScoreLaw ScoreLaw::uniform() { return ScoreLaw{}; }

ScoreLaw ScoreLaw::tabulated(std::vector<double> xs, std::vector<double> cdf) {
    ScoreLaw law;
    law.uniform_ = false;
    law.xs_ = std::move(xs);
    law.cdf_ = std::move(cdf);
    if (auto v = law.violations(); !v.empty()) throw std::invalid_argument(v.front());
    return law;
}

std::vector<std::string> ScoreLaw::violations() const {
    std::vector<std::string> out;
    if (xs_.size() < 2 || xs_.size() != cdf_.size()) {
        out.emplace_back("tabulated CDF needs >= 2 points and matching lengths");
        return out;
    }
    for (std::size_t k = 1; k < xs_.size(); ++k) {
        if (!(xs_[k] > xs_[k - 1])) out.emplace_back("tabulated CDF abscissae must be strictly increasing");
        if (cdf_[k] < cdf_[k - 1]) out.emplace_back("tabulated CDF must be nondecreasing");
    }
    if (std::abs(cdf_.front()) > 1e-12 || std::abs(cdf_.back() - 1.0) > 1e-12)
        out.emplace_back("tabulated CDF must run from 0 to 1");
    return out;
}

double ScoreLaw::cdf(double x) const {
    if (x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return 1.0;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    auto k = static_cast<std::size_t>(it - xs_.begin());
    const double t = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
    return cdf_[k - 1] + t * (cdf_[k] - cdf_[k - 1]);
}

double ScoreLaw::quantile(double u) const {
    if (u <= 0.0) return xs_.front();
    if (u >= 1.0) return xs_.back();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    auto k = static_cast<std::size_t>(it - cdf_.begin());
    if (k == 0) return xs_.front();
    const double span = cdf_[k] - cdf_[k - 1];
    const double t = span > 0.0 ? (u - cdf_[k - 1]) / span : 0.0;
    return xs_[k - 1] + t * (xs_[k] - xs_[k - 1]);
}

// ---- validation ------------------------------------------------------------------

std::vector<std::string> validate_instance(const Instance& instance) {
    std::vector<std::string> out;
    if (instance.num_schools < 1) out.emplace_back("at least one school required");
    if (static_cast<int>(instance.capacities.size()) != instance.num_schools)
        out.emplace_back("capacities must list one entry per school 1..m");
    for (std::size_t s = 0; s < instance.capacities.size(); ++s)
        if (instance.capacities[s] < 1)
            out.push_back("capacity >= 1 violated at school " + std::to_string(s + 1));
    if (instance.num_students < 0) out.emplace_back("student count must be nonnegative");
    if (instance.outside_option) {
        const SchoolId o = *instance.outside_option;
        if (o < 1 || o > instance.num_schools) {
            out.emplace_back("outside option must be one of the schools 1..m");
        } else if (static_cast<std::size_t>(o) <= instance.capacities.size() &&
                   instance.capacities[static_cast<std::size_t>(o - 1)] < instance.num_students) {
            out.emplace_back("outside option capacity must be >= number of students");
        }
    }
    return out;
}

namespace {

void check_type(const Instance& instance, const std::vector<double>& values, double eta, double lambda,
                const std::string& where, std::vector<std::string>& out) {
    if (static_cast<int>(values.size()) != instance.num_schools)
        out.push_back(where + ": values must have one entry per school");
    if (eta < 0.0) out.push_back(where + ": eta must be >= 0");
    if (lambda < 1.0) out.push_back(where + ": lambda must be >= 1");
    if (instance.outside_option && static_cast<int>(values.size()) == instance.num_schools &&
        values[static_cast<std::size_t>(*instance.outside_option - 1)] != 0.0)
        out.push_back(where + ": outside option value must be 0");
}

}  // namespace

std::vector<std::string> validate_instance(const Instance& instance, const TypeDistribution& types) {
    auto out = validate_instance(instance);
    if (types.is_joint()) {
        double total = 0.0;
        std::size_t k = 0;
        for (const auto& profile : types.joint()) {
            const std::string where = "joint_support[" + std::to_string(k++) + "]";
            total += profile.probability;
            if (profile.probability < 0.0) out.push_back(where + ": negative probability");
            if (static_cast<int>(profile.types.size()) != instance.num_students)
                out.push_back(where + ": one type per student required");
            for (const auto& t : profile.types) {
                check_type(instance, t.values(), t.eta(), t.lambda(), where, out);
                if (std::abs(t.loss_dominance() - t.eta() * (t.lambda() - 1.0)) > 1e-12)
                    out.push_back(where + ": loss dominance inconsistent with eta and lambda");
            }
        }
        if (std::abs(total - 1.0) > 1e-12) out.emplace_back("joint_support probabilities must sum to 1");
    } else {
        const auto& samplers = types.samplers();
        if (static_cast<int>(samplers.size()) != instance.num_students)
            out.emplace_back("one independent sampler per student required");
        for (std::size_t i = 0; i < samplers.size(); ++i) {
            const std::string where = "independent[" + std::to_string(i) + "]";
            double total = 0.0;
            for (const auto& point : samplers[i].support) {
                total += point.probability;
                if (point.probability < 0.0) out.push_back(where + ": negative probability");
                check_type(instance, point.values, point.eta, point.lambda, where, out);
            }
            if (std::abs(total - 1.0) > 1e-12) out.push_back(where + ": support probabilities must sum to 1");
            for (auto& v : samplers[i].score_law.violations()) out.push_back(where + ": " + v);
        }
    }
    return out;
}

// ---- ROL utilities -----------------------------------------------------------------

Rol canonicalize_rol(const Rol& rol, SchoolId outside) {
    if (outside < 1 || outside > rol.size()) throw std::invalid_argument("outside option not in ROL");
    auto r = rol.ranking();
    const auto pos = static_cast<std::size_t>(rol.position_of(outside));
    std::sort(r.begin() + static_cast<std::ptrdiff_t>(pos) + 1, r.end());
    return Rol(std::move(r));
}

std::vector<int> relabel_by_preference(std::span<const double> values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
    });
    for (std::size_t k = 1; k < order.size(); ++k)
        if (values[static_cast<std::size_t>(order[k])] == values[static_cast<std::size_t>(order[k - 1])])
            throw std::invalid_argument("indifference unsupported");
    std::vector<int> rank(values.size());
    for (std::size_t k = 0; k < order.size(); ++k) rank[static_cast<std::size_t>(order[k])] = static_cast<int>(k) + 1;
    return rank;
}

std::vector<int> invert_permutation(std::span<const int> perm) {
    std::vector<int> inv(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) inv[static_cast<std::size_t>(perm[k] - 1)] = static_cast<int>(k) + 1;
    return inv;
}

std::vector<Rol> all_rols(int m) {
    std::vector<SchoolId> r(static_cast<std::size_t>(m));
    std::iota(r.begin(), r.end(), 1);
    std::vector<Rol> out;
    do {
        out.emplace_back(r);
    } while (std::next_permutation(r.begin(), r.end()));
    return out;
}

std::vector<Rol> canonical_rols(int m, std::optional<SchoolId> outside) {
    if (!outside) return all_rols(m);
    std::vector<Rol> out;
    for (const auto& r : all_rols(m))
        if (canonicalize_rol(r, *outside) == r) out.push_back(r);
    return out;
}

}  // namespace ebla
