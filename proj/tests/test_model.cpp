#include "ebla/model.hpp"
#include "ebla/rational.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace ebla;

namespace {
bool mentions(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}
std::uint64_t factorial(int k) { return k <= 1 ? 1 : k * factorial(k - 1); }
}  // namespace

TEST_CASE("validate_instance") {
    Instance ok{3, {1, 1, 3}, SchoolId{3}, 3};
    CHECK(validate_instance(ok).empty());

    Instance zero = ok;
    zero.capacities[0] = 0;
    CHECK(mentions(validate_instance(zero), "capacity >= 1"));

    Instance small_outside = ok;
    small_outside.capacities[2] = 2;
    CHECK(mentions(validate_instance(small_outside), "outside option capacity"));

    Instance bad_outside = ok;
    bad_outside.outside_option = 4;
    CHECK_FALSE(validate_instance(bad_outside).empty());
}

TEST_CASE("validate_instance with type distributions") {
    Instance inst{3, {1, 1, 3}, SchoolId{3}, 1};
    TypeDistribution joint{std::vector<JointTypeProfile>{{{StudentType({100, 30, 0}, {1, 1, 1}, 1.0, 2.0)}, 1.0}}};
    CHECK(validate_instance(inst, joint).empty());
    TypeDistribution bad_value{std::vector<JointTypeProfile>{{{StudentType({100, 30, 5}, {1, 1, 1}, 1.0, 2.0)}, 1.0}}};
    CHECK(mentions(validate_instance(inst, bad_value), "outside option value"));
    TypeDistribution bad_sum{std::vector<JointTypeProfile>{{{StudentType({100, 30, 0}, {1, 1, 1}, 1.0, 2.0)}, 0.5}}};
    CHECK(mentions(validate_instance(inst, bad_sum), "sum to 1"));
    IndependentSampler s{{{{100, 30, 0}, 1.0, 2.0, 0.6}}, ScoreLaw::uniform()};
    TypeDistribution bad_mass{std::vector<IndependentSampler>{s}};
    CHECK(mentions(validate_instance(inst, bad_mass), "sum to 1"));
}

TEST_CASE("StudentType invariants") {
    const auto t = StudentType({3, 2, 1}, {0.5, 0.5, 0.5}, 2.0, 1.75);
    CHECK(t.loss_dominance() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(StudentType::with_loss_dominance({3, 2, 1}, {0, 0, 0}, 0.4).loss_dominance() == doctest::Approx(0.4));
    CHECK_THROWS_AS(StudentType({1, 0}, {0, 0}, -1.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(StudentType({1, 0}, {0, 0}, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("Rol validation and digits") {
    CHECK(Rol::from_digits("2314") == Rol{2, 3, 1, 4});
    CHECK(Rol{2, 3, 1, 4}.to_string() == "2314");
    CHECK(Rol{2, 3, 1, 4}.position_of(1) == 2);
    CHECK(Rol{2, 3, 1, 4}.with_swap(1) == Rol{2, 1, 3, 4});
    CHECK_THROWS(Rol{1, 1, 2});
    CHECK_THROWS(Rol{1, 2, 4});
    CHECK_THROWS(Rol::from_digits("12a"));
}

TEST_CASE("canonicalize_rol examples") {
    CHECK(canonicalize_rol(Rol{1, 2, 4, 3}, 4) == Rol{1, 2, 4, 3});
    CHECK(canonicalize_rol(Rol{2, 4, 3, 1}, 4) == Rol{2, 4, 1, 3});
    CHECK(canonicalize_rol(Rol{4, 1, 2, 3}, 4) == canonicalize_rol(Rol{4, 3, 2, 1}, 4));
    CHECK(canonicalize_rol(Rol{4, 3, 2, 1}, 4) == Rol{4, 1, 2, 3});
    CHECK_THROWS_AS(canonicalize_rol(Rol{1, 2, 3}, 4), std::invalid_argument);
}

TEST_CASE("canonicalize is idempotent for m <= 6") {
    for (int m = 1; m <= 6; ++m)
        for (SchoolId o = 1; o <= m; ++o)
            for (const auto& r : all_rols(m)) {
                const auto c = canonicalize_rol(r, o);
                REQUIRE(canonicalize_rol(c, o) == c);
            }
}

TEST_CASE("canonical ROL count matches the closed form") {
    for (int m = 3; m <= 5; ++m) {
        std::uint64_t expected = 0;
        for (int i = 1; i <= m; ++i) expected += factorial(m - 1) / factorial(i - 1);
        const auto reps = canonical_rols(m, m);
        CHECK(reps.size() == expected);
        std::set<Rol> classes;
        for (const auto& r : all_rols(m)) classes.insert(canonicalize_rol(r, m));
        CHECK(classes.size() == expected);
    }
    CHECK(canonical_rols(3, std::nullopt).size() == 6);
}

TEST_CASE("relabel_by_preference") {
    const std::vector<double> a{30, 100, 0};
    CHECK(relabel_by_preference(a) == std::vector<int>{2, 1, 3});
    const std::vector<double> b{100, 30, 0};
    CHECK(relabel_by_preference(b) == std::vector<int>{1, 2, 3});
    const std::vector<double> tie{5, 5, 1};
    CHECK_THROWS_WITH_AS(relabel_by_preference(tie), "indifference unsupported", std::invalid_argument);
    const std::vector<double> c{4, 9, 1, 7, 3};
    const auto r = relabel_by_preference(c);
    const auto inv = invert_permutation(r);
    for (std::size_t k = 0; k < r.size(); ++k) CHECK(inv[static_cast<std::size_t>(r[k] - 1)] == static_cast<int>(k + 1));
}

TEST_CASE("rational helpers") {
    CHECK(parse_rational("10/160") == Rational(1, 16));
    CHECK(parse_rational("0.05") == Rational(1, 20));
    CHECK(parse_rational("-3") == Rational(-3));
    CHECK_THROWS(parse_rational("1/0"));
    CHECK_THROWS(parse_rational("abc"));
    CHECK(to_fraction_string(Rational(57, 160)) == "57/160");
    CHECK(to_fraction_string(Rational(3)) == "3/1");
    CHECK(to_decimal_string(Rational(1, 3)).starts_with("0.33333333333"));
    CHECK(exact_rational(0.75) == Rational(3, 4));
    CHECK(to_double(exact_rational(0.1)) == 0.1);
}

TEST_CASE("ScoreLaw") {
    const auto u = ScoreLaw::uniform();
    CHECK(u.cdf(0.3) == doctest::Approx(0.3));
    CHECK(u.quantile(0.7) == doctest::Approx(0.7));
    const auto t = ScoreLaw::tabulated({0, 0.5, 1}, {0, 0.8, 1});
    CHECK(t.violations().empty());
    CHECK(t.cdf(0.25) == doctest::Approx(0.4));
    CHECK(t.quantile(0.9) == doctest::Approx(0.75));
    CHECK_THROWS_AS(ScoreLaw::tabulated({0, 1}, {0, 0.9}), std::invalid_argument);
    CHECK_THROWS_AS(ScoreLaw::tabulated({0, 0.5, 1}, {0, 0.7, 0.6}), std::invalid_argument);
}
