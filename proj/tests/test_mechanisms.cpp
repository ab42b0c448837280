#include "ebla/mechanisms.hpp"
#include "ebla/rng.hpp"

#include <doctest.h>

#include <numeric>
#include <stdexcept>

using namespace ebla;

namespace {

using Values = std::vector<std::vector<double>>;

// Rank of school s for a student with values v (0 = best). Unmatched ranks last.
double utility(const std::vector<double>& v, SchoolId s) { return s == kUnmatched ? -1e18 : v[static_cast<std::size_t>(s - 1)]; }

// Independent brute force: every feasible, non-wasteful allocation with no blocking pair.
std::vector<std::vector<SchoolId>> brute_stable(const Values& values, const PriorityTable& pri, const std::vector<int>& caps) {
    const int n = static_cast<int>(values.size());
    const int m = static_cast<int>(caps.size());
    std::vector<std::vector<SchoolId>> out;
    std::vector<SchoolId> a(static_cast<std::size_t>(n), 0);
    while (true) {
        std::vector<int> load(static_cast<std::size_t>(m), 0);
        bool feasible = true;
        for (auto s : a)
            if (s != 0 && ++load[static_cast<std::size_t>(s - 1)] > caps[static_cast<std::size_t>(s - 1)]) feasible = false;
        bool stable = feasible;
        for (int i = 0; stable && i < n; ++i)
            for (SchoolId s = 1; stable && s <= m; ++s) {
                if (utility(values[static_cast<std::size_t>(i)], s) <= utility(values[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)])) continue;
                if (load[static_cast<std::size_t>(s - 1)] < caps[static_cast<std::size_t>(s - 1)]) stable = false;
                for (int j = 0; stable && j < n; ++j)
                    if (a[static_cast<std::size_t>(j)] == s && pri[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(i)] > pri[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(j)])
                        stable = false;
            }
        if (stable) out.push_back(a);
        int k = 0;
        while (k < n && a[static_cast<std::size_t>(k)] == m) a[static_cast<std::size_t>(k++)] = 0;
        if (k == n) break;
        ++a[static_cast<std::size_t>(k)];
    }
    return out;
}

struct RandomMarket {
    Values values;
    PriorityTable priorities;
    std::vector<int> caps;
    std::vector<Rol> rols;
};

RandomMarket random_market(CounterRng& rng, int n, int m) {
    RandomMarket mk;
    mk.caps.resize(static_cast<std::size_t>(m));
    for (auto& c : mk.caps) c = 1 + static_cast<int>(rng.below(2));
    mk.priorities.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& row : mk.priorities)
        for (auto& p : row) p = rng.uniform();
    for (int i = 0; i < n; ++i) {
        std::vector<double> v(static_cast<std::size_t>(m));
        for (auto& x : v) x = rng.uniform();
        mk.rols.push_back(Rol::truthful(v));
        mk.values.push_back(std::move(v));
    }
    return mk;
}

}  // namespace

TEST_CASE("DA is the student-optimal stable allocation") {
    CounterRng rng(11, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int m = 1 + static_cast<int>(rng.below(3));
        auto mk = random_market(rng, n, m);
        const auto da = da_student_proposing(mk.rols, mk.priorities, mk.caps);
        const auto stable = brute_stable(mk.values, mk.priorities, mk.caps);
        REQUIRE_FALSE(stable.empty());
        bool found = false;
        for (const auto& a : stable) {
            if (a == da.assignment) found = true;
            for (int i = 0; i < n; ++i)
                CHECK(utility(mk.values[static_cast<std::size_t>(i)], da[i]) >= utility(mk.values[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]));
        }
        CHECK(found);
        CHECK(stable_allocations(mk.values, mk.priorities, mk.caps).size() == stable.size());
        CHECK(is_student_optimal_stable(da, mk.values, mk.priorities, mk.caps));
        CHECK(justified_envy_pairs(da, mk.values, mk.priorities, mk.caps).empty());
    }
}

TEST_CASE("TTC is Pareto efficient and individually rational on a small example") {
    // Student 0 has top priority at school 2 and wants 1; student 1 the reverse.
    PriorityTable pri{{0.1, 0.9}, {0.9, 0.1}};
    std::vector<int> caps{1, 1};
    std::vector<Rol> rols{Rol{1, 2}, Rol{2, 1}};
    const auto t = ttc(rols, pri, caps);
    CHECK(t.assignment == std::vector<SchoolId>{1, 2});
    // DA gives each student their top choice here too, since there is no competition.
    CHECK(da_student_proposing(rols, pri, caps).assignment == std::vector<SchoolId>{1, 2});

    std::vector<Rol> same{Rol{1, 2}, Rol{1, 2}};
    const auto d = da_student_proposing(same, pri, caps);
    CHECK(d.assignment == std::vector<SchoolId>{2, 1});
    const auto tt = ttc(same, pri, caps);
    CHECK(tt.assignment == std::vector<SchoolId>{2, 1});
}

TEST_CASE("TTC never leaves a Pareto improvement") {
    CounterRng rng(12, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(3));
        const int m = 1 + static_cast<int>(rng.below(3));
        auto mk = random_market(rng, n, m);
        const auto t = ttc(mk.rols, mk.priorities, mk.caps);
        std::vector<int> load(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < n; ++i)
            if (t[i] != kUnmatched) ++load[static_cast<std::size_t>(t[i] - 1)];
        for (int s = 0; s < m; ++s) CHECK(load[static_cast<std::size_t>(s)] <= mk.caps[static_cast<std::size_t>(s)]);
        std::vector<SchoolId> a(static_cast<std::size_t>(n), 0);
        while (true) {
            std::vector<int> l(static_cast<std::size_t>(m), 0);
            bool ok = true;
            for (auto s : a)
                if (s != 0 && ++l[static_cast<std::size_t>(s - 1)] > mk.caps[static_cast<std::size_t>(s - 1)]) ok = false;
            if (ok) {
                bool weak = true, strict = false;
                for (int i = 0; i < n; ++i) {
                    const double u = utility(mk.values[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]);
                    const double w = utility(mk.values[static_cast<std::size_t>(i)], t[i]);
                    weak = weak && u >= w;
                    strict = strict || u > w;
                }
                CHECK_FALSE((weak && strict));
            }
            int k = 0;
            while (k < n && a[static_cast<std::size_t>(k)] == m) a[static_cast<std::size_t>(k++)] = 0;
            if (k == n) break;
            ++a[static_cast<std::size_t>(k)];
        }
    }
}

TEST_CASE("ties in priorities are rejected") {
    PriorityTable pri{{0.5, 0.5}};
    std::vector<int> caps{1};
    std::vector<Rol> rols{Rol{1}, Rol{1}};
    CHECK_THROWS_AS(da_student_proposing(rols, pri, caps), std::invalid_argument);
}

TEST_CASE("immediate acceptance is manipulable, DA is not") {
    // Student 0 (low priority everywhere) likes 1 > 2 > 3; students 1 and 2 rank 2 first
    // and 1 second. Under IA, student 0 loses school 2 to nobody, so truth-telling wins 1.
    PriorityTable pri{{0.1, 0.9, 0.5}, {0.1, 0.9, 0.5}, {0.1, 0.9, 0.5}};
    std::vector<int> caps{1, 1, 1};
    std::vector<std::vector<std::vector<double>>> grid{{{3, 2, 1}, {3, 2, 1}, {3, 2, 1}}};
    const auto ia = strategy_proofness_check(immediate_acceptance, pri, caps, grid);
    CHECK_FALSE(ia.passed());
    const auto& v = *ia.violation;
    const auto& vals = grid[v.cardinal_profile][static_cast<std::size_t>(v.student)];
    CHECK(vals[static_cast<std::size_t>(v.deviation_outcome - 1)] > vals[static_cast<std::size_t>(v.truthful_outcome - 1)]);
    auto reports = v.reports;
    CHECK(immediate_acceptance(reports, pri, caps)[v.student] == v.truthful_outcome);
    reports[static_cast<std::size_t>(v.student)] = v.deviation;
    CHECK(immediate_acceptance(reports, pri, caps)[v.student] == v.deviation_outcome);

    const auto da = strategy_proofness_check(da_student_proposing, pri, caps, grid);
    CHECK(da.passed());
    CHECK(da.evaluations > 0);
    CHECK_THROWS_AS(strategy_proofness_check(da_student_proposing, pri, caps, grid, 10), std::length_error);
}

TEST_CASE("serial dictatorship with truthful choices") {
    std::vector<double> scores{0.2, 0.9, 0.5};
    std::vector<int> caps{1, 2};
    auto alloc = serial_dictatorship(scores, caps, truthful_chooser({{5, 1}, {5, 1}, {5, 1}}));
    CHECK(alloc.assignment == std::vector<SchoolId>{2, 1, 2});
    std::vector<double> tied{0.5, 0.5};
    CHECK_THROWS(serial_dictatorship(tied, caps, truthful_chooser({{5, 1}, {5, 1}})));
    auto full = [](StudentId, std::span<const int>) { return SchoolId{1}; };
    CHECK_THROWS(serial_dictatorship(scores, caps, full));
}

TEST_CASE("justified envy counts vacancies") {
    Values values{{10, 0}, {10, 0}};
    PriorityTable pri{{0.9, 0.1}, {0.9, 0.1}};
    std::vector<int> caps{1, 2};
    Allocation waste{{2, 2}};
    const auto envy = justified_envy_pairs(waste, values, pri, caps);
    CHECK(envy.count({0, 1}) == 1);
    CHECK(envy.count({1, 1}) == 1);
    Allocation wrong{{2, 1}};
    const auto e2 = justified_envy_pairs(wrong, values, pri, caps);
    CHECK(e2 == std::set<std::pair<StudentId, SchoolId>>{{0, 1}});
    Allocation right{{1, 2}};
    CHECK(justified_envy_pairs(right, values, pri, caps).empty());
}

TEST_CASE("values_from_rol ranks schools as the ROL does") {
    const auto v = values_from_rol(Rol{3, 1, 2});
    CHECK(Rol::truthful(v) == Rol{3, 1, 2});
}
