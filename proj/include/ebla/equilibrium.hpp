#pragma once

#include "ebla/game.hpp"
#include "ebla/model.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace ebla {

// ---- elite school problem -------------------------------------------------------------------

struct EliteProblem {
    int n = 2;     // students
    int q = 1;     // elite seats
    double v = 1.0;
    std::vector<double> lambda_levels{2.0};  // ascending loss-dominance levels
    std::vector<double> level_probs{1.0};
    ScoreLaw score_law = ScoreLaw::uniform();

    std::vector<std::string> violations() const;
};

/// Probability that fewer than q of the other n-1 students score above omega.
/// Returns 1 when q >= n. Throws std::domain_error when omega is outside G's support.
double order_stat_prob(double omega, int n, int q, const ScoreLaw& G);

/// Apply to the elite school iff f >= 1 - 1/Lambda (indifference applies).
bool elite_apply_decision(double f, double loss_dominance);

enum class EliteListing { ListAllElite, ListNone };
const char* to_string(EliteListing l);

/// Best response for symmetric elite schools: list all of them before the
/// district school or none. f_all is the probability of attaining some elite
/// school when all are listed. Throws on asymmetric elite values.
EliteListing elite_adjacency_reduction(const std::vector<double>& elite_values, double f_all, double loss_dominance);

struct EliteCutoffs {
    std::vector<double> lambda_levels;
    std::vector<double> cutoffs;  // cutoffs[k]: apply iff score >= cutoffs[k]
    int bisection_steps = 0;
};

/// Equilibrium cutoffs, solved from the most to the least loss-averse level.
EliteCutoffs elite_cutoffs(const EliteProblem& problem, double tol = 1e-12);

/// Probability of winning an elite seat when applying with score omega while
/// everyone else follows the cutoffs.
double elite_attainability(const EliteProblem& problem, const std::vector<double>& cutoffs, double omega);

/// CPE utility of applying minus that of not applying.
double elite_apply_gain(double f, double loss_dominance, double v);

// ---- finite-type equilibrium ------------------------------------------------------------------

struct TypeRegret {
    StudentId student = 0;
    int type = 0;
    double regret = 0.0;      // best utility minus the worst played strategy's
    double support_spread = 0.0;  // max - min utility over the support
    std::vector<double> utilities;
};

struct CbneReport {
    std::vector<TypeRegret> regrets;
    double max_regret = 0.0;
    bool support_indifferent = true;
};

struct CbneCertificate {
    MixedStrategyProfile profile;
    double max_regret = 0.0;
    std::vector<TypeRegret> regrets;
    int iterations = 0;
    bool converged = false;
    std::string method;  // "nash-map" or "pure-enumeration"
};

struct CbneOptions {
    double damping = 0.5;
    double tol = 1e-9;
    int max_iter = 20000;
    /// Suboptimal strategies below this mass are dropped between iterations;
    /// the map revives them if they become profitable again.
    double prune_mass = 0.02;
    bool pure_fallback = true;
    unsigned threads = 1;
};

/// The map sigma' = (sigma + phi) / (1 + sum phi) with phi_r = max(0, U_r - U(sigma)).
MixedStrategyProfile nash_map(const GameEvaluator& eval, const MixedStrategyProfile& sigma);

CbneCertificate cbne_fixed_point(const FiniteDaGame& game, const CbneOptions& options = {});

/// Regret of every (student, type): best CPE utility minus the utility of the
/// worst strategy played with positive probability.
CbneReport verify_cbne(const MixedStrategyProfile& profile, const GameEvaluator& eval, double tol = 1e-9);
CbneReport verify_cbne(const MixedStrategyProfile& profile, const FiniteDaGame& game, double tol = 1e-9);

/// Regret of the cutoff profile in the continuous elite problem, evaluated on a
/// score grid of `points` points per level plus the cutoffs themselves.
double verify_cbne(const EliteProblem& problem, const EliteCutoffs& cutoffs, int points = 2001);

/// Cutoff profile of the discretized game: apply iff the grid score >= cutoff.
MixedStrategyProfile elite_cutoff_profile(const EliteProblem& problem, const EliteCutoffs& cutoffs, int grid_size);

// ---- sequential example ---------------------------------------------------------------------

enum class SequentialVerdict { TruthfulIsSeqCPE, Not };
const char* to_string(SequentialVerdict v);

/// Node of a sequential mechanism where truth-telling yields v_pref with
/// probability eps and v_other otherwise, while deviating yields v_other surely.
/// Evaluated in exact arithmetic on the given doubles.
SequentialVerdict sequential_cpe_osp_example(double eps, double loss_dominance, double v_pref, double v_other);

nlohmann::json to_json(const CbneCertificate& cert, const FiniteDaGame& game);
nlohmann::json to_json(const EliteCutoffs& cutoffs);

}  // namespace ebla
