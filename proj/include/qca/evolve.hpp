#pragma once

#include "qca/markov.hpp"
#include "qca/models.hpp"
#include "qca/observables.hpp"
#include "qca/superop.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace qca {

enum class Method { Auto, Dense, Krylov, Diagonal, Discrete };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct Sample {
    double t = 0.0;
    double n_over_N = 0.0;
    double s_z = 0.0;
    double trace = 0.0;
};

struct EvolutionResult {
    VecState final_state;                     // empty for large diagonal runs
    std::optional<Distribution> distribution; // set by the diagonal path
    double time_reached = 0.0;
    long steps = 0;
    std::vector<Sample> trajectory;
    bool converged = false;
    Method method_used = Method::Auto;
};

Sample sample_of(const VecState& s, double t);
Sample sample_of(const Distribution& d, double t);

// ---- matrix exponentials -------------------------------------------------

CMat expm_dense(const SpMat& L, double t);

struct KrylovOptions {
    int m = 30;
    double tol = 1e-12;
    int max_steps = 100000;
};

// exp(tA) v by Arnoldi with adaptive sub-stepping and a local error
// estimate. `err` receives the accumulated error estimate.
CVec expmv_krylov(const SpMat& A, const CVec& v, double t, const KrylovOptions& opt = {}, double* err = nullptr);

// ---- stopping rules --------------------------------------------------------

struct StopRule {
    enum class Kind { None, StateDelta, DensityAbove, DensityOutside };
    Kind kind = Kind::None;
    double threshold = 0.0;

    static StopRule none() { return {}; }
    static StopRule state_delta(double tol) { return {Kind::StateDelta, tol}; }
    static StopRule density_above(double x) { return {Kind::DensityAbove, x}; }
    // n/N > 1 - x or n/N < x
    static StopRule density_outside(double x) { return {Kind::DensityOutside, x}; }
};

// ---- discrete --------------------------------------------------------------

// Applies `sequence` cyclically, one element per step, for at most
// `max_steps` steps. The state-delta rule compares successive full cycles.
EvolutionResult discrete_run(const std::vector<SuperOp>& sequence, const VecState& state, long max_steps,
                             StopRule stop = StopRule::none(), int samples = 64);

// One realisation of the Fatès mixture: each step draws rule 184 with
// probability p (else 232) and applies it to every cell through `schedule`.
// Averaging over seeds recovers fates_step.
EvolutionResult fates_trajectory(double p, const VecState& state, long steps, std::uint64_t seed, const PartitionSchedule& schedule,
                                 int samples = 64);

// ---- continuous ------------------------------------------------------------

struct ContinuousOptions {
    Method method = Method::Auto;
    int samples = 64;
    KrylovOptions krylov{};
};

Method choose_method(const LindbladSpec& spec, const VecState& state, Method requested);

EvolutionResult continuous_evolve(const LindbladSpec& spec, const VecState& state, double t, const ContinuousOptions& opt = {});

// Diagonal path on a distribution (works at any N the reachable set allows).
EvolutionResult diagonal_evolve(const LindbladSpec& spec, const Distribution& init, double t, int samples = 64);

// Alternates exp(L_even tau) and exp(L_odd tau), even part first.
EvolutionResult trotter_even_odd(const LindbladSpec& spec_even, const LindbladSpec& spec_odd, double tau, long n_steps,
                                 const VecState& state, int samples = 64);

// ---- fixed points ----------------------------------------------------------

// Discrete: stop when successive states differ by less than tol.
EvolutionResult converge_to_fixed_point(const SuperOp& step, const VecState& state, double tol, long horizon);

// Continuous: advance in unit-time slices until the slice change is below tol.
EvolutionResult converge_to_fixed_point(const LindbladSpec& spec, const VecState& state, double tol, double horizon,
                                        Method method = Method::Auto);
EvolutionResult converge_to_fixed_point(const LindbladSpec& spec, const Distribution& init, double tol, double horizon);

// ---- continuous majority voting -------------------------------------------

// sum_j <P1_j P0_{j+1}> / N: density of ones whose right neighbour is empty.
double separated_density(const Distribution& d);

struct MVPhaseTimes {
    int n_sites = 0;
    double tau_A = 0.0;
    double tau_B = 0.0;
    double total() const { return tau_A + tau_B; }
    std::size_t states_A = 0;
    std::size_t states_B = 0;
};

// Worst cases: phase A from 1^{floor(N/2)} 0^{ceil(N/2)} until the
// separated density exceeds 0.99 n0/N; phase B from a two-site cluster in an
// empty ring until n/N > 0.99. Times are located to within `dt`.
MVPhaseTimes mv_continuous_worst_case(int n_sites, double dt = 0.01);

// First time the observable `obs(dist)` crosses `threshold` from below, with
// linear interpolation between grid points of spacing dt. Returns a negative
// value if the horizon is reached first.
double first_crossing(const SpRMat& Q, const RVec& p0, const std::function<double(const RVec&)>& obs, double threshold,
                      double dt, double horizon, RVec* final_p = nullptr);

struct MVContinuousResult {
    int label = -1;  // 0, 1 or -1 when undecided
    double tau_A = 0.0;
    double tau_B = 0.0;
    std::vector<Sample> trajectory;
    std::size_t states_A = 0;
    std::size_t states_B = 0;
    double mass_zeros = 0.0;  // final weight on 0..0
    double mass_ones = 0.0;   // final weight on 1..1
    bool converged = false;
};

// Phase A for `tau_A_max` (or, with stop_A_early, until the
// separated-density rule fires), then phase B until n/N leaves [0.01, 0.99],
// all mass sits on the two uniform states, or `horizon_B` elapses. Both
// phases run on rotation classes.
MVContinuousResult mv_continuous_run(const std::string& bits, double tau_A_max, double horizon_B, double dt = 0.05,
                                     std::size_t max_states = 4'000'000, bool stop_A_early = false);

}  // namespace qca
