#include "qca/evolve.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <random>

namespace qca {

std::string to_string(Method m) {
    switch (m) {
        case Method::Auto: return "auto";
        case Method::Dense: return "dense-expm";
        case Method::Krylov: return "krylov";
        case Method::Diagonal: return "diagonal-markov";
        case Method::Discrete: return "discrete";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    if (s == "auto") return Method::Auto;
    if (s == "dense" || s == "dense-expm") return Method::Dense;
    if (s == "krylov") return Method::Krylov;
    if (s == "diagonal" || s == "diagonal-markov") return Method::Diagonal;
    fail(ErrorKind::InvalidInput, "unknown method '" + s + "'");
}

Sample sample_of(const VecState& s, double t) {
    return Sample{t, density_n(s) / s.n_sites, expval_sz(s), s.trace().real()};
}

Sample sample_of(const Distribution& d, double t) {
    return Sample{t, density_n(d) / d.n_sites, expval_sz(d), d.prob.sum()};
}

namespace {

void check_finite(const CVec& v, long step) {
    if (!v.allFinite()) fail(ErrorKind::NumericalFailure, "non-finite amplitudes at step " + std::to_string(step));
}

double inf_norm(const SpMat& A) {
    double best = 0.0;
    for (Eigen::Index r = 0; r < A.outerSize(); ++r) {
        double row = 0.0;
        for (SpMat::InnerIterator it(A, r); it; ++it) row += std::abs(it.value());
        best = std::max(best, row);
    }
    return best;
}

double round_two_digits(double x) {
    if (x <= 0.0) return x;
    const double s = std::pow(10.0, std::floor(std::log10(x)) - 1.0);
    return std::ceil(x / s) * s;
}

// Sample indices spread evenly over [0, total].
std::vector<long> sample_grid(long total, int samples) {
    std::vector<long> g;
    samples = std::max(samples, 1);
    for (int i = 0; i <= samples; ++i) {
        const long k = static_cast<long>(std::llround(static_cast<double>(total) * i / samples));
        if (g.empty() || k > g.back()) g.push_back(k);
    }
    return g;
}

}  // namespace

CMat expm_dense(const SpMat& L, double t) {
    const CMat scaled = CMat(L) * cplx(t);
    return scaled.exp();
}

CVec expmv_krylov(const SpMat& A, const CVec& v, double t, const KrylovOptions& opt, double* err_out) {
    const Eigen::Index n = A.rows();
    if (v.size() != n) fail(ErrorKind::InvalidInput, "expmv: dimension mismatch");
    const int m = static_cast<int>(std::min<Eigen::Index>(opt.m, n));
    const double anorm = std::max(inf_norm(A), 1e-300);
    const double tol = opt.tol;
    const double delta = 1.2, gamma = 0.9, btol = 1e-7 * tol;
    const double rndoff = anorm * 1e-16;

    CVec w = v;
    double beta = w.norm();
    double err = 0.0;
    if (beta == 0.0 || t == 0.0) {
        if (err_out) *err_out = 0.0;
        return w;
    }
    double xm = 1.0 / m;
    const double fact = std::pow((m + 1) / std::numbers::e, m + 1) * std::sqrt(2.0 * std::numbers::pi * (m + 1));
    double t_new = round_two_digits((1.0 / anorm) * std::pow((fact * tol) / (4.0 * beta * anorm), xm));

    double t_now = 0.0;
    int steps = 0;
    CMat V(n, m + 1);
    while (t_now < t) {
        if (++steps > opt.max_steps) fail(ErrorKind::NonConvergence, "Krylov expmv exceeded its step budget");
        double t_step = std::min(t - t_now, t_new);
        CMat H = CMat::Zero(m + 2, m + 2);
        V.col(0) = w / beta;
        int mb = m, k1 = 2;
        for (int j = 0; j < m; ++j) {
            CVec p = A * V.col(j);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = V.col(i).dot(p);
                p -= H(i, j) * V.col(i);
            }
            const double s = p.norm();
            if (s < btol) {
                k1 = 0;
                mb = j + 1;
                t_step = t - t_now;
                break;
            }
            H(j + 1, j) = s;
            V.col(j + 1) = p / s;
        }
        double avnorm = 0.0;
        if (k1 != 0) {
            H(m + 1, m) = 1.0;
            avnorm = (A * V.col(m)).norm();
        }
        CMat F;
        double err_loc = btol;
        for (int reject = 0;; ++reject) {
            const int mx = mb + k1;
            F = (cplx(t_step) * H.topLeftCorner(mx, mx)).exp();
            if (k1 == 0) {
                err_loc = btol;
                break;
            }
            const double phi1 = std::abs(beta * F(m, 0));
            const double phi2 = std::abs(beta * F(m + 1, 0) * avnorm);
            if (phi1 > 10.0 * phi2) {
                err_loc = phi2;
                xm = 1.0 / m;
            } else if (phi1 > phi2) {
                err_loc = (phi1 * phi2) / (phi1 - phi2);
                xm = 1.0 / m;
            } else {
                err_loc = phi1;
                xm = 1.0 / (m - 1);
            }
            if (err_loc <= delta * t_step * tol) break;
            if (reject > 50) fail(ErrorKind::NonConvergence, "Krylov expmv could not meet its tolerance, residual " + std::to_string(err_loc));
            t_step = round_two_digits(gamma * t_step * std::pow(t_step * tol / err_loc, xm));
        }
        const int mx = mb + std::max(0, k1 - 1);
        w = V.leftCols(mx) * (beta * F.col(0).head(mx));
        beta = w.norm();
        t_now += t_step;
        t_new = round_two_digits(gamma * t_step * std::pow(t_step * tol / std::max(err_loc, 1e-300), xm));
        err += std::max(err_loc, rndoff);
        check_finite(w, steps);
        if (beta == 0.0) break;
    }
    if (err_out) *err_out = err;
    return w;
}

EvolutionResult discrete_run(const std::vector<SuperOp>& sequence, const VecState& state, long max_steps, StopRule stop,
                             int samples) {
    if (sequence.empty()) fail(ErrorKind::InvalidInput, "empty step sequence");
    for (const auto& s : sequence)
        if (s.n_sites != state.n_sites) fail(ErrorKind::InvalidInput, "step and state sizes differ");
    EvolutionResult r;
    r.method_used = Method::Discrete;
    VecState cur = state;
    const auto grid = sample_grid(max_steps, samples);
    std::size_t next_sample = 0;
    auto maybe_sample = [&](long k) {
        while (next_sample < grid.size() && grid[next_sample] <= k) {
            if (grid[next_sample] == k) r.trajectory.push_back(sample_of(cur, static_cast<double>(k)));
            ++next_sample;
        }
    };
    auto density_stop = [&]() {
        const double x = density_n(cur) / cur.n_sites;
        if (stop.kind == StopRule::Kind::DensityAbove) return x > stop.threshold;
        if (stop.kind == StopRule::Kind::DensityOutside) return x > 1.0 - stop.threshold || x < stop.threshold;
        return false;
    };
    maybe_sample(0);
    if (density_stop()) {
        r.converged = true;
        r.final_state = cur;
        return r;
    }
    VecState cycle_start = cur;
    const long period = static_cast<long>(sequence.size());
    long k = 0;
    for (; k < max_steps; ++k) {
        cur = sequence[static_cast<std::size_t>(k % period)].apply(cur);
        check_finite(cur.amp, k + 1);
        maybe_sample(k + 1);
        if (density_stop()) {
            r.converged = true;
            ++k;
            break;
        }
        if (stop.kind == StopRule::Kind::StateDelta && (k + 1) % period == 0) {
            if ((cur.amp - cycle_start.amp).norm() < stop.threshold) {
                r.converged = true;
                ++k;
                break;
            }
            cycle_start = cur;
        }
    }
    if (r.trajectory.empty() || r.trajectory.back().t != static_cast<double>(k)) r.trajectory.push_back(sample_of(cur, static_cast<double>(k)));
    r.steps = k;
    r.time_reached = static_cast<double>(k);
    r.final_state = std::move(cur);
    if (stop.kind == StopRule::Kind::None) r.converged = true;
    return r;
}

EvolutionResult fates_trajectory(double p, const VecState& state, long steps, std::uint64_t seed, const PartitionSchedule& schedule,
                                 int samples) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidInput, "Fatès probability must lie in [0, 1]");
    if (steps < 0) fail(ErrorKind::InvalidInput, "negative step count");
    const SuperOp s184 = fates_rule_step(184, state.n_sites, schedule);
    const SuperOp s232 = fates_rule_step(232, state.n_sites, schedule);
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick184(p);
    EvolutionResult r;
    r.method_used = Method::Discrete;
    VecState cur = state;
    const auto grid = sample_grid(steps, samples);
    std::size_t next = 0;
    for (long k = 0; k <= steps; ++k) {
        if (k > 0) {
            cur = (pick184(rng) ? s184 : s232).apply(cur);
            check_finite(cur.amp, k);
        }
        if (next < grid.size() && grid[next] == k) {
            r.trajectory.push_back(sample_of(cur, static_cast<double>(k)));
            ++next;
        }
    }
    if (r.trajectory.empty() || r.trajectory.back().t != static_cast<double>(steps)) r.trajectory.push_back(sample_of(cur, static_cast<double>(steps)));
    r.steps = steps;
    r.time_reached = static_cast<double>(steps);
    r.converged = true;
    r.final_state = std::move(cur);
    return r;
}

namespace {

bool is_diagonal(const VecState& s) {
    const std::int64_t d = pow2(s.n_sites);
    for (Eigen::Index i = 0; i < s.amp.size(); ++i) {
        if (s.amp(i) == cplx(0)) continue;
        const std::uint64_t idx = static_cast<std::uint64_t>(i);
        if (ket_of(idx) != bra_of(idx)) return false;
    }
    (void)d;
    return true;
}

}  // namespace

Method choose_method(const LindbladSpec& spec, const VecState& state, Method requested) {
    if (requested == Method::Diagonal) {
        std::string bad;
        if (!is_basis_preserving(spec, &bad)) fail(ErrorKind::InvalidMethod, "diagonal method needs a basis-preserving spec; offending term: " + bad);
        if (!is_diagonal(state)) fail(ErrorKind::InvalidMethod, "diagonal method needs a diagonal input state");
        return Method::Diagonal;
    }
    if (requested == Method::Dense) {
        if (spec.n_sites > tolerances().dense_max_sites) fail(ErrorKind::InvalidMethod, "dense path limited to N <= 8");
        return Method::Dense;
    }
    if (requested == Method::Krylov || requested == Method::Discrete) return Method::Krylov;
    if (is_basis_preserving(spec) && is_diagonal(state)) return Method::Diagonal;
    if (pow4(spec.n_sites) <= tolerances().dense_expm_dim) return Method::Dense;
    return Method::Krylov;
}

EvolutionResult diagonal_evolve(const LindbladSpec& spec, const Distribution& init, double t, int samples) {
    if (t < 0.0) fail(ErrorKind::InvalidInput, "negative evolution time");
    EvolutionResult r;
    r.method_used = Method::Diagonal;
    Distribution cur;
    cur.n_sites = spec.n_sites;
    SpRMat Q;
    if (init.states.empty()) {
        Q = diagonal_rate_matrix(spec);
        cur.prob = init.prob;
    } else {
        MarkovChain mc = reachable_chain(spec, init.states);
        cur.states = mc.states;
        cur.prob = RVec::Zero(static_cast<Eigen::Index>(mc.states.size()));
        for (Eigen::Index i = 0; i < init.prob.size(); ++i) cur.prob(mc.index.at(init.states[static_cast<std::size_t>(i)])) += init.prob(i);
        Q = std::move(mc.Q);
    }
    const int n = std::max(samples, 1);
    const double dt = t / n;
    r.trajectory.push_back(sample_of(cur, 0.0));
    for (int i = 1; i <= n && t > 0.0; ++i) {
        cur.prob = markov_evolve(Q, cur.prob, dt);
        r.trajectory.push_back(sample_of(cur, dt * i));
    }
    r.time_reached = t;
    r.converged = true;
    if (spec.n_sites <= 10) r.final_state = to_state(cur);
    r.distribution = std::move(cur);
    return r;
}

EvolutionResult continuous_evolve(const LindbladSpec& spec, const VecState& state, double t, const ContinuousOptions& opt) {
    if (t < 0.0) fail(ErrorKind::InvalidInput, "negative evolution time");
    if (state.n_sites != spec.n_sites) fail(ErrorKind::InvalidInput, "state and spec sizes differ");
    const Method m = choose_method(spec, state, opt.method);
    if (m == Method::Diagonal) {
        EvolutionResult r = diagonal_evolve(spec, diagonal_of(state), t, opt.samples);
        r.final_state = to_state(*r.distribution);
        return r;
    }
    const SuperOp L = assemble_lindbladian(spec);
    const SpMat& A = L.factors.front();
    EvolutionResult r;
    r.method_used = m;
    VecState cur = state;
    const int n = std::max(opt.samples, 1);
    const double dt = t / n;
    r.trajectory.push_back(sample_of(cur, 0.0));
    if (t > 0.0) {
        CMat E;
        if (m == Method::Dense) E = expm_dense(A, dt);
        for (int i = 1; i <= n; ++i) {
            cur.amp = (m == Method::Dense) ? CVec(E * cur.amp) : expmv_krylov(A, cur.amp, dt, opt.krylov);
            check_finite(cur.amp, i);
            r.trajectory.push_back(sample_of(cur, dt * i));
        }
    }
    r.time_reached = t;
    r.converged = true;
    r.final_state = std::move(cur);
    return r;
}

EvolutionResult trotter_even_odd(const LindbladSpec& spec_even, const LindbladSpec& spec_odd, double tau, long n_steps,
                                 const VecState& state, int samples) {
    if (!(tau > 0.0)) fail(ErrorKind::InvalidInput, "Trotter step must be positive");
    const SpMat Le = assemble_lindbladian(spec_even).factors.front();
    const SpMat Lo = assemble_lindbladian(spec_odd).factors.front();
    const bool dense = pow4(state.n_sites) <= tolerances().dense_expm_dim;
    CMat Ee, Eo;
    if (dense) {
        Ee = expm_dense(Le, tau);
        Eo = expm_dense(Lo, tau);
    }
    EvolutionResult r;
    r.method_used = dense ? Method::Dense : Method::Krylov;
    VecState cur = state;
    const auto grid = sample_grid(n_steps, samples);
    std::size_t next = 0;
    for (long k = 0; k <= n_steps; ++k) {
        if (next < grid.size() && grid[next] == k) {
            r.trajectory.push_back(sample_of(cur, tau * static_cast<double>(k)));
            ++next;
        }
        if (k == n_steps) break;
        if (dense) {
            cur.amp = Eo * (Ee * cur.amp);
        } else {
            cur.amp = expmv_krylov(Lo, expmv_krylov(Le, cur.amp, tau), tau);
        }
        check_finite(cur.amp, k + 1);
    }
    r.steps = n_steps;
    r.time_reached = tau * static_cast<double>(n_steps);
    r.converged = true;
    r.final_state = std::move(cur);
    return r;
}

EvolutionResult converge_to_fixed_point(const SuperOp& step, const VecState& state, double tol, long horizon) {
    if (!(tol > 0.0 && tol < 1.0)) fail(ErrorKind::InvalidInput, "tolerance must lie in (0, 1)");
    return discrete_run({step}, state, horizon, StopRule::state_delta(tol));
}

EvolutionResult converge_to_fixed_point(const LindbladSpec& spec, const VecState& state, double tol, double horizon, Method method) {
    if (!(tol > 0.0 && tol < 1.0)) fail(ErrorKind::InvalidInput, "tolerance must lie in (0, 1)");
    const Method m = choose_method(spec, state, method);
    if (m == Method::Diagonal) {
        EvolutionResult r = converge_to_fixed_point(spec, diagonal_of(state), tol, horizon);
        r.final_state = to_state(*r.distribution);
        return r;
    }
    const SpMat A = assemble_lindbladian(spec).factors.front();
    CMat E;
    if (m == Method::Dense) E = expm_dense(A, 1.0);
    EvolutionResult r;
    r.method_used = m;
    VecState cur = state;
    r.trajectory.push_back(sample_of(cur, 0.0));
    const long slices = static_cast<long>(std::ceil(horizon));
    const long stride = std::max(1L, slices / 64);
    long k = 0;
    for (; k < slices; ++k) {
        CVec next = (m == Method::Dense) ? CVec(E * cur.amp) : expmv_krylov(A, cur.amp, 1.0);
        check_finite(next, k + 1);
        const double delta = (next - cur.amp).norm();
        cur.amp = std::move(next);
        if ((k + 1) % stride == 0) r.trajectory.push_back(sample_of(cur, static_cast<double>(k + 1)));
        if (delta < tol) {
            r.converged = true;
            ++k;
            break;
        }
    }
    if (r.trajectory.back().t != static_cast<double>(k)) r.trajectory.push_back(sample_of(cur, static_cast<double>(k)));
    r.time_reached = static_cast<double>(k);
    r.final_state = std::move(cur);
    return r;
}

EvolutionResult converge_to_fixed_point(const LindbladSpec& spec, const Distribution& init, double tol, double horizon) {
    EvolutionResult r;
    r.method_used = Method::Diagonal;
    Distribution cur;
    cur.n_sites = spec.n_sites;
    SpRMat Q;
    if (init.states.empty()) {
        Q = diagonal_rate_matrix(spec);
        cur.prob = init.prob;
    } else {
        MarkovChain mc = reachable_chain(spec, init.states);
        cur.states = mc.states;
        cur.prob = RVec::Zero(static_cast<Eigen::Index>(mc.states.size()));
        for (Eigen::Index i = 0; i < init.prob.size(); ++i) cur.prob(mc.index.at(init.states[static_cast<std::size_t>(i)])) += init.prob(i);
        Q = std::move(mc.Q);
    }
    r.trajectory.push_back(sample_of(cur, 0.0));
    const long slices = static_cast<long>(std::ceil(horizon));
    const long stride = std::max(1L, slices / 64);
    long k = 0;
    for (; k < slices; ++k) {
        RVec next = markov_evolve(Q, cur.prob, 1.0);
        const double delta = (next - cur.prob).norm();
        cur.prob = std::move(next);
        if ((k + 1) % stride == 0) r.trajectory.push_back(sample_of(cur, static_cast<double>(k + 1)));
        if (delta < tol) {
            r.converged = true;
            ++k;
            break;
        }
    }
    if (r.trajectory.back().t != static_cast<double>(k)) r.trajectory.push_back(sample_of(cur, static_cast<double>(k)));
    r.time_reached = static_cast<double>(k);
    r.distribution = std::move(cur);
    return r;
}

double separated_density(const Distribution& d) {
    const int n = d.n_sites;
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    double total = 0.0;
    for (Eigen::Index i = 0; i < d.prob.size(); ++i) {
        const std::uint64_t s = d.state_at(i);
        // Site j lives at bit n-1-j, so its right neighbour sits one bit lower;
        // shifting left lines that neighbour up with site j.
        const std::uint64_t right = ((s << 1) | (s >> (n - 1))) & mask;
        total += d.prob(i) * std::popcount(s & ~right & mask);
    }
    return total / n;
}

double first_crossing(const SpRMat& Q, const RVec& p0, const std::function<double(const RVec&)>& obs, double threshold,
                      double dt, double horizon, RVec* final_p) {
    RVec p = p0;
    double prev = obs(p);
    if (prev > threshold) {
        if (final_p) *final_p = p;
        return 0.0;
    }
    const long steps = static_cast<long>(std::ceil(horizon / dt));
    for (long k = 1; k <= steps; ++k) {
        p = markov_evolve(Q, p, dt);
        const double cur = obs(p);
        if (cur > threshold) {
            if (final_p) *final_p = p;
            return dt * (k - 1) + dt * (threshold - prev) / (cur - prev);
        }
        prev = cur;
    }
    if (final_p) *final_p = p;
    return -1.0;
}

namespace {

std::uint64_t bits_to_index(const std::string& bits) {
    std::uint64_t idx = 0;
    for (char c : bits) idx = (idx << 1) | static_cast<std::uint64_t>(c == '1');
    return idx;
}

std::function<double(const RVec&)> chain_observable(const MarkovChain& mc, double (*f)(const Distribution&)) {
    return [&mc, f](const RVec& p) {
        Distribution d;
        d.n_sites = mc.n_sites;
        d.states = mc.states;
        d.prob = p;
        return f(d);
    };
}

double density_fraction(const Distribution& d) { return density_n(d) / d.n_sites; }

}  // namespace

MVPhaseTimes mv_continuous_worst_case(int n_sites, double dt) {
    if (n_sites < 4) fail(ErrorKind::InvalidInput, "worst-case MV timing needs N >= 4");
    const MVLindblads L = mv_lindblads(n_sites);
    MVPhaseTimes out;
    out.n_sites = n_sites;

    const int h = n_sites / 2;
    const std::string a0 = std::string(static_cast<std::size_t>(h), '1') + std::string(static_cast<std::size_t>(n_sites - h), '0');
    const MarkovChain ca = reachable_chain(L.A, {bits_to_index(a0)}, 4'000'000, true);
    RVec pa = RVec::Zero(static_cast<Eigen::Index>(ca.states.size()));
    pa(0) = 1.0;
    out.states_A = ca.states.size();
    out.tau_A = first_crossing(ca.Q, pa, chain_observable(ca, separated_density), 0.99 * h / n_sites, dt, 50.0 * n_sites);

    const std::string b0 = "11" + std::string(static_cast<std::size_t>(n_sites - 2), '0');
    const MarkovChain cb = reachable_chain(L.B, {bits_to_index(b0)}, 4'000'000, true);
    RVec pb = RVec::Zero(static_cast<Eigen::Index>(cb.states.size()));
    pb(0) = 1.0;
    out.states_B = cb.states.size();
    out.tau_B = first_crossing(cb.Q, pb, chain_observable(cb, density_fraction), 0.99, dt, 50.0 * n_sites);
    if (out.tau_A < 0.0 || out.tau_B < 0.0) fail(ErrorKind::NonConvergence, "worst-case MV phase did not reach its threshold");
    return out;
}

MVContinuousResult mv_continuous_run(const std::string& bits, double tau_A_max, double horizon_B, double dt, std::size_t max_states,
                                     bool stop_A_early) {
    const int n = static_cast<int>(bits.size());
    const MVLindblads L = mv_lindblads(n);
    MVContinuousResult r;
    const double sample_dt = std::max(dt, (tau_A_max + horizon_B) / 64.0);
    double next_sample = 0.0;
    auto record = [&](const Distribution& d, double t) {
        if (t + 1e-12 >= next_sample) {
            r.trajectory.push_back(sample_of(d, t));
            next_sample += sample_dt;
        }
    };

    const int n0 = static_cast<int>(std::count(bits.begin(), bits.end(), '1'));
    const MarkovChain ca = reachable_chain(L.A, {bits_to_index(bits)}, max_states, true);
    r.states_A = ca.states.size();
    Distribution d;
    d.n_sites = n;
    d.states = ca.states;
    d.prob = RVec::Zero(static_cast<Eigen::Index>(ca.states.size()));
    d.prob(0) = 1.0;
    const double sep_target = 0.99 * n0 / n;
    double t = 0.0;
    record(d, t);
    while (t < tau_A_max - 1e-12 && !(stop_A_early && n0 > 0 && separated_density(d) > sep_target)) {
        const double h = std::min(dt, tau_A_max - t);
        d.prob = markov_evolve(ca.Q, d.prob, h);
        t += h;
        record(d, t);
    }
    r.tau_A = t;

    // Seed phase B from the support of the phase-A distribution.
    std::vector<std::uint64_t> seeds;
    std::vector<double> weights;
    for (Eigen::Index i = 0; i < d.prob.size(); ++i)
        if (d.prob(i) > 1e-15) {
            seeds.push_back(d.states[static_cast<std::size_t>(i)]);
            weights.push_back(d.prob(i));
        }
    const MarkovChain cb = reachable_chain(L.B, seeds, max_states, true);
    r.states_B = cb.states.size();
    Distribution db;
    db.n_sites = n;
    db.states = cb.states;
    db.prob = RVec::Zero(static_cast<Eigen::Index>(cb.states.size()));
    for (std::size_t i = 0; i < seeds.size(); ++i) db.prob(cb.index.at(seeds[i])) += weights[i];
    double tb = 0.0;
    auto decided = [&]() {
        const double x = density_n(db) / n;
        if (x > 0.99) return 1;
        if (x < 0.01) return 0;
        return -1;
    };
    const std::uint64_t all_ones = (std::uint64_t{1} << n) - 1;
    auto absorbed = [&]() {
        double m = 0.0;
        for (Eigen::Index i = 0; i < db.prob.size(); ++i) {
            const std::uint64_t s = db.states[static_cast<std::size_t>(i)];
            if (s == 0 || s == all_ones) m += db.prob(i);
        }
        return m > 1.0 - 1e-10;
    };
    while (decided() < 0 && tb < horizon_B - 1e-12 && !absorbed()) {
        const double h = std::min(dt, horizon_B - tb);
        db.prob = markov_evolve(cb.Q, db.prob, h);
        tb += h;
        record(db, r.tau_A + tb);
    }
    r.tau_B = tb;
    for (Eigen::Index i = 0; i < db.prob.size(); ++i) {
        const std::uint64_t s = db.states[static_cast<std::size_t>(i)];
        if (s == 0) r.mass_zeros += db.prob(i);
        if (s == all_ones) r.mass_ones += db.prob(i);
    }
    r.label = decided();
    r.converged = r.label >= 0;
    if (r.trajectory.back().t < r.tau_A + tb) r.trajectory.push_back(sample_of(db, r.tau_A + tb));
    return r;
}

}  // namespace qca
