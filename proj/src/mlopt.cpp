#include "qca/mlopt.hpp"

#include "qca/markov.hpp"
#include "qca/parallel.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>

namespace qca {

TrainingSet TrainingSet::defaults() {
    return TrainingSet{{{"0000", 0},
                        {"1000", 0},
                        {"1011", 1},
                        {"10000", 0},
                        {"11000", 0},
                        {"10100", 0},
                        {"11011", 1},
                        {"11100", 1},
                        {"10110", 1},
                        {"10101", 1},
                        {"11111", 1}}};
}

void TrainingSet::validate() const {
    if (pairs.empty()) fail(ErrorKind::InvalidInput, "training set is empty");
    for (const auto& p : pairs) {
        if (p.y != 0 && p.y != 1) fail(ErrorKind::InvalidInput, "training label must be 0 or 1");
        if (p.x.size() < 3 || p.x.size() > 12) fail(ErrorKind::InvalidInput, "training state length must lie in [3, 12]: " + p.x);
        if (p.x.find_first_not_of("01") != std::string::npos) fail(ErrorKind::InvalidInput, "training state must be a bitstring: " + p.x);
    }
}

namespace {

Eigen::MatrixXd dense_rate_matrix(const MLWeights& w, int n) {
    return Eigen::MatrixXd(diagonal_rate_matrix(ml_lindblad(w, n)));
}

}  // namespace

CostReport ml_cost_detail(const MLWeights& weights, const TrainingSet& set, double tau_factor) {
    set.validate();
    // One propagator per distinct length; the generator is a classical rate
    // matrix because every ML jump maps basis states to basis states.
    std::map<int, Eigen::MatrixXd> prop;
    for (const auto& p : set.pairs) {
        const int n = static_cast<int>(p.x.size());
        if (prop.count(n)) continue;
        const double tau = tau_factor * n * n;
        prop[n] = (dense_rate_matrix(weights, n) * tau).exp();
    }
    CostReport rep;
    for (const auto& p : set.pairs) {
        const int n = static_cast<int>(p.x.size());
        const Eigen::MatrixXd& E = prop[n];
        const auto s = static_cast<Eigen::Index>(std::stoull(p.x, nullptr, 2));
        StateScore sc;
        sc.x = p.x;
        sc.y = p.y;
        sc.f0 = E(0, s);
        sc.f1 = E(E.rows() - 1, s);
        sc.term = (p.y == 1 ? sc.f0 : -sc.f0) + (p.y == 0 ? sc.f1 : -sc.f1);
        sc.misclassified = sc.term > -0.5;
        if (!std::isfinite(sc.term)) fail(ErrorKind::NumericalFailure, "non-finite cost term for " + p.x);
        rep.cost += sc.term;
        rep.states.push_back(sc);
    }
    return rep;
}

double ml_cost(const MLWeights& weights, const TrainingSet& set, double tau_factor) {
    return ml_cost_detail(weights, set, tau_factor).cost;
}

MLWeights truncate_weights(const MLWeights& w) {
    MLWeights out = w;
    for (double& v : out.w) v = std::floor(v * 1000.0 + 1e-9) / 1000.0;
    return out;
}

namespace {

constexpr int kFree = 6;  // w2..w7
using Point = std::array<double, kFree>;

MLWeights to_weights(const Point& x) {
    MLWeights w;
    for (int i = 0; i < kFree; ++i) w.w[static_cast<std::size_t>(i + 1)] = std::clamp(x[static_cast<std::size_t>(i)], 0.0, 1.0);
    return w;
}

struct LocalResult {
    Point x{};
    double f = 0.0;
    double f_start = 0.0;
    int evals = 0;
};

// Nelder-Mead on the box [0,1]^6; trial points are clipped onto the box.
LocalResult nelder_mead(const Point& start, const TrainingSet& set, double tol, int max_evals) {
    LocalResult res;
    auto clip = [](Point p) {
        for (double& v : p) v = std::clamp(v, 0.0, 1.0);
        return p;
    };
    auto eval = [&](const Point& p) {
        ++res.evals;
        return ml_cost(to_weights(p), set);
    };
    std::vector<Point> simplex(kFree + 1, clip(start));
    for (int i = 0; i < kFree; ++i) {
        double& v = simplex[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(i)];
        v = v + 0.1 <= 1.0 ? v + 0.1 : v - 0.1;
    }
    std::vector<double> f(simplex.size());
    for (std::size_t i = 0; i < simplex.size(); ++i) f[i] = eval(simplex[i]);
    res.f_start = f[0];

    while (res.evals < max_evals) {
        std::vector<std::size_t> order(simplex.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
        std::vector<Point> s2;
        std::vector<double> f2;
        for (auto i : order) {
            s2.push_back(simplex[i]);
            f2.push_back(f[i]);
        }
        simplex.swap(s2);
        f.swap(f2);

        double size = 0.0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            for (int d = 0; d < kFree; ++d) size = std::max(size, std::abs(simplex[i][static_cast<std::size_t>(d)] - simplex[0][static_cast<std::size_t>(d)]));
        if (f.back() - f.front() < tol && size < tol) break;

        Point centroid{};
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i)
            for (int d = 0; d < kFree; ++d) centroid[static_cast<std::size_t>(d)] += simplex[i][static_cast<std::size_t>(d)] / kFree;
        auto along = [&](double t) {
            Point p;
            for (int d = 0; d < kFree; ++d) {
                const auto k = static_cast<std::size_t>(d);
                p[k] = centroid[k] + t * (simplex.back()[k] - centroid[k]);
            }
            return clip(p);
        };
        const Point xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < f.front()) {
            const Point xe = along(-2.0);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex.back() = xe;
                f.back() = fe;
            } else {
                simplex.back() = xr;
                f.back() = fr;
            }
        } else if (fr < f[f.size() - 2]) {
            simplex.back() = xr;
            f.back() = fr;
        } else {
            const bool outside = fr < f.back();
            const Point xc = along(outside ? -0.5 : 0.5);
            const double fc = eval(xc);
            if (fc < (outside ? fr : f.back())) {
                simplex.back() = xc;
                f.back() = fc;
            } else {
                for (std::size_t i = 1; i < simplex.size(); ++i) {
                    for (int d = 0; d < kFree; ++d) {
                        const auto k = static_cast<std::size_t>(d);
                        simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
                    }
                    f[i] = eval(simplex[i]);
                }
            }
        }
    }
    const auto best = static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin());
    res.x = simplex[best];
    res.f = f[best];
    return res;
}

}  // namespace

OptimizeResult optimize_weights(const TrainingSet& set, const OptimizeOptions& opt) {
    if (opt.restarts < 1) fail(ErrorKind::InvalidInput, "restarts must be at least 1");
    set.validate();
    // Starting points are drawn up front so the result does not depend on
    // the thread count.
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point> starts(static_cast<std::size_t>(opt.restarts));
    for (auto& p : starts)
        for (double& v : p) v = u(rng);
    if (opt.start_from_initial)
        for (int i = 0; i < kFree; ++i) starts[0][static_cast<std::size_t>(i)] = opt.initial.w[static_cast<std::size_t>(i + 1)];

    std::vector<LocalResult> runs(starts.size());
    parallel_for(starts.size(), opt.threads, [&](std::size_t i) { runs[i] = nelder_mead(starts[i], set, opt.tol, opt.max_evals); });

    OptimizeResult out;
    out.start_cost = runs.front().f_start;
    std::size_t best = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        out.evaluations += runs[i].evals;
        out.restart_costs.push_back(runs[i].f);
        if (runs[i].f < runs[best].f) best = i;
    }
    out.weights = to_weights(runs[best].x);
    out.cost = runs[best].f;
    return out;
}

WorstCase ml_worst_case_time(const MLWeights& weights, int n_sites, double dt, double horizon) {
    if (n_sites < 3 || n_sites > 12) fail(ErrorKind::InvalidInput, "worst-case scan limited to 3 <= N <= 12");
    const Eigen::MatrixXd Q = dense_rate_matrix(weights, n_sites);
    const Eigen::Index dim = Q.rows();
    // r_s(t) = E[n/N at time t | start s] evolves under the transposed generator.
    const Eigen::MatrixXd step = (Q.transpose() * dt).exp();
    Eigen::VectorXd r(dim);
    for (Eigen::Index s = 0; s < dim; ++s) r(s) = std::popcount(static_cast<std::uint64_t>(s)) / static_cast<double>(n_sites);

    std::vector<Eigen::Index> sector;
    for (Eigen::Index s = 0; s < dim; ++s)
        if (2 * std::popcount(static_cast<std::uint64_t>(s)) > n_sites) sector.push_back(s);
    std::vector<double> crossing(sector.size(), -1.0);
    std::size_t open = sector.size();
    double t = 0.0;
    Eigen::VectorXd prev = r;
    for (std::size_t i = 0; i < sector.size(); ++i)
        if (r(sector[i]) > 0.99) {
            crossing[i] = 0.0;
            --open;
        }
    while (open > 0 && t < horizon) {
        r = step * prev;
        t += dt;
        for (std::size_t i = 0; i < sector.size(); ++i) {
            if (crossing[i] >= 0.0) continue;
            const double a = prev(sector[i]), b = r(sector[i]);
            if (b > 0.99) {
                crossing[i] = t - dt + dt * (0.99 - a) / (b - a);
                --open;
            }
        }
        prev = r;
    }
    if (open > 0) fail(ErrorKind::NonConvergence, "some majority-one states never exceed 0.99 within the horizon");
    WorstCase wc;
    wc.n_sites = n_sites;
    for (std::size_t i = 0; i < sector.size(); ++i)
        if (crossing[i] > wc.time) {
            wc.time = crossing[i];
            std::string s(static_cast<std::size_t>(n_sites), '0');
            for (int j = 0; j < n_sites; ++j) s[static_cast<std::size_t>(j)] = ((sector[i] >> (n_sites - 1 - j)) & 1) ? '1' : '0';
            wc.state = s;
        }
    return wc;
}

}  // namespace qca
