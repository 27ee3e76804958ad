#include "qca/spectra.hpp"

#include "qca/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace qca {

namespace {

using ColSp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

// Translation by one site (site j -> j+1) on a doubled index.
std::uint64_t translate(std::uint64_t x, int n) {
    return (x >> 2) | ((x & 3u) << (2 * (n - 1)));
}

int charge(std::uint64_t x) {
    return std::popcount(ket_of(x)) - std::popcount(bra_of(x));
}

bool conserves_charge(const ColSp& L) {
    for (Eigen::Index c = 0; c < L.outerSize(); ++c)
        for (ColSp::InnerIterator it(L, c); it; ++it)
            if (charge(static_cast<std::uint64_t>(it.row())) != charge(static_cast<std::uint64_t>(c))) return false;
    return true;
}

bool translation_invariant(const ColSp& L, int n) {
    for (Eigen::Index c = 0; c < L.outerSize(); ++c)
        for (ColSp::InnerIterator it(L, c); it; ++it) {
            const auto r2 = static_cast<Eigen::Index>(translate(static_cast<std::uint64_t>(it.row()), n));
            const auto c2 = static_cast<Eigen::Index>(translate(static_cast<std::uint64_t>(c), n));
            if (std::abs(L.coeff(r2, c2) - it.value()) > 1e-13 * (1.0 + std::abs(it.value()))) return false;
        }
    return true;
}

// One symmetry block: basis states are momentum superpositions of orbit
// representatives (or plain basis states without translation).
struct Block {
    int q = 0;
    int k = 0;
    std::vector<std::uint64_t> reps;
    CMat H;
};

struct Orbits {
    std::vector<std::uint64_t> rep;
    std::vector<int> shift;   // x = T^shift rep
    std::vector<int> period;  // orbit length of x
};

Orbits build_orbits(int n) {
    const std::int64_t dim = pow4(n);
    Orbits o;
    o.rep.resize(static_cast<std::size_t>(dim));
    o.shift.resize(static_cast<std::size_t>(dim));
    o.period.resize(static_cast<std::size_t>(dim));
    for (std::int64_t x = 0; x < dim; ++x) {
        std::uint64_t y = static_cast<std::uint64_t>(x), best = y;
        int best_m = 0, period = n;
        for (int m = 1; m <= n; ++m) {
            y = translate(y, n);
            if (y == static_cast<std::uint64_t>(x)) {
                period = m;
                break;
            }
            if (y < best) {
                best = y;
                best_m = m;
            }
        }
        o.rep[static_cast<std::size_t>(x)] = best;
        o.shift[static_cast<std::size_t>(x)] = (n - best_m) % n;
        o.period[static_cast<std::size_t>(x)] = period;
    }
    return o;
}

std::vector<Block> build_blocks(const ColSp& L, int n, bool use_charge, bool use_momentum) {
    const std::int64_t dim = pow4(n);
    std::vector<Block> blocks;
    if (!use_charge && !use_momentum) {
        Block b;
        b.H = CMat(L);
        for (std::int64_t x = 0; x < dim; ++x) b.reps.push_back(static_cast<std::uint64_t>(x));
        blocks.push_back(std::move(b));
        return blocks;
    }
    const Orbits orb = use_momentum ? build_orbits(n) : Orbits{};
    auto rep_of = [&](std::uint64_t x) { return use_momentum ? orb.rep[x] : x; };
    auto period_of = [&](std::uint64_t x) { return use_momentum ? orb.period[x] : n; };

    std::map<int, std::vector<std::uint64_t>> by_charge;
    for (std::int64_t x = 0; x < dim; ++x) {
        const auto ux = static_cast<std::uint64_t>(x);
        if (rep_of(ux) != ux) continue;
        by_charge[use_charge ? charge(ux) : 0].push_back(ux);
    }
    const int momenta = use_momentum ? n : 1;
    const double two_pi_over_n = 2.0 * std::numbers::pi / n;
    for (const auto& [q, reps_all] : by_charge) {
        for (int k = 0; k < momenta; ++k) {
            Block b;
            b.q = q;
            b.k = k;
            for (std::uint64_t r : reps_all)
                if (!use_momentum || (k * period_of(r)) % n == 0) b.reps.push_back(r);
            if (b.reps.empty()) continue;
            std::map<std::uint64_t, Eigen::Index> pos;
            for (std::size_t i = 0; i < b.reps.size(); ++i) pos[b.reps[i]] = static_cast<Eigen::Index>(i);
            const auto m = static_cast<Eigen::Index>(b.reps.size());
            b.H = CMat::Zero(m, m);
            for (Eigen::Index col = 0; col < m; ++col) {
                const std::uint64_t r = b.reps[static_cast<std::size_t>(col)];
                for (ColSp::InnerIterator it(L, static_cast<Eigen::Index>(r)); it; ++it) {
                    const auto s = static_cast<std::uint64_t>(it.row());
                    const std::uint64_t rp = rep_of(s);
                    const auto found = pos.find(rp);
                    if (found == pos.end()) continue;
                    cplx w = it.value();
                    if (use_momentum) {
                        const int l = orb.shift[s];
                        w *= std::polar(1.0, two_pi_over_n * k * l) *
                             std::sqrt(static_cast<double>(period_of(r)) / period_of(rp));
                    }
                    b.H(found->second, col) += w;
                }
            }
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

// Full-space vector of a block vector: sum_r v_r |r, k>.
CVec lift(const Block& b, const CVec& v, int n, bool use_momentum) {
    CVec out = CVec::Zero(pow4(n));
    const double two_pi_over_n = 2.0 * std::numbers::pi / n;
    for (std::size_t i = 0; i < b.reps.size(); ++i) {
        const cplx c = v(static_cast<Eigen::Index>(i));
        if (!use_momentum) {
            out(static_cast<Eigen::Index>(b.reps[i])) += c;
            continue;
        }
        std::uint64_t x = b.reps[i];
        int period = n;
        for (int m = 1; m <= n; ++m) {
            x = translate(x, n);
            if (x == b.reps[i]) {
                period = m;
                break;
            }
        }
        x = b.reps[i];
        for (int m = 0; m < period; ++m) {
            out(static_cast<Eigen::Index>(x)) += c * std::polar(1.0, -two_pi_over_n * b.k * m) / std::sqrt(static_cast<double>(period));
            x = translate(x, n);
        }
    }
    return out;
}

void finish_report(SpectrumReport& rep, std::vector<cplx> eig, double tol_null) {
    std::sort(eig.begin(), eig.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    rep.eigenvalues = std::move(eig);
    rep.null_threshold = tol_null * rep.norm;
    rep.null_dim = 0;
    rep.gap = 0.0;
    rep.max_real = -std::numeric_limits<double>::infinity();
    for (const cplx& l : rep.eigenvalues) {
        const double a = std::abs(l);
        if (a < rep.null_threshold) {
            ++rep.null_dim;
            if (a > 0.1 * rep.null_threshold) rep.warnings.push_back("eigenvalue near the null threshold: " + std::to_string(a));
            continue;
        }
        if (a < 10.0 * rep.null_threshold) rep.warnings.push_back("eigenvalue near the null threshold: " + std::to_string(a));
        if (rep.gap == 0.0) rep.gap = a;
        rep.max_real = std::max(rep.max_real, l.real());
    }
    if (rep.max_real > rep.null_threshold) rep.warnings.push_back("non-zero eigenvalue with positive real part");
}

SpectrumReport dense_spectrum(const SpMat& Lrow, int n, const SpectrumOptions& opt) {
    const ColSp L(Lrow);
    SpectrumReport rep;
    rep.n_sites = n;
    rep.norm = max_row_sum(Lrow);
    const bool use_charge = opt.use_symmetry && conserves_charge(L);
    const bool use_momentum = opt.use_symmetry && translation_invariant(L, n);
    if (!use_charge && !use_momentum && n > 6) fail(ErrorKind::InvalidInput, "unstructured dense spectrum limited to N <= 6");
    rep.method = use_charge || use_momentum ? "dense-blocked" : "dense";
    const auto blocks = build_blocks(L, n, use_charge, use_momentum);
    std::vector<cplx> eig;
    eig.reserve(static_cast<std::size_t>(pow4(n)));
    for (const Block& b : blocks) {
        Eigen::ComplexEigenSolver<CMat> es(b.H, false);
        if (es.info() != Eigen::Success) fail(ErrorKind::NonConvergence, "dense eigensolver failed on a symmetry block");
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) eig.push_back(es.eigenvalues()(i));
    }
    finish_report(rep, std::move(eig), tolerances().null);
    return rep;
}

// Shift-invert subspace iteration with Rayleigh-Ritz on the full space.
SpectrumReport sparse_spectrum(const SpMat& Lrow, int n, const SpectrumOptions& opt) {
    const ColSp L(Lrow);
    const Eigen::Index dim = L.rows();
    SpectrumReport rep;
    rep.n_sites = n;
    rep.norm = max_row_sum(Lrow);
    rep.method = "shift-invert";
    const int k = static_cast<int>(std::min<Eigen::Index>(opt.k, dim));
    const int b = static_cast<int>(std::min<Eigen::Index>(k + std::max(8, k), dim));

    ColSp shifted = L;
    ColSp id(dim, dim);
    id.setIdentity();
    shifted += cplx(opt.shift) * id;
    Eigen::SparseLU<ColSp> lu;
    lu.analyzePattern(shifted);
    lu.factorize(shifted);
    if (lu.info() != Eigen::Success) fail(ErrorKind::NumericalFailure, "sparse LU of the shifted generator failed");

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g;
    CMat V(dim, b);
    for (Eigen::Index i = 0; i < V.size(); ++i) V.data()[i] = cplx(g(rng), g(rng));
    V = Eigen::HouseholderQR<CMat>(V).householderQ() * CMat::Identity(dim, b);

    std::vector<cplx> theta;
    double worst = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        CMat W = lu.solve(V);
        V = Eigen::HouseholderQR<CMat>(W).householderQ() * CMat::Identity(dim, b);
        const CMat LV = L * V;
        const CMat H = V.adjoint() * LV;
        Eigen::ComplexEigenSolver<CMat> es(H);
        std::vector<int> order(static_cast<std::size_t>(b));
        for (int i = 0; i < b; ++i) order[static_cast<std::size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int x, int y) {
            return std::abs(es.eigenvalues()(x)) < std::abs(es.eigenvalues()(y));
        });
        CMat Y(b, b);
        theta.assign(static_cast<std::size_t>(b), 0.0);
        for (int i = 0; i < b; ++i) {
            Y.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
            theta[static_cast<std::size_t>(i)] = es.eigenvalues()(order[static_cast<std::size_t>(i)]);
        }
        const CMat X = V * Y;
        const CMat R = LV * Y - X * Eigen::Map<const CVec>(theta.data(), b).asDiagonal();
        worst = 0.0;
        for (int i = 0; i < k; ++i) worst = std::max(worst, R.col(i).norm() / X.col(i).norm());
        if (worst < opt.residual_tol * rep.norm) {
            theta.resize(static_cast<std::size_t>(k));
            finish_report(rep, theta, tolerances().null);
            return rep;
        }
        V = Eigen::HouseholderQR<CMat>(X).householderQ() * CMat::Identity(dim, b);
    }
    fail(ErrorKind::NonConvergence, "shift-invert iteration did not converge, worst residual " + std::to_string(worst));
}

}  // namespace

double max_row_sum(const SpMat& L) {
    double best = 0.0;
    for (Eigen::Index r = 0; r < L.outerSize(); ++r) {
        double s = 0.0;
        for (SpMat::InnerIterator it(L, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

SpectrumReport spectrum(const SpMat& L, int n_sites, const SpectrumOptions& opt) {
    if (opt.mode == SpectrumMode::Dense) {
        if (n_sites > tolerances().dense_max_sites) fail(ErrorKind::InvalidInput, "dense spectrum limited to 4^N <= 65536");
        return dense_spectrum(L, n_sites, opt);
    }
    return sparse_spectrum(L, n_sites, opt);
}

SpectrumReport spectrum(const LindbladSpec& spec, const SpectrumOptions& opt) {
    return spectrum(assemble_lindbladian(spec).factors.front(), spec.n_sites, opt);
}

std::vector<VecState> steady_state_basis(const LindbladSpec& spec) {
    const int n = spec.n_sites;
    if (n > tolerances().dense_max_sites) fail(ErrorKind::InvalidInput, "kernel extraction limited to N <= 8");
    const SpMat Lrow = assemble_lindbladian(spec).factors.front();
    const ColSp L(Lrow);
    const double norm = max_row_sum(Lrow);
    const double cut = tolerances().null * norm;
    const bool use_charge = conserves_charge(L);
    const bool use_momentum = translation_invariant(L, n);
    std::vector<VecState> basis;
    for (const Block& b : build_blocks(L, n, use_charge, use_momentum)) {
        Eigen::BDCSVD<CMat> svd(b.H, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) >= cut) continue;
            const CVec v = lift(b, svd.matrixV().col(i), n, use_momentum);
            if ((Lrow * v).norm() >= 1e-9 * norm) fail(ErrorKind::NumericalFailure, "kernel vector residual above 1e-9 ||L||");
            basis.push_back(VecState{n, v});
        }
    }
    return basis;
}

double span_residual(const std::vector<VecState>& basis, const CVec& v) {
    CVec r = v;
    // Basis vectors are orthonormal, so one projection pass suffices; a
    // second pass guards against rounding.
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis) r -= b.amp * b.amp.dot(r);
    return r.norm();
}

std::vector<GapPoint> gap_scan(const std::string& model, const std::function<LindbladSpec(int)>& make, const std::vector<int>& sizes,
                               const SpectrumOptions& opt, int threads) {
    std::vector<GapPoint> out(sizes.size());
    parallel_for(sizes.size(), threads, [&](std::size_t i) {
        GapPoint& p = out[i];
        p.model = model;
        p.n_sites = sizes[i];
        try {
            const SpectrumReport r = spectrum(make(sizes[i]), opt);
            p.gap = r.gap;
            p.null_dim = r.null_dim;
            p.method = r.method;
            p.ok = r.gap > 0.0;
            if (!p.ok) p.error = "no non-zero eigenvalue found";
        } catch (const std::exception& e) {
            p.ok = false;
            p.error = e.what();
        }
    });
    return out;
}

FitReport linear_fit(const std::vector<std::pair<double, double>>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3) fail(ErrorKind::InvalidInput, "a fit needs at least three points");
    double mx = 0, my = 0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) fail(ErrorKind::InvalidInput, "fit abscissae are all equal");
    FitReport f;
    f.n_points = n;
    f.c = sxy / sxx;
    f.d = my - f.c * mx;
    double ssr = 0;
    for (const auto& [x, y] : points) ssr += std::pow(y - (f.c * x + f.d), 2);
    const double s2 = ssr / (n - 2);
    f.stderr_c = std::sqrt(s2 / sxx);
    f.stderr_d = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    return f;
}

FitReport loglog_fit(const std::vector<std::pair<double, double>>& points) {
    std::vector<std::pair<double, double>> logs;
    for (const auto& [n, gap] : points) {
        if (!(n > 0.0) || !(gap > 0.0)) fail(ErrorKind::InvalidInput, "log-log fit needs positive sizes and gaps");
        logs.emplace_back(std::log10(n), std::log10(gap));
    }
    return linear_fit(logs);
}

}  // namespace qca
