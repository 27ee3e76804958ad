#include "qca/observables.hpp"

#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>

namespace qca {

Distribution diagonal_of(const VecState& s) {
    Distribution d;
    d.n_sites = s.n_sites;
    const std::int64_t dim = pow2(s.n_sites);
    d.prob.resize(dim);
    for (std::int64_t a = 0; a < dim; ++a) d.prob(a) = s.amp(doubled_index(a, a)).real();
    return d;
}

VecState to_state(const Distribution& d) {
    VecState s;
    s.n_sites = d.n_sites;
    s.amp = CVec::Zero(pow4(d.n_sites));
    for (Eigen::Index i = 0; i < d.prob.size(); ++i) {
        const std::uint64_t a = d.state_at(i);
        s.amp(doubled_index(a, a)) += d.prob(i);
    }
    return s;
}

Distribution point_mass(const std::string& bits) {
    Distribution d;
    d.n_sites = static_cast<int>(bits.size());
    std::uint64_t idx = 0;
    for (char c : bits) idx = (idx << 1) | static_cast<std::uint64_t>(c == '1');
    d.states = {idx};
    d.prob = RVec::Ones(1);
    return d;
}

namespace {

template <typename F>
double diagonal_sum(const VecState& s, F&& weight) {
    double total = 0.0;
    const std::int64_t dim = pow2(s.n_sites);
    for (std::int64_t a = 0; a < dim; ++a) total += weight(static_cast<std::uint64_t>(a)) * s.amp(doubled_index(a, a)).real();
    return total;
}

template <typename F>
double diagonal_sum(const Distribution& d, F&& weight) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < d.prob.size(); ++i) total += weight(d.state_at(i)) * d.prob(i);
    return total;
}

}  // namespace

double expval_sz(const VecState& s) {
    const int n = s.n_sites;
    return diagonal_sum(s, [n](std::uint64_t a) { return 0.5 * (n - 2 * std::popcount(a)); });
}

double expval_sz(const Distribution& d) {
    const int n = d.n_sites;
    return diagonal_sum(d, [n](std::uint64_t a) { return 0.5 * (n - 2 * std::popcount(a)); });
}

double density_n(const VecState& s) {
    return diagonal_sum(s, [](std::uint64_t a) { return static_cast<double>(std::popcount(a)); });
}

double density_n(const Distribution& d) {
    return diagonal_sum(d, [](std::uint64_t a) { return static_cast<double>(std::popcount(a)); });
}

// The doubled digit of `site` sits at base-4 position N-1-site. Tracing
// the rest keeps only environment digits with ket = bra, i.e. digits 0 or 3.
CMat reduced_site_matrix(const VecState& s, int site) {
    const int n = s.n_sites;
    if (site < 0 || site >= n) fail(ErrorKind::InvalidInput, "site out of range");
    CMat r = CMat::Zero(2, 2);
    const int shift = 2 * (n - 1 - site);
    const std::int64_t env = pow2(n - 1);
    for (std::int64_t e = 0; e < env; ++e) {
        // Deposit environment bits into every site except `site`, as ket = bra.
        std::uint64_t base = 0;
        int bit = n - 2;
        for (int j = 0; j < n; ++j) {
            if (j == site) continue;
            const std::uint64_t v = (static_cast<std::uint64_t>(e) >> bit) & 1u;
            base |= (v * 3u) << (2 * (n - 1 - j));
            --bit;
        }
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) r(a, b) += s.amp(static_cast<Eigen::Index>(base | (static_cast<std::uint64_t>(2 * a + b) << shift)));
    }
    return r;
}

RVec density_profile(const VecState& s) {
    RVec p(s.n_sites);
    for (int j = 0; j < s.n_sites; ++j) p(j) = reduced_site_matrix(s, j)(1, 1).real();
    return p;
}

RVec density_profile(const Distribution& d) {
    RVec p = RVec::Zero(d.n_sites);
    for (Eigen::Index i = 0; i < d.prob.size(); ++i) {
        const std::uint64_t a = d.state_at(i);
        for (int j = 0; j < d.n_sites; ++j)
            if ((a >> (d.n_sites - 1 - j)) & 1u) p(j) += d.prob(i);
    }
    return p;
}

AlphaBeta project_alpha_beta(const VecState& initial) {
    const int n = initial.n_sites;
    AlphaBeta ab;
    // Tr[P0 rho] with P0 = sum_j (1 + Z_j)/2 counts zeros; dividing by N gives
    // the zero density, which is the weight that flows to |0..0>.
    ab.alpha = (n - density_n(initial)) / n;
    const std::uint64_t ones = static_cast<std::uint64_t>(pow2(n) - 1);
    // Tr[|0..0><1..1| rho] = <1..1| rho |0..0>.
    ab.beta = initial.amp(static_cast<Eigen::Index>(doubled_index(ones, 0)));
    return ab;
}

VecState fuks_fixed_point(int n_sites, const AlphaBeta& ab) {
    const std::int64_t d = pow2(n_sites);
    CMat rho = CMat::Zero(d, d);
    rho(0, 0) = ab.alpha;
    rho(d - 1, d - 1) = 1.0 - ab.alpha;
    // beta is read as <1..1|rho|0..0>, which the dynamics conserves, so it
    // goes back into the same matrix element.
    rho(d - 1, 0) = ab.beta;
    rho(0, d - 1) = std::conj(ab.beta);
    return make_state(rho);
}

PhysicalityReport physicality_check(const VecState& s, double tol) {
    const CMat rho = to_matrix(s);
    PhysicalityReport r;
    r.trace_error = std::abs(rho.trace() - cplx(1.0));
    r.hermiticity_residual = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    const CMat herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = es.eigenvalues().minCoeff();
    r.trace_ok = r.trace_error <= tol;
    r.hermitian_ok = r.hermiticity_residual <= tol;
    r.positive_ok = r.min_eigenvalue >= -tol;
    return r;
}

double trace_distance(const VecState& a, const VecState& b) {
    const CMat diff = to_matrix(a) - to_matrix(b);
    const CMat herm = 0.5 * (diff + diff.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2.
double fidelity(const VecState& a, const VecState& b) {
    const CMat ra = to_matrix(a), rb = to_matrix(b);
    Eigen::SelfAdjointEigenSolver<CMat> ea(0.5 * (ra + ra.adjoint()));
    const RVec la = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMat sa = ea.eigenvectors() * la.cast<cplx>().asDiagonal() * ea.eigenvectors().adjoint();
    const CMat m = sa * rb * sa;
    Eigen::SelfAdjointEigenSolver<CMat> em(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    const double root = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return root * root;
}

VecState ghz_state(int n_sites) {
    CVec ket = CVec::Zero(pow2(n_sites));
    ket(0) = ket(ket.size() - 1) = 1.0 / std::sqrt(2.0);
    return pure_state(ket);
}

}  // namespace qca
