#include "doctest.h"
#include "oracle.hpp"

#include "qca/models.hpp"
#include "qca/observables.hpp"
#include "qca/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace qca;

namespace {

// Smallest non-zero |Re lambda| of the reference generator by a plain dense solve.
double reference_gap(const oracle::Mat& L) {
    Eigen::ComplexEigenSolver<oracle::Mat> es(L, false);
    double gap = 1e300;
    for (const auto& ev : es.eigenvalues())
        if (std::abs(ev) > 1e-8) gap = std::min(gap, std::abs(ev.real()));
    return gap;
}

}  // namespace

TEST_CASE("Fuks kernel is four-dimensional for N = 3, 4, 5") {
    for (int n = 3; n <= 5; ++n) {
        const SpectrumReport r = spectrum(fuks_lindblad({}, n));
        CHECK(r.null_dim == 4);
        // closed form of the slowest diffusive mode
        CHECK(r.gap == doctest::Approx(2.0 * (1.0 - std::cos(M_PI / n))).epsilon(1e-8));
    }
}

TEST_CASE("spectral gap agrees with a brute-force eigen-solve of the reference generator") {
    CHECK(spectrum(fuks_lindblad({}, 3)).gap == doctest::Approx(reference_gap(oracle::fuks_generator(3, 1.0))).epsilon(1e-8));
    CHECK(spectrum(dephasing_lindblad({0.0, 1.0}, 4)).gap == doctest::Approx(reference_gap(oracle::dephasing_generator(4, 0.0, 1.0))).epsilon(1e-8));
}

TEST_CASE("GHZ and the alpha-beta family lie in the kernel span") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u;
    for (int n = 3; n <= 5; ++n) {
        const auto basis = steady_state_basis(fuks_lindblad({}, n));
        CHECK(basis.size() == 4u);
        CHECK(span_residual(basis, ghz_state(n).amp) < 1e-9);
        for (int k = 0; k < 5; ++k) {
            AlphaBeta ab{u(rng), cplx(0.3 * u(rng), 0.3 * u(rng))};
            CHECK(span_residual(basis, fuks_fixed_point(n, ab).amp) < 1e-9);
        }
        // a generic basis state is not stationary
        CHECK(span_residual(basis, basis_state(std::string(static_cast<std::size_t>(n - 1), '0') + "1").amp) > 1e-3);
    }
}

TEST_CASE("symmetry-blocked and full dense spectra coincide") {
    SpectrumOptions full;
    full.use_symmetry = false;
    for (const auto& spec : {fuks_lindblad({}, 4), dephasing_lindblad({0.5, 1.0}, 4)}) {
        const SpectrumReport a = spectrum(spec);
        const SpectrumReport b = spectrum(spec, full);
        REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
        std::vector<double> ra, rb, ia, ib;
        for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) {
            ra.push_back(a.eigenvalues[i].real());
            rb.push_back(b.eigenvalues[i].real());
            ia.push_back(a.eigenvalues[i].imag());
            ib.push_back(b.eigenvalues[i].imag());
        }
        for (auto* v : {&ra, &rb, &ia, &ib}) std::sort(v->begin(), v->end());
        double err = 0.0;
        for (std::size_t i = 0; i < ra.size(); ++i) err = std::max({err, std::abs(ra[i] - rb[i]), std::abs(ia[i] - ib[i])});
        CHECK(err < 1e-8);
        CHECK(a.null_dim == b.null_dim);
    }
}

TEST_CASE("sparse shift-invert finds the dense gap") {
    SpectrumOptions sp;
    sp.mode = SpectrumMode::Sparse;
    sp.k = 8;
    const SpectrumReport s = spectrum(fuks_lindblad({}, 5), sp);
    const SpectrumReport d = spectrum(fuks_lindblad({}, 5));
    CHECK(s.gap == doctest::Approx(d.gap).epsilon(1e-6));
    CHECK(s.null_dim == 4);
}

TEST_CASE("Dephasing kernel has one state per magnetization sector") {
    for (int n = 4; n <= 5; ++n) CHECK(spectrum(dephasing_lindblad({0.0, 1.0}, n)).null_dim == n + 1);
    CHECK(spectrum(dephasing_lindblad({0.0, 1.0}, 6)).gap == doctest::Approx(1.0 - std::cos(2.0 * M_PI / 6)).epsilon(1e-8));
}

TEST_CASE("eigenvalues of a generator never have positive real part (property)") {
    for (const auto& spec : {fuks_lindblad({}, 4), dephasing_lindblad({1.2, 0.4}, 4), ml_lindblad(MLWeights::published(), 4)}) {
        const SpectrumReport r = spectrum(spec);
        CHECK(r.max_real < 1e-9);
        CHECK(r.norm > 0.0);
    }
}

TEST_CASE("fits recover synthetic parameters") {
    std::vector<std::pair<double, double>> pts;
    for (int n = 3; n <= 9; ++n) pts.push_back({double(n), 3.0 * std::pow(double(n), -2.0)});
    const FitReport f = loglog_fit(pts);
    CHECK(f.c == doctest::Approx(-2.0));
    CHECK(f.d == doctest::Approx(std::log10(3.0)));
    CHECK(f.stderr_c < 1e-10);
    CHECK(f.n_points == 7);
    std::vector<std::pair<double, double>> lin{{6, 9.0}, {9, 16.2}, {12, 23.4}};
    const FitReport g = linear_fit(lin);
    CHECK(g.c == doctest::Approx(2.4));
    CHECK(g.d == doctest::Approx(-5.4));
}

TEST_CASE("gap scan reports failures per size instead of aborting") {
    const auto pts = gap_scan("fuks", [](int n) { return fuks_lindblad({}, n); }, {2, 3, 4});
    REQUIRE(pts.size() == 3u);
    CHECK_FALSE(pts[0].ok);
    CHECK(pts[1].ok);
    CHECK(pts[2].gap == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-8));
}
