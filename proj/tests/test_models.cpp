#include "doctest.h"
#include "oracle.hpp"

#include "qca/classical.hpp"
#include "qca/models.hpp"
#include "qca/observables.hpp"

#include <cmath>
#include <random>

using namespace qca;

namespace {

CMat centre_channel(const std::vector<CMat>& kraus) {
    CMat s = CMat::Zero(4, 4);
    for (const CMat& k : kraus) s += sandwich(k, k.adjoint());
    return s;
}

// Single-qubit generator of the given jumps, permuted into the engine's doubled ordering.
oracle::Mat one_site_generator(const std::vector<oracle::Mat>& jumps) {
    return oracle::to_engine(oracle::lindbladian_colstack(oracle::Mat::Zero(2, 2), jumps), 1);
}

}  // namespace

TEST_CASE("Fuks Kraus sets are complete across p") {
    for (int i = 1; i <= 20; ++i) {
        const double p = 0.5 * i / 20.0;
        const auto sets = fuks_kraus_sets(p);
        for (const auto& s : sets) CHECK(kraus_residual(s) < 1e-12);
    }
    CHECK_THROWS_AS(fuks_kraus_sets(0.0), Error);
    CHECK_THROWS_AS(fuks_kraus_sets(0.6), Error);
}

TEST_CASE("Fuks step at p = 1/2 empties an isolated one") {
    const VecState out = fuks_step({0.5, 1.0}, 3).apply(basis_state("010"));
    CHECK(std::abs(to_matrix(out)(0, 0) - 1.0) < 1e-14);
    CHECK(std::abs(out.trace() - 1.0) < 1e-14);
}

TEST_CASE("Fuks step approaches the identity on diagonal states as p -> 0") {
    const SuperOp step = fuks_step({1e-13, 1.0}, 4);
    for (std::uint64_t s = 0; s < 16; ++s) {
        const VecState in = make_state(oracle::ket_bits(BitString::from_index(s, 4).str()) * oracle::ket_bits(BitString::from_index(s, 4).str()).adjoint());
        CHECK((step.apply(in).amp - in.amp).norm() < 1e-11);
    }
}

TEST_CASE("controlled channel removes coherence between different control values") {
    const CMat local = controlled_local_channel(fuks_kraus_sets(0.2));
    CMat rho = CMat::Zero(8, 8);
    rho(0b000, 0b100) = 1.0;  // left control differs between ket and bra
    CHECK((local * vectorize<cplx>(rho)).norm() < 1e-15);
    rho.setZero();
    rho(0b000, 0b010) = 1.0;  // only the centre differs: damped but kept
    CHECK((local * vectorize<cplx>(rho)).norm() > 0.5);
}

TEST_CASE("schedules cover every centre and respect disjointness") {
    const auto f4 = fuks_schedule(4);
    CHECK(f4.phases.size() == 2);
    CHECK(f4.phases[0] == std::vector<int>{0, 2});  // centres 1, 3 (even in 1-based counting)
    CHECK(schedule_is_disjoint(f4, 4));
    CHECK_FALSE(schedule_is_disjoint(fuks_schedule(5), 5));
    CHECK(fuks_schedule(5, true).phases[0].size() == 3);
    CHECK(schedule_is_disjoint(bond_schedule(6), 6));
    CHECK_THROWS_AS(bond_schedule(5), Error);
    const auto mv = mv_schedule(9);
    CHECK(mv.phases.size() == 3);
    CHECK(schedule_is_disjoint(mv, 9));
}

TEST_CASE("jump counts") {
    for (int n = 3; n <= 6; ++n) {
        CHECK(fuks_lindblad({}, n).jumps.size() == static_cast<std::size_t>(6 * n));
        CHECK(dephasing_lindblad({0.3, 1.0}, n).jumps.size() == static_cast<std::size_t>(4 * n));
        CHECK(dephasing_lindblad({0.3, 1.0}, n).has_hamiltonian());
        CHECK_FALSE(dephasing_lindblad({0.0, 1.0}, n).has_hamiltonian());
    }
    // published ML weights have four non-zero entries
    CHECK(ml_lindblad(MLWeights::published(), 5).jumps.size() == 20u);
    CHECK_THROWS_AS(fuks_lindblad({0.25, -1.0}, 4), Error);
}

TEST_CASE("frozen neighbourhood: exp(L tau) equals the Kraus channel with p = (1 - e^{-gamma tau})/2") {
    const oracle::Mat L00 = one_site_generator({oracle::lower()});
    const oracle::Mat L11 = one_site_generator({oracle::raise()});
    const oracle::Mat Lmix = one_site_generator({std::sqrt(0.5) * oracle::lower(), std::sqrt(0.5) * oracle::raise()});
    for (int i = 1; i <= 10; ++i) {
        const double gt = 0.15 * i;
        const double p = p_from_gamma_tau(gt);
        CHECK(std::abs(p - 0.5 * (1.0 - std::exp(-gt))) < 1e-15);
        const auto sets = fuks_kraus_sets(p);
        CHECK((centre_channel(sets[0]) - oracle::Mat((L00 * gt).exp())).norm() < 1e-10);
        CHECK((centre_channel(sets[3]) - oracle::Mat((L11 * gt).exp())).norm() < 1e-10);
        // mixed neighbourhoods agree on populations only
        const oracle::Mat em = (Lmix * gt).exp();
        const CMat km = centre_channel(sets[1]);
        for (int a : {0, 3})
            for (int b : {0, 3}) CHECK(std::abs(km(a, b) - em(a, b)) < 1e-10);
    }
}

TEST_CASE("MV Kraus sets are complete and match the classical sublayers on N = 6") {
    CHECK(kraus_residual(mv_A_kraus()) < 1e-12);
    CHECK(kraus_residual(mv_B_kraus()) < 1e-12);
    const int n = 6;
    SuperOp A[3], B[3];
    for (int ph = 1; ph <= 3; ++ph) {
        A[ph - 1] = mv_A_step(n, ph);
        B[ph - 1] = mv_B_step(n, ph);
    }
    const LayerCounts lc = mv_layer_counts(n);
    int mismatches = 0;
    for (std::uint64_t s = 0; s < 64; ++s) {
        BitString c = BitString::from_index(s, n);
        VecState q = basis_state(c.str());
        for (int i = 0; i < lc.total; ++i) {
            const bool in_A = i < lc.tau_A;
            const int phase = (in_A ? i : i - lc.tau_A) % 3 + 1;
            c = in_A ? mv_A_classical(c, phase) : mv_B_classical(c, phase);
            q = in_A ? A[phase - 1].apply(q) : B[phase - 1].apply(q);
            const CMat rho = to_matrix(q);
            if (std::abs(rho(static_cast<Eigen::Index>(c.index()), static_cast<Eigen::Index>(c.index())) - 1.0) > 1e-12) ++mismatches;
        }
    }
    CHECK(mismatches == 0);
}

TEST_CASE("MV layer counts and padding") {
    const LayerCounts lc = mv_layer_counts(12);
    CHECK(lc.tau_A == 19);
    CHECK(lc.tau_B == 8);
    CHECK(lc.total == 27);
    CHECK(mv_layer_counts(6).total == 11);
    CHECK(mv_layer_counts(9).total == 17);
    CHECK(mv_pad("0000") == "000001");
    CHECK(mv_pad("11011") == "110110101");
    CHECK(mv_pad("111") == "111");
}

TEST_CASE("Fates rule steps reproduce elementary rules 184 and 232 on basis states") {
    std::mt19937_64 rng(2);
    for (int rule : {184, 232}) {
        for (const auto& sets : {fates_kraus_sets(rule)})
            for (const auto& s : sets) CHECK(kraus_residual(s) < 1e-12);
    }
    CHECK_THROWS_AS(fates_kraus_sets(110), Error);
    // the mixture is a valid channel on random states
    const SuperOp mix = fates_step(0.5, 4, fuks_schedule(4));
    for (int t = 0; t < 5; ++t) {
        const VecState out = mix.apply(make_state(oracle::random_density(16, rng)));
        CHECK(std::abs(out.trace() - 1.0) < 1e-12);
        CHECK(physicality_check(out).ok());
    }
}
