#pragma once

// Doubled-space conventions used throughout the engine.
//
// Sites are 0-based; site 0 is the most significant digit and is printed
// leftmost in bitstrings. A ket |a> has index sum_j a_j 2^(N-1-j). The
// operator |a><b| vectorizes site by site: site j contributes the base-4
// digit 2*a_j + b_j, so the doubled index is sum_j (2 a_j + b_j) 4^(N-1-j).
//
// Worked N=2 table (doubled index <- ket,bra):
//   0 <- |00><00|   1 <- |00><01|   2 <- |01><00|   3 <- |01><01|
//   4 <- |00><10|   5 <- |00><11|   6 <- |01><10|   7 <- |01><11|
//   8 <- |10><00|   9 <- |10><01|  10 <- |11><00|  11 <- |11><01|
//  12 <- |10><10|  13 <- |10><11|  14 <- |11><10|  15 <- |11><11|
//
// In this ordering rho -> A rho B acts on one site as A (x) B^T, so a Kraus
// term K rho K^dagger is K (x) K^*.

#include "qca/core.hpp"

#include <map>
#include <string>
#include <vector>

namespace qca {

// Spread the bits of x so that bit i lands on bit 2i.
inline std::uint64_t spread_bits(std::uint64_t x) {
    std::uint64_t out = 0;
    for (int i = 0; x != 0; ++i, x >>= 1) out |= (x & 1u) << (2 * i);
    return out;
}

// Inverse of spread_bits on the even bit positions.
inline std::uint64_t gather_bits(std::uint64_t x) {
    std::uint64_t out = 0;
    for (int i = 0; x != 0; ++i, x >>= 2) out |= (x & 1u) << i;
    return out;
}

inline std::uint64_t doubled_index(std::uint64_t ket, std::uint64_t bra) {
    return (spread_bits(ket) << 1) | spread_bits(bra);
}
inline std::uint64_t ket_of(std::uint64_t doubled) { return gather_bits(doubled >> 1); }
inline std::uint64_t bra_of(std::uint64_t doubled) { return gather_bits(doubled); }

int log2_exact(std::int64_t dim);  // -1 when dim is not a power of two
int log4_exact(std::int64_t dim);  // -1 when dim is not a power of four

template <typename Scalar>
DenseVec<Scalar> vectorize(const DenseMat<Scalar>& rho) {
    const std::int64_t d = rho.rows();
    if (rho.cols() != d || log2_exact(d) < 0) fail(ErrorKind::InvalidInput, "vectorize: dimension is not a power of two");
    DenseVec<Scalar> v(d * d);
    for (std::int64_t b = 0; b < d; ++b)
        for (std::int64_t a = 0; a < d; ++a) v(doubled_index(a, b)) = rho(a, b);
    return v;
}

template <typename Scalar>
DenseMat<Scalar> devectorize(const DenseVec<Scalar>& v) {
    const int n = log4_exact(v.size());
    if (n < 0) fail(ErrorKind::InvalidInput, "devectorize: length is not a power of four");
    const std::int64_t d = pow2(n);
    DenseMat<Scalar> rho(d, d);
    for (std::int64_t b = 0; b < d; ++b)
        for (std::int64_t a = 0; a < d; ++a) rho(a, b) = v(doubled_index(a, b));
    return rho;
}

struct VecState {
    int n_sites = 0;
    CVec amp;

    cplx trace() const;
};

VecState make_state(const CMat& rho);
CMat to_matrix(const VecState& s);

// Pure basis state from a bitstring such as "001" (site 0 leftmost).
VecState basis_state(const std::string& bits);
CVec ket_from_bits(const std::string& bits);
VecState pure_state(const CVec& ket);

struct LocalOperator {
    std::vector<int> support;  // 0-based, contiguous on the ring
    CMat matrix;               // 2^k x 2^k, first support site most significant
};

namespace ops {
CMat I();
CMat P0();
CMat P1();
CMat sigma_minus();  // |0><1|
CMat sigma_plus();   // |1><0|
CMat X();
CMat Y();
CMat Z();
CMat kron(const std::vector<CMat>& factors);
CMat identity(int k);
}  // namespace ops

// Normalize a support modulo N and check that it is duplicate-free and
// contiguous on the ring.
std::vector<int> normalize_support(const std::vector<int>& support, int n_sites);

// Doubled-space matrix (4^k x 4^k) of rho -> A rho B on k sites.
CMat sandwich(const CMat& A, const CMat& B);

// Place a doubled-space local matrix on `support` of an N-site chain.
SpMat embed_local(const std::vector<int>& support, const CMat& doubled, int n_sites);

// Place a Hilbert-space local operator (2^k x 2^k) on an N-site chain.
SpMat embed_hilbert(const LocalOperator& op, int n_sites);

enum class SuperOpKind { DiscreteStep, Generator };

struct SuperOp {
    int n_sites = 0;
    SuperOpKind kind = SuperOpKind::Generator;
    std::string model;
    std::map<std::string, double> params;
    // Factors are applied in order, first factor first. Generators carry one.
    std::vector<SpMat> factors;

    SpMat matrix() const;
    CVec apply(const CVec& v) const;
    VecState apply(const VecState& s) const;
    std::int64_t dim() const { return pow4(n_sites); }
};

// Concatenate discrete steps: `first` then `second`.
SuperOp compose(const SuperOp& first, const SuperOp& second);

struct HamiltonianTerm {
    LocalOperator op;
    double coefficient = 0.0;
};

struct Jump {
    LocalOperator op;  // the jump without its rate; effective operator is sqrt(rate) * op
    double rate = 0.0;
    std::string label;
};

struct LindbladSpec {
    int n_sites = 0;
    std::vector<HamiltonianTerm> hamiltonian;
    std::vector<Jump> jumps;
    std::string model;
    std::map<std::string, double> params;

    bool has_hamiltonian() const;
};

void validate(const LindbladSpec& spec);

double kraus_residual(const std::vector<CMat>& kraus);

// Channel sum_mu K ⊗ K^* on the shared support of `kraus`.
SuperOp kraus_to_superop(const std::vector<LocalOperator>& kraus, int n_sites);

// Local doubled-space generator for every term sitting on one support.
CMat local_generator(const std::vector<const HamiltonianTerm*>& h, const std::vector<const Jump*>& jumps, int k);

SuperOp assemble_lindbladian(const LindbladSpec& spec);

// Heisenberg-picture generator L^dagger[O] as a dense 2^N operator, with O a
// sum of local terms.
CMat apply_adjoint_generator(const LindbladSpec& spec, const std::vector<LocalOperator>& observable);

}  // namespace qca
