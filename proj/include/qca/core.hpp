#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qca {

using cplx = std::complex<double>;

template <typename Scalar>
using DenseMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using CMat = DenseMat<cplx>;
using CVec = DenseVec<cplx>;
using RVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using SpRMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline constexpr const char* kEngineVersion = "0.3.0";

// Numerical tolerances shared by every module.
struct Tolerances {
    double channel = 1e-12;   // Kraus completeness residual
    double trace = 1e-10;     // trace preservation / annihilation
    double null = 1e-10;      // relative threshold for zero eigenvalues
    int dense_max_sites = 8;  // 4^N <= 65536
    std::int64_t dense_expm_dim = 4096;
};

inline const Tolerances& tolerances() {
    static const Tolerances t{};
    return t;
}

enum class ErrorKind {
    InvalidInput,
    ChannelInvalid,
    InvalidMethod,
    NotBasisPreserving,
    NonConvergence,
    NumericalFailure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline std::int64_t pow2(int n) { return std::int64_t{1} << n; }
inline std::int64_t pow4(int n) { return std::int64_t{1} << (2 * n); }

}  // namespace qca
