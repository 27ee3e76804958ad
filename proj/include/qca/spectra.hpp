#pragma once

#include "qca/superop.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qca {

enum class SpectrumMode { Dense, Sparse };

struct SpectrumOptions {
    SpectrumMode mode = SpectrumMode::Dense;
    // Dense mode splits by conserved charge and lattice momentum when the
    // generator has those symmetries; off means one full dense problem.
    bool use_symmetry = true;
    // Sparse mode: eigenvalues wanted nearest zero, shift sigma and limits.
    int k = 12;
    double shift = 1e-3;
    int max_iter = 3000;
    double residual_tol = 1e-11;
    unsigned seed = 7;
};

struct SpectrumReport {
    int n_sites = 0;
    std::vector<cplx> eigenvalues;  // sorted by |lambda|
    int null_dim = 0;
    double gap = 0.0;
    double norm = 0.0;              // max row sum of |L|
    double null_threshold = 0.0;
    double max_real = 0.0;          // largest Re(lambda) among non-zero eigenvalues
    std::string method;
    std::vector<std::string> warnings;
};

double max_row_sum(const SpMat& L);

SpectrumReport spectrum(const LindbladSpec& spec, const SpectrumOptions& opt = {});
SpectrumReport spectrum(const SpMat& L, int n_sites, const SpectrumOptions& opt = {});

// Orthonormal kernel basis of the generator, each vector with
// ||L v|| < 1e-9 ||L||.
std::vector<VecState> steady_state_basis(const LindbladSpec& spec);

// Norm of the component of v orthogonal to the span of `basis`.
double span_residual(const std::vector<VecState>& basis, const CVec& v);

struct GapPoint {
    std::string model;
    int n_sites = 0;
    double gap = 0.0;
    int null_dim = 0;
    std::string method;
    bool ok = false;
    std::string error;
};

std::vector<GapPoint> gap_scan(const std::string& model, const std::function<LindbladSpec(int)>& make,
                               const std::vector<int>& sizes, const SpectrumOptions& opt = {}, int threads = 1);

struct FitReport {
    double c = 0.0;
    double d = 0.0;
    double stderr_c = 0.0;
    double stderr_d = 0.0;
    int n_points = 0;
};

// Least squares of log10(gap) = c log10(N) + d.
FitReport loglog_fit(const std::vector<std::pair<double, double>>& points);

// Ordinary least squares y = b x + q on raw values.
FitReport linear_fit(const std::vector<std::pair<double, double>>& points);

}  // namespace qca
