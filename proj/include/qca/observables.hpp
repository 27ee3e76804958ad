#pragma once

#include "qca/superop.hpp"

#include <vector>

namespace qca {

// Probability distribution over computational basis states, either over all
// 2^N states (`states` empty) or over an explicit list of basis indices.
struct Distribution {
    int n_sites = 0;
    std::vector<std::uint64_t> states;
    RVec prob;

    std::uint64_t state_at(Eigen::Index i) const { return states.empty() ? static_cast<std::uint64_t>(i) : states[static_cast<std::size_t>(i)]; }
};

Distribution diagonal_of(const VecState& s);
VecState to_state(const Distribution& d);
Distribution point_mass(const std::string& bits);

double expval_sz(const VecState& s);
double expval_sz(const Distribution& d);

double density_n(const VecState& s);
double density_n(const Distribution& d);

// 2x2 reduced matrix of one site, traced in the doubled space.
CMat reduced_site_matrix(const VecState& s, int site);
RVec density_profile(const VecState& s);
RVec density_profile(const Distribution& d);

struct AlphaBeta {
    double alpha = 0.0;  // weight of |0..0><0..0| in the Fukś fixed point
    cplx beta = 0.0;     // Tr[|0..0><1..1| rho] = <1..1| rho |0..0>
};

AlphaBeta project_alpha_beta(const VecState& initial);
// a|0..0><0..0| + (1 - a)|1..1><1..1| plus the conserved coherence beta.
VecState fuks_fixed_point(int n_sites, const AlphaBeta& ab);

struct PhysicalityReport {
    double trace_error = 0.0;
    double hermiticity_residual = 0.0;
    double min_eigenvalue = 0.0;
    bool trace_ok = true;
    bool hermitian_ok = true;
    bool positive_ok = true;

    bool ok() const { return trace_ok && hermitian_ok && positive_ok; }
};

PhysicalityReport physicality_check(const VecState& s, double tol = 1e-8);

double trace_distance(const VecState& a, const VecState& b);
double fidelity(const VecState& a, const VecState& b);

VecState ghz_state(int n_sites);

}  // namespace qca
