#pragma once

#include "qca/observables.hpp"
#include "qca/superop.hpp"

#include <unordered_map>

namespace qca {

// How one jump acts on computational basis states of its support.
struct BasisAction {
    std::vector<int> support;
    std::vector<int> target;     // local output configuration, -1 when annihilated
    std::vector<double> weight;  // rate * |amplitude|^2
    std::string label;
};

bool is_basis_preserving(const LindbladSpec& spec, std::string* offending = nullptr);
std::vector<BasisAction> compile_basis_actions(const LindbladSpec& spec);

// Call f(target, rate) for every transition out of basis state s. Self
// loops are skipped because they cancel against the diagonal.
template <typename F>
void for_each_transition(const std::vector<BasisAction>& actions, std::uint64_t s, int n_sites, F&& f) {
    for (const auto& act : actions) {
        const int k = static_cast<int>(act.support.size());
        int local = 0;
        for (int i = 0; i < k; ++i) local = (local << 1) | static_cast<int>((s >> (n_sites - 1 - act.support[i])) & 1u);
        const int out = act.target[static_cast<std::size_t>(local)];
        if (out < 0 || out == local) continue;
        std::uint64_t t = s;
        for (int i = 0; i < k; ++i) {
            const std::uint64_t bit = std::uint64_t{1} << (n_sites - 1 - act.support[i]);
            if ((out >> (k - 1 - i)) & 1) t |= bit;
            else t &= ~bit;
        }
        f(t, act.weight[static_cast<std::size_t>(local)]);
    }
}

// Q[s', s] = sum_k rate_k |<s'|L_k|s>|^2 with the diagonal set to minus the
// column sum, over all 2^N basis states.
SpRMat diagonal_rate_matrix(const LindbladSpec& spec);

// Markov generator restricted to the states reachable from `seeds`.
struct MarkovChain {
    int n_sites = 0;
    std::vector<std::uint64_t> states;
    std::unordered_map<std::uint64_t, Eigen::Index> index;
    SpRMat Q;
    bool lumped = false;  // states are rotation classes, keyed by their smallest rotation
};

// Smallest value among the N cyclic rotations of s.
std::uint64_t canonical_rotation(std::uint64_t s, int n_sites);
bool rotation_invariant(const LindbladSpec& spec);

// With lump_rotations the chain lives on rotation classes. Because the
// generator commutes with translations the lumped chain is exact for every
// rotation-invariant observable, at roughly 1/N of the state count.
MarkovChain reachable_chain(const LindbladSpec& spec, const std::vector<std::uint64_t>& seeds, std::size_t max_states = 4'000'000,
                            bool lump_rotations = false);

// p(t) = exp(Q t) p by uniformization.
RVec markov_evolve(const SpRMat& Q, const RVec& p, double t, double tol = 1e-15);

}  // namespace qca
