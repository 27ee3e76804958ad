#include "qca/markov.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace qca {

namespace {

// Returns an empty optional-like action when the jump is not a scaled
// partial permutation of basis states.
bool build_action(const Jump& j, int n_sites, BasisAction& act) {
    const CMat& m = j.op.matrix;
    const Eigen::Index d = m.rows();
    act.support = normalize_support(j.op.support, n_sites);
    act.target.assign(static_cast<std::size_t>(d), -1);
    act.weight.assign(static_cast<std::size_t>(d), 0.0);
    act.label = j.label;
    std::vector<int> hits(static_cast<std::size_t>(d), 0);
    for (Eigen::Index c = 0; c < d; ++c) {
        int count = 0;
        for (Eigen::Index r = 0; r < d; ++r) {
            if (m(r, c) == cplx(0)) continue;
            ++count;
            act.target[static_cast<std::size_t>(c)] = static_cast<int>(r);
            act.weight[static_cast<std::size_t>(c)] = j.rate * std::norm(m(r, c));
            ++hits[static_cast<std::size_t>(r)];
        }
        if (count > 1) return false;
    }
    // Two inputs landing on one output would make L^dagger L non-diagonal.
    return std::all_of(hits.begin(), hits.end(), [](int h) { return h <= 1; });
}

}  // namespace

bool is_basis_preserving(const LindbladSpec& spec, std::string* offending) {
    if (spec.has_hamiltonian()) {
        if (offending) *offending = "hamiltonian";
        return false;
    }
    for (const auto& j : spec.jumps) {
        BasisAction act;
        if (!build_action(j, spec.n_sites, act)) {
            if (offending) *offending = j.label;
            return false;
        }
    }
    return true;
}

std::vector<BasisAction> compile_basis_actions(const LindbladSpec& spec) {
    validate(spec);
    if (spec.has_hamiltonian()) fail(ErrorKind::NotBasisPreserving, "spec has a Hamiltonian, diagonal restriction is not exact");
    std::vector<BasisAction> out;
    for (const auto& j : spec.jumps) {
        if (j.rate == 0.0) continue;
        BasisAction act;
        if (!build_action(j, spec.n_sites, act)) fail(ErrorKind::NotBasisPreserving, "jump '" + j.label + "' does not map basis states to basis states");
        out.push_back(std::move(act));
    }
    return out;
}

SpRMat diagonal_rate_matrix(const LindbladSpec& spec) {
    const auto actions = compile_basis_actions(spec);
    const int n = spec.n_sites;
    if (n > 26) fail(ErrorKind::InvalidInput, "full rate matrix limited to N <= 26; use reachable_chain");
    const std::int64_t dim = pow2(n);
    std::vector<Eigen::Triplet<double>> t;
    for (std::int64_t s = 0; s < dim; ++s) {
        double out = 0.0;
        for_each_transition(actions, static_cast<std::uint64_t>(s), n, [&](std::uint64_t target, double w) {
            t.emplace_back(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(s), w);
            out += w;
        });
        if (out != 0.0) t.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), -out);
    }
    SpRMat q(dim, dim);
    q.setFromTriplets(t.begin(), t.end());
    q.makeCompressed();
    return q;
}

std::uint64_t canonical_rotation(std::uint64_t s, int n_sites) {
    const std::uint64_t mask = (n_sites >= 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << n_sites) - 1;
    std::uint64_t best = s, x = s;
    for (int r = 1; r < n_sites; ++r) {
        x = ((x << 1) | (x >> (n_sites - 1))) & mask;
        best = std::min(best, x);
    }
    return best;
}

bool rotation_invariant(const LindbladSpec& spec) {
    // Compare the multiset of (shifted support, matrix, rate) of every jump
    // against the jumps of the translated chain.
    const int n = spec.n_sites;
    auto key = [&](const Jump& j, int shift) {
        std::string k;
        for (int s : j.op.support) k += std::to_string((s + shift) % n) + ",";
        k += "|" + std::to_string(j.rate) + "|";
        for (Eigen::Index i = 0; i < j.op.matrix.size(); ++i) {
            const cplx v = j.op.matrix.data()[i];
            k += std::to_string(std::round(v.real() * 1e12)) + ":" + std::to_string(std::round(v.imag() * 1e12)) + ";";
        }
        return k;
    };
    std::vector<std::string> base, moved;
    for (const auto& j : spec.jumps) {
        base.push_back(key(j, 0));
        moved.push_back(key(j, 1));
    }
    std::sort(base.begin(), base.end());
    std::sort(moved.begin(), moved.end());
    return base == moved;
}

MarkovChain reachable_chain(const LindbladSpec& spec, const std::vector<std::uint64_t>& seeds, std::size_t max_states, bool lump_rotations) {
    const auto actions = compile_basis_actions(spec);
    if (lump_rotations && !rotation_invariant(spec)) fail(ErrorKind::InvalidInput, "rotation lumping needs a translation-invariant generator");
    MarkovChain mc;
    mc.n_sites = spec.n_sites;
    mc.lumped = lump_rotations;
    auto canon = [&](std::uint64_t s) { return lump_rotations ? canonical_rotation(s, spec.n_sites) : s; };
    std::deque<std::uint64_t> queue;
    auto visit = [&](std::uint64_t s) {
        if (mc.index.count(s)) return;
        if (mc.states.size() >= max_states) fail(ErrorKind::NumericalFailure, "reachable state space exceeds the configured limit");
        mc.index.emplace(s, static_cast<Eigen::Index>(mc.states.size()));
        mc.states.push_back(s);
        queue.push_back(s);
    };
    for (std::uint64_t s : seeds) visit(canon(s));
    std::vector<Eigen::Triplet<double>> t;
    while (!queue.empty()) {
        const std::uint64_t s = queue.front();
        queue.pop_front();
        const Eigen::Index col = mc.index.at(s);
        double out = 0.0;
        for_each_transition(actions, s, spec.n_sites, [&](std::uint64_t raw, double w) {
            const std::uint64_t target = canon(raw);
            if (target == s) return;
            visit(target);
            t.emplace_back(mc.index.at(target), col, w);
            out += w;
        });
        if (out != 0.0) t.emplace_back(col, col, -out);
    }
    const auto dim = static_cast<Eigen::Index>(mc.states.size());
    mc.Q.resize(dim, dim);
    mc.Q.setFromTriplets(t.begin(), t.end());
    mc.Q.makeCompressed();
    return mc;
}

RVec markov_evolve(const SpRMat& Q, const RVec& p, double t, double tol) {
    if (t < 0.0) fail(ErrorKind::InvalidInput, "negative evolution time");
    double lam = 0.0;
    for (Eigen::Index i = 0; i < Q.outerSize(); ++i) lam = std::max(lam, -Q.coeff(i, i));
    if (lam == 0.0 || t == 0.0) return p;
    // Chunks keep the Poisson weight e^{-lam dt} well above underflow.
    const double max_chunk = 30.0;
    const int chunks = static_cast<int>(std::ceil(lam * t / max_chunk));
    const double x = lam * t / chunks;
    RVec cur = p;
    for (int c = 0; c < chunks; ++c) {
        RVec term = cur;
        double w = std::exp(-x);
        RVec acc = w * term;
        double cum = w;
        for (int k = 1; 1.0 - cum > tol && k < 10000; ++k) {
            term += (Q * term) / lam;
            w *= x / k;
            acc += w * term;
            cum += w;
            if (k > x && w < tol * 1e-3) break;
        }
        cur = acc;
    }
    return cur;
}

}  // namespace qca
