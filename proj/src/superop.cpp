#include "qca/superop.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace qca {

int log2_exact(std::int64_t dim) {
    if (dim <= 0 || (dim & (dim - 1)) != 0) return -1;
    int n = 0;
    while ((std::int64_t{1} << n) < dim) ++n;
    return n;
}

int log4_exact(std::int64_t dim) {
    const int n2 = log2_exact(dim);
    if (n2 < 0 || n2 % 2 != 0) return -1;
    return n2 / 2;
}

cplx VecState::trace() const {
    cplx t = 0;
    const std::int64_t d = pow2(n_sites);
    for (std::int64_t a = 0; a < d; ++a) t += amp(doubled_index(a, a));
    return t;
}

VecState make_state(const CMat& rho) {
    VecState s;
    s.amp = vectorize(rho);
    s.n_sites = log2_exact(rho.rows());
    return s;
}

CMat to_matrix(const VecState& s) { return devectorize(s.amp); }

CVec ket_from_bits(const std::string& bits) {
    const int n = static_cast<int>(bits.size());
    if (n == 0 || n > 30) fail(ErrorKind::InvalidInput, "bitstring length must be in [1, 30]");
    std::uint64_t idx = 0;
    for (char c : bits) {
        if (c != '0' && c != '1') fail(ErrorKind::InvalidInput, "bitstring may only contain '0' and '1': " + bits);
        idx = (idx << 1) | static_cast<std::uint64_t>(c == '1');
    }
    CVec ket = CVec::Zero(pow2(n));
    ket(static_cast<Eigen::Index>(idx)) = 1.0;
    return ket;
}

VecState pure_state(const CVec& ket) {
    const int n = log2_exact(ket.size());
    if (n < 0) fail(ErrorKind::InvalidInput, "ket dimension is not a power of two");
    VecState s;
    s.n_sites = n;
    s.amp = CVec::Zero(pow4(n));
    for (Eigen::Index b = 0; b < ket.size(); ++b) {
        if (ket(b) == cplx(0)) continue;
        for (Eigen::Index a = 0; a < ket.size(); ++a) s.amp(doubled_index(a, b)) = ket(a) * std::conj(ket(b));
    }
    return s;
}

VecState basis_state(const std::string& bits) { return pure_state(ket_from_bits(bits)); }

namespace ops {
CMat I() { return CMat::Identity(2, 2); }
CMat P0() {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 1;
    return m;
}
CMat P1() {
    CMat m = CMat::Zero(2, 2);
    m(1, 1) = 1;
    return m;
}
CMat sigma_minus() {
    CMat m = CMat::Zero(2, 2);
    m(0, 1) = 1;
    return m;
}
CMat sigma_plus() {
    CMat m = CMat::Zero(2, 2);
    m(1, 0) = 1;
    return m;
}
CMat X() {
    CMat m = CMat::Zero(2, 2);
    m(0, 1) = m(1, 0) = 1;
    return m;
}
CMat Y() {
    CMat m = CMat::Zero(2, 2);
    m(0, 1) = cplx(0, -1);
    m(1, 0) = cplx(0, 1);
    return m;
}
CMat Z() {
    CMat m = CMat::Zero(2, 2);
    m(0, 0) = 1;
    m(1, 1) = -1;
    return m;
}
CMat kron(const std::vector<CMat>& factors) {
    CMat out = CMat::Identity(1, 1);
    for (const CMat& f : factors) {
        CMat next(out.rows() * f.rows(), out.cols() * f.cols());
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                next.block(i * f.rows(), j * f.cols(), f.rows(), f.cols()) = out(i, j) * f;
        out = std::move(next);
    }
    return out;
}
CMat identity(int k) { return CMat::Identity(pow2(k), pow2(k)); }
}  // namespace ops

std::vector<int> normalize_support(const std::vector<int>& support, int n_sites) {
    if (n_sites <= 0) fail(ErrorKind::InvalidInput, "chain must have at least one site");
    if (support.empty()) fail(ErrorKind::InvalidInput, "empty support");
    std::vector<int> out;
    out.reserve(support.size());
    for (int s : support) out.push_back(((s % n_sites) + n_sites) % n_sites);
    std::set<int> uniq(out.begin(), out.end());
    if (uniq.size() != out.size()) fail(ErrorKind::InvalidInput, "support has duplicate sites after wrapping");
    const int k = static_cast<int>(out.size());
    if (k == n_sites) return out;
    for (int start : out) {
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) ok = uniq.count((start + i) % n_sites) > 0;
        if (ok) return out;
    }
    fail(ErrorKind::InvalidInput, "support is not contiguous on the ring");
}

CMat sandwich(const CMat& A, const CMat& B) {
    const Eigen::Index d = A.rows();
    const int k = log2_exact(d);
    if (k < 0 || A.cols() != d || B.rows() != d || B.cols() != d) fail(ErrorKind::InvalidInput, "sandwich: mismatched local dimensions");
    CMat out = CMat::Zero(d * d, d * d);
    for (Eigen::Index ai = 0; ai < d; ++ai)
        for (Eigen::Index aj = 0; aj < d; ++aj) {
            const cplx x = A(ai, aj);
            if (x == cplx(0)) continue;
            for (Eigen::Index bj = 0; bj < d; ++bj)
                for (Eigen::Index bi = 0; bi < d; ++bi) {
                    const cplx y = B(bj, bi);
                    if (y == cplx(0)) continue;
                    out(doubled_index(ai, bi), doubled_index(aj, bj)) += x * y;
                }
        }
    return out;
}

namespace {

using Triplet = Eigen::Triplet<cplx>;

// Scatter `local` (dimension base^k) onto a chain with `base` states per site.
void scatter_local(const std::vector<int>& support, const CMat& local, int n_sites, int bits_per_site,
                   std::vector<Triplet>& out) {
    const int k = static_cast<int>(support.size());
    const std::int64_t local_dim = std::int64_t{1} << (bits_per_site * k);
    if (local.rows() != local_dim || local.cols() != local_dim)
        fail(ErrorKind::InvalidInput, "local matrix dimension does not match its support");
    const std::uint64_t digit_mask = (std::uint64_t{1} << bits_per_site) - 1;

    std::vector<std::uint64_t> place(static_cast<std::size_t>(local_dim), 0);
    for (std::int64_t l = 0; l < local_dim; ++l) {
        std::uint64_t g = 0;
        for (int i = 0; i < k; ++i) {
            const std::uint64_t digit = (static_cast<std::uint64_t>(l) >> (bits_per_site * (k - 1 - i))) & digit_mask;
            g |= digit << (bits_per_site * (n_sites - 1 - support[i]));
        }
        place[static_cast<std::size_t>(l)] = g;
    }

    std::vector<int> env_shift;
    for (int site = 0; site < n_sites; ++site)
        if (std::find(support.begin(), support.end(), site) == support.end())
            env_shift.push_back(bits_per_site * (n_sites - 1 - site));
    const std::int64_t env_dim = std::int64_t{1} << (bits_per_site * static_cast<int>(env_shift.size()));

    std::vector<std::pair<std::int64_t, std::int64_t>> nz;
    for (std::int64_t c = 0; c < local_dim; ++c)
        for (std::int64_t r = 0; r < local_dim; ++r)
            if (local(r, c) != cplx(0)) nz.emplace_back(r, c);

    out.reserve(out.size() + static_cast<std::size_t>(env_dim) * nz.size());
    const int m = static_cast<int>(env_shift.size());
    for (std::int64_t e = 0; e < env_dim; ++e) {
        std::uint64_t base = 0;
        for (int i = 0; i < m; ++i) {
            const std::uint64_t digit = (static_cast<std::uint64_t>(e) >> (bits_per_site * (m - 1 - i))) & digit_mask;
            base |= digit << env_shift[i];
        }
        for (const auto& [r, c] : nz)
            out.emplace_back(static_cast<Eigen::Index>(base | place[r]), static_cast<Eigen::Index>(base | place[c]), local(r, c));
    }
}

SpMat from_triplets(std::int64_t dim, const std::vector<Triplet>& t) {
    SpMat m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    m.prune(cplx(0));
    m.makeCompressed();
    return m;
}

}  // namespace

SpMat embed_local(const std::vector<int>& support, const CMat& doubled, int n_sites) {
    const std::vector<int> s = normalize_support(support, n_sites);
    std::vector<Triplet> t;
    scatter_local(s, doubled, n_sites, 2, t);
    return from_triplets(pow4(n_sites), t);
}

SpMat embed_hilbert(const LocalOperator& op, int n_sites) {
    const std::vector<int> s = normalize_support(op.support, n_sites);
    std::vector<Triplet> t;
    scatter_local(s, op.matrix, n_sites, 1, t);
    return from_triplets(pow2(n_sites), t);
}

SpMat SuperOp::matrix() const {
    if (factors.empty()) {
        SpMat id(dim(), dim());
        id.setIdentity();
        return id;
    }
    SpMat m = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) m = (factors[i] * m).pruned();
    return m;
}

CVec SuperOp::apply(const CVec& v) const {
    if (v.size() != dim()) fail(ErrorKind::InvalidInput, "superoperator applied to a vector of the wrong length");
    CVec out = v;
    for (const SpMat& f : factors) out = f * out;
    return out;
}

VecState SuperOp::apply(const VecState& s) const { return VecState{s.n_sites, apply(s.amp)}; }

SuperOp compose(const SuperOp& first, const SuperOp& second) {
    if (first.n_sites != second.n_sites) fail(ErrorKind::InvalidInput, "compose: site counts differ");
    SuperOp out = first;
    out.kind = SuperOpKind::DiscreteStep;
    if (first.model != second.model) out.model = first.model + "+" + second.model;
    out.factors.insert(out.factors.end(), second.factors.begin(), second.factors.end());
    return out;
}

bool LindbladSpec::has_hamiltonian() const {
    return std::any_of(hamiltonian.begin(), hamiltonian.end(), [](const HamiltonianTerm& h) { return h.coefficient != 0.0; });
}

void validate(const LindbladSpec& spec) {
    if (spec.n_sites <= 0) fail(ErrorKind::InvalidInput, "spec has no sites");
    auto check_op = [&](const LocalOperator& op) {
        normalize_support(op.support, spec.n_sites);
        const std::int64_t d = pow2(static_cast<int>(op.support.size()));
        if (op.matrix.rows() != d || op.matrix.cols() != d) fail(ErrorKind::InvalidInput, "local operator dimension mismatch");
    };
    for (const auto& h : spec.hamiltonian) check_op(h.op);
    for (const auto& j : spec.jumps) {
        if (!(j.rate >= 0.0)) {
            std::ostringstream msg;
            msg << "jump '" << j.label << "' has negative rate " << j.rate;
            fail(ErrorKind::InvalidInput, msg.str());
        }
        check_op(j.op);
    }
}

double kraus_residual(const std::vector<CMat>& kraus) {
    if (kraus.empty()) return 1.0;
    CMat sum = CMat::Zero(kraus.front().cols(), kraus.front().cols());
    for (const CMat& k : kraus) sum += k.adjoint() * k;
    return (sum - CMat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();
}

SuperOp kraus_to_superop(const std::vector<LocalOperator>& kraus, int n_sites) {
    if (kraus.empty()) fail(ErrorKind::InvalidInput, "empty Kraus set");
    const std::vector<int> support = normalize_support(kraus.front().support, n_sites);
    std::vector<CMat> mats;
    for (const auto& k : kraus) {
        if (normalize_support(k.support, n_sites) != support) fail(ErrorKind::InvalidInput, "Kraus operators must share one support");
        mats.push_back(k.matrix);
    }
    const double res = kraus_residual(mats);
    if (res > tolerances().channel) {
        std::ostringstream msg;
        msg << "Kraus set is not trace preserving, residual " << res;
        fail(ErrorKind::ChannelInvalid, msg.str());
    }
    CMat local = CMat::Zero(mats.front().rows() * mats.front().rows(), mats.front().rows() * mats.front().rows());
    for (const CMat& k : mats) local += sandwich(k, k.adjoint());

    SuperOp op;
    op.n_sites = n_sites;
    op.kind = SuperOpKind::DiscreteStep;
    op.model = "kraus";
    op.factors.push_back(embed_local(support, local, n_sites));
    return op;
}

CMat local_generator(const std::vector<const HamiltonianTerm*>& h, const std::vector<const Jump*>& jumps, int k) {
    const CMat id = ops::identity(k);
    const Eigen::Index d = id.rows();
    CMat gen = CMat::Zero(d * d, d * d);
    CMat H = CMat::Zero(d, d);
    for (const auto* t : h) H += t->coefficient * t->op.matrix;
    if (!H.isZero(0.0)) gen += cplx(0, -1) * (sandwich(H, id) - sandwich(id, H));
    for (const auto* j : jumps) {
        if (j->rate == 0.0) continue;
        const CMat& L = j->op.matrix;
        const CMat LdL = L.adjoint() * L;
        gen += j->rate * (sandwich(L, L.adjoint()) - 0.5 * sandwich(LdL, id) - 0.5 * sandwich(id, LdL));
    }
    return gen;
}

SuperOp assemble_lindbladian(const LindbladSpec& spec) {
    validate(spec);
    // Terms on the same support are summed locally and embedded once.
    std::map<std::vector<int>, std::pair<std::vector<const HamiltonianTerm*>, std::vector<const Jump*>>> groups;
    for (const auto& h : spec.hamiltonian)
        if (h.coefficient != 0.0) groups[normalize_support(h.op.support, spec.n_sites)].first.push_back(&h);
    for (const auto& j : spec.jumps)
        if (j.rate != 0.0) groups[normalize_support(j.op.support, spec.n_sites)].second.push_back(&j);

    std::vector<Triplet> t;
    for (const auto& [support, terms] : groups) {
        const CMat local = local_generator(terms.first, terms.second, static_cast<int>(support.size()));
        scatter_local(support, local, spec.n_sites, 2, t);
    }
    SuperOp op;
    op.n_sites = spec.n_sites;
    op.kind = SuperOpKind::Generator;
    op.model = spec.model;
    op.params = spec.params;
    op.factors.push_back(from_triplets(pow4(spec.n_sites), t));
    return op;
}

CMat apply_adjoint_generator(const LindbladSpec& spec, const std::vector<LocalOperator>& observable) {
    validate(spec);
    const std::int64_t d = pow2(spec.n_sites);
    CMat O = CMat::Zero(d, d);
    for (const auto& term : observable) O += CMat(embed_hilbert(term, spec.n_sites));
    CMat H = CMat::Zero(d, d);
    for (const auto& h : spec.hamiltonian) H += h.coefficient * CMat(embed_hilbert(h.op, spec.n_sites));
    CMat out = cplx(0, 1) * (H * O - O * H);
    for (const auto& j : spec.jumps) {
        if (j.rate == 0.0) continue;
        const SpMat L = embed_hilbert(j.op, spec.n_sites);
        const SpMat Ld = L.adjoint();
        const CMat LdL = CMat(Ld * L);
        out += j.rate * (CMat(Ld * (O * L)) - 0.5 * (LdL * O + O * LdL));
    }
    return out;
}

}  // namespace qca
