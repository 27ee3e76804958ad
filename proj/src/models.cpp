#include "qca/models.hpp"

#include <cmath>
#include <set>

namespace qca {

MLWeights MLWeights::published() {
    MLWeights m;
    m.w = {0.0, 1.000, 0.043, 0.0, 0.040, 0.0, 0.075, 0.0};
    return m;
}

PartitionSchedule fuks_schedule(int n_sites, bool odd_first) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "Fukś rule needs N >= 3");
    PartitionSchedule s;
    s.width = 3;
    s.centre_only = true;
    std::vector<int> even, odd;
    for (int c = 0; c < n_sites; ++c) {
        const int start = (c - 1 + n_sites) % n_sites;
        ((c + 1) % 2 == 0 ? even : odd).push_back(start);
    }
    s.phases = odd_first ? std::vector<std::vector<int>>{odd, even} : std::vector<std::vector<int>>{even, odd};
    return s;
}

PartitionSchedule bond_schedule(int n_sites) {
    if (n_sites < 2 || n_sites % 2 != 0) fail(ErrorKind::InvalidInput, "bond partition needs an even N >= 2");
    PartitionSchedule s;
    s.width = 2;
    std::vector<int> even, odd;
    for (int l = 0; l < n_sites; ++l) ((l + 1) % 2 == 0 ? even : odd).push_back(l);
    s.phases = {even, odd};
    return s;
}

PartitionSchedule mv_schedule(int n_sites) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "MV rule needs N >= 3");
    PartitionSchedule s;
    s.width = 3;
    const int triples = n_sites / 3;
    for (int offset = 0; offset < 3; ++offset) {
        std::vector<int> phase;
        for (int m = 0; m < triples; ++m) phase.push_back(offset + 3 * m);
        s.phases.push_back(phase);
    }
    return s;
}

bool schedule_is_disjoint(const PartitionSchedule& s, int n_sites) {
    for (const auto& phase : s.phases) {
        for (std::size_t i = 0; i < phase.size(); ++i) {
            std::set<int> written;
            if (s.centre_only) {
                written.insert((phase[i] + s.width / 2) % n_sites);
            } else {
                for (int w = 0; w < s.width; ++w) written.insert((phase[i] + w) % n_sites);
            }
            for (std::size_t j = 0; j < phase.size(); ++j) {
                if (i == j) continue;
                for (int w = 0; w < s.width; ++w)
                    if (written.count((phase[j] + w) % n_sites)) return false;
            }
        }
    }
    return true;
}

NeighbourhoodKraus fuks_kraus_sets(double p) {
    if (!(p > 0.0 && p <= 0.5)) fail(ErrorKind::InvalidInput, "Fukś probability must lie in (0, 1/2]");
    using namespace ops;
    const double damp = std::sqrt(1.0 - 2.0 * p);
    NeighbourhoodKraus k;
    k[0] = {P0() + damp * P1(), std::sqrt(2.0 * p) * sigma_minus()};
    k[1] = {std::sqrt(1.0 - p) * I(), std::sqrt(p) * X()};
    k[2] = k[1];
    k[3] = {P1() + damp * P0(), std::sqrt(2.0 * p) * sigma_plus()};
    return k;
}

NeighbourhoodKraus fates_kraus_sets(int rule) {
    using namespace ops;
    if (rule != 184 && rule != 232) fail(ErrorKind::InvalidInput, "Fatès mixes rules 184 and 232 only");
    NeighbourhoodKraus k;
    k[0] = {P0(), sigma_minus()};
    k[1] = {I()};
    k[2] = {rule == 184 ? X() : I()};
    k[3] = {P1(), sigma_plus()};
    return k;
}

CMat controlled_local_channel(const NeighbourhoodKraus& sets) {
    const CMat proj[2] = {sandwich(ops::P0(), ops::P0()), sandwich(ops::P1(), ops::P1())};
    CMat local = CMat::Zero(64, 64);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const auto& set = sets[2 * a + b];
            if (kraus_residual(set) > tolerances().channel)
                fail(ErrorKind::ChannelInvalid, "neighbourhood Kraus set is not trace preserving");
            CMat centre = CMat::Zero(4, 4);
            for (const CMat& k : set) centre += sandwich(k, k.adjoint());
            local += ops::kron({proj[a], centre, proj[b]});
        }
    return local;
}

SuperOp partitioned_step(const CMat& local, const PartitionSchedule& schedule, int n_sites, const std::string& model) {
    SuperOp op;
    op.n_sites = n_sites;
    op.kind = SuperOpKind::DiscreteStep;
    op.model = model;
    for (const auto& phase : schedule.phases)
        for (int start : phase) {
            std::vector<int> support;
            for (int w = 0; w < schedule.width; ++w) support.push_back(start + w);
            op.factors.push_back(embed_local(support, local, n_sites));
        }
    return op;
}

SuperOp fuks_step(const FuksParams& params, int n_sites, const PartitionSchedule& schedule) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "Fukś rule needs N >= 3");
    SuperOp op = partitioned_step(controlled_local_channel(fuks_kraus_sets(params.p)), schedule, n_sites, "fuks");
    op.params = {{"p", params.p}};
    return op;
}

SuperOp fuks_step(const FuksParams& params, int n_sites) { return fuks_step(params, n_sites, fuks_schedule(n_sites)); }

namespace {

LocalOperator three_site(int centre, const CMat& left, const CMat& mid, const CMat& right) {
    return LocalOperator{{centre - 1, centre, centre + 1}, ops::kron({left, mid, right})};
}

void check_gamma(double gamma) {
    if (!(gamma > 0.0)) fail(ErrorKind::InvalidInput, "decay rate gamma must be positive");
}

}  // namespace

LindbladSpec fuks_lindblad(const FuksParams& params, int n_sites) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "Fukś rule needs N >= 3");
    check_gamma(params.gamma);
    using namespace ops;
    LindbladSpec spec;
    spec.n_sites = n_sites;
    spec.model = "fuks";
    spec.params = {{"gamma", params.gamma}};
    const double g = params.gamma;
    for (int j = 0; j < n_sites; ++j) {
        auto site = [&](int c) { return (c + n_sites) % n_sites; };
        auto add = [&](const CMat& l, const CMat& m, const CMat& r, double rate, const char* name) {
            LocalOperator op = three_site(j, l, m, r);
            for (int& s : op.support) s = site(s);
            spec.jumps.push_back({op, rate, std::string(name) + "@" + std::to_string(j)});
        };
        add(P0(), sigma_minus(), P0(), g, "L1");
        add(P0(), sigma_minus(), P1(), g / 2, "L2");
        add(P0(), sigma_plus(), P1(), g / 2, "L3");
        add(P1(), sigma_minus(), P0(), g / 2, "L4");
        add(P1(), sigma_plus(), P0(), g / 2, "L5");
        add(P1(), sigma_plus(), P1(), g, "L6");
    }
    return spec;
}

LindbladSpec dephasing_lindblad(const DephasingParams& params, int n_sites) {
    if (n_sites < 2) fail(ErrorKind::InvalidInput, "Dephasing rule needs N >= 2");
    check_gamma(params.gamma);
    using namespace ops;
    CVec psi_p = CVec::Zero(4), psi_m = CVec::Zero(4), zz = CVec::Zero(4), oo = CVec::Zero(4);
    const double r = 1.0 / std::sqrt(2.0);
    psi_p(1) = r;
    psi_p(2) = r;
    psi_m(1) = r;
    psi_m(2) = -r;
    zz(0) = 1;
    oo(3) = 1;
    const CMat hop = kron({X(), X()}) + kron({Y(), Y()});

    LindbladSpec spec;
    spec.n_sites = n_sites;
    spec.model = "dephasing";
    spec.params = {{"gamma", params.gamma}, {"omega", params.omega}};
    for (int j = 0; j < n_sites; ++j) {
        const std::vector<int> bond{j, (j + 1) % n_sites};
        if (params.omega != 0.0) spec.hamiltonian.push_back({LocalOperator{bond, hop}, params.omega});
        const std::pair<const CVec*, const char*> projectors[] = {{&zz, "P00"}, {&psi_p, "Ppsi+"}, {&psi_m, "Ppsi-"}, {&oo, "P11"}};
        for (const auto& [v, name] : projectors)
            spec.jumps.push_back({LocalOperator{bond, (*v) * v->adjoint()}, params.gamma, std::string(name) + "@" + std::to_string(j)});
    }
    return spec;
}

LindbladSpec restrict_to_parity(const LindbladSpec& spec, int anchor_offset, bool even) {
    LindbladSpec out = spec;
    auto keep = [&](const LocalOperator& op) {
        const int anchor = op.support.at(static_cast<std::size_t>(anchor_offset));
        return ((anchor + 1) % 2 == 0) == even;
    };
    out.hamiltonian.clear();
    out.jumps.clear();
    for (const auto& h : spec.hamiltonian)
        if (keep(h.op)) out.hamiltonian.push_back(h);
    for (const auto& j : spec.jumps)
        if (keep(j.op)) out.jumps.push_back(j);
    out.model = spec.model + (even ? ":even" : ":odd");
    return out;
}

std::vector<CMat> mv_A_kraus() {
    using namespace ops;
    const CMat k0 = kron({P1(), sigma_minus(), sigma_plus()});
    const CMat k1 = identity(3) - kron({P1(), P1(), P0()});
    return {k0, k1};
}

std::vector<CMat> mv_B_kraus() {
    using namespace ops;
    const CMat k0 = kron({P0(), sigma_minus(), P0()});
    const CMat k1 = kron({P1(), P1(), sigma_plus()});
    const CMat k2 = kron({sigma_plus(), P1(), P1()});
    const CMat k3 = identity(3) - (kron({P0(), P1(), P0()}) + kron({P1(), P1(), P0()}) + kron({P0(), P1(), P1()}));
    return {k0, k1, k2, k3};
}

namespace {

SuperOp mv_step(const std::vector<CMat>& kraus, int n_sites, int phase, const std::string& model) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "MV rule needs N >= 3");
    if (phase < 0 || phase > 3) fail(ErrorKind::InvalidInput, "MV phase must be 0 (all) or 1..3");
    if (kraus_residual(kraus) > tolerances().channel) fail(ErrorKind::ChannelInvalid, "MV Kraus set is not trace preserving");
    CMat local = CMat::Zero(64, 64);
    for (const CMat& k : kraus) local += sandwich(k, k.adjoint());
    PartitionSchedule s = mv_schedule(n_sites);
    if (phase != 0) s.phases = {s.phases[static_cast<std::size_t>(phase - 1)]};
    SuperOp op = partitioned_step(local, s, n_sites, model);
    op.params = {{"phase", phase}};
    return op;
}

}  // namespace

SuperOp mv_A_step(int n_sites, int phase) { return mv_step(mv_A_kraus(), n_sites, phase, "mv_A"); }
SuperOp mv_B_step(int n_sites, int phase) { return mv_step(mv_B_kraus(), n_sites, phase, "mv_B"); }

MVLindblads mv_lindblads(int n_sites) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "MV rule needs N >= 3");
    const auto a = mv_A_kraus();
    const auto b = mv_B_kraus();
    MVLindblads out;
    out.A.n_sites = out.B.n_sites = n_sites;
    out.A.model = "mv_A";
    out.B.model = "mv_B";
    for (int j = 0; j < n_sites; ++j) {
        const std::vector<int> support{(j - 1 + n_sites) % n_sites, j, (j + 1) % n_sites};
        const std::string at = "@" + std::to_string(j);
        out.A.jumps.push_back({LocalOperator{support, a[0]}, 1.0, "La0" + at});
        for (int k = 0; k < 3; ++k) out.B.jumps.push_back({LocalOperator{support, b[static_cast<std::size_t>(k)]}, 1.0, "Lb" + std::to_string(k) + at});
    }
    return out;
}

LayerCounts mv_layer_counts(int n_sites) {
    if (n_sites < 3 || n_sites % 3 != 0) fail(ErrorKind::InvalidInput, "layer counts need N mod 3 = 0; pad the input first");
    LayerCounts c;
    c.tau_A = 4 * (n_sites / 2) - 5;
    c.tau_B = 2 * n_sites / 3;
    c.total = c.tau_A + c.tau_B;
    return c;
}

std::string mv_pad(const std::string& bits) {
    switch (bits.size() % 3) {
        case 1: return bits + "01";
        case 2: return bits + "0101";
        default: return bits;
    }
}

SuperOp fates_rule_step(int rule, int n_sites, const PartitionSchedule& schedule) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "Fatès rule needs N >= 3");
    SuperOp op = partitioned_step(controlled_local_channel(fates_kraus_sets(rule)), schedule, n_sites, "fates" + std::to_string(rule));
    op.params = {{"rule", rule}};
    return op;
}

SuperOp fates_step(double p, int n_sites, const PartitionSchedule& schedule) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidInput, "Fatès probability must lie in [0, 1]");
    const SpMat m184 = fates_rule_step(184, n_sites, schedule).matrix();
    const SpMat m232 = fates_rule_step(232, n_sites, schedule).matrix();
    SuperOp op;
    op.n_sites = n_sites;
    op.kind = SuperOpKind::DiscreteStep;
    op.model = "fates";
    op.params = {{"p", p}};
    op.factors.push_back((cplx(p) * m184 + cplx(1.0 - p) * m232).pruned());
    return op;
}

LindbladSpec ml_lindblad(const MLWeights& weights, int n_sites) {
    if (n_sites < 3) fail(ErrorKind::InvalidInput, "ML family needs N >= 3");
    for (double w : weights.w)
        if (!(w >= 0.0)) fail(ErrorKind::InvalidInput, "ML weights must be non-negative");
    using namespace ops;
    // Jump k (1-based) is P_a sigma^{+/-} P_b with a = (k-1)/4, b = ((k-1)/2) % 2
    // and raising for odd k.
    LindbladSpec spec;
    spec.n_sites = n_sites;
    spec.model = "ml";
    for (int k = 0; k < 8; ++k) spec.params["w" + std::to_string(k + 1)] = weights.w[static_cast<std::size_t>(k)];
    const CMat proj[2] = {P0(), P1()};
    for (int j = 0; j < n_sites; ++j) {
        const std::vector<int> support{(j - 1 + n_sites) % n_sites, j, (j + 1) % n_sites};
        for (int k = 0; k < 8; ++k) {
            const double w = weights.w[static_cast<std::size_t>(k)];
            if (w == 0.0) continue;
            const int a = k / 4, b = (k / 2) % 2;
            const CMat mid = (k % 2 == 0) ? sigma_plus() : sigma_minus();
            spec.jumps.push_back({LocalOperator{support, kron({proj[a], mid, proj[b]})}, w, "w" + std::to_string(k + 1) + "@" + std::to_string(j)});
        }
    }
    return spec;
}

}  // namespace qca
