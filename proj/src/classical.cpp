#include "qca/classical.hpp"

#include "qca/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace qca {

BitString BitString::parse(const std::string& s) {
    BitString b(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1') fail(ErrorKind::InvalidInput, "bitstring may only contain '0' and '1': " + s);
        b.bits_[i] = static_cast<std::uint8_t>(s[i] == '1');
    }
    return b;
}

int BitString::popcount() const { return static_cast<int>(std::count(bits_.begin(), bits_.end(), 1)); }

bool BitString::uniform() const {
    return std::all_of(bits_.begin(), bits_.end(), [&](std::uint8_t v) { return v == bits_.front(); });
}

std::string BitString::str() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = bits_[i] ? '1' : '0';
    return s;
}

std::uint64_t BitString::index() const {
    std::uint64_t idx = 0;
    for (auto v : bits_) idx = (idx << 1) | v;
    return idx;
}

BitString BitString::from_index(std::uint64_t idx, int n) {
    BitString b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) b.bits_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((idx >> (n - 1 - i)) & 1u);
    return b;
}

BitString eca_step(int rule, const BitString& b) {
    if (rule != 170 && rule != 184 && rule != 232 && rule != 240) fail(ErrorKind::InvalidInput, "unsupported ECA rule " + std::to_string(rule));
    const long n = static_cast<long>(b.size());
    BitString out(b.size());
    for (long i = 0; i < n; ++i) {
        const int hood = 4 * b.at(i - 1) + 2 * b.at(i) + b.at(i + 1);
        out.set(i, (rule >> hood) & 1);
    }
    return out;
}

BitString fuks_classical_step(double p, const BitString& b, std::mt19937_64& rng) {
    if (!(p > 0.0 && p <= 0.5)) fail(ErrorKind::InvalidInput, "Fukś probability must lie in (0, 1/2]");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const long n = static_cast<long>(b.size());
    BitString out(b.size());
    for (long i = 0; i < n; ++i) {
        const double x = u(rng);
        out.set(i, x < p ? b.at(i + 1) : x < 2 * p ? b.at(i - 1) : b.at(i));
    }
    return out;
}

long fuks_absorption_time(double p, BitString b, std::mt19937_64& rng, long max_steps) {
    for (long t = 0; t <= max_steps; ++t) {
        if (b.uniform()) return t;
        b = fuks_classical_step(p, b, rng);
    }
    return -1;
}

namespace {

template <typename F>
BitString apply_triples(const BitString& b, int phase, F&& rule) {
    if (phase < 1 || phase > 3) fail(ErrorKind::InvalidInput, "MV phase must be 1, 2 or 3");
    const long n = static_cast<long>(b.size());
    BitString out = b;
    for (long s = phase - 1; s + 3 <= n + phase - 1 && s < n; s += 3) {
        int l = b.at(s), c = b.at(s + 1), r = b.at(s + 2);
        rule(l, c, r);
        out.set(s, l);
        out.set(s + 1, c);
        out.set(s + 2, r);
    }
    return out;
}

}  // namespace

BitString mv_A_classical(const BitString& b, int phase) {
    return apply_triples(b, phase, [](int& l, int& c, int& r) {
        if (l == 1 && c == 1 && r == 0) {
            c = 0;
            r = 1;
        }
    });
}

BitString mv_B_classical(const BitString& b, int phase) {
    return apply_triples(b, phase, [](int& l, int& c, int& r) {
        if (l == 0 && c == 1 && r == 0) c = 0;
        else if (l == 1 && c == 1 && r == 0) r = 1;
        else if (l == 0 && c == 1 && r == 1) l = 1;
    });
}

int tau_formula(int n_sites) {
    if (n_sites < 3 || n_sites % 3 != 0) fail(ErrorKind::InvalidInput, "closed-form layer count needs N mod 3 = 0");
    return 4 * (n_sites / 2) + 2 * n_sites / 3 - 5;
}

Classification mv_classify(const BitString& input) {
    const int n = static_cast<int>(input.size());
    if (n % 3 != 0) fail(ErrorKind::InvalidInput, "classification needs N mod 3 = 0; pad the input first");
    const int tau_A = 4 * (n / 2) - 5;
    const int tau_B = 2 * n / 3;
    Classification c;
    BitString b = input;
    int first_uniform = b.uniform() ? 0 : -1;
    for (int i = 0; i < tau_A; ++i) {
        BitString next = mv_A_classical(b, i % 3 + 1);
        if (!(next == b)) c.a_settled = i + 1;
        b = std::move(next);
        if (first_uniform < 0 && b.uniform()) first_uniform = i + 1;
    }
    for (int j = 0; j < tau_B; ++j) {
        b = mv_B_classical(b, j % 3 + 1);
        if (first_uniform < 0 && b.uniform()) first_uniform = tau_A + j + 1;
    }
    if (!b.uniform()) fail(ErrorKind::NumericalFailure, "classification failure: " + input.str() + " ends at " + b.str());
    c.label = b.at(0);
    c.layers_used = first_uniform;
    return c;
}

double gamma_tau_from_p(double p) {
    if (!(p >= 0.0)) fail(ErrorKind::InvalidInput, "probability must be non-negative");
    if (p >= 0.5) return std::numeric_limits<double>::infinity();
    return -std::log1p(-2.0 * p);
}

double p_from_gamma_tau(double gamma_tau) {
    if (gamma_tau < 0.0) fail(ErrorKind::InvalidInput, "gamma tau must be non-negative");
    return -0.5 * std::expm1(-gamma_tau);
}

ExhaustiveReport mv_verify_exhaustive(int n_sites, int threads) {
    if (n_sites % 3 != 0 || n_sites < 3) fail(ErrorKind::InvalidInput, "exhaustive check needs N mod 3 = 0");
    if (n_sites > 24) fail(ErrorKind::InvalidInput, "exhaustive check limited to N <= 24");
    ExhaustiveReport rep;
    rep.n_sites = n_sites;
    rep.bound = tau_formula(n_sites);
    rep.total = 1L << n_sites;
    const int chunks = 64;
    std::vector<ExhaustiveReport> part(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        ExhaustiveReport& r = part[c];
        for (long s = static_cast<long>(c); s < rep.total; s += chunks) {
            const BitString b = BitString::from_index(static_cast<std::uint64_t>(s), n_sites);
            // Ties go to all-zeros.
            const int expected = 2 * b.popcount() > n_sites ? 1 : 0;
            try {
                const Classification cl = mv_classify(b);
                if (cl.label == expected) {
                    ++r.correct;
                    if (cl.layers_used > r.max_layers) {
                        r.max_layers = cl.layers_used;
                        r.worst_witness = b.str();
                    }
                } else if (r.failures.size() < 8) {
                    r.failures.push_back(b.str());
                }
            } catch (const Error&) {
                if (r.failures.size() < 8) r.failures.push_back(b.str());
            }
        }
    });
    for (const auto& r : part) {
        rep.correct += r.correct;
        if (r.max_layers > rep.max_layers || (r.max_layers == rep.max_layers && !r.worst_witness.empty() && (rep.worst_witness.empty() || r.worst_witness < rep.worst_witness))) {
            rep.max_layers = r.max_layers;
            rep.worst_witness = r.worst_witness;
        }
        for (const auto& f : r.failures)
            if (rep.failures.size() < 8) rep.failures.push_back(f);
    }
    std::sort(rep.failures.begin(), rep.failures.end());
    return rep;
}

}  // namespace qca
