#pragma once

#include "qca/core.hpp"

#include <random>
#include <string>
#include <vector>

namespace qca {

// Periodic bit configuration; site 0 is printed leftmost.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::size_t n) : bits_(n, 0) {}
    static BitString parse(const std::string& s);

    std::size_t size() const { return bits_.size(); }
    int at(long i) const {
        const long n = static_cast<long>(bits_.size());
        return bits_[static_cast<std::size_t>(((i % n) + n) % n)];
    }
    void set(long i, int v) {
        const long n = static_cast<long>(bits_.size());
        bits_[static_cast<std::size_t>(((i % n) + n) % n)] = static_cast<std::uint8_t>(v != 0);
    }
    int popcount() const;
    bool uniform() const;
    std::string str() const;
    std::uint64_t index() const;  // site 0 most significant
    static BitString from_index(std::uint64_t idx, int n);

    bool operator==(const BitString& o) const { return bits_ == o.bits_; }

private:
    std::vector<std::uint8_t> bits_;
};

// Synchronous elementary CA update for rules 170, 184, 232 and 240.
BitString eca_step(int rule, const BitString& b);

// Each cell independently copies its right neighbour (rule 170) with
// probability p, its left neighbour (rule 240) with probability p, or keeps
// its value.
BitString fuks_classical_step(double p, const BitString& b, std::mt19937_64& rng);

// Steps until the configuration is uniform, or -1 past max_steps.
long fuks_absorption_time(double p, BitString b, std::mt19937_64& rng, long max_steps);

// One MV sublayer at triples starting on sites phase-1, phase+2, ...
BitString mv_A_classical(const BitString& b, int phase);
BitString mv_B_classical(const BitString& b, int phase);

struct Classification {
    int label = -1;
    int layers_used = 0;  // first sublayer index after which the state is uniform
    int a_settled = 0;    // last phase-A sublayer that changed the state
};

// Runs tau_A sublayers of A, then tau_B of B, cycling phases 1, 2, 3.
Classification mv_classify(const BitString& b);

int tau_formula(int n_sites);

// gamma tau = -ln(1 - 2p); infinite at p = 1/2.
double gamma_tau_from_p(double p);
double p_from_gamma_tau(double gamma_tau);

struct ExhaustiveReport {
    int n_sites = 0;
    long total = 0;
    long correct = 0;
    int max_layers = 0;
    int bound = 0;
    std::string worst_witness;
    std::vector<std::string> failures;  // first few misclassified inputs

    bool all_correct() const { return total == correct; }
};

ExhaustiveReport mv_verify_exhaustive(int n_sites, int threads = 1);

}  // namespace qca
