#pragma once

#include "qca/superop.hpp"

#include <array>
#include <string>
#include <vector>

namespace qca {

struct FuksParams {
    double p = 0.25;
    double gamma = 1.0;
};

struct DephasingParams {
    double omega = 0.0;
    double gamma = 1.0;
};

// w[0..7] hold w1..w8.
struct MLWeights {
    std::array<double, 8> w{};

    static MLWeights published();
};

// Each phase lists the first site of every neighbourhood updated in it.
struct PartitionSchedule {
    int width = 3;
    bool centre_only = false;  // only the middle cell of each neighbourhood changes
    std::vector<std::vector<int>> phases;
};

// Even centres then odd centres (1-based parity); neighbourhoods start one
// site left of their centre.
PartitionSchedule fuks_schedule(int n_sites, bool odd_first = false);
// Bonds whose left cell is even, then odd (1-based). Needs even N.
PartitionSchedule bond_schedule(int n_sites);
// Three shifted tilings of disjoint triples, offsets 0, 1, 2.
PartitionSchedule mv_schedule(int n_sites);

// True when, inside every phase, no updated cell is read or written by
// another neighbourhood of the same phase. Fukś on odd N is the exception
// the engine tolerates: its phases are applied site by site in ascending order.
bool schedule_is_disjoint(const PartitionSchedule& s, int n_sites);

// Kraus sets of a centre-updating rule, indexed by neighbourhood 2a + b.
using NeighbourhoodKraus = std::array<std::vector<CMat>, 4>;

NeighbourhoodKraus fuks_kraus_sets(double p);
NeighbourhoodKraus fates_kraus_sets(int rule);  // 184 or 232

// 64x64 doubled-space map sum_ab |aa><aa| (x) K^(ab) (x) |bb><bb|.
CMat controlled_local_channel(const NeighbourhoodKraus& sets);

// Apply a three-site doubled-space map at every neighbourhood of the schedule.
SuperOp partitioned_step(const CMat& local, const PartitionSchedule& schedule, int n_sites, const std::string& model);

SuperOp fuks_step(const FuksParams& params, int n_sites, const PartitionSchedule& schedule);
SuperOp fuks_step(const FuksParams& params, int n_sites);

LindbladSpec fuks_lindblad(const FuksParams& params, int n_sites);
LindbladSpec dephasing_lindblad(const DephasingParams& params, int n_sites);

// Keep the terms whose anchor site has the requested 1-based parity. The
// anchor is support[anchor_offset]: the centre for three-site rules, the
// left cell for bonds.
LindbladSpec restrict_to_parity(const LindbladSpec& spec, int anchor_offset, bool even);

// MV Kraus operators on (j-1, j, j+1).
std::vector<CMat> mv_A_kraus();
std::vector<CMat> mv_B_kraus();

// One sublayer (phase 1, 2 or 3) or, with phase 0, the full triple.
SuperOp mv_A_step(int n_sites, int phase = 0);
SuperOp mv_B_step(int n_sites, int phase = 0);

struct MVLindblads {
    LindbladSpec A;
    LindbladSpec B;
};
MVLindblads mv_lindblads(int n_sites);

struct LayerCounts {
    int tau_A = 0;
    int tau_B = 0;
    int total = 0;
};
LayerCounts mv_layer_counts(int n_sites);

// Pad to N mod 3 = 0 by appending "01" or "0101".
std::string mv_pad(const std::string& bits);

// Ensemble channel p * S184 + (1 - p) * S232 of one step.
SuperOp fates_step(double p, int n_sites, const PartitionSchedule& schedule);
// The deterministic full step of a single rule.
SuperOp fates_rule_step(int rule, int n_sites, const PartitionSchedule& schedule);

LindbladSpec ml_lindblad(const MLWeights& weights, int n_sites);

}  // namespace qca
