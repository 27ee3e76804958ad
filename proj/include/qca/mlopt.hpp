#pragma once

#include "qca/models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qca {

struct TrainingPair {
    std::string x;  // bitstring, site 0 first
    int y = 0;
};

struct TrainingSet {
    std::vector<TrainingPair> pairs;

    static TrainingSet defaults();
    void validate() const;
};

struct StateScore {
    std::string x;
    int y = 0;
    double f0 = 0.0;  // weight on all-zeros at the horizon
    double f1 = 0.0;  // weight on all-ones at the horizon
    double term = 0.0;
    bool misclassified = false;  // the wrong uniform state wins or neither does
};

struct CostReport {
    double cost = 0.0;
    std::vector<StateScore> states;
};

// Horizon is tau_factor * N^2 for a state of length N.
CostReport ml_cost_detail(const MLWeights& weights, const TrainingSet& set, double tau_factor = 10.0);
double ml_cost(const MLWeights& weights, const TrainingSet& set, double tau_factor = 10.0);

struct OptimizeOptions {
    int restarts = 4;
    std::uint64_t seed = 1;
    double tol = 1e-4;
    int max_evals = 4000;
    int threads = 1;
    bool start_from_initial = false;  // first restart starts from `initial`
    MLWeights initial{};
};

struct OptimizeResult {
    MLWeights weights;  // w1 and w8 stay zero
    double cost = 0.0;
    double start_cost = 0.0;  // cost of the first restart's starting point
    int evaluations = 0;
    std::vector<double> restart_costs;
};

OptimizeResult optimize_weights(const TrainingSet& set, const OptimizeOptions& opt);

// Weights truncated to three decimals.
MLWeights truncate_weights(const MLWeights& w);

struct WorstCase {
    int n_sites = 0;
    double time = 0.0;
    std::string state;
};

// Longest time for <n>/N to exceed 0.99 over starts with more than N/2 ones.
WorstCase ml_worst_case_time(const MLWeights& weights, int n_sites, double dt = 0.05, double horizon = 5000.0);

}  // namespace qca
