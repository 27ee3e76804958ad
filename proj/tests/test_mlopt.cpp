#include "doctest.h"
#include "oracle.hpp"

#include "qca/mlopt.hpp"

#include <algorithm>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

using namespace qca;

namespace {

Eigen::MatrixXd reference_Q(const MLWeights& w, int n) { return oracle::rate_matrix(n, oracle::ml_jumps(w.w, n)); }

double reference_cost(const MLWeights& w, const TrainingSet& set) {
    double c = 0.0;
    for (const auto& p : set.pairs) {
        const int n = static_cast<int>(p.x.size());
        Eigen::VectorXd e = Eigen::VectorXd::Zero(1L << n);
        e(static_cast<long>(std::stoul(p.x, nullptr, 2))) = 1.0;
        const Eigen::VectorXd out = (reference_Q(w, n) * (10.0 * n * n)).exp() * e;
        const double f0 = out(0), f1 = out(out.size() - 1);
        // sigma(y) = -1 for y = 0 and +1 for y = 1
        const double sy = p.y == 1 ? 1.0 : -1.0;
        c += sy * f0 - sy * f1;
    }
    return c;
}

}  // namespace

TEST_CASE("default training set") {
    const TrainingSet s = TrainingSet::defaults();
    CHECK(s.pairs.size() == 11u);
    CHECK(s.pairs[4].x == "11000");
    CHECK(s.pairs[4].y == 0);
    TrainingSet bad = s;
    bad.pairs.push_back({"10a1", 1});
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero weights give C = -2") {
    // nothing moves: only the two uniform states contribute, each with -1
    CHECK(ml_cost(MLWeights{}, TrainingSet::defaults()) == doctest::Approx(-2.0));
}

TEST_CASE("published weights against the hand-built reference") {
    const MLWeights w = MLWeights::published();
    const CostReport rep = ml_cost_detail(w, TrainingSet::defaults());
    CHECK(rep.cost == doctest::Approx(reference_cost(w, TrainingSet::defaults())).epsilon(1e-9));
    CHECK(rep.cost == doctest::Approx(-8.40495).epsilon(1e-5));
    int bad = 0;
    for (const auto& s : rep.states)
        if (s.misclassified) {
            ++bad;
            CHECK(s.x == "11000");
        }
    CHECK(bad == 1);
}

TEST_CASE("cost terms are bounded by the two uniform weights (property)") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5; ++t) {
        MLWeights w;
        for (int k = 1; k < 7; ++k) w.w[static_cast<std::size_t>(k)] = u(rng);
        const CostReport rep = ml_cost_detail(w, TrainingSet::defaults());
        for (const auto& s : rep.states) {
            CHECK(s.f0 >= -1e-12);
            CHECK(s.f1 >= -1e-12);
            CHECK(s.f0 + s.f1 <= 1.0 + 1e-12);
            CHECK(std::abs(s.term) <= 1.0 + 1e-12);
        }
        CHECK(rep.cost == doctest::Approx(reference_cost(w, TrainingSet::defaults())).epsilon(1e-8));
    }
}

TEST_CASE("optimizer descends from the published point, stays in the box and is deterministic") {
    OptimizeOptions opt;
    opt.restarts = 2;
    opt.max_evals = 80;
    opt.start_from_initial = true;
    opt.initial = MLWeights::published();
    const OptimizeResult a = optimize_weights(TrainingSet::defaults(), opt);
    CHECK(a.start_cost == doctest::Approx(-8.40495).epsilon(1e-5));
    CHECK(a.cost <= a.start_cost + 1e-12);
    CHECK(a.restart_costs.size() == 2u);
    CHECK(a.weights.w[0] == 0.0);
    CHECK(a.weights.w[7] == 0.0);
    for (double v : a.weights.w) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    const OptimizeResult b = optimize_weights(TrainingSet::defaults(), opt);
    CHECK(a.cost == b.cost);
    CHECK(a.weights.w == b.weights.w);
}

TEST_CASE("truncation floors to three decimals") {
    MLWeights w;
    w.w[1] = 0.98765;
    w.w[2] = 0.0439;
    const MLWeights t = truncate_weights(w);
    CHECK(t.w[1] == doctest::Approx(0.987));
    CHECK(t.w[2] == doctest::Approx(0.043));
}

TEST_CASE("worst-case majority time is attained by a majority start") {
    const WorstCase wc = ml_worst_case_time(MLWeights::published(), 5);
    CHECK(wc.time > 0.0);
    CHECK(2 * std::count(wc.state.begin(), wc.state.end(), '1') > 5);
    CHECK_THROWS_AS(ml_worst_case_time(MLWeights::published(), 2), Error);
}
