#pragma once
// Ground-truth benchmark: random linear SEMs with known DAGs, presence
// labels with planted effects, and an interventional Monte-Carlo oracle for
// the ATE estimator.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "habitat/notears.hpp"
#include "habitat/util.hpp"
#include "habitat/json.hpp"

namespace habitat {

struct SyntheticSpec {
    int d = 10;
    double expected_edges = 10.0;
    std::pair<double, double> weight_range{0.5, 1.5};       // |weight| range, random sign
    std::pair<double, double> noise_sigma_range{0.5, 1.0};
    int n = 1000;
    std::map<int, double> presence_coeffs;  // variable index -> logit coefficient
    double intercept = 0.0;
    std::uint64_t seed = 0;

    static SyntheticSpec from_json(const json& j);
    json to_json() const;
};

struct SemSample {
    WeightedDag dag;            // ground-truth weights
    Eigen::VectorXd noise_sigma;
    DataMatrix data;
};

// Ancestral sampling of X = W^T X + sigma .* eps in topological order.
Eigen::MatrixXd sample_sem(const Eigen::MatrixXd& W, const Eigen::VectorXd& sigma, int n, Rng& rng);

// Random topological order, each forward pair wired with probability
// expected_edges / C(d, 2); deterministic for a fixed spec.seed.
SemSample generate_sem(const SyntheticSpec& spec);

// y_i ~ Bernoulli(sigmoid(intercept + sum coeff_j * x_ij)), seeded.
Eigen::VectorXd generate_presence(const DataMatrix& data, const SyntheticSpec& spec);

// Interventional contrast under the true SEM: clamp the treatment at its
// upper/lower half-distribution means (the estimator's high-vs-low
// semantics), propagate to descendants with common noise, average the
// presence-probability difference.
double oracle_ate(const SyntheticSpec& spec, int treatment, int n_mc = 200000);

// Structural Hamming distance; a reversed edge costs 1.
int shd(const WeightedDag& a, const WeightedDag& b);

}  // namespace habitat
