#pragma once
// Treatment selection, backdoor identification on the learned DAG, and
// stratified propensity-score ATE estimation with bootstrap uncertainty.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "habitat/notears.hpp"

namespace habitat {

// Labeled analysis matrix: climate features plus the binary presence column.
struct LabeledData {
    Eigen::MatrixXd X;  // n x d features
    std::vector<std::string> names;
    Eigen::VectorXd y;  // presence in {0,1}

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index d() const { return X.cols(); }
    Eigen::Index column_index(const std::string& name) const;  // throws UnknownVariable
};

// Directed graph over named nodes (parents/children adjacency).
struct Digraph {
    std::vector<std::string> names;
    std::vector<std::vector<int>> parents;
    std::vector<std::vector<int>> children;

    int n() const { return static_cast<int>(names.size()); }
    int index_of(const std::string& name) const;  // throws UnknownNode
    void add_edge(int from, int to);
    std::vector<bool> descendants_of(int node) const;  // node itself excluded
    static Digraph from_dag(const WeightedDag& dag);
};

inline constexpr const char* kOutcomeName = "Presence";

// Climate DAG plus an outcome node receiving an edge from every climate
// variable (presence never causes climate).
Digraph augment_with_outcome(const WeightedDag& climate_dag);

struct CausalQuery {
    std::string treatment;
    std::string outcome = kOutcomeName;
    std::vector<std::string> adjustment_set;
};

struct CausalEstimate {
    std::string treatment;
    double ate = 0.0;
    double se = 0.0;
    std::pair<double, double> ci95{0.0, 0.0};
    int n_strata_used = 0;
    int n_dropped = 0;  // samples in strata lacking a treatment group
    double naive_diff = 0.0;
    bool propensity_fallback = false;  // separation: ate fell back to naive_diff
};

// Variables ranked by |point-biserial correlation| with presence; ties break
// toward the lower column index.
std::vector<std::string> select_treatments(const LabeledData& data, int k = 5);

// True iff every path between x and y is blocked given z, via reachability
// in the moralized ancestral graph.
bool d_separated(const Digraph& g, int x, int y, const std::vector<int>& z);
bool d_separated(const Digraph& g, const std::string& x, const std::string& y,
                 const std::vector<std::string>& z);

// Parents of the treatment in the climate DAG, verified against the backdoor
// criterion (no descendants of treatment; d-separates treatment and outcome
// in the graph with the treatment's outgoing edges removed).
std::vector<std::string> backdoor_adjustment_set(const Digraph& dag_with_outcome,
                                                 const std::string& treatment);

struct PropensityFit {
    Eigen::VectorXd probs;  // fitted P(t=1 | z) per row
    Eigen::VectorXd coefs;  // original-scale coefficients
    double intercept = 0.0;
    int iterations = 0;
};

// Logistic regression by IRLS: ridge 1e-6 on coefficients (not intercept),
// max 100 iterations, converged when max coefficient change < 1e-8.
PropensityFit fit_propensity(const Eigen::MatrixXd& z, const Eigen::VectorXd& t);

struct StratifiedAteOptions {
    int n_strata = 5;
    int bootstrap = 200;
    std::uint64_t rng_seed = 0;
};

// Treatment binarized at its median (> median -> 1); quantile strata on the
// fitted propensity; strata lacking either group dropped; bootstrap SE/CI.
CausalEstimate stratified_ate(const LabeledData& data, const CausalQuery& query,
                              const StratifiedAteOptions& opts = {});

}  // namespace habitat
