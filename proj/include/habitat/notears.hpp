#pragma once
// Linear structure learning over environmental variables: least-squares
// score with L1 penalty, continuous acyclicity constraint
// h(W) = tr(exp(W .* W)) - d, solved by an augmented Lagrangian with a
// projected-gradient inner solver on the nonnegative split W = W+ - W-.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "habitat/errors.hpp"
#include "habitat/json.hpp"

namespace habitat {

struct DataMatrix {
    Eigen::MatrixXd X;  // n x d, rows = samples
    std::vector<std::string> column_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index d() const { return X.cols(); }
};

struct WeightedDag {
    Eigen::MatrixXd W;  // d x d, W(i, j) = weight of edge i -> j
    std::vector<std::string> column_names;
    double threshold_used = 0.0;

    Eigen::Index d() const { return W.rows(); }
    std::vector<std::pair<int, int>> edges() const;
};

struct NotearsConfig {
    double lambda1 = 0.1;       // L1 strength
    double w_threshold = 0.3;   // final hard threshold on |w|
    double rho_init = 1.0;
    double rho_max = 1e16;
    double h_tol = 1e-8;
    int max_dual_iters = 100;
    int max_inner_iters = 10000;
    double inner_tol = 1e-6;    // projected-gradient inf-norm
    bool center_only = true;    // false: also rescale columns to unit variance
};

struct NotearsDiagnostics {
    struct OuterStep {
        double rho = 0, alpha = 0, h = 0;
        int inner_iters = 0;
    };
    std::vector<OuterStep> steps;
    double h_final = 0;
    bool n_le_d_warning = false;
};

// Matrix exponential by scaling-and-squaring with a truncated Taylor series
// (order up to 18, terms stop once below rel_tol of the running sum).
// Expression-friendly: accepts any dense Eigen expression.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_exponential(
    const Eigen::MatrixBase<Derived>& A_expr, double rel_tol = 1e-12) {
    using Scalar = typename Derived::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (A_expr.rows() != A_expr.cols())
        throw NonSquare("matrix exponential requires a square matrix");
    Mat A = A_expr;
    const Eigen::Index d = A.rows();

    // scale so the 1-norm is at most 0.5, square back at the end
    const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
        A /= std::pow(Scalar(2), squarings);
    }

    Mat result = Mat::Identity(d, d);
    Mat term = Mat::Identity(d, d);
    for (int k = 1; k <= 18; ++k) {
        term = (term * A / Scalar(k)).eval();
        result += term;
        const double term_norm = term.cwiseAbs().maxCoeff();
        const double result_norm = result.cwiseAbs().maxCoeff();
        if (term_norm <= rel_tol * result_norm) break;
    }
    for (int s = 0; s < squarings; ++s) result = (result * result).eval();
    return result;
}

// h(W) = tr(exp(W .* W)) - d and its gradient exp(W .* W)^T .* 2W.
template <typename Derived>
std::pair<double, Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>
acyclicity_h(const Eigen::MatrixBase<Derived>& W_expr) {
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (W_expr.rows() != W_expr.cols()) throw NonSquare("acyclicity_h requires a square matrix");
    Mat W = W_expr;
    const Mat E = matrix_exponential((W.array() * W.array()).matrix());
    const double h = E.trace() - static_cast<double>(W.rows());
    Mat grad = (E.transpose().array() * 2.0 * W.array()).matrix();
    return {h, std::move(grad)};
}

// Fits the weighted DAG; hard-thresholds at cfg.w_threshold, raising the
// threshold in +0.05 steps if the support is still cyclic.
WeightedDag notears_fit(const DataMatrix& data, const NotearsConfig& cfg = {},
                        NotearsDiagnostics* diag = nullptr);

// Hard-threshold a raw weight matrix into an acyclic DAG: entries with
// |w| < threshold are zeroed; the threshold grows in +0.05 steps until the
// support admits a topological order. threshold_used records the final value.
WeightedDag threshold_dag(const Eigen::MatrixXd& W_raw, std::vector<std::string> column_names,
                          double w_threshold);

// Kahn's algorithm with smallest-index tie-break. Throws CycleDetected with
// one offending cycle if the support is not acyclic.
std::vector<int> topological_order(const WeightedDag& dag);
std::vector<int> topological_order_support(const std::vector<std::vector<int>>& children, int d);

json dag_to_json(const WeightedDag& dag);
WeightedDag dag_from_json(const json& j);
std::string dag_to_dot(const WeightedDag& dag);

}  // namespace habitat
