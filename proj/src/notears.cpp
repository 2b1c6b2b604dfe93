#include "habitat/notears.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace habitat {

std::vector<std::pair<int, int>> WeightedDag::edges() const {
    std::vector<std::pair<int, int>> out;
    for (Eigen::Index i = 0; i < W.rows(); ++i)
        for (Eigen::Index j = 0; j < W.cols(); ++j)
            if (W(i, j) != 0.0) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

namespace {

using Mat = Eigen::MatrixXd;

void zero_diagonal(Mat& m) { m.diagonal().setZero(); }

// Augmented-Lagrangian inner problem on the split W = Wp - Wm, both
// elementwise nonnegative with zero diagonal, which makes the L1 term a
// smooth linear term lambda1 * sum(Wp + Wm).
struct InnerProblem {
    const Mat& gram;  // X^T X / n
    double lambda1;
    double rho;
    double alpha;

    // one matrix exponential serves both the objective and, via
    // gradient_from_exp, the gradient at the same point
    double objective(const Mat& Wp, const Mat& Wm, Mat* exp_out = nullptr) const {
        const Mat W = Wp - Wm;
        const Mat R = Mat::Identity(W.rows(), W.cols()) - W;
        const double loss = 0.5 * (R.transpose() * gram * R).trace();
        const double l1 = lambda1 * (Wp.sum() + Wm.sum());
        const Mat E = matrix_exponential((W.array() * W.array()).matrix());
        const double h = E.trace() - static_cast<double>(W.rows());
        if (exp_out) *exp_out = E;
        return loss + l1 + 0.5 * rho * h * h + alpha * h;
    }

    void gradient_from_exp(const Mat& Wp, const Mat& Wm, const Mat& E, Mat& gp, Mat& gm) const {
        const Mat W = Wp - Wm;
        const double h = E.trace() - static_cast<double>(W.rows());
        const Mat h_grad = (E.transpose().array() * 2.0 * W.array()).matrix();
        const Mat loss_grad = gram * (W - Mat::Identity(W.rows(), W.cols()));
        const Mat g = loss_grad + (rho * h + alpha) * h_grad;
        gp = g.array() + lambda1;
        gm = -g.array() + lambda1;
    }
};

void project(Mat& Wp, Mat& Wm) {
    Wp = Wp.cwiseMax(0.0);
    Wm = Wm.cwiseMax(0.0);
    zero_diagonal(Wp);
    zero_diagonal(Wm);
}

// Projected gradient with Barzilai-Borwein steps and a non-monotone
// (Grippo-style, 10-step window) Armijo line search; the non-monotone
// acceptance is what lets BB steps survive the stiff high-rho regime.
// Stops on the unit-step projection residual, or when the objective stalls
// at relative 2e-9 (the dual loop then escalates rho instead of grinding).
int inner_solve(const InnerProblem& prob, Mat& Wp, Mat& Wm, int max_iters, double tol) {
    const Eigen::Index d = Wp.rows();
    Mat gp(d, d), gm(d, d), E(d, d);
    double f = prob.objective(Wp, Wm, &E);
    prob.gradient_from_exp(Wp, Wm, E, gp, gm);
    double step = 1.0;
    Mat prev_Wp, prev_Wm, prev_gp, prev_gm;

    constexpr int kWindow = 10;
    double recent_f[kWindow];
    std::fill(recent_f, recent_f + kWindow, f);

    double f_best = f;
    int stalled = 0;

    int it = 0;
    for (; it < max_iters; ++it) {
        // optimality: projection residual with unit step
        Mat rp = Wp - gp, rm = Wm - gm;
        project(rp, rm);
        const double resid = std::max((Wp - rp).cwiseAbs().maxCoeff(),
                                      (Wm - rm).cwiseAbs().maxCoeff());
        if (resid < tol) break;

        if (it > 0) {
            const Mat sp = Wp - prev_Wp, sm = Wm - prev_Wm;
            const Mat yp = gp - prev_gp, ym = gm - prev_gm;
            const double ss = sp.squaredNorm() + sm.squaredNorm();
            const double sy = (sp.array() * yp.array()).sum() + (sm.array() * ym.array()).sum();
            step = (sy > 1e-16) ? ss / sy : step * 2.0;
            step = std::clamp(step, 1e-12, 1e12);
        }

        prev_Wp = Wp; prev_Wm = Wm; prev_gp = gp; prev_gm = gm;

        const double f_ref = *std::max_element(recent_f, recent_f + kWindow);
        double t = step;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Mat cand_p = Wp - t * gp, cand_m = Wm - t * gm;
            project(cand_p, cand_m);
            const double decrease = (gp.array() * (Wp - cand_p).array()).sum() +
                                    (gm.array() * (Wm - cand_m).array()).sum();
            const double f_cand = prob.objective(cand_p, cand_m, &E);
            if (f_cand <= f_ref - 1e-4 * decrease + 1e-15 * std::abs(f_ref)) {
                Wp = std::move(cand_p);
                Wm = std::move(cand_m);
                f = f_cand;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // no further progress at machine precision
        recent_f[it % kWindow] = f;

        if (f < f_best - 2.2e-9 * std::max(1.0, std::abs(f_best))) {
            f_best = f;
            stalled = 0;
        } else if (++stalled >= 10) {
            break;
        }
        prob.gradient_from_exp(Wp, Wm, E, gp, gm);
    }
    return it;
}

bool support_is_acyclic(const Mat& W) {
    const int d = static_cast<int>(W.rows());
    std::vector<std::vector<int>> children(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (W(i, j) != 0.0) children[i].push_back(j);
    try {
        topological_order_support(children, d);
        return true;
    } catch (const CycleDetected&) {
        return false;
    }
}

}  // namespace

WeightedDag notears_fit(const DataMatrix& data, const NotearsConfig& cfg, NotearsDiagnostics* diag) {
    const Eigen::Index n = data.n();
    const Eigen::Index d = data.d();
    if (n < 2 || d < 1) throw DegenerateData("need at least 2 rows and 1 column");
    if (!data.X.allFinite()) throw DegenerateData("data contains non-finite entries");

    Mat Z = data.X;
    const Eigen::RowVectorXd mean = Z.colwise().mean();
    Z.rowwise() -= mean;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double var = Z.col(j).squaredNorm() / static_cast<double>(n);
        if (var < 1e-12) {
            const std::string name =
                (j < static_cast<Eigen::Index>(data.column_names.size()))
                    ? data.column_names[j] : ("column " + std::to_string(j));
            throw DegenerateData("zero-variance column: " + name);
        }
        if (!cfg.center_only) Z.col(j) /= std::sqrt(var);
    }
    if (n <= d) {
        std::cerr << "[notears] warning: n (" << n << ") <= d (" << d
                  << "); estimates may be unstable\n";
        if (diag) diag->n_le_d_warning = true;
    }

    const Mat gram = (Z.transpose() * Z) / static_cast<double>(n);

    Mat Wp = Mat::Zero(d, d), Wm = Mat::Zero(d, d);
    double rho = cfg.rho_init, alpha = 0.0;
    double h = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < cfg.max_dual_iters; ++outer) {
        Mat new_Wp, new_Wm;
        double h_new = std::numeric_limits<double>::infinity();
        int inner_iters = 0;
        while (rho < cfg.rho_max) {
            new_Wp = Wp;
            new_Wm = Wm;
            InnerProblem prob{gram, cfg.lambda1, rho, alpha};
            inner_iters = inner_solve(prob, new_Wp, new_Wm, cfg.max_inner_iters, cfg.inner_tol);
            h_new = acyclicity_h(Mat(new_Wp - new_Wm)).first;
            if (h_new > 0.25 * h) rho *= 10.0;  // did not shrink by 4x: escalate penalty
            else break;
        }
        Wp = new_Wp;
        Wm = new_Wm;
        h = h_new;
        alpha += rho * h;
        if (diag) diag->steps.push_back({rho, alpha, h, inner_iters});
        if (h <= cfg.h_tol || rho >= cfg.rho_max) break;
    }
    if (diag) diag->h_final = h;
    if (h > cfg.h_tol)
        throw DidNotConverge("penalty exhausted with h = " + std::to_string(h) +
                             " above tolerance " + std::to_string(cfg.h_tol));

    return threshold_dag(Wp - Wm, data.column_names, cfg.w_threshold);
}

WeightedDag threshold_dag(const Eigen::MatrixXd& W_raw, std::vector<std::string> column_names,
                          double w_threshold) {
    WeightedDag dag;
    dag.column_names = std::move(column_names);
    double threshold = w_threshold;
    for (;;) {
        dag.W = (W_raw.cwiseAbs().array() >= threshold).select(W_raw, 0.0);
        zero_diagonal(dag.W);
        if (support_is_acyclic(dag.W)) break;
        threshold += 0.05;
    }
    dag.threshold_used = threshold;
    return dag;
}

std::vector<int> topological_order_support(const std::vector<std::vector<int>>& children, int d) {
    std::vector<int> indegree(d, 0);
    for (int i = 0; i < d; ++i)
        for (int j : children[i]) ++indegree[j];

    std::set<int> ready;  // smallest index first
    for (int i = 0; i < d; ++i)
        if (indegree[i] == 0) ready.insert(i);

    std::vector<int> order;
    order.reserve(d);
    std::vector<int> remaining_indegree = indegree;
    while (!ready.empty()) {
        const int u = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(u);
        for (int v : children[u])
            if (--remaining_indegree[v] == 0) ready.insert(v);
    }
    if (static_cast<int>(order.size()) == d) return order;

    // Walk parent links among unresolved nodes; every unresolved node keeps
    // at least one unresolved parent, so this must close a cycle.
    std::vector<bool> resolved(d, false);
    for (int u : order) resolved[u] = true;
    std::vector<std::vector<int>> parents(d);
    for (int i = 0; i < d; ++i)
        for (int j : children[i])
            if (!resolved[i] && !resolved[j]) parents[j].push_back(i);

    int start = 0;
    while (resolved[start]) ++start;
    std::vector<int> path;
    std::vector<int> pos_in_path(d, -1);
    int u = start;
    for (;;) {
        if (pos_in_path[u] >= 0) {
            std::vector<int> cycle(path.begin() + pos_in_path[u], path.end());
            std::reverse(cycle.begin(), cycle.end());  // report in edge direction
            std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
            std::ostringstream msg;
            msg << "cycle detected:";
            for (int c : cycle) msg << " " << c;
            throw CycleDetected(msg.str(), cycle);
        }
        pos_in_path[u] = static_cast<int>(path.size());
        path.push_back(u);
        u = parents[u].front();
    }
}

std::vector<int> topological_order(const WeightedDag& dag) {
    const int d = static_cast<int>(dag.d());
    std::vector<std::vector<int>> children(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (dag.W(i, j) != 0.0) children[i].push_back(j);
    return topological_order_support(children, d);
}

json dag_to_json(const WeightedDag& dag) {
    json edges = json::array();
    for (const auto& [i, j] : dag.edges())
        edges.push_back({{"from", i}, {"to", j}, {"weight", dag.W(i, j)}});
    return json{{"variables", dag.column_names}, {"edges", edges}, {"threshold", dag.threshold_used}};
}

WeightedDag dag_from_json(const json& j) {
    WeightedDag dag;
    dag.column_names = j.at("variables").get<std::vector<std::string>>();
    const auto d = static_cast<Eigen::Index>(dag.column_names.size());
    dag.W = Eigen::MatrixXd::Zero(d, d);
    for (const auto& e : j.at("edges"))
        dag.W(e.at("from").get<int>(), e.at("to").get<int>()) = e.at("weight").get<double>();
    dag.threshold_used = j.value("threshold", 0.0);
    return dag;
}

std::string dag_to_dot(const WeightedDag& dag) {
    std::ostringstream out;
    out << "digraph environmental_dag {\n  rankdir=LR;\n";
    for (const auto& name : dag.column_names) out << "  \"" << name << "\";\n";
    out.precision(3);
    for (const auto& [i, j] : dag.edges())
        out << "  \"" << dag.column_names[i] << "\" -> \"" << dag.column_names[j]
            << "\" [label=\"" << dag.W(i, j) << "\"];\n";
    out << "}\n";
    return out.str();
}

}  // namespace habitat
