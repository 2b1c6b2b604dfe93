#include "habitat/causal.hpp"

#include "habitat/util.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace habitat {

Eigen::Index LabeledData::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<Eigen::Index>(i);
    throw UnknownVariable("no such column: " + name);
}

int Digraph::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw UnknownNode("no such node: " + name);
}

void Digraph::add_edge(int from, int to) {
    children[from].push_back(to);
    parents[to].push_back(from);
}

Digraph Digraph::from_dag(const WeightedDag& dag) {
    Digraph g;
    g.names = dag.column_names;
    g.parents.resize(g.names.size());
    g.children.resize(g.names.size());
    for (const auto& [i, j] : dag.edges()) g.add_edge(i, j);
    return g;
}

std::vector<bool> Digraph::descendants_of(int node) const {
    std::vector<bool> seen(n(), false);
    std::deque<int> frontier{node};
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop_front();
        for (int v : children[u]) {
            if (!seen[v]) {
                seen[v] = true;
                frontier.push_back(v);
            }
        }
    }
    seen[node] = false;
    return seen;
}

Digraph augment_with_outcome(const WeightedDag& climate_dag) {
    Digraph g = Digraph::from_dag(climate_dag);
    const int outcome = g.n();
    g.names.push_back(kOutcomeName);
    g.parents.emplace_back();
    g.children.emplace_back();
    for (int i = 0; i < outcome; ++i) g.add_edge(i, outcome);
    return g;
}

std::vector<std::string> select_treatments(const LabeledData& data, int k) {
    const Eigen::Index n = data.n(), d = data.d();
    if (k < 1 || k > d) throw ConfigError("select_treatments: k must be in [1, d]");
    const double y_mean = data.y.mean();
    const double y_var = (data.y.array() - y_mean).square().sum() / static_cast<double>(n);
    if (y_var <= 0.0) throw ConstantOutcome("presence column has a single class");

    std::vector<std::pair<double, int>> ranked;  // (-|r|, index) for stable ordering
    ranked.reserve(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const Eigen::ArrayXd xc = data.X.col(j).array() - data.X.col(j).mean();
        const double x_var = xc.square().sum() / static_cast<double>(n);
        double r = 0.0;
        if (x_var > 0.0) {
            const double cov = (xc * (data.y.array() - y_mean)).sum() / static_cast<double>(n);
            r = cov / std::sqrt(x_var * y_var);
        }
        ranked.emplace_back(-std::abs(r), static_cast<int>(j));
    }
    std::sort(ranked.begin(), ranked.end());
    std::vector<std::string> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) out.push_back(data.names[ranked[i].second]);
    return out;
}

bool d_separated(const Digraph& g, int x, int y, const std::vector<int>& z) {
    const int n = g.n();
    if (x < 0 || x >= n || y < 0 || y >= n) throw UnknownNode("d_separated: node out of range");
    for (int zi : z)
        if (zi < 0 || zi >= n) throw UnknownNode("d_separated: conditioning node out of range");

    // ancestral set of {x, y} union z
    std::vector<bool> in_set(n, false);
    std::deque<int> frontier;
    auto seed = [&](int v) {
        if (!in_set[v]) {
            in_set[v] = true;
            frontier.push_back(v);
        }
    };
    seed(x);
    seed(y);
    for (int zi : z) seed(zi);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop_front();
        for (int p : g.parents[u]) seed(p);
    }

    // moralize: undirected edges for directed ones, plus marriages of parents
    std::vector<std::vector<int>> adj(n);
    auto connect = [&adj](int a, int b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (int v = 0; v < n; ++v) {
        if (!in_set[v]) continue;
        const auto& ps = g.parents[v];
        for (std::size_t i = 0; i < ps.size(); ++i) {
            if (!in_set[ps[i]]) continue;
            connect(ps[i], v);
            for (std::size_t j = i + 1; j < ps.size(); ++j)
                if (in_set[ps[j]]) connect(ps[i], ps[j]);
        }
    }

    // remove z and test undirected reachability
    std::vector<bool> blocked(n, false);
    for (int zi : z) blocked[zi] = true;
    std::vector<bool> visited(n, false);
    std::deque<int> queue{x};
    visited[x] = true;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        if (u == y) return false;
        for (int v : adj[u]) {
            if (!visited[v] && !blocked[v]) {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    return true;
}

bool d_separated(const Digraph& g, const std::string& x, const std::string& y,
                 const std::vector<std::string>& z) {
    std::vector<int> zi;
    zi.reserve(z.size());
    for (const auto& name : z) zi.push_back(g.index_of(name));
    return d_separated(g, g.index_of(x), g.index_of(y), zi);
}

std::vector<std::string> backdoor_adjustment_set(const Digraph& dag_with_outcome,
                                                 const std::string& treatment) {
    const Digraph& g = dag_with_outcome;
    const int t = g.index_of(treatment);
    const int outcome = g.index_of(kOutcomeName);

    std::vector<int> adjustment = g.parents[t];
    std::sort(adjustment.begin(), adjustment.end());
    adjustment.erase(std::unique(adjustment.begin(), adjustment.end()), adjustment.end());

    for (int a : adjustment)
        if (a == outcome)
            throw BackdoorViolation("outcome is a parent of treatment " + treatment +
                                    "; graph is malformed");

    // backdoor verification, not assumed: no member may descend from the
    // treatment, and the set must block t <-> outcome once t's outgoing
    // edges are removed
    const std::vector<bool> desc = g.descendants_of(t);
    for (int a : adjustment)
        if (desc[a])
            throw BackdoorViolation("adjustment variable " + g.names[a] +
                                    " is a descendant of treatment " + treatment);

    Digraph truncated = g;
    for (int v : truncated.children[t]) {
        auto& ps = truncated.parents[v];
        ps.erase(std::remove(ps.begin(), ps.end(), t), ps.end());
    }
    truncated.children[t].clear();
    if (!d_separated(truncated, t, outcome, adjustment))
        throw BackdoorViolation("parents of " + treatment +
                                " do not block all backdoor paths to the outcome");

    std::vector<std::string> names;
    names.reserve(adjustment.size());
    for (int a : adjustment) names.push_back(g.names[a]);
    return names;
}

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PropensityFit fit_propensity(const Eigen::MatrixXd& z, const Eigen::VectorXd& t) {
    const Eigen::Index n = t.size();
    if (n == 0) throw NoVariation("empty treatment vector");
    const double t_mean = t.mean();
    if (t_mean <= 0.0 || t_mean >= 1.0) throw NoVariation("treatment vector has a single class");
    if (z.rows() != 0 && z.rows() != n) throw ConfigError("confounder matrix row count mismatch");
    if (!z.allFinite()) throw DegenerateData("confounder matrix contains non-finite entries");

    const Eigen::Index p = z.cols();

    // standardize confounders for IRLS conditioning; coefficients are mapped
    // back to the original scale afterwards
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(p);
    Eigen::RowVectorXd sd = Eigen::RowVectorXd::Ones(p);
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    if (p > 0) {
        mu = z.colwise().mean();
        for (Eigen::Index j = 0; j < p; ++j) {
            const double var = (z.col(j).array() - mu(j)).square().sum() / static_cast<double>(n);
            sd(j) = (var > 1e-24) ? std::sqrt(var) : 0.0;
            if (sd(j) > 0.0)
                design.col(j + 1) = (z.col(j).array() - mu(j)) / sd(j);
            else
                design.col(j + 1).setZero();  // constant confounder carries no information
        }
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd ridge = Eigen::VectorXd::Constant(p + 1, 1e-6);
    ridge(0) = 0.0;  // no penalty on the intercept

    bool converged = false;
    int it = 0;
    for (; it < 100; ++it) {
        const Eigen::VectorXd eta = (design * beta).cwiseMax(-30.0).cwiseMin(30.0);
        const Eigen::VectorXd prob = eta.unaryExpr([](double e) { return sigmoid(e); });
        const Eigen::VectorXd w = (prob.array() * (1.0 - prob.array())).cwiseMax(1e-10).matrix();

        Eigen::MatrixXd H = design.transpose() * w.asDiagonal() * design;
        H.diagonal() += ridge;
        const Eigen::VectorXd grad = design.transpose() * (t - prob) - ridge.asDiagonal() * beta;
        const Eigen::VectorXd delta = H.ldlt().solve(grad);
        beta += delta;

        if (!beta.allFinite() || (p > 0 && beta.tail(p).cwiseAbs().maxCoeff() > 40.0))
            throw Separation("propensity IRLS diverged (separable confounders)");
        if (delta.cwiseAbs().maxCoeff() < 1e-8) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Separation("propensity IRLS did not converge in 100 iterations");

    // with ridge 1e-6 a separable problem converges to a finite optimum that
    // classifies every unit perfectly; that is still separation
    if (p > 0) {
        const Eigen::VectorXd fitted = (design * beta).unaryExpr([](double e) { return sigmoid(e); });
        if ((t - fitted).cwiseAbs().maxCoeff() < 1e-4)
            throw Separation("propensity model separates the data perfectly");
    }

    PropensityFit fit;
    fit.iterations = it + 1;
    fit.probs = (design * beta).unaryExpr([](double e) { return sigmoid(e); });
    fit.coefs = Eigen::VectorXd::Zero(p);
    fit.intercept = beta(0);
    for (Eigen::Index j = 0; j < p; ++j) {
        if (sd(j) > 0.0) {
            fit.coefs(j) = beta(j + 1) / sd(j);
            fit.intercept -= beta(j + 1) * mu(j) / sd(j);
        }
    }
    return fit;
}

namespace {

double median_of(Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    const Eigen::Index n = v.size();
    return (n % 2 == 1) ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

// linear-interpolation quantile on a sorted copy
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

struct PointEstimate {
    double ate = 0.0;
    double naive = 0.0;
    int strata_used = 0;
    int dropped = 0;
    bool fallback = false;
};

PointEstimate point_estimate(const Eigen::VectorXd& treat_col, const Eigen::MatrixXd& confounders,
                             const Eigen::VectorXd& y, int n_strata) {
    const Eigen::Index n = treat_col.size();
    const double med = median_of(treat_col);
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = (treat_col(i) > med) ? 1.0 : 0.0;
    const double n_treated = t.sum();
    if (n_treated == 0.0 || n_treated == static_cast<double>(n))
        throw NoVariation("binarized treatment has a single class");

    PointEstimate est;
    {
        double s1 = 0, s0 = 0;
        for (Eigen::Index i = 0; i < n; ++i) (t(i) > 0.5 ? s1 : s0) += y(i);
        est.naive = s1 / n_treated - s0 / (static_cast<double>(n) - n_treated);
    }

    Eigen::VectorXd probs;
    try {
        probs = fit_propensity(confounders, t).probs;
    } catch (const Separation&) {
        est.ate = est.naive;
        est.fallback = true;
        est.strata_used = 0;
        return est;
    }

    std::vector<double> sorted(probs.data(), probs.data() + n);
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> breaks;
    for (int k = 1; k < n_strata; ++k)
        breaks.push_back(quantile_sorted(sorted, static_cast<double>(k) / n_strata));

    // stratum index = number of breaks strictly below the score
    std::vector<double> sum_y1(n_strata, 0), sum_y0(n_strata, 0);
    std::vector<long> cnt1(n_strata, 0), cnt0(n_strata, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        int s = 0;
        while (s < n_strata - 1 && probs(i) > breaks[s]) ++s;
        if (t(i) > 0.5) {
            sum_y1[s] += y(i);
            ++cnt1[s];
        } else {
            sum_y0[s] += y(i);
            ++cnt0[s];
        }
    }

    long n_kept = 0;
    for (int s = 0; s < n_strata; ++s) {
        if (cnt1[s] > 0 && cnt0[s] > 0) {
            n_kept += cnt1[s] + cnt0[s];
        } else {
            est.dropped += static_cast<int>(cnt1[s] + cnt0[s]);
        }
    }
    if (n_kept == 0) throw AllStrataDropped("every propensity stratum lacks a treatment group");

    double ate = 0.0;
    for (int s = 0; s < n_strata; ++s) {
        if (cnt1[s] == 0 || cnt0[s] == 0) continue;
        const double w = static_cast<double>(cnt1[s] + cnt0[s]) / static_cast<double>(n_kept);
        ate += w * (sum_y1[s] / static_cast<double>(cnt1[s]) - sum_y0[s] / static_cast<double>(cnt0[s]));
        ++est.strata_used;
    }
    est.ate = ate;
    return est;
}

}  // namespace

CausalEstimate stratified_ate(const LabeledData& data, const CausalQuery& query,
                              const StratifiedAteOptions& opts) {
    const Eigen::Index n = data.n();
    if (n < 50) throw ConfigError("stratified_ate requires at least 50 samples");
    for (Eigen::Index i = 0; i < n; ++i)
        if (data.y(i) != 0.0 && data.y(i) != 1.0)
            throw ConfigError("presence column must be binary 0/1");
    if (query.treatment == query.outcome) throw ConfigError("treatment equals outcome");

    const Eigen::Index t_col = data.column_index(query.treatment);
    Eigen::MatrixXd confounders(n, static_cast<Eigen::Index>(query.adjustment_set.size()));
    for (std::size_t j = 0; j < query.adjustment_set.size(); ++j) {
        if (query.adjustment_set[j] == query.treatment || query.adjustment_set[j] == query.outcome)
            throw ConfigError("adjustment set must exclude treatment and outcome");
        confounders.col(static_cast<Eigen::Index>(j)) =
            data.X.col(data.column_index(query.adjustment_set[j]));
    }

    const PointEstimate point = point_estimate(data.X.col(t_col), confounders, data.y, opts.n_strata);

    // seeded nonparametric bootstrap over rows, re-fitting the propensity
    // model inside each replicate; failed replicates are skipped
    std::vector<double> replicate_ates;
    replicate_ates.reserve(opts.bootstrap);
    for (int b = 0; b < opts.bootstrap; ++b) {
        Rng rng(Rng::derive_seed(opts.rng_seed, static_cast<std::uint64_t>(b)));
        Eigen::VectorXd bt(n), by(n);
        Eigen::MatrixXd bz(n, confounders.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            bt(i) = data.X(r, t_col);
            by(i) = data.y(r);
            bz.row(i) = confounders.row(r);
        }
        try {
            replicate_ates.push_back(point_estimate(bt, bz, by, opts.n_strata).ate);
        } catch (const Error&) {
            // degenerate resample
        }
    }

    double se = 0.0;
    if (replicate_ates.size() >= 2) {
        const double mean = std::accumulate(replicate_ates.begin(), replicate_ates.end(), 0.0) /
                            static_cast<double>(replicate_ates.size());
        double ss = 0.0;
        for (double a : replicate_ates) ss += (a - mean) * (a - mean);
        se = std::sqrt(ss / static_cast<double>(replicate_ates.size() - 1));
    }

    CausalEstimate out;
    out.treatment = query.treatment;
    out.ate = point.ate;
    out.se = se;
    out.ci95 = {std::max(-1.0, point.ate - 1.96 * se), std::min(1.0, point.ate + 1.96 * se)};
    out.n_strata_used = point.strata_used;
    out.n_dropped = point.dropped;
    out.naive_diff = point.naive;
    out.propensity_fallback = point.fallback;
    return out;
}

}  // namespace habitat
