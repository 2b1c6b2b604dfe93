#include "habitat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace habitat {

SyntheticSpec SyntheticSpec::from_json(const json& j) {
    SyntheticSpec s;
    s.d = j.value("d", s.d);
    s.expected_edges = j.value("expected_edges", s.expected_edges);
    if (j.contains("weight_range"))
        s.weight_range = {j["weight_range"][0].get<double>(), j["weight_range"][1].get<double>()};
    if (j.contains("noise_sigma_range"))
        s.noise_sigma_range = {j["noise_sigma_range"][0].get<double>(),
                               j["noise_sigma_range"][1].get<double>()};
    s.n = j.value("n", s.n);
    s.intercept = j.value("intercept", s.intercept);
    s.seed = j.value("seed", s.seed);
    if (j.contains("presence_coeffs"))
        for (const auto& [key, val] : j["presence_coeffs"].items())
            s.presence_coeffs[std::stoi(key)] = val.get<double>();
    if (s.d < 2) throw ConfigError("synthetic spec: d must be >= 2");
    if (s.n < 10) throw ConfigError("synthetic spec: n must be >= 10");
    if (s.weight_range.first < 0.5) throw ConfigError("synthetic spec: weight range low must be >= 0.5");
    for (const auto& [idx, coeff] : s.presence_coeffs) {
        (void)coeff;
        if (idx < 0 || idx >= s.d) throw ConfigError("presence coefficient refers to missing column");
    }
    return s;
}

json SyntheticSpec::to_json() const {
    json coeffs = json::object();
    for (const auto& [idx, c] : presence_coeffs) coeffs[std::to_string(idx)] = c;
    return json{{"d", d},
                {"expected_edges", expected_edges},
                {"weight_range", {weight_range.first, weight_range.second}},
                {"noise_sigma_range", {noise_sigma_range.first, noise_sigma_range.second}},
                {"n", n},
                {"presence_coeffs", coeffs},
                {"intercept", intercept},
                {"seed", seed}};
}

Eigen::MatrixXd sample_sem(const Eigen::MatrixXd& W, const Eigen::VectorXd& sigma, int n, Rng& rng) {
    const int d = static_cast<int>(W.rows());
    WeightedDag dag;
    dag.W = W;
    dag.column_names.resize(d);
    const std::vector<int> order = topological_order(dag);

    Eigen::MatrixXd X(n, d);
    // one noise draw per (row, variable), consumed row-major for determinism
    Eigen::MatrixXd eps(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) eps(i, j) = rng.normal();

    for (int j : order) {
        Eigen::VectorXd col = sigma(j) * eps.col(j);
        for (int p = 0; p < d; ++p)
            if (W(p, j) != 0.0) col += W(p, j) * X.col(p);
        X.col(j) = col;
    }
    return X;
}

SemSample generate_sem(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    const int d = spec.d;

    // random permutation = topological order (Fisher-Yates)
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    for (int i = d - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[i], order[j]);
    }

    const double pairs = static_cast<double>(d) * (d - 1) / 2.0;
    const double p_edge = std::min(1.0, spec.expected_edges / pairs);

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            if (rng.uniform() < p_edge) {
                const double mag = rng.uniform(spec.weight_range.first, spec.weight_range.second);
                const double sign = (rng.uniform() < 0.5) ? -1.0 : 1.0;
                W(order[a], order[b]) = sign * mag;
            }
        }
    }

    Eigen::VectorXd sigma(d);
    for (int j = 0; j < d; ++j)
        sigma(j) = rng.uniform(spec.noise_sigma_range.first, spec.noise_sigma_range.second);

    SemSample out;
    out.dag.W = W;
    out.dag.column_names.resize(d);
    for (int j = 0; j < d; ++j) out.dag.column_names[j] = "X" + std::to_string(j);
    out.dag.threshold_used = 0.0;
    out.noise_sigma = sigma;
    out.data.X = sample_sem(W, sigma, spec.n, rng);
    out.data.column_names = out.dag.column_names;
    return out;
}

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Eigen::VectorXd generate_presence(const DataMatrix& data, const SyntheticSpec& spec) {
    Rng rng(Rng::derive_seed(spec.seed, 0xB10C));
    const Eigen::Index n = data.n();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double logit = spec.intercept;
        for (const auto& [j, coeff] : spec.presence_coeffs) logit += coeff * data.X(i, j);
        y(i) = rng.bernoulli(sigmoid(logit)) ? 1.0 : 0.0;
    }
    return y;
}

double oracle_ate(const SyntheticSpec& spec, int treatment, int n_mc) {
    if (treatment < 0 || treatment >= spec.d) throw ConfigError("oracle_ate: treatment out of range");
    const SemSample sem = generate_sem(spec);
    const Eigen::MatrixXd& W = sem.dag.W;
    const int d = spec.d;
    const std::vector<int> order = topological_order(sem.dag);

    // Marginal of x_t is zero-mean normal; its half-distribution means are
    // +-sigma_t * sqrt(2/pi) with sigma_t from the SEM covariance
    // (I - W^T)^{-1} D (I - W)^{-1}.
    const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(d, d) - W.transpose()).inverse();
    const Eigen::MatrixXd cov =
        inv * sem.noise_sigma.array().square().matrix().asDiagonal() * inv.transpose();
    const double sd_t = std::sqrt(cov(treatment, treatment));
    const double clamp_hi = sd_t * std::sqrt(2.0 / 3.141592653589793238462643);
    const double clamp_lo = -clamp_hi;

    Rng rng(Rng::derive_seed(spec.seed, 0x0AC1E));
    double total = 0.0;
    std::vector<double> x_hi(d), x_lo(d), eps(d);
    for (int rep = 0; rep < n_mc; ++rep) {
        for (int j = 0; j < d; ++j) eps[j] = rng.normal();
        for (int j : order) {
            if (j == treatment) {
                x_hi[j] = clamp_hi;
                x_lo[j] = clamp_lo;
                continue;
            }
            double vh = sem.noise_sigma(j) * eps[j];
            double vl = vh;
            for (int p = 0; p < d; ++p) {
                if (W(p, j) != 0.0) {
                    vh += W(p, j) * x_hi[p];
                    vl += W(p, j) * x_lo[p];
                }
            }
            x_hi[j] = vh;
            x_lo[j] = vl;
        }
        double logit_hi = spec.intercept, logit_lo = spec.intercept;
        for (const auto& [j, coeff] : spec.presence_coeffs) {
            logit_hi += coeff * x_hi[j];
            logit_lo += coeff * x_lo[j];
        }
        total += sigmoid(logit_hi) - sigmoid(logit_lo);
    }
    return total / static_cast<double>(n_mc);
}

int shd(const WeightedDag& a, const WeightedDag& b) {
    const int d = static_cast<int>(a.d());
    if (static_cast<int>(b.d()) != d) throw ConfigError("shd: graphs have different sizes");
    int dist = 0;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            // pair state: 0 none, 1 i->j, 2 j->i, 3 both (invalid for DAGs but counted)
            const int sa = (a.W(i, j) != 0.0 ? 1 : 0) | (a.W(j, i) != 0.0 ? 2 : 0);
            const int sb = (b.W(i, j) != 0.0 ? 1 : 0) | (b.W(j, i) != 0.0 ? 2 : 0);
            if (sa != sb) ++dist;
        }
    }
    return dist;
}

}  // namespace habitat
