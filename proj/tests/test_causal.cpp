#include <doctest.h>

#include "habitat/causal.hpp"
#include "habitat/synth.hpp"
#include "habitat/util.hpp"

#include "dsep_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

using namespace habitat;
using habitat_test::Adjacency;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {

LabeledData synthetic_labeled(int n, int d, std::uint64_t seed,
                              const std::function<double(const Eigen::RowVectorXd&, Rng&)>& y_of) {
    Rng rng(seed);
    LabeledData data;
    data.X.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) data.X(i, j) = rng.normal();
    data.names.resize(d);
    for (int j = 0; j < d; ++j) data.names[j] = "BIO" + std::to_string(j + 1);
    data.y.resize(n);
    for (int i = 0; i < n; ++i) data.y(i) = y_of(data.X.row(i), rng);
    return data;
}

double column_median(const Vec& v) {
    std::vector<double> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end());
    const auto n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

}  // namespace

TEST_CASE("select_treatments ranks by |point-biserial| with index tie-break") {
    SUBCASE("deterministic threshold on BIO4 ranks it first") {
        auto data = synthetic_labeled(2000, 6, 1, [](const Eigen::RowVectorXd&, Rng&) { return 0.0; });
        const double med = column_median(data.X.col(3));
        for (int i = 0; i < data.n(); ++i) data.y(i) = data.X(i, 3) > med ? 1.0 : 0.0;
        const auto top = select_treatments(data, 3);
        CHECK(top.front() == "BIO4");
    }
    SUBCASE("independent outcome keeps correlations tiny") {
        auto data = synthetic_labeled(5000, 5, 2,
                                      [](const Eigen::RowVectorXd&, Rng& r) { return r.bernoulli(0.5) ? 1.0 : 0.0; });
        const auto all = select_treatments(data, 5);
        CHECK(all.size() == 5);
        const double ybar = data.y.mean();
        for (int j = 0; j < 5; ++j) {
            const Eigen::ArrayXd xc = data.X.col(j).array() - data.X.col(j).mean();
            const Eigen::ArrayXd yc = data.y.array() - ybar;
            const double r = (xc * yc).sum() /
                             std::sqrt(xc.square().sum() * yc.square().sum());
            CHECK(std::abs(r) < 0.05);
        }
    }
    SUBCASE("k = d returns everything in rank order") {
        auto data = synthetic_labeled(500, 4, 3, [](const Eigen::RowVectorXd& x, Rng& r) {
            return r.bernoulli(1.0 / (1.0 + std::exp(-x(2)))) ? 1.0 : 0.0;
        });
        const auto all = select_treatments(data, 4);
        CHECK(all.size() == 4);
        CHECK(all.front() == "BIO3");
    }
    SUBCASE("constant outcome") {
        auto data = synthetic_labeled(100, 3, 4, [](const Eigen::RowVectorXd&, Rng&) { return 1.0; });
        CHECK_THROWS_AS(select_treatments(data, 2), ConstantOutcome);
    }
}

TEST_CASE("d_separated textbook motifs") {
    Adjacency chain(3, std::vector<bool>(3, false));
    chain[0][1] = chain[1][2] = true;  // A -> B -> C
    const Digraph g_chain = habitat_test::digraph_from_adjacency(chain);
    CHECK(d_separated(g_chain, 0, 2, {1}));
    CHECK_FALSE(d_separated(g_chain, 0, 2, {}));

    Adjacency collider(3, std::vector<bool>(3, false));
    collider[0][1] = collider[2][1] = true;  // A -> B <- C
    const Digraph g_col = habitat_test::digraph_from_adjacency(collider);
    CHECK(d_separated(g_col, 0, 2, {}));
    CHECK_FALSE(d_separated(g_col, 0, 2, {1}));

    // conditioning on a collider's descendant also opens the path
    Adjacency desc(4, std::vector<bool>(4, false));
    desc[0][1] = desc[2][1] = desc[1][3] = true;  // A -> B <- C, B -> D
    const Digraph g_desc = habitat_test::digraph_from_adjacency(desc);
    CHECK(d_separated(g_desc, 0, 2, {}));
    CHECK_FALSE(d_separated(g_desc, 0, 2, {3}));

    CHECK_THROWS_AS(d_separated(g_chain, "A", "C", {}), UnknownNode);
}

TEST_CASE("d_separated agrees with the path-enumeration oracle, all DAGs up to 4 nodes") {
    long checked = 0;
    for (int n = 2; n <= 4; ++n) {
        habitat_test::for_each_dag(n, [&](const Adjacency& adj) {
            const Digraph g = habitat_test::digraph_from_adjacency(adj);
            for (int x = 0; x < n; ++x) {
                for (int y = x + 1; y < n; ++y) {
                    std::vector<int> others;
                    for (int v = 0; v < n; ++v)
                        if (v != x && v != y) others.push_back(v);
                    const std::uint32_t subsets = 1u << others.size();
                    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
                        std::vector<int> z;
                        for (std::size_t b = 0; b < others.size(); ++b)
                            if ((mask >> b) & 1u) z.push_back(others[b]);
                        const bool ours = d_separated(g, x, y, z);
                        const bool oracle = habitat_test::dsep_oracle(adj, x, y, z);
                        ++checked;
                        REQUIRE(ours == oracle);
                    }
                }
            }
        });
    }
    CHECK(checked > 10000);
}

TEST_CASE("d_separated agrees with the oracle on 200 random 8-node DAGs") {
    Rng rng(555);
    int done = 0;
    while (done < 200) {
        const int n = 8;
        Adjacency adj(n, std::vector<bool>(n, false));
        // random DAG via random order + edge probability
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (rng.uniform() < 0.25) adj[order[a]][order[b]] = true;

        const Digraph g = habitat_test::digraph_from_adjacency(adj);
        for (int rep = 0; rep < 5; ++rep) {
            const int x = static_cast<int>(rng.uniform_int(n));
            int y = static_cast<int>(rng.uniform_int(n));
            while (y == x) y = static_cast<int>(rng.uniform_int(n));
            std::vector<int> z;
            for (int v = 0; v < n; ++v)
                if (v != x && v != y && rng.uniform() < 0.3) z.push_back(v);
            REQUIRE(d_separated(g, x, y, z) == habitat_test::dsep_oracle(adj, x, y, z));
        }
        ++done;
    }
}

namespace {

WeightedDag dag_from_edges(int d, const std::vector<std::tuple<int, int, double>>& edges,
                           std::vector<std::string> names) {
    WeightedDag dag;
    dag.W = Mat::Zero(d, d);
    for (const auto& [i, j, w] : edges) dag.W(i, j) = w;
    dag.column_names = std::move(names);
    return dag;
}

}  // namespace

TEST_CASE("backdoor_adjustment_set") {
    SUBCASE("textbook confounder triangle: Z -> T, Z also hits the outcome") {
        const WeightedDag climate =
            dag_from_edges(2, {{0, 1, 0.8}}, {"Z", "T"});  // Z -> T; outcome edges appended
        const Digraph g = augment_with_outcome(climate);
        const auto set = backdoor_adjustment_set(g, "T");
        CHECK(set == std::vector<std::string>{"Z"});
    }
    SUBCASE("treatment without parents: empty set passes") {
        const WeightedDag climate = dag_from_edges(2, {{0, 1, 0.5}}, {"T", "M"});  // T -> M
        const Digraph g = augment_with_outcome(climate);
        CHECK(backdoor_adjustment_set(g, "T").empty());
    }
    SUBCASE("chain A -> T with A -> outcome, verified in the truncated graph") {
        const WeightedDag climate = dag_from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}}, {"A", "T", "M"});
        const Digraph g = augment_with_outcome(climate);
        const auto set = backdoor_adjustment_set(g, "T");
        CHECK(set == std::vector<std::string>{"A"});
        // cross-check with the oracle: in the truncated graph, {A} separates T and outcome
        const int n = g.n();
        Adjacency adj(n, std::vector<bool>(n, false));
        for (int i = 0; i < n; ++i)
            for (int j : g.children[i]) adj[i][j] = true;
        for (int j : g.children[g.index_of("T")]) adj[g.index_of("T")][j] = false;
        CHECK(habitat_test::dsep_oracle(adj, g.index_of("T"), g.index_of(kOutcomeName),
                                        {g.index_of("A")}));
    }
    SUBCASE("malformed cyclic graph -> BackdoorViolation") {
        // T <-> A cycle: A is both parent and descendant of T
        WeightedDag climate = dag_from_edges(2, {{0, 1, 1.0}, {1, 0, 1.0}}, {"A", "T"});
        const Digraph g = augment_with_outcome(climate);
        CHECK_THROWS_AS(backdoor_adjustment_set(g, "T"), BackdoorViolation);
    }
    SUBCASE("adjustment set never contains a descendant of the treatment (random DAGs)") {
        Rng rng(808);
        for (int trial = 0; trial < 50; ++trial) {
            SyntheticSpec spec;
            spec.d = 8;
            spec.expected_edges = 10;
            spec.seed = 9000 + trial;
            spec.n = 10;
            const SemSample sem = generate_sem(spec);
            const Digraph g = augment_with_outcome(sem.dag);
            const int t = static_cast<int>(rng.uniform_int(8));
            const auto set = backdoor_adjustment_set(g, sem.dag.column_names[t]);
            const auto desc = g.descendants_of(t);
            for (const auto& name : set) CHECK_FALSE(desc[g.index_of(name)]);
        }
    }
}

TEST_CASE("fit_propensity") {
    SUBCASE("no confounders: intercept-only gives mean(t)") {
        Vec t(8);
        t << 1, 0, 1, 1, 0, 0, 1, 0;
        const auto fit = fit_propensity(Mat(8, 0), t);
        for (int i = 0; i < 8; ++i) CHECK(fit.probs(i) == doctest::Approx(0.5).epsilon(1e-8));
    }
    SUBCASE("recovers planted coefficients within 3 asymptotic SEs") {
        const int n = 5000;
        Rng rng(21);
        Mat z(n, 2);
        Vec t(n);
        for (int i = 0; i < n; ++i) {
            z(i, 0) = rng.normal();
            z(i, 1) = rng.normal();
            const double p = 1.0 / (1.0 + std::exp(-(1.0 * z(i, 0) - 2.0 * z(i, 1))));
            t(i) = rng.bernoulli(p) ? 1.0 : 0.0;
        }
        const auto fit = fit_propensity(z, t);

        // asymptotic SE oracle: inverse Fisher information at the true model
        Mat design(n, 3);
        design.col(0).setOnes();
        design.col(1) = z.col(0);
        design.col(2) = z.col(1);
        Vec w(n);
        for (int i = 0; i < n; ++i) {
            const double p = 1.0 / (1.0 + std::exp(-(1.0 * z(i, 0) - 2.0 * z(i, 1))));
            w(i) = p * (1 - p);
        }
        const Mat info = design.transpose() * w.asDiagonal() * design;
        const Mat cov = info.inverse();
        const double se1 = std::sqrt(cov(1, 1));
        const double se2 = std::sqrt(cov(2, 2));

        CHECK(std::abs(fit.coefs(0) - 1.0) < 3 * se1);
        CHECK(std::abs(fit.coefs(1) - (-2.0)) < 3 * se2);
    }
    SUBCASE("perfect separation is reported") {
        Mat z(6, 1);
        z << -3, -2, -1, 1, 2, 3;
        Vec t(6);
        t << 0, 0, 0, 1, 1, 1;
        CHECK_THROWS_AS(fit_propensity(z, t), Separation);
    }
    SUBCASE("single-class treatment") {
        CHECK_THROWS_AS(fit_propensity(Mat(4, 0), Vec::Ones(4)), NoVariation);
    }
}

TEST_CASE("stratified_ate") {
    SUBCASE("randomized design recovers the planted 0.2 effect") {
        const int n = 4000;
        Rng rng(100);
        LabeledData data;
        data.X.resize(n, 3);
        data.names = {"T", "Z1", "Z2"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = rng.normal();
            data.X(i, 1) = rng.normal();
            data.X(i, 2) = rng.normal();
            const bool hi = data.X(i, 0) > 0.0;  // population median
            data.y(i) = rng.bernoulli(0.3 + (hi ? 0.2 : 0.0)) ? 1.0 : 0.0;
        }
        CausalQuery q;
        q.treatment = "T";
        q.adjustment_set = {"Z1", "Z2"};
        StratifiedAteOptions opts;
        opts.rng_seed = 17;
        const auto est = stratified_ate(data, q, opts);
        CHECK(std::abs(est.ate - 0.2) < 0.04);
        CHECK(std::abs(est.ate - est.naive_diff) < 0.02);
        CHECK(est.se > 0.0);
        CHECK(est.ci95.first <= est.ate);
        CHECK(est.ci95.second >= est.ate);
        CHECK(est.ate >= -1.0);
        CHECK(est.ate <= 1.0);
    }
    SUBCASE("empty adjustment set equals the naive difference exactly") {
        const int n = 600;
        Rng rng(42);
        LabeledData data;
        data.X.resize(n, 2);
        data.names = {"T", "Z"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = rng.normal();
            data.X(i, 1) = rng.normal();
            data.y(i) = rng.bernoulli(0.4 + 0.1 * (data.X(i, 0) > 0)) ? 1.0 : 0.0;
        }
        CausalQuery q;
        q.treatment = "T";
        StratifiedAteOptions opts;
        opts.bootstrap = 50;
        opts.rng_seed = 5;
        const auto est = stratified_ate(data, q, opts);
        CHECK(est.ate == est.naive_diff);  // bitwise: single effective stratum
        CHECK(est.n_strata_used == 1);
        CHECK(est.n_dropped == 0);
    }
    SUBCASE("row permutation does not change the point estimate") {
        const int n = 500;
        Rng rng(77);
        LabeledData data;
        data.X.resize(n, 2);
        data.names = {"T", "Z"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            data.X(i, 1) = rng.normal();
            data.X(i, 0) = 0.8 * data.X(i, 1) + rng.normal();
            data.y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-data.X(i, 1)))) ? 1.0 : 0.0;
        }
        CausalQuery q;
        q.treatment = "T";
        q.adjustment_set = {"Z"};
        StratifiedAteOptions opts;
        opts.bootstrap = 0;
        opts.rng_seed = 3;
        const auto base = stratified_ate(data, q, opts);

        LabeledData shuffled = data;
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        Rng prng(99);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[prng.uniform_int(static_cast<std::uint64_t>(i + 1))]);
        for (int i = 0; i < n; ++i) {
            shuffled.X.row(i) = data.X.row(perm[i]);
            shuffled.y(i) = data.y(perm[i]);
        }
        const auto moved = stratified_ate(shuffled, q, opts);
        CHECK(moved.ate == doctest::Approx(base.ate).epsilon(1e-12));
        CHECK(moved.naive_diff == doctest::Approx(base.naive_diff).epsilon(1e-12));
    }
    SUBCASE("too few samples") {
        LabeledData data;
        data.X = Mat::Random(10, 1);
        data.names = {"T"};
        data.y = Vec::Zero(10);
        CausalQuery q;
        q.treatment = "T";
        CHECK_THROWS_AS(stratified_ate(data, q, {}), ConfigError);
    }
    SUBCASE("constant treatment column -> NoVariation") {
        const int n = 100;
        Rng rng(6);
        LabeledData data;
        data.X = Mat::Zero(n, 1);
        data.names = {"T"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) data.y(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        CausalQuery q;
        q.treatment = "T";
        CHECK_THROWS_AS(stratified_ate(data, q, {}), NoVariation);
    }
    SUBCASE("adjustment set must exclude treatment and outcome") {
        LabeledData data;
        data.X = Mat::Random(60, 2);
        data.names = {"T", "Z"};
        data.y = (Mat::Random(60, 1).array() > 0).cast<double>().matrix();
        CausalQuery q;
        q.treatment = "T";
        q.adjustment_set = {"T"};
        CHECK_THROWS_AS(stratified_ate(data, q, {}), ConfigError);
    }
    SUBCASE("separable confounder falls back to the naive difference") {
        const int n = 200;
        Rng rng(9);
        LabeledData data;
        data.X.resize(n, 2);
        data.names = {"T", "Z"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            data.X(i, 0) = rng.normal();
            data.X(i, 1) = data.X(i, 0);  // Z equals T: binarized t is separable on Z
            data.y(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        }
        CausalQuery q;
        q.treatment = "T";
        q.adjustment_set = {"Z"};
        StratifiedAteOptions opts;
        opts.bootstrap = 20;
        opts.rng_seed = 2;
        const auto est = stratified_ate(data, q, opts);
        CHECK(est.propensity_fallback);
        CHECK(est.ate == est.naive_diff);
        CHECK(est.n_strata_used == 0);
    }
}

TEST_CASE("stratified_ate invariants hold on random inputs") {
    Rng rng(31415);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 80 + static_cast<int>(rng.uniform_int(200));
        LabeledData data;
        data.X.resize(n, 3);
        data.names = {"T", "Z1", "Z2"};
        data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            data.X(i, 1) = rng.normal();
            data.X(i, 2) = rng.normal();
            data.X(i, 0) = 0.5 * data.X(i, 1) + rng.normal();
            const double p = 1.0 / (1.0 + std::exp(-(0.4 * data.X(i, 1) - 0.3 * data.X(i, 0))));
            data.y(i) = rng.bernoulli(p) ? 1.0 : 0.0;
        }
        CausalQuery q;
        q.treatment = "T";
        q.adjustment_set = (trial % 2 == 0) ? std::vector<std::string>{"Z1", "Z2"}
                                            : std::vector<std::string>{};
        StratifiedAteOptions opts;
        opts.bootstrap = 30;
        opts.rng_seed = static_cast<std::uint64_t>(trial);
        const auto est = stratified_ate(data, q, opts);
        CHECK(est.ate >= -1.0);
        CHECK(est.ate <= 1.0);
        CHECK(est.ci95.first <= est.ate);
        CHECK(est.ate <= est.ci95.second);
        CHECK(est.se >= 0.0);
        CHECK(est.n_strata_used >= 1);
    }
}

TEST_CASE("zero-effect null: small estimate, interval covers zero") {
    const int n = 4000;
    Rng rng(7919);
    LabeledData data;
    data.X.resize(n, 1);
    data.names = {"T"};
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        data.X(i, 0) = rng.normal();
        data.y(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;  // independent of T
    }
    CausalQuery q;
    q.treatment = "T";
    StratifiedAteOptions opts;
    opts.rng_seed = 1;
    const auto est = stratified_ate(data, q, opts);
    CHECK(std::abs(est.ate) < 0.04);
    CHECK(est.ci95.first <= 0.0);
    CHECK(0.0 <= est.ci95.second);
}

TEST_CASE("confounded null: stratification removes the spurious effect") {
    const int n = 4000;
    Rng rng(2000);
    LabeledData data;
    data.X.resize(n, 2);
    data.names = {"T", "Z"};
    data.y.resize(n);
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        data.X(i, 1) = z;
        data.X(i, 0) = z + 0.5 * rng.normal();  // t depends on z only
        data.y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1.0 : 0.0;  // no direct t effect
    }
    CausalQuery q;
    q.treatment = "T";
    q.adjustment_set = {"Z"};
    StratifiedAteOptions opts;
    opts.rng_seed = 8;
    const auto est = stratified_ate(data, q, opts);
    CHECK(est.naive_diff > 0.1);
    CHECK(std::abs(est.ate) < 0.05);
}
