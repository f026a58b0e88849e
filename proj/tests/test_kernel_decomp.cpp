#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "properuq/kernel_decomposition.hpp"
#include "properuq/kernels.hpp"
#include "util.hpp"

using namespace properuq;

namespace {

SampleSet random_set(std::mt19937_64& eng, int n, int d, double shift = 0.0) {
    std::normal_distribution<double> normal(shift, 1.0);
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = normal(eng);
    return SampleSet(m);
}

// Direct double-loop inner products between embedded sample sets; V-statistic
// for self products. Independent of embedding_stats' blocked path.
double inner_brute(const KernelSpec& k, const SampleSet& X, const SampleSet& Y) {
    double s = 0.0;
    for (int i = 0; i < X.size(); ++i)
        for (int j = 0; j < Y.size(); ++j) s += kernel_eval(k, X.point(i), Y.point(j));
    return s / (static_cast<double>(X.size()) * Y.size());
}

}  // namespace

TEST_CASE("estimator mode names round trip") {
    CHECK(estimator_mode_from_string("plugin") == EstimatorMode::Plugin);
    CHECK(estimator_mode_from_string("unbiased") == EstimatorMode::Unbiased);
    CHECK(to_string(EstimatorMode::Plugin) == "plugin");
    CHECK(to_string(EstimatorMode::Unbiased) == "unbiased");
    CHECK_THROWS_AS((void)estimator_mode_from_string("vstat"), std::invalid_argument);
}

TEST_CASE("bias-variance-noise split matches the double-loop oracle") {
    std::mt19937_64 eng(3);
    KernelSpec k = KernelSpec::rbf(0.6);
    int m = 3;
    std::vector<std::vector<SampleSet>> members;
    for (int i = 0; i < m; ++i) members.push_back({random_set(eng, 9 + i, 2, 0.2 * i)});
    EnsembleGrid grid(members);
    SampleSet targets = random_set(eng, 14, 2, 0.1);

    DecompositionReport r = ks_bvd(k, grid, targets);

    // Oracle terms from raw pairwise kernel sums.
    Eigen::MatrixXd M(m, m);
    Eigen::VectorXd t(m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) M(i, j) = inner_brute(k, grid.at(i, 0), grid.at(j, 0));
        t(i) = inner_brute(k, grid.at(i, 0), targets);
    }
    double qq = inner_brute(k, targets, targets);
    double mean_self = M.diagonal().mean();
    double mean_pair = M.sum() / (static_cast<double>(m) * m);
    double mean_cross = t.mean();

    CHECK(r.bias == doctest::Approx(mean_pair - 2.0 * mean_cross + qq).epsilon(1e-11));
    CHECK(r.variance == doctest::Approx(mean_self - mean_pair).epsilon(1e-11));
    CHECK(r.noise == doctest::Approx(-qq).epsilon(1e-11));
    CHECK(r.total == doctest::Approx(mean_self - 2.0 * mean_cross).epsilon(1e-11));
    CHECK_FALSE(r.covariance.has_value());
    CHECK(r.members == m);
    CHECK(r.replicates == 1);
    CHECK(r.n_target == targets.size());
    CHECK(r.bias >= -1e-12);
    CHECK(r.variance >= -1e-12);
}

TEST_CASE("plugin split sums to the total on random instances") {
    std::mt19937_64 eng(7);
    for (int t = 0; t < 30; ++t) {
        KernelSpec k = (t % 2 == 0) ? KernelSpec::rbf(0.4 + 0.1 * (t % 5)) : KernelSpec::laplacian(0.7);
        int m = 1 + t % 4;
        std::vector<std::vector<SampleSet>> members;
        for (int i = 0; i < m; ++i) members.push_back({random_set(eng, 6 + t % 7, 2, 0.3 * i)});
        EnsembleGrid grid(members);
        SampleSet targets = random_set(eng, 9, 2);
        DecompositionReport r = ks_bvd(k, grid, targets);
        CHECK(r.bias + r.variance + r.noise == doctest::Approx(r.total).epsilon(1e-10));
    }
}

TEST_CASE("one-replicate split rejects replicated grids; unbiased mode departs from plugin") {
    std::mt19937_64 eng(11);
    KernelSpec k = KernelSpec::rbf(0.5);
    std::vector<std::vector<SampleSet>> two_reps = {{random_set(eng, 8, 2), random_set(eng, 8, 2)}};
    CHECK_THROWS_AS((void)ks_bvd(k, EnsembleGrid(two_reps), random_set(eng, 8, 2)),
                    std::invalid_argument);

    std::vector<std::vector<SampleSet>> members = {{random_set(eng, 10, 2)}, {random_set(eng, 10, 2)}};
    EnsembleGrid grid(members);
    SampleSet targets = random_set(eng, 10, 2);
    DecompositionReport plugin = ks_bvd(k, grid, targets, EstimatorMode::Plugin);
    DecompositionReport unb = ks_bvd(k, grid, targets, EstimatorMode::Unbiased);
    CHECK(plugin.mode == EstimatorMode::Plugin);
    CHECK(unb.mode == EstimatorMode::Unbiased);
    // U-stat self products shrink the diagonal (k <= 1 kernels), so the terms move.
    CHECK(unb.variance != doctest::Approx(plugin.variance).epsilon(1e-14));
    CHECK(unb.noise != doctest::Approx(plugin.noise).epsilon(1e-14));
}

TEST_CASE("variance-covariance refinement: exact identity over the grid") {
    std::mt19937_64 eng(13);
    for (int t = 0; t < 15; ++t) {
        KernelSpec k = KernelSpec::rbf(0.5);
        int m = 1 + t % 3;
        int R = 2 + t % 3;
        std::vector<std::vector<SampleSet>> members(m);
        for (int i = 0; i < m; ++i)
            for (int r = 0; r < R; ++r) members[i].push_back(random_set(eng, 7, 2, 0.2 * i));
        EnsembleGrid grid(members);
        SampleSet targets = random_set(eng, 11, 2);

        DecompositionReport r = ks_bvc(k, grid, targets);
        REQUIRE(r.covariance.has_value());
        CHECK(r.bias + r.variance + *r.covariance + r.noise == doctest::Approx(r.total).epsilon(1e-10));
        CHECK(r.replicates == R);
        CHECK(r.members == m);
        if (m == 1) CHECK(*r.covariance == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("variance-covariance refinement matches a from-scratch evaluation") {
    std::mt19937_64 eng(17);
    KernelSpec k = KernelSpec::laplacian(0.4);
    int m = 2, R = 3;
    std::vector<std::vector<SampleSet>> members(m);
    for (int i = 0; i < m; ++i)
        for (int r = 0; r < R; ++r) members[i].push_back(random_set(eng, 6, 2, 0.5 * i));
    EnsembleGrid grid(members);
    SampleSet targets = random_set(eng, 8, 2);

    DecompositionReport rep = ks_bvc(k, grid, targets);

    // Oracle: all inner products by double loops.
    auto V = [&](int a, int r, int b, int u) { return inner_brute(k, grid.at(a, r), grid.at(b, u)); };
    double qq = inner_brute(k, targets, targets);

    // Grand mean squared norm and cross term.
    double grand_sq = 0.0, grand_cross = 0.0;
    for (int a = 0; a < m; ++a)
        for (int r = 0; r < R; ++r) {
            grand_cross += inner_brute(k, grid.at(a, r), targets);
            for (int b = 0; b < m; ++b)
                for (int u = 0; u < R; ++u) grand_sq += V(a, r, b, u);
        }
    grand_sq /= static_cast<double>(m * R) * (m * R);
    grand_cross /= m * R;
    CHECK(rep.bias == doctest::Approx(grand_sq - 2.0 * grand_cross + qq).epsilon(1e-10));
    CHECK(rep.noise == doctest::Approx(-qq).epsilon(1e-12));

    // Variance with weight 1/m.
    double avg_var = 0.0;
    for (int a = 0; a < m; ++a) {
        double self_rep = 0.0, member_sq = 0.0;
        for (int r = 0; r < R; ++r) {
            self_rep += V(a, r, a, r);
            for (int u = 0; u < R; ++u) member_sq += V(a, r, a, u);
        }
        avg_var += self_rep / R - member_sq / (static_cast<double>(R) * R);
    }
    avg_var /= m;
    CHECK(rep.variance == doctest::Approx(avg_var / m).epsilon(1e-10));

    // Covariance with weight (1 - 1/m).
    double avg_cov = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            if (a == b) continue;
            double same = 0.0, cross_mean = 0.0;
            for (int r = 0; r < R; ++r) {
                same += V(a, r, b, r);
                for (int u = 0; u < R; ++u) cross_mean += V(a, r, b, u);
            }
            avg_cov += same / R - cross_mean / (static_cast<double>(R) * R);
        }
    avg_cov /= static_cast<double>(m) * (m - 1);
    REQUIRE(rep.covariance.has_value());
    CHECK(*rep.covariance == doctest::Approx((1.0 - 1.0 / m) * avg_cov).epsilon(1e-10));

    // Total: mean over replicates of the pooled-mixture plugin score.
    double total = 0.0;
    for (int r = 0; r < R; ++r) {
        double wr_sq = 0.0, wr_cross = 0.0;
        for (int a = 0; a < m; ++a) {
            wr_cross += inner_brute(k, grid.at(a, r), targets);
            for (int b = 0; b < m; ++b) wr_sq += V(a, r, b, r);
        }
        total += wr_sq / (static_cast<double>(m) * m) - 2.0 * wr_cross / m;
    }
    total /= R;
    CHECK(rep.total == doctest::Approx(total).epsilon(1e-10));
}

TEST_CASE("variance-covariance refinement needs at least two replicates") {
    std::mt19937_64 eng(19);
    std::vector<std::vector<SampleSet>> members = {{random_set(eng, 6, 2)}};
    CHECK_THROWS_AS((void)ks_bvc(KernelSpec::rbf(1.0), EnsembleGrid(members), random_set(eng, 6, 2)),
                    std::invalid_argument);
}

TEST_CASE("uncertainty profile pools samples for entropy and uses plugin variance") {
    std::mt19937_64 eng(23);
    KernelSpec k = KernelSpec::rbf(0.8);
    int m = 2, R = 2, n = 6, d = 2;
    std::vector<std::vector<SampleSet>> members(m);
    for (int i = 0; i < m; ++i)
        for (int r = 0; r < R; ++r) members[i].push_back(random_set(eng, n, d, 0.4 * i));
    EnsembleGrid grid(members);

    UncertaintyRow row = uncertainty_profile_row(k, grid, "inst-0");
    CHECK(row.id == "inst-0");

    // Oracle entropy: pool all rows, -U-stat of the pooled self products.
    Eigen::MatrixXd pooled(m * R * n, d);
    int at = 0;
    for (int i = 0; i < m; ++i)
        for (int r = 0; r < R; ++r) {
            pooled.middleRows(at, n) = grid.at(i, r).points();
            at += n;
        }
    CHECK(row.entropy == doctest::Approx(kernel_entropy(k, SampleSet(pooled))).epsilon(1e-11));

    // Oracle variance: plugin spread of the m*R cell embeddings.
    int cells = m * R;
    Eigen::MatrixXd M(cells, cells);
    for (int a = 0; a < cells; ++a)
        for (int b = 0; b < cells; ++b)
            M(a, b) = inner_brute(k, grid.at(a / R, a % R), grid.at(b / R, b % R));
    double expect_var = M.diagonal().mean() - M.sum() / (static_cast<double>(cells) * cells);
    CHECK(row.variance == doctest::Approx(expect_var).epsilon(1e-11));
    CHECK(row.variance >= -1e-12);

    // Batch wrapper pairs ids with grids and validates sizes.
    std::vector<EnsembleGrid> instances = {grid, grid};
    std::vector<UncertaintyRow> rows = uncertainty_profile(k, instances, {"a", "b"});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].id == "a");
    CHECK(rows[1].id == "b");
    CHECK(rows[0].entropy == doctest::Approx(rows[1].entropy));
    CHECK_THROWS_AS((void)uncertainty_profile(k, instances, {"only-one"}), std::invalid_argument);
}
