#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "properuq/io.hpp"
#include "properuq/parallel.hpp"
#include "properuq/rng.hpp"
#include "properuq/types.hpp"
#include "util.hpp"

using namespace properuq;

TEST_CASE("simplex vector validates mass and sign") {
    Eigen::Vector3d ok(0.2, 0.3, 0.5);
    CHECK_NOTHROW(SimplexVector{Eigen::VectorXd(ok)});

    Eigen::Vector3d heavy(0.4, 0.4, 0.4);
    CHECK_THROWS_AS(SimplexVector{Eigen::VectorXd(heavy)}, std::invalid_argument);

    Eigen::Vector3d negative(-0.1, 0.6, 0.5);
    CHECK_THROWS_AS(SimplexVector{Eigen::VectorXd(negative)}, std::invalid_argument);

    Eigen::VectorXd empty(0);
    CHECK_THROWS_AS(SimplexVector{empty}, std::invalid_argument);

    // Slightly-off mass within 1e-9 is accepted and renormalized to 1e-15.
    Eigen::Vector2d off(0.5, 0.5 + 4e-10);
    SimplexVector s{Eigen::VectorXd(off)};
    CHECK(std::abs(s.probs().sum() - 1.0) <= 1e-15);
}

TEST_CASE("simplex vector helpers") {
    SimplexVector u = SimplexVector::uniform(4);
    for (int i = 0; i < 4; ++i) CHECK(u[i] == doctest::Approx(0.25));

    SimplexVector e = SimplexVector::one_hot(3, 1);
    CHECK(e[1] == 1.0);
    CHECK(e[0] == 0.0);
    CHECK(e.argmax() == 1);

    // Argmax ties resolve to the lowest index.
    Eigen::Vector3d tie(0.4, 0.4, 0.2);
    CHECK(SimplexVector{Eigen::VectorXd(tie)}.argmax() == 0);
}

TEST_CASE("labeled prediction set consistency checks") {
    std::vector<SimplexVector> preds{SimplexVector::uniform(3), SimplexVector::one_hot(3, 2)};
    std::vector<int> labels{0, 2};
    LabeledPredictionSet data(preds, labels, "tag");
    CHECK(data.size() == 2);
    CHECK(data.dim() == 3);
    CHECK(data.provenance_id() == "tag");

    Eigen::MatrixXd m = data.prediction_matrix();
    CHECK(m.rows() == 2);
    CHECK(m(1, 2) == 1.0);

    SimplexVector freq = data.marginal_label_frequency();
    CHECK(freq[0] == doctest::Approx(0.5));
    CHECK(freq[2] == doctest::Approx(0.5));

    CHECK_THROWS_AS(LabeledPredictionSet(preds, {0}, ""), std::invalid_argument);
    CHECK_THROWS_AS(LabeledPredictionSet(preds, {0, 3}, ""), std::invalid_argument);
    std::vector<SimplexVector> ragged{SimplexVector::uniform(3), SimplexVector::uniform(2)};
    CHECK_THROWS_AS(LabeledPredictionSet(ragged, {0, 1}, ""), std::invalid_argument);
}

TEST_CASE("sample set restriction keeps order") {
    Eigen::MatrixXd pts(2, 3);
    pts << 1, 2, 3, 4, 5, 6;
    SampleSet s(pts, "src");
    SampleSet r = s.restrict_columns({2, 0});
    CHECK(r.point_dim() == 2);
    CHECK(r.points()(0, 0) == 3.0);
    CHECK(r.points()(0, 1) == 1.0);
    CHECK(r.points()(1, 0) == 6.0);
    CHECK_THROWS_AS(s.restrict_columns({3}), std::invalid_argument);
}

TEST_CASE("ensemble grid must be rectangular") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    SampleSet s(pts);
    CHECK_NOTHROW(EnsembleGrid({{s, s}, {s, s}}));
    CHECK_THROWS_AS(EnsembleGrid({{s, s}, {s}}), std::invalid_argument);
    CHECK_THROWS_AS(EnsembleGrid({}), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and independent") {
    Rng a(Seed{42});
    Rng b(Seed{42});
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());

    Rng root(Seed{42});
    Rng c1 = root.derive(1);
    Rng c2 = root.derive(2);
    bool all_equal = true;
    for (int i = 0; i < 32; ++i) all_equal &= (c1.uniform() == c2.uniform());
    CHECK_FALSE(all_equal);

    // Deriving never perturbs the parent stream.
    Rng p1(Seed{7});
    Rng p2(Seed{7});
    (void)p1.derive(3);
    CHECK(p1.uniform() == p2.uniform());
}

TEST_CASE("rng transforms hit their basic moments") {
    Rng rng(Seed{2024});
    const int n = 40000;
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += rng.uniform();
    mean /= n;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));

    double nmean = 0.0, nvar = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        nmean += z;
        nvar += z * z;
    }
    nmean /= n;
    nvar = nvar / n - nmean * nmean;
    CHECK(std::abs(nmean) < 0.02);
    CHECK(nvar == doctest::Approx(1.0).epsilon(0.05));

    double gmean = 0.0;
    for (int i = 0; i < n; ++i) gmean += rng.gamma(2.5);
    CHECK(gmean / n == doctest::Approx(2.5).epsilon(0.05));

    double gmean_small = 0.0;
    for (int i = 0; i < n; ++i) gmean_small += rng.gamma(0.4);
    CHECK(gmean_small / n == doctest::Approx(0.4).epsilon(0.05));

    Eigen::VectorXd d = rng.dirichlet_symmetric(0.7, 5);
    CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.minCoeff() >= 0.0);

    Eigen::Vector3d pmf(0.5, 0.25, 0.25);
    Eigen::Vector3d counts = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) counts(rng.categorical(pmf)) += 1.0;
    CHECK(counts(0) / n == doctest::Approx(0.5).epsilon(0.05));
    CHECK(counts(1) / n == doctest::Approx(0.25).epsilon(0.08));

    std::set<int> seen;
    for (int i = 0; i < 200; ++i) seen.insert(rng.uniform_int(7));
    CHECK(seen.size() == 7);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 6);
}

TEST_CASE("predictions round trip byte-stably") {
    testutil::TempDir tmp("io-pred");
    Rng rng(Seed{5});
    std::vector<SimplexVector> preds;
    std::vector<int> labels;
    for (int i = 0; i < 20; ++i) {
        preds.emplace_back(rng.dirichlet_symmetric(1.0, 4));
        labels.push_back(rng.uniform_int(4));
    }
    LabeledPredictionSet data(preds, labels);
    std::string p1 = tmp.path("a.csv");
    std::string p2 = tmp.path("b.csv");
    save_predictions(p1, data);
    LabeledPredictionSet loaded = load_predictions(p1);
    save_predictions(p2, loaded);
    CHECK(testutil::read_file(p1) == testutil::read_file(p2));
    CHECK(loaded.size() == 20);
    for (int i = 0; i < 20; ++i) CHECK(loaded.label(i) == labels[i]);
    // Loader stamps the file digest as provenance.
    CHECK(loaded.provenance_id() == file_digest(p1));
}

TEST_CASE("prediction loader reports the physical line of an error") {
    testutil::TempDir tmp("io-err");
    std::string path = tmp.path("bad.csv");
    testutil::write_file(path, "p1,p2,label\n0.5,0.5,1\n0.9,0.9,2\n");
    try {
        load_predictions(path);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(testutil::contains(e.what(), "row 3"));
        CHECK(testutil::contains(e.what(), "mass"));
    }

    testutil::write_file(path, "p1,p2,label\n0.5,0.5,3\n");
    try {
        load_predictions(path);
        FAIL("expected a label error");
    } catch (const std::runtime_error& e) {
        CHECK(testutil::contains(e.what(), "label"));
    }

    testutil::write_file(path, "p1,p2\n0.5,0.5\n");
    CHECK_THROWS_AS(load_predictions(path), std::runtime_error);
    CHECK_THROWS_AS(load_predictions(tmp.path("missing.csv")), std::runtime_error);
}

TEST_CASE("samples and simplex rows round trip") {
    testutil::TempDir tmp("io-samp");
    Eigen::MatrixXd pts(3, 2);
    pts << 0.25, -1.5, 2.0, 0.125, 1e-3, 7.5;
    std::string path = tmp.path("x.csv");
    save_samples(path, SampleSet(pts));
    SampleSet loaded = load_samples(path);
    CHECK(loaded.size() == 3);
    CHECK(loaded.points().isApprox(pts));

    std::string spath = tmp.path("rows.csv");
    testutil::write_file(spath, "p1,p2,p3\n0.2,0.3,0.5\n1,0,0\n");
    auto rows = load_simplex_rows(spath);
    CHECK(rows.size() == 2);
    CHECK(rows[1][0] == 1.0);
}

TEST_CASE("ensemble manifest resolves relative paths and rejects ragged grids") {
    testutil::TempDir tmp("io-ens");
    Eigen::MatrixXd pts(2, 1);
    pts << 0.5, 1.5;
    save_samples(tmp.path("m1r1.csv"), SampleSet(pts));
    save_samples(tmp.path("m1r2.csv"), SampleSet(pts));
    save_samples(tmp.path("m2r1.csv"), SampleSet(2.0 * pts));
    save_samples(tmp.path("m2r2.csv"), SampleSet(2.0 * pts));
    testutil::write_file(tmp.path("grid.json"),
                         R"({"members": [["m1r1.csv", "m1r2.csv"], ["m2r1.csv", "m2r2.csv"]]})");
    EnsembleGrid grid = load_ensemble(tmp.path("grid.json"));
    CHECK(grid.member_count() == 2);
    CHECK(grid.replicate_count() == 2);
    CHECK(grid.at(1, 0).points()(1, 0) == doctest::Approx(3.0));

    testutil::write_file(tmp.path("ragged.json"),
                         R"({"members": [["m1r1.csv", "m1r2.csv"], ["m2r1.csv"]]})");
    CHECK_THROWS_AS(load_ensemble(tmp.path("ragged.json")), std::exception);
    testutil::write_file(tmp.path("bad.json"), "{not json");
    CHECK_THROWS_AS(load_ensemble(tmp.path("bad.json")), std::runtime_error);
}

TEST_CASE("digests are stable and content-sensitive") {
    testutil::TempDir tmp("digest");
    testutil::write_file(tmp.path("f.txt"), "hello");
    std::string d1 = file_digest(tmp.path("f.txt"));
    CHECK(d1 == bytes_digest("hello", 5));
    CHECK(d1.size() == 16);
    testutil::write_file(tmp.path("f.txt"), "hello!");
    CHECK(file_digest(tmp.path("f.txt")) != d1);
}

TEST_CASE("blocked parallel reduction is independent of the thread cap") {
    const std::int64_t n = 100000;
    auto run = [&](int threads) {
        set_max_threads(threads);
        std::vector<double> partial((n + 255) / 256, 0.0);
        parallel_for_blocks(n, 256, [&](std::int64_t lo, std::int64_t hi) {
            KahanSum acc;
            for (std::int64_t i = lo; i < hi; ++i)
                acc.add(std::sin(0.001 * static_cast<double>(i)));
            partial[static_cast<std::size_t>(lo / 256)] = acc.value();
        });
        KahanSum total;
        for (double v : partial) total.add(v);
        return total.value();
    };
    double t1 = run(1);
    double t3 = run(3);
    double t8 = run(8);
    set_max_threads(0);
    CHECK(t1 == t3);
    CHECK(t1 == t8);

    // Every index is visited exactly once.
    std::vector<int> hits(64, 0);
    parallel_for_blocks(64, 7, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) hits[static_cast<std::size_t>(i)]++;
    });
    for (int h : hits) CHECK(h == 1);
}
