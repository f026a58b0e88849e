#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "properuq/cli.hpp"
#include "properuq/io.hpp"
#include "properuq/scores.hpp"
#include "properuq/synth.hpp"
#include "util.hpp"

using namespace properuq;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Parsed report with the single run-dependent field removed, for byte-level
// comparisons between reruns.
json stable_report(const std::string& text) {
    json j = json::parse(text);
    if (j.contains("manifest")) j["manifest"].erase("wall_time_ms");
    return j;
}

const char* kPredictions =
    "p1,p2,p3,label\n"
    "0.5,0.3,0.2,1\n"
    "0.2,0.6,0.2,2\n"
    "0.1,0.2,0.7,3\n"
    "0.25,0.25,0.5,1\n";

}  // namespace

TEST_CASE("score subcommand emits a full report with manifest") {
    testutil::TempDir tmp("cli-score");
    std::string data = tmp.path("pred.csv");
    testutil::write_file(data, kPredictions);

    CliResult r = run({"score", "--kind", "brier", "--data", data});
    REQUIRE(r.code == 0);
    CHECK(r.err.empty());
    json j = json::parse(r.out);
    CHECK(j["kind"] == "brier");
    CHECK(j["n"] == 4);
    REQUIRE(j["per_instance"].is_array());
    CHECK(j["per_instance"].size() == 4);

    // Risk agrees with the library on the same file.
    LabeledPredictionSet loaded = load_predictions(data);
    double expect = empirical_risk(ScoreKind::Brier, loaded);
    CHECK(j["risk"].get<double>() == doctest::Approx(expect).epsilon(1e-9));

    // Manifest: subcommand, flags, version, input digest, null seed.
    const json& m = j["manifest"];
    CHECK(m["subcommand"] == "score");
    CHECK(m["version"] == "0.1.0");
    CHECK(m["seed"].is_null());
    CHECK(m["flags"]["kind"] == "brier");
    CHECK(m["flags"]["data"] == data);
    CHECK(m["inputs"]["data"]["digest"] == file_digest(data));
    CHECK(m.contains("wall_time_ms"));
    // Neither --threads nor --out is recorded.
    CHECK_FALSE(m["flags"].contains("threads"));
    CHECK_FALSE(m["flags"].contains("out"));
}

TEST_CASE("score report can be routed to a file with --out") {
    testutil::TempDir tmp("cli-out");
    std::string data = tmp.path("pred.csv");
    testutil::write_file(data, kPredictions);
    std::string dest = tmp.path("report.json");

    CliResult r = run({"score", "--kind", "log", "--data", data, "--out", dest});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    json j = json::parse(testutil::read_file(dest));
    CHECK(j["kind"] == "log");
}

TEST_CASE("usage problems exit 2 with help text") {
    CliResult unknown_sub = run({"frobnicate"});
    CHECK(unknown_sub.code == 2);
    CHECK(testutil::contains(unknown_sub.err, "error:"));

    CliResult unknown_flag = run({"score", "--kind", "brier", "--no-such-flag", "1"});
    CHECK(unknown_flag.code == 2);

    CliResult missing_required = run({"score", "--kind", "brier"});
    CHECK(missing_required.code == 2);
    CHECK(testutil::contains(missing_required.err, "--data"));

    // synth requires an explicit seed: omitting it is a usage error.
    testutil::TempDir tmp("cli-seed");
    CliResult no_seed = run({"synth", "--scenario", "calibrated", "--out", tmp.path("x.csv")});
    CHECK(no_seed.code == 2);
    CHECK(testutil::contains(no_seed.err, "--seed"));

    CliResult nothing = run({});
    CHECK(nothing.code == 2);
}

TEST_CASE("help exits 0 and lists every subcommand") {
    CliResult top = run({"--help"});
    REQUIRE(top.code == 0);
    for (const char* name : {"score", "bvd", "ks-decompose", "ks-uncertainty", "calibrate",
                             "recalibrate", "reliability", "optimize-ce", "cka-matrix",
                             "disentangle", "synth"}) {
        CHECK(testutil::contains(top.out, name));
    }
    CliResult sub = run({"score", "--help"});
    REQUIRE(sub.code == 0);
    CHECK(testutil::contains(sub.out, "--kind"));
}

TEST_CASE("computation failures exit 1 with a message") {
    CliResult missing_file = run({"score", "--kind", "brier", "--data", "/nonexistent/f.csv"});
    CHECK(missing_file.code == 1);
    CHECK(testutil::contains(missing_file.err, "error:"));

    testutil::TempDir tmp("cli-badkind");
    std::string data = tmp.path("pred.csv");
    testutil::write_file(data, kPredictions);
    CliResult bad_kind = run({"score", "--kind", "quadratic", "--data", data});
    CHECK(bad_kind.code == 1);

    CliResult bad_target = run({"bvd", "--kind", "brier", "--members", data, "--target", "0.5,oops"});
    CHECK(bad_target.code == 1);
    CHECK(testutil::contains(bad_target.err, "error:"));
}

TEST_CASE("synth writes the dataset and a digest-bearing summary") {
    testutil::TempDir tmp("cli-synth");
    std::string dest = tmp.path("gen.csv");
    CliResult r = run({"synth", "--scenario", "calibrated", "--d", "3", "--n", "50", "--seed",
                       "11", "--out", dest});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["scenario"] == "calibrated");
    CHECK(j["n"] == 50);
    CHECK(j["ts_alpha"].is_null());
    CHECK(j["digest"] == file_digest(dest));
    CHECK(j["manifest"]["seed"] == 11);

    // The file matches the library generator exactly.
    LabeledPredictionSet written = load_predictions(dest);
    CalibratedBundle direct = gen_calibrated(3, 50, 1.0, Seed{11});
    REQUIRE(written.size() == 50);
    for (int i = 0; i < 50; ++i) {
        CHECK(written.label(i) == direct.data.label(i));
        for (int c = 0; c < 3; ++c)
            CHECK(written.prediction(i).probs()[c] ==
                  doctest::Approx(direct.data.prediction(i).probs()[c]).epsilon(1e-15));
    }

    // Identical rerun: identical CSV bytes and identical summary minus timing.
    std::string csv_once = testutil::read_file(dest);
    CliResult again = run({"synth", "--scenario", "calibrated", "--d", "3", "--n", "50", "--seed",
                           "11", "--out", dest});
    REQUIRE(again.code == 0);
    CHECK(testutil::read_file(dest) == csv_once);
    CHECK(stable_report(again.out) == stable_report(r.out));

    // Different seed, different content.
    CliResult other = run({"synth", "--scenario", "miscalibrated", "--d", "3", "--n", "50",
                           "--seed", "12", "--ts-alpha", "2", "--out", dest});
    REQUIRE(other.code == 0);
    CHECK(testutil::read_file(dest) != csv_once);
    CHECK(json::parse(other.out)["ts_alpha"].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("synth output feeds the calibration estimators end to end") {
    testutil::TempDir tmp("cli-pipeline");
    std::string dest = tmp.path("cal.csv");
    REQUIRE(run({"synth", "--scenario", "calibrated", "--d", "3", "--n", "300", "--seed", "7",
                 "--out", dest})
                .code == 0);

    CliResult cce = run({"calibrate", "--data", dest, "--estimator", "cce", "--bandwidth", "0.1"});
    REQUIRE(cce.code == 0);
    json j = json::parse(cce.out);
    CHECK(j["estimator"] == "cce");
    CHECK(j["n"] == 300);
    CHECK(j["value"].get<double>() >= 0.0);
    CHECK(std::isfinite(j["value"].get<double>()));
    CHECK(j["bandwidth"].get<double>() == doctest::Approx(0.1));
    CHECK(j["bins"].is_null());

    CliResult tce = run({"calibrate", "--data", dest, "--estimator", "tce", "--p", "1", "--bins",
                         "equal-mass:5"});
    REQUIRE(tce.code == 0);
    json jt = json::parse(tce.out);
    CHECK(jt["bins"].get<int>() == 5);
    CHECK(jt["p_exponent"].get<double>() == doctest::Approx(1.0));

    CliResult prop = run({"calibrate", "--data", dest, "--estimator", "proper", "--kind", "log",
                          "--bandwidth", "0.1", "--leave-one-out"});
    REQUIRE(prop.code == 0);
    CHECK(json::parse(prop.out)["kind"] == "log");
}

TEST_CASE("recalibrate fits a temperature that undoes synthetic miscalibration") {
    testutil::TempDir tmp("cli-recal");
    std::string dest = tmp.path("mis.csv");
    REQUIRE(run({"synth", "--scenario", "miscalibrated", "--d", "3", "--n", "2000", "--seed",
                 "21", "--ts-alpha", "2", "--out", dest})
                .code == 0);
    CliResult r = run({"recalibrate", "--data", dest, "--fit-temperature", "--kind", "log"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    double alpha = j["alpha"].get<double>();
    CHECK(alpha == doctest::Approx(0.5).epsilon(0.2));
    CHECK(j["risk_after"].get<double>() <= j["risk_before"].get<double>() + 1e-12);
}

TEST_CASE("bvd subcommand reproduces the library decomposition") {
    testutil::TempDir tmp("cli-bvd");
    std::string members = tmp.path("members.csv");
    testutil::write_file(members,
                         "p1,p2,p3\n"
                         "0.6,0.3,0.1\n"
                         "0.2,0.5,0.3\n");
    CliResult r = run({"bvd", "--kind", "brier", "--members", members, "--target", "0.4,0.4,0.2"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["members"] == 2);
    double bias = j["bias"].get<double>();
    double variance = j["variance"].get<double>();
    double noise = j["noise"].get<double>();
    double total = j["total"].get<double>();
    CHECK(bias + variance + noise == doctest::Approx(total).epsilon(1e-9));
    // Spot-check the noise term: -||q||^2 for the literal target.
    CHECK(noise == doctest::Approx(-(0.16 + 0.16 + 0.04)).epsilon(1e-9));
}

TEST_CASE("reliability emits a plain CSV with one row per bin") {
    testutil::TempDir tmp("cli-rel");
    std::string data = tmp.path("pred.csv");
    testutil::write_file(data, kPredictions);
    CliResult r = run({"reliability", "--data", data, "--bins", "uniform:4"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "bin_lo,bin_hi,count,acc,conf");
    int rows = 0;
    int total_count = 0;
    while (std::getline(lines, line)) {
        ++rows;
        std::istringstream fields(line);
        std::string lo, hi, count, acc, conf;
        REQUIRE(std::getline(fields, lo, ','));
        REQUIRE(std::getline(fields, hi, ','));
        REQUIRE(std::getline(fields, count, ','));
        REQUIRE(std::getline(fields, acc, ','));
        REQUIRE(std::getline(fields, conf, ','));
        total_count += std::stoi(count);
    }
    CHECK(rows == 4);
    CHECK(total_count == 4);
    // No manifest in CSV output: reruns are fully byte-identical.
    CliResult again = run({"reliability", "--data", data, "--bins", "uniform:4"});
    CHECK(again.out == r.out);
}

TEST_CASE("ks-decompose reads an ensemble manifest and is thread-count invariant") {
    testutil::TempDir tmp("cli-ksd");
    // Two members, one replicate each, plus a target cloud.
    DiscretePmfWorld world = DiscretePmfWorld::one_hot_classes(3);
    save_samples(tmp.path("m0.csv"), world.sample({0.6, 0.3, 0.1}, 40, Seed{1}));
    save_samples(tmp.path("m1.csv"), world.sample({0.2, 0.5, 0.3}, 40, Seed{2}));
    save_samples(tmp.path("target.csv"), world.sample({0.4, 0.4, 0.2}, 60, Seed{3}));
    testutil::write_file(tmp.path("ensemble.json"),
                         "{\"members\": [[\"m0.csv\"], [\"m1.csv\"]]}\n");

    std::vector<std::string> base = {"ks-decompose", "--kernel", "delta",
                                     "--ensemble", tmp.path("ensemble.json"),
                                     "--targets", tmp.path("target.csv")};
    CliResult r = run(base);
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["mode"] == "plugin");
    CHECK(j["members"] == 2);
    CHECK(j["replicates"] == 1);
    CHECK(j["covariance"].is_null());
    double identity_gap = j["bias"].get<double>() + j["variance"].get<double>() +
                          j["noise"].get<double>() - j["total"].get<double>();
    CHECK(std::abs(identity_gap) < 1e-9);

    // Thread-count invariance: identical bytes up to wall time.
    std::vector<std::string> t1 = base;
    t1.insert(t1.end(), {"--threads", "1"});
    std::vector<std::string> t3 = base;
    t3.insert(t3.end(), {"--threads", "3"});
    CliResult r1 = run(t1);
    CliResult r3 = run(t3);
    REQUIRE(r1.code == 0);
    REQUIRE(r3.code == 0);
    CHECK(stable_report(r1.out) == stable_report(r3.out));
    CHECK(stable_report(r1.out).dump(2) == stable_report(r3.out).dump(2));

    // bvc mode needs replicates.
    std::vector<std::string> bvc = base;
    bvc.insert(bvc.end(), {"--mode", "bvc"});
    CHECK(run(bvc).code == 1);
}

TEST_CASE("ks-uncertainty writes one CSV row per instance") {
    testutil::TempDir tmp("cli-ksu");
    DiscretePmfWorld world = DiscretePmfWorld::one_hot_classes(2);
    save_samples(tmp.path("a0.csv"), world.sample({0.5, 0.5}, 30, Seed{4}));
    save_samples(tmp.path("a1.csv"), world.sample({0.5, 0.5}, 30, Seed{5}));
    save_samples(tmp.path("b0.csv"), world.sample({0.9, 0.1}, 30, Seed{6}));
    save_samples(tmp.path("b1.csv"), world.sample({0.9, 0.1}, 30, Seed{7}));
    testutil::write_file(tmp.path("instances.json"),
                         "{\"instances\": ["
                         "{\"id\": \"hard\", \"members\": [[\"a0.csv\"], [\"a1.csv\"]]},"
                         "{\"id\": \"easy\", \"members\": [[\"b0.csv\"], [\"b1.csv\"]]}"
                         "]}\n");

    CliResult r = run({"ks-uncertainty", "--kernel", "delta", "--instances",
                       tmp.path("instances.json")});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, row1, row2;
    REQUIRE(std::getline(lines, header));
    CHECK(header == "id,entropy,variance");
    REQUIRE(std::getline(lines, row1));
    REQUIRE(std::getline(lines, row2));
    CHECK(row1.substr(0, 5) == "hard,");
    CHECK(row2.substr(0, 5) == "easy,");
    // The near-uniform instance carries higher (less negative) entropy.
    double h_hard = std::stod(row1.substr(5));
    double h_easy = std::stod(row2.substr(5));
    CHECK(h_hard > h_easy);
}

TEST_CASE("optimize-ce ranks candidates from a JSON file") {
    testutil::TempDir tmp("cli-oce");
    for (int split = 0; split < 3; ++split) {
        CalibratedBundle b = gen_calibrated(3, 150, 1.0, Seed{100 + static_cast<std::uint64_t>(split)});
        save_predictions(tmp.path("s" + std::to_string(split) + ".csv"), b.data);
    }
    testutil::write_file(tmp.path("candidates.json"),
                         "[{\"kind\": \"binned\", \"bins\": 5, \"scheme\": \"uniform\"},"
                         " {\"kind\": \"kde\", \"h\": 0.1},"
                         " {\"kind\": \"oracle\", \"ts_alpha\": 1}]\n");

    CliResult r = run({"optimize-ce", "--train", tmp.path("s0.csv"), "--val", tmp.path("s1.csv"),
                       "--test", tmp.path("s2.csv"), "--candidates", tmp.path("candidates.json")});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    REQUIRE(j["candidates"].size() == 3);
    int chosen = j["chosen_index"].get<int>();
    REQUIRE(chosen >= 0);
    REQUIRE(chosen < 3);
    CHECK(j["chosen"] == j["candidates"][chosen]["name"]);
    // Winner has the smallest validation risk.
    double win = j["candidates"][chosen]["val_risk"].get<double>();
    for (const auto& row : j["candidates"]) CHECK(win <= row["val_risk"].get<double>() + 1e-15);
    // On calibrated data the identity oracle should win.
    CHECK(j["chosen"] == "oracle");

    // Shared split files are rejected (same digest -> same provenance).
    CliResult shared = run({"optimize-ce", "--train", tmp.path("s0.csv"), "--val",
                            tmp.path("s0.csv"), "--test", tmp.path("s2.csv"), "--candidates",
                            tmp.path("candidates.json")});
    CHECK(shared.code == 1);
}

TEST_CASE("cka-matrix emits a headerless numeric matrix and flags constants") {
    testutil::TempDir tmp("cli-cka");
    // Three coordinates: two correlated, one constant.
    std::ostringstream csv;
    csv << "x1,x2,x3\n";
    std::mt19937_64 eng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        double z = normal(eng);
        csv << z << "," << -z << ",5\n";
    }
    std::string samples = tmp.path("samples.csv");
    testutil::write_file(samples, csv.str());

    CliResult r = run({"cka-matrix", "--samples", samples, "--kernel", "poly:gamma=1,c=0,degree=1"});
    REQUIRE(r.code == 0);
    CHECK(testutil::contains(r.err, "coordinate 2 is constant"));
    std::istringstream lines(r.out);
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 2);
    }
    CHECK(rows == 3);
    // First row: 1, ~1 (linear relation), 0 (constant coordinate).
    std::istringstream first(r.out.substr(0, r.out.find('\n')));
    std::string a, b, c;
    std::getline(first, a, ',');
    std::getline(first, b, ',');
    std::getline(first, c, ',');
    CHECK(std::stod(a) == doctest::Approx(1.0));
    CHECK(std::stod(b) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::stod(c) == doctest::Approx(0.0));
}

TEST_CASE("disentangle reports partition, factors, and residual") {
    testutil::TempDir tmp("cli-dis");
    std::ostringstream gen_csv, ref_csv;
    gen_csv << "x1,x2\n";
    ref_csv << "x1,x2\n";
    std::mt19937_64 eng(13);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        gen_csv << normal(eng) << "," << normal(eng) << "\n";
        ref_csv << normal(eng) << "," << normal(eng) << "\n";
    }
    std::string gen = tmp.path("gen.csv");
    std::string ref = tmp.path("ref.csv");
    testutil::write_file(gen, gen_csv.str());
    testutil::write_file(ref, ref_csv.str());

    CliResult r = run({"disentangle", "--gen", gen, "--ref", ref, "--kernel", "rbf:gamma=0.5",
                       "--tau", "0.3", "--mode", "cosine"});
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["tau"].get<double>() == doctest::Approx(0.3));
    CHECK(j["mode"] == "cosine");
    REQUIRE(j["partition"].is_array());
    REQUIRE(j["factors"].is_array());
    CHECK(j["factors"].size() == j["partition"].size());
    CHECK(j["residual"].get<double>() >= 0.0);
    CHECK(j["residual"].get<double>() ==
          doctest::Approx(std::abs(j["product"].get<double>() - j["full"].get<double>()))
              .epsilon(1e-9));
    CHECK(j["n_generated"] == 50);
}
