#include "properuq/cli.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "properuq/bregman.hpp"
#include "properuq/calibration.hpp"
#include "properuq/cka.hpp"
#include "properuq/estimator_risk.hpp"
#include "properuq/io.hpp"
#include "properuq/kernel_decomposition.hpp"
#include "properuq/kernels.hpp"
#include "properuq/parallel.hpp"
#include "properuq/report_json.hpp"
#include "properuq/scores.hpp"
#include "properuq/synth.hpp"
#include "properuq/types.hpp"
#include "properuq/version.hpp"

namespace properuq {

namespace {

using nlohmann::json;

// Run manifest embedded under "manifest" in every JSON report. Flags that
// cannot change the computed values (--threads, --out) are left out so that
// reruns with a different worker count stay byte-identical; wall_time_ms is
// the one field comparisons must ignore.
class ManifestBuilder {
public:
    explicit ManifestBuilder(std::string subcommand)
        : subcommand_(std::move(subcommand)), start_(std::chrono::steady_clock::now()) {}

    void flag(const std::string& name, json value) { flags_[name] = std::move(value); }
    void input(const std::string& name, const std::string& path) {
        flags_[name] = path;
        inputs_[name] = json{{"path", path}, {"digest", file_digest(path)}};
    }
    void seed(std::uint64_t s) { seed_ = s; }

    json finish() const {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        double ms = std::chrono::duration<double, std::milli>(elapsed).count();
        return json{{"subcommand", subcommand_}, {"flags", flags_},
                    {"seed", seed_},           {"version", kVersion},
                    {"inputs", inputs_},       {"wall_time_ms", round_to_12_digits(ms)}};
    }

private:
    std::string subcommand_;
    json flags_ = json::object();
    json inputs_ = json::object();
    json seed_;  // null unless the subcommand is stochastic
    std::chrono::steady_clock::time_point start_;
};

void write_output(const std::string& out_path, const std::string& text, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    f << text;
    f.flush();
    if (!f.good()) throw std::runtime_error("failed writing output file: " + out_path);
}

SimplexVector parse_simplex_literal(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("target literal: cannot parse entry '" + item + "'");
        }
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size())
            throw std::invalid_argument("target literal: trailing junk in entry '" + item + "'");
        vals.push_back(v);
    }
    if (vals.size() < 2)
        throw std::invalid_argument("target literal: need at least two comma-separated entries");
    Eigen::VectorXd p(static_cast<int>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) p(static_cast<int>(i)) = vals[i];
    return SimplexVector(p);
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": invalid JSON: " + e.what());
    }
    return j;
}

// Instance file for ks-uncertainty:
//   {"instances": [{"id": "...", "members": [["rep1.csv", ...], ...]}, ...]}
// with sample paths resolved relative to the file's directory.
void load_instances(const std::string& path, std::vector<EnsembleGrid>& grids,
                    std::vector<std::string>& ids) {
    json j = load_json_file(path);
    if (!j.is_object() || !j.contains("instances") || !j["instances"].is_array())
        throw std::runtime_error(path + ": expected an object with an \"instances\" array");
    std::filesystem::path dir = std::filesystem::path(path).parent_path();
    for (const auto& inst : j["instances"]) {
        if (!inst.is_object() || !inst.contains("id") || !inst.contains("members"))
            throw std::runtime_error(path + ": each instance needs \"id\" and \"members\"");
        std::string id = inst["id"].is_string() ? inst["id"].get<std::string>()
                                                : inst["id"].dump();
        std::vector<std::vector<SampleSet>> members;
        for (const auto& member : inst["members"]) {
            if (!member.is_array())
                throw std::runtime_error(path + ": \"members\" must be a list of path lists");
            std::vector<SampleSet> reps;
            for (const auto& rep : member) {
                if (!rep.is_string())
                    throw std::runtime_error(path + ": replicate entries must be path strings");
                reps.push_back(load_samples((dir / rep.get<std::string>()).string()));
            }
            members.push_back(std::move(reps));
        }
        grids.emplace_back(std::move(members));
        ids.push_back(std::move(id));
    }
    if (grids.empty()) throw std::runtime_error(path + ": no instances listed");
}

// Candidate file for optimize-ce: a JSON array of
//   {"kind": "binned", "bins": 10, "scheme": "uniform"}
//   {"kind": "kde", "h": 0.05}
//   {"kind": "krr", "lambda": 0.1, "gamma": 5}
//   {"kind": "oracle", "ts_alpha": 2}   (exact conditional of the matching
//                                        temperature-scaled synthetic data)
std::vector<HSpec> load_candidates(const std::string& path) {
    json j = load_json_file(path);
    if (!j.is_array()) throw std::runtime_error(path + ": expected a JSON array of candidates");
    std::vector<HSpec> out;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("kind"))
            throw std::runtime_error(path + ": each candidate needs a \"kind\"");
        std::string kind = e["kind"].get<std::string>();
        if (kind == "binned") {
            int bins = e.at("bins").get<int>();
            std::string scheme = e.value("scheme", std::string("uniform"));
            out.push_back(HSpec::binned(BinningScheme::parse(scheme + ":" + std::to_string(bins))));
        } else if (kind == "kde") {
            out.push_back(HSpec::kde(e.at("h").get<double>()));
        } else if (kind == "krr") {
            double lambda = e.at("lambda").get<double>();
            double gamma = e.value("gamma", 5.0);
            out.push_back(HSpec::krr(lambda, gamma));
        } else if (kind == "oracle") {
            double ts_alpha = e.value("ts_alpha", 1.0);
            if (!(ts_alpha > 0.0)) throw std::runtime_error(path + ": ts_alpha must be positive");
            out.push_back(HSpec::oracle_fn([ts_alpha](const SimplexVector& p) {
                return ts_alpha == 1.0 ? p : temperature_scale(p, 1.0 / ts_alpha);
            }));
        } else {
            throw std::runtime_error(path + ": unknown candidate kind '" + kind + "'");
        }
    }
    if (out.empty()) throw std::runtime_error(path + ": no candidates listed");
    return out;
}

json decomposition_to_json(const DecompositionReport& r) {
    return json{{"bias", json_number(r.bias)},
                {"variance", json_number(r.variance)},
                {"covariance", r.covariance ? json_number(*r.covariance) : json(nullptr)},
                {"noise", json_number(r.noise)},
                {"total", json_number(r.total)},
                {"mode", to_string(r.mode)},
                {"members", r.members},
                {"replicates", r.replicates},
                {"n_target", r.n_target}};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"distributional uncertainty, proper scores, and calibration toolkit"};
    app.name("proper-uq");
    app.require_subcommand(1);

    int threads = 0;
    std::string out_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "worker thread cap (default: all cores)");
        sub->add_option("--out", out_path, "write the report to this file instead of stdout");
    };

    // score
    std::string sc_kind, sc_data;
    CLI::App* sc = app.add_subcommand("score", "mean and per-instance proper scores");
    sc->add_option("--kind", sc_kind, "brier|log|spherical")->required();
    sc->add_option("--data", sc_data, "predictions CSV (p1..pd,label)")->required();
    add_common(sc);

    // bvd
    std::string bv_kind, bv_members, bv_target;
    CLI::App* bv = app.add_subcommand("bvd", "bias-variance-noise split of an ensemble's score");
    bv->add_option("--kind", bv_kind, "brier|log")->required();
    bv->add_option("--members", bv_members, "member predictions CSV (p1..pd rows)")->required();
    bv->add_option("--target", bv_target, "target pmf literal, e.g. 0.7,0.3")->required();
    add_common(bv);

    // ks-decompose
    std::string kd_kernel, kd_ensemble, kd_targets, kd_mode = "bvd", kd_estimator = "plugin";
    CLI::App* kd = app.add_subcommand("ks-decompose",
                                      "kernel-score decomposition of a sample ensemble");
    kd->add_option("--kernel", kd_kernel, "kernel flag, e.g. rbf:gamma=0.5")->required();
    kd->add_option("--ensemble", kd_ensemble, "ensemble manifest JSON")->required();
    kd->add_option("--targets", kd_targets, "target samples CSV")->required();
    kd->add_option("--mode", kd_mode, "bvd|bvc (default bvd)");
    kd->add_option("--estimator", kd_estimator, "plugin|unbiased (default plugin)");
    add_common(kd);

    // ks-uncertainty
    std::string ku_kernel, ku_instances;
    CLI::App* ku = app.add_subcommand("ks-uncertainty",
                                      "per-instance entropy/variance CSV from sample ensembles");
    ku->add_option("--kernel", ku_kernel, "kernel flag")->required();
    ku->add_option("--instances", ku_instances, "instances JSON")->required();
    add_common(ku);

    // calibrate
    std::string ca_data, ca_estimator, ca_kind = "brier", ca_bins = "uniform:10";
    double ca_p = 2.0, ca_bandwidth = 0.05;
    bool ca_loo = false;
    CLI::App* ca = app.add_subcommand("calibrate", "calibration error estimators");
    ca->add_option("--data", ca_data, "predictions CSV")->required();
    ca->add_option("--estimator", ca_estimator, "tce|cce|proper")->required();
    ca->add_option("--kind", ca_kind, "proper estimator divergence: brier|log|spherical");
    ca->add_option("--p", ca_p, "norm exponent (default 2)");
    ca->add_option("--bins", ca_bins, "binning scheme for tce (default uniform:10)");
    ca->add_option("--bandwidth", ca_bandwidth, "kernel bandwidth for cce/proper (default 0.05)");
    ca->add_flag("--leave-one-out", ca_loo, "exclude each point from its own conditional");
    add_common(ca);

    // recalibrate
    std::string rc_data, rc_kind = "log";
    bool rc_fit = false;
    CLI::App* rc = app.add_subcommand("recalibrate", "temperature-scaling fit");
    rc->add_option("--data", rc_data, "predictions CSV")->required();
    rc->add_option("--kind", rc_kind, "risk to minimize: brier|log|spherical (default log)");
    rc->add_flag("--fit-temperature", rc_fit, "fit the temperature by golden-section search")
        ->required();
    add_common(rc);

    // reliability
    std::string re_data, re_bins = "uniform:10";
    CLI::App* re = app.add_subcommand("reliability", "reliability diagram CSV");
    re->add_option("--data", re_data, "predictions CSV")->required();
    re->add_option("--bins", re_bins, "binning scheme (default uniform:10)");
    add_common(re);

    // optimize-ce
    std::string oc_train, oc_val, oc_test, oc_candidates;
    CLI::App* oc = app.add_subcommand("optimize-ce",
                                      "rank calibration estimation functions by held-out risk");
    oc->add_option("--train", oc_train, "training predictions CSV")->required();
    oc->add_option("--val", oc_val, "validation predictions CSV")->required();
    oc->add_option("--test", oc_test, "test predictions CSV")->required();
    oc->add_option("--candidates", oc_candidates, "candidates JSON")->required();
    add_common(oc);

    // cka-matrix
    std::string cm_samples, cm_kernel;
    CLI::App* cm = app.add_subcommand("cka-matrix", "pairwise coordinate CKA matrix CSV");
    cm->add_option("--samples", cm_samples, "samples CSV (x1..xq)")->required();
    cm->add_option("--kernel", cm_kernel, "base kernel flag")->required();
    add_common(cm);

    // disentangle
    std::string di_gen, di_ref, di_kernel, di_mode = "cosine";
    double di_tau = 0.3;
    CLI::App* di = app.add_subcommand("disentangle",
                                      "CKA clustering plus factorization diagnostic");
    di->add_option("--gen", di_gen, "generated samples CSV")->required();
    di->add_option("--ref", di_ref, "reference samples CSV")->required();
    di->add_option("--kernel", di_kernel, "base kernel flag")->required();
    di->add_option("--tau", di_tau, "CKA clustering threshold in (0, 1]")->required();
    di->add_option("--mode", di_mode, "cosine|eks (default cosine)");
    add_common(di);

    // synth
    std::string sy_scenario, sy_out;
    int sy_d = 3, sy_n = 1000;
    double sy_alpha = 1.0, sy_ts_alpha = 2.0;
    std::uint64_t sy_seed = 0;
    CLI::App* sy = app.add_subcommand("synth", "synthetic prediction/label generator");
    sy->add_option("--scenario", sy_scenario, "calibrated|miscalibrated")->required();
    sy->add_option("--d", sy_d, "number of classes (default 3)");
    sy->add_option("--n", sy_n, "number of instances (default 1000)");
    sy->add_option("--alpha", sy_alpha, "Dirichlet concentration (default 1)");
    sy->add_option("--ts-alpha", sy_ts_alpha,
                   "temperature of the miscalibration map (default 2)");
    sy->add_option("--seed", sy_seed, "root seed (required; no hidden default)")->required();
    sy->add_option("--out", sy_out, "destination CSV for the generated predictions")->required();
    sy->add_option("--threads", threads, "worker thread cap (default: all cores)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs[0]->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        auto subs = app.get_subcommands();
        err << "error: " << e.what() << "\n\n"
            << (subs.empty() ? app.help() : subs[0]->help());
        return 2;
    }

    try {
        if (threads > 0) set_max_threads(threads);

        if (app.got_subcommand(sc)) {
            ManifestBuilder mb("score");
            mb.flag("kind", sc_kind);
            mb.input("data", sc_data);
            ScoreKind kind = score_kind_from_string(sc_kind);
            LabeledPredictionSet data = load_predictions(sc_data);
            std::vector<double> per = per_instance_scores(kind, data);
            json per_json = json::array();
            for (double v : per) per_json.push_back(json_number(v));
            json report{{"kind", to_string(kind)},
                        {"n", data.size()},
                        {"risk", json_number(empirical_risk(kind, data))},
                        {"per_instance", std::move(per_json)},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(bv)) {
            ManifestBuilder mb("bvd");
            mb.flag("kind", bv_kind);
            mb.flag("target", bv_target);
            mb.input("members", bv_members);
            ScoreKind kind = score_kind_from_string(bv_kind);
            std::vector<SimplexVector> members = load_simplex_rows(bv_members);
            SimplexVector target = parse_simplex_literal(bv_target);
            ClassificationBvd r = bvd_classification(kind, members, target);
            json report{{"kind", to_string(kind)},
                        {"members", static_cast<int>(members.size())},
                        {"bias", json_number(r.bias)},
                        {"variance", json_number(r.variance)},
                        {"noise", json_number(r.noise)},
                        {"total", json_number(r.total)},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(kd)) {
            ManifestBuilder mb("ks-decompose");
            mb.flag("kernel", kd_kernel);
            mb.flag("mode", kd_mode);
            mb.flag("estimator", kd_estimator);
            mb.input("ensemble", kd_ensemble);
            mb.input("targets", kd_targets);
            KernelSpec kernel = KernelSpec::parse(kd_kernel);
            EnsembleGrid ensemble = load_ensemble(kd_ensemble);
            SampleSet targets = load_samples(kd_targets);
            EstimatorMode mode = estimator_mode_from_string(kd_estimator);
            DecompositionReport r;
            if (kd_mode == "bvd") {
                r = ks_bvd(kernel, ensemble, targets, mode);
            } else if (kd_mode == "bvc") {
                r = ks_bvc(kernel, ensemble, targets, mode);
            } else {
                throw std::invalid_argument("ks-decompose: mode must be bvd or bvc, got '" +
                                            kd_mode + "'");
            }
            json report = decomposition_to_json(r);
            report["kernel"] = kernel.to_flag_string();
            report["manifest"] = mb.finish();
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(ku)) {
            ManifestBuilder mb("ks-uncertainty");
            mb.flag("kernel", ku_kernel);
            mb.input("instances", ku_instances);
            KernelSpec kernel = KernelSpec::parse(ku_kernel);
            std::vector<EnsembleGrid> grids;
            std::vector<std::string> ids;
            load_instances(ku_instances, grids, ids);
            std::vector<UncertaintyRow> rows = uncertainty_profile(kernel, grids, ids);
            std::string csv = "id,entropy,variance\n";
            for (const auto& row : rows)
                csv += row.id + "," + format_12_digits(row.entropy) + "," +
                       format_12_digits(row.variance) + "\n";
            write_output(out_path, csv, out);
        } else if (app.got_subcommand(ca)) {
            ManifestBuilder mb("calibrate");
            mb.flag("estimator", ca_estimator);
            mb.input("data", ca_data);
            LabeledPredictionSet data = load_predictions(ca_data);
            CalibrationReport r;
            if (ca_estimator == "tce") {
                mb.flag("p", ca_p);
                mb.flag("bins", ca_bins);
                r = tce_binned(ca_p, data, BinningScheme::parse(ca_bins));
            } else if (ca_estimator == "cce") {
                mb.flag("p", ca_p);
                mb.flag("bandwidth", ca_bandwidth);
                mb.flag("leave_one_out", ca_loo);
                r = cce_kde(ca_p, data, ca_bandwidth, ca_loo);
            } else if (ca_estimator == "proper") {
                mb.flag("kind", ca_kind);
                mb.flag("bandwidth", ca_bandwidth);
                mb.flag("leave_one_out", ca_loo);
                r = proper_ce(score_kind_from_string(ca_kind), data, ca_bandwidth, ca_loo);
            } else {
                throw std::invalid_argument("calibrate: estimator must be tce, cce, or proper");
            }
            json report{{"estimator", r.estimator},
                        {"value", json_number(r.value)},
                        {"p_exponent", json_number(r.p_exponent)},
                        {"bandwidth", r.bandwidth ? json(json_number(*r.bandwidth)) : json(nullptr)},
                        {"bins", r.bins ? json(*r.bins) : json(nullptr)},
                        {"kind", r.kind ? json(*r.kind) : json(nullptr)},
                        {"n", r.n},
                        {"degenerate_fallback", r.degenerate_fallback},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(rc)) {
            ManifestBuilder mb("recalibrate");
            mb.flag("kind", rc_kind);
            mb.flag("fit_temperature", true);
            mb.input("data", rc_data);
            ScoreKind kind = score_kind_from_string(rc_kind);
            LabeledPredictionSet data = load_predictions(rc_data);
            TemperatureFit fit_result = fit_temperature(kind, data);
            json report{{"kind", to_string(kind)},
                        {"n", data.size()},
                        {"alpha", json_number(fit_result.alpha)},
                        {"risk_before", json_number(fit_result.risk_before)},
                        {"risk_after", json_number(fit_result.risk_after)},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(re)) {
            ManifestBuilder mb("reliability");
            mb.flag("bins", re_bins);
            mb.input("data", re_data);
            LabeledPredictionSet data = load_predictions(re_data);
            std::vector<ReliabilityBin> rows = reliability(data, BinningScheme::parse(re_bins));
            std::string csv = "bin_lo,bin_hi,count,acc,conf\n";
            for (const auto& b : rows)
                csv += format_12_digits(b.lo) + "," + format_12_digits(b.hi) + "," +
                       std::to_string(b.count) + "," + format_12_digits(b.acc) + "," +
                       format_12_digits(b.conf) + "\n";
            write_output(out_path, csv, out);
        } else if (app.got_subcommand(oc)) {
            ManifestBuilder mb("optimize-ce");
            mb.input("train", oc_train);
            mb.input("val", oc_val);
            mb.input("test", oc_test);
            mb.input("candidates", oc_candidates);
            std::vector<HSpec> candidates = load_candidates(oc_candidates);
            LabeledPredictionSet train = load_predictions(oc_train);
            LabeledPredictionSet val = load_predictions(oc_val);
            LabeledPredictionSet test = load_predictions(oc_test);
            RiskReport r = pipeline(candidates, train, val, test);
            json rows = json::array();
            for (const auto& c : r.candidates)
                rows.push_back(json{{"name", c.name},
                                    {"hyperparams", c.hyperparams},
                                    {"train_risk", json_number(c.train_risk)},
                                    {"val_risk", json_number(c.val_risk)},
                                    {"test_risk", json_number(c.test_risk)},
                                    {"test_ce", json_number(c.test_ce)}});
            json report{{"candidates", std::move(rows)},
                        {"chosen_index", r.chosen_index},
                        {"chosen", r.candidates[r.chosen_index].name},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(cm)) {
            ManifestBuilder mb("cka-matrix");
            mb.flag("kernel", cm_kernel);
            mb.input("samples", cm_samples);
            KernelSpec kernel = KernelSpec::parse(cm_kernel);
            SampleSet samples = load_samples(cm_samples);
            CkaMatrix m = cka_matrix(samples, kernel);
            std::string csv;
            for (int i = 0; i < m.values.rows(); ++i) {
                for (int j = 0; j < m.values.cols(); ++j) {
                    if (j) csv += ",";
                    csv += format_12_digits(m.values(i, j));
                }
                csv += "\n";
            }
            for (int c : m.constant_coords)
                err << "warning: coordinate " << c << " is constant; its alignments are 0\n";
            write_output(out_path, csv, out);
        } else if (app.got_subcommand(di)) {
            ManifestBuilder mb("disentangle");
            mb.flag("kernel", di_kernel);
            mb.flag("tau", di_tau);
            mb.flag("mode", di_mode);
            mb.input("gen", di_gen);
            mb.input("ref", di_ref);
            KernelSpec kernel = KernelSpec::parse(di_kernel);
            SampleSet generated = load_samples(di_gen);
            SampleSet reference = load_samples(di_ref);
            DisentangleMode mode = disentangle_mode_from_string(di_mode);
            CkaMatrix m = cka_matrix(generated, kernel);
            DimensionPartition partition = cluster_dimensions(m, di_tau);
            DisentangleReport r = disentangled_cosine(kernel, partition, generated, reference, mode);
            json factors = json::array();
            for (const auto& f : r.factors)
                factors.push_back(json{{"indices", f.indices}, {"factor", json_number(f.factor)}});
            json report{{"partition", partition.clusters},
                        {"tau", json_number(partition.tau)},
                        {"mode", to_string(r.mode)},
                        {"constant_coords", m.constant_coords},
                        {"factors", std::move(factors)},
                        {"product", json_number(r.product)},
                        {"full", json_number(r.full)},
                        {"residual", json_number(r.residual)},
                        {"n_generated", r.n_generated},
                        {"n_reference", r.n_reference},
                        {"manifest", mb.finish()}};
            write_output(out_path, dump_report(report), out);
        } else if (app.got_subcommand(sy)) {
            ManifestBuilder mb("synth");
            mb.flag("scenario", sy_scenario);
            mb.flag("d", sy_d);
            mb.flag("n", sy_n);
            mb.flag("alpha", sy_alpha);
            mb.seed(sy_seed);
            if (sy_scenario != "calibrated" && sy_scenario != "miscalibrated")
                throw std::invalid_argument(
                    "synth: scenario must be calibrated or miscalibrated, got '" + sy_scenario +
                    "'");
            bool miscal = sy_scenario == "miscalibrated";
            if (miscal) mb.flag("ts_alpha", sy_ts_alpha);
            CalibratedBundle bundle =
                miscal ? gen_miscalibrated(sy_d, sy_n, sy_alpha, sy_ts_alpha, Seed{sy_seed})
                       : gen_calibrated(sy_d, sy_n, sy_alpha, Seed{sy_seed});
            save_predictions(sy_out, bundle.data);
            json report{{"scenario", sy_scenario},
                        {"d", sy_d},
                        {"n", sy_n},
                        {"alpha", json_number(sy_alpha)},
                        {"ts_alpha", sy_scenario == "miscalibrated" ? json(json_number(sy_ts_alpha))
                                                                    : json(nullptr)},
                        {"out", sy_out},
                        {"digest", file_digest(sy_out)},
                        {"manifest", mb.finish()}};
            out << dump_report(report);
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace properuq
