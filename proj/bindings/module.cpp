// Python bindings for the core operations: proper scores, decompositions,
// kernel quantities, calibration estimators, representation alignment, and
// the synthetic generators. Reports are returned as plain dicts so callers
// get JSON-shaped data without extra wrapper types.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "properuq/bregman.hpp"
#include "properuq/calibration.hpp"
#include "properuq/cka.hpp"
#include "properuq/estimator_risk.hpp"
#include "properuq/kernel_decomposition.hpp"
#include "properuq/kernels.hpp"
#include "properuq/parallel.hpp"
#include "properuq/scores.hpp"
#include "properuq/synth.hpp"
#include "properuq/types.hpp"
#include "properuq/version.hpp"

namespace py = pybind11;
using namespace properuq;

namespace {

SimplexVector simplex(const Eigen::VectorXd& v) { return SimplexVector(v); }

std::vector<SimplexVector> simplex_rows(const Eigen::MatrixXd& m) {
    std::vector<SimplexVector> out;
    out.reserve(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.push_back(SimplexVector(m.row(i).transpose()));
    return out;
}

LabeledPredictionSet make_lps(const Eigen::MatrixXd& predictions, const std::vector<int>& labels,
                              const std::string& provenance) {
    return LabeledPredictionSet(simplex_rows(predictions), labels, provenance);
}

Eigen::MatrixXd stack_rows(const std::vector<SimplexVector>& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows[0].dim());
    for (size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].probs();
    return m;
}

py::dict calibration_dict(const CalibrationReport& r) {
    py::dict d;
    d["estimator"] = r.estimator;
    d["value"] = r.value;
    d["p_exponent"] = r.p_exponent;
    d["bandwidth"] = r.bandwidth;
    d["bins"] = r.bins;
    d["kind"] = r.kind;
    d["n"] = r.n;
    d["degenerate_fallback"] = r.degenerate_fallback;
    return d;
}

py::dict decomposition_dict(const DecompositionReport& r) {
    py::dict d;
    d["bias"] = r.bias;
    d["variance"] = r.variance;
    d["covariance"] = r.covariance;
    d["noise"] = r.noise;
    d["total"] = r.total;
    d["mode"] = to_string(r.mode);
    d["members"] = r.members;
    d["replicates"] = r.replicates;
    d["n_target"] = r.n_target;
    return d;
}

py::dict bundle_dict(const CalibratedBundle& b) {
    py::dict d;
    d["predictions"] = stack_rows(b.data.predictions());
    d["labels"] = b.data.labels();
    d["truth"] = stack_rows(b.truth);
    d["alpha"] = b.alpha;
    d["ts_alpha"] = b.ts_alpha;
    d["provenance"] = b.data.provenance_id();
    return d;
}

EnsembleGrid make_grid(const std::vector<std::vector<Eigen::MatrixXd>>& members) {
    std::vector<std::vector<SampleSet>> sets;
    sets.reserve(members.size());
    for (const auto& reps : members) {
        std::vector<SampleSet> row;
        row.reserve(reps.size());
        for (const auto& m : reps) row.push_back(SampleSet(m, ""));
        sets.push_back(std::move(row));
    }
    return EnsembleGrid(std::move(sets));
}

// Mirrors the CLI candidate-file schema:
//   {"kind": "binned", "bins": 10, "scheme": "uniform"}
//   {"kind": "kde", "h": 0.05}
//   {"kind": "krr", "lambda": 0.1, "gamma": 5}
//   {"kind": "oracle", "ts_alpha": 2}
HSpec spec_from_dict(const py::dict& e) {
    std::string kind = e["kind"].cast<std::string>();
    if (kind == "binned") {
        int bins = e["bins"].cast<int>();
        std::string scheme =
            e.contains("scheme") ? e["scheme"].cast<std::string>() : std::string("uniform");
        return HSpec::binned(BinningScheme::parse(scheme + ":" + std::to_string(bins)));
    }
    if (kind == "kde") return HSpec::kde(e["h"].cast<double>());
    if (kind == "krr") {
        double lambda = e["lambda"].cast<double>();
        double gamma = e.contains("gamma") ? e["gamma"].cast<double>() : 5.0;
        return HSpec::krr(lambda, gamma);
    }
    if (kind == "oracle") {
        double ts_alpha = e.contains("ts_alpha") ? e["ts_alpha"].cast<double>() : 1.0;
        if (!(ts_alpha > 0.0)) throw std::invalid_argument("ts_alpha must be positive");
        return HSpec::oracle_fn([ts_alpha](const SimplexVector& p) {
            return ts_alpha == 1.0 ? p : temperature_scale(p, 1.0 / ts_alpha);
        });
    }
    throw std::invalid_argument("unknown candidate kind '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_properuq, m) {
    m.doc() = "Proper scores, uncertainty decompositions, kernel embeddings, and "
              "calibration estimators";

    m.def("version", [] { return std::string(kVersion); }, "Library version string.");
    m.def("set_max_threads", &set_max_threads,
          "Cap worker threads (0 restores the hardware default).", py::arg("n"));
    m.def("max_threads", &max_threads, "Current worker thread cap.");

    // ---- proper scores -----------------------------------------------------
    m.def(
        "score",
        [](const std::string& kind, const Eigen::VectorXd& p, int y) {
            return score(score_kind_from_string(kind), simplex(p), y);
        },
        "Loss of prediction p against outcome class y (0-based).", py::arg("kind"), py::arg("p"),
        py::arg("y"));
    m.def(
        "entropy",
        [](const std::string& kind, const Eigen::VectorXd& p) {
            return entropy(score_kind_from_string(kind), simplex(p));
        },
        "Minimal expected loss E_{Y~p}[score(p, Y)].", py::arg("kind"), py::arg("p"));
    m.def(
        "divergence",
        [](const std::string& kind, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
            return divergence(score_kind_from_string(kind), simplex(p), simplex(q));
        },
        "Score divergence D(p, q); zero iff p = q for strictly proper kinds.", py::arg("kind"),
        py::arg("p"), py::arg("q"));
    m.def(
        "expected_score",
        [](const std::string& kind, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
            return expected_score(score_kind_from_string(kind), simplex(p), simplex(q));
        },
        "E_{Y~q}[score(p, Y)] = divergence(p, q) + entropy(q).", py::arg("kind"), py::arg("p"),
        py::arg("q"));
    m.def(
        "empirical_risk",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels) {
            return empirical_risk(score_kind_from_string(kind), make_lps(predictions, labels, ""));
        },
        "Mean score over rows of predictions against 0-based labels.", py::arg("kind"),
        py::arg("predictions"), py::arg("labels"));

    // ---- simplex decompositions --------------------------------------------
    m.def(
        "bregman_information",
        [](const std::string& kind, const Eigen::MatrixXd& members) {
            return bregman_information(score_kind_from_string(kind), simplex_rows(members));
        },
        "Jensen gap of the conjugate generator over member rows (generalized variance).",
        py::arg("kind"), py::arg("members"));
    m.def(
        "bvd_classification",
        [](const std::string& kind, const Eigen::MatrixXd& members, const Eigen::VectorXd& q) {
            ClassificationBvd r =
                bvd_classification(score_kind_from_string(kind), simplex_rows(members), simplex(q));
            py::dict d;
            d["bias"] = r.bias;
            d["variance"] = r.variance;
            d["noise"] = r.noise;
            d["total"] = r.total;
            return d;
        },
        "Bias/variance/noise split of the mean expected score of member rows against q.",
        py::arg("kind"), py::arg("members"), py::arg("q"));
    m.def(
        "bernoulli_bvd",
        [](double p, int n, int trials, std::uint64_t seed) {
            BernoulliBvd r = bernoulli_bvd(p, n, trials, Seed{seed});
            py::dict d;
            d["empirical_variance"] = r.empirical_variance;
            d["theoretical_variance"] = r.theoretical_variance;
            d["bias"] = r.bias;
            d["noise"] = r.noise;
            return d;
        },
        "Sampled vs exact variance p(1-p)/n of the binomial mean estimator.", py::arg("p"),
        py::arg("n"), py::arg("trials"), py::arg("seed"));

    // ---- kernel embeddings --------------------------------------------------
    m.def(
        "mmd2",
        [](const std::string& kernel, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
           bool unbiased) {
            return mmd2(KernelSpec::parse(kernel), SampleSet(x, ""), SampleSet(y, ""),
                        unbiased ? MmdMode::Unbiased : MmdMode::Biased);
        },
        "Squared MMD between sample rows; unbiased U-statistic by default.", py::arg("kernel"),
        py::arg("x"), py::arg("y"), py::arg("unbiased") = true);
    m.def(
        "kernel_score",
        [](const std::string& kernel, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
            return kernel_score(KernelSpec::parse(kernel), SampleSet(x, ""), y);
        },
        "Embedding score ||mu_X||^2 - 2<mu_X, phi(y)> with the unbiased norm.", py::arg("kernel"),
        py::arg("x"), py::arg("y"));
    m.def(
        "kernel_entropy",
        [](const std::string& kernel, const Eigen::MatrixXd& x) {
            return kernel_entropy(KernelSpec::parse(kernel), SampleSet(x, ""));
        },
        "Embedding entropy -||mu_X||^2 with the unbiased norm.", py::arg("kernel"), py::arg("x"));
    m.def(
        "cosine_similarity",
        [](const std::string& kernel, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
            return cosine_similarity(KernelSpec::parse(kernel), SampleSet(x, ""), SampleSet(y, ""));
        },
        "Cosine of the two mean embeddings.", py::arg("kernel"), py::arg("x"), py::arg("y"));
    m.def(
        "eks",
        [](const std::string& kernel, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
            return eks(KernelSpec::parse(kernel), SampleSet(x, ""), SampleSet(y, ""));
        },
        "Expected kernel spherical score -<mu_X, mu_Y>/||mu_X||.", py::arg("kernel"), py::arg("x"),
        py::arg("y"));

    // ---- ensemble decompositions --------------------------------------------
    m.def(
        "ks_bvd",
        [](const std::string& kernel, const std::vector<std::vector<Eigen::MatrixXd>>& members,
           const Eigen::MatrixXd& targets, const std::string& mode) {
            return decomposition_dict(ks_bvd(KernelSpec::parse(kernel), make_grid(members),
                                             SampleSet(targets, ""),
                                             estimator_mode_from_string(mode)));
        },
        "Kernel-score bias/variance/noise split; members is a list of [replicate] sample arrays "
        "(one replicate each).",
        py::arg("kernel"), py::arg("members"), py::arg("targets"), py::arg("mode") = "plugin");
    m.def(
        "ks_bvc",
        [](const std::string& kernel, const std::vector<std::vector<Eigen::MatrixXd>>& members,
           const Eigen::MatrixXd& targets, const std::string& mode) {
            return decomposition_dict(ks_bvc(KernelSpec::parse(kernel), make_grid(members),
                                             SampleSet(targets, ""),
                                             estimator_mode_from_string(mode)));
        },
        "Variance/covariance refinement over a members x replicates grid (>= 2 replicates).",
        py::arg("kernel"), py::arg("members"), py::arg("targets"), py::arg("mode") = "plugin");

    // ---- calibration ----------------------------------------------------------
    m.def(
        "tce_binned",
        [](double p, const Eigen::MatrixXd& predictions, const std::vector<int>& labels,
           const std::string& bins) {
            return calibration_dict(
                tce_binned(p, make_lps(predictions, labels, ""), BinningScheme::parse(bins)));
        },
        "Binned top-label calibration error with the given binning scheme flag.", py::arg("p"),
        py::arg("predictions"), py::arg("labels"), py::arg("bins") = "uniform:10");
    m.def(
        "cce_kde",
        [](double p, const Eigen::MatrixXd& predictions, const std::vector<int>& labels, double h,
           bool leave_one_out) {
            return calibration_dict(
                cce_kde(p, make_lps(predictions, labels, ""), h, leave_one_out));
        },
        "Kernel-density canonical calibration error on the simplex.", py::arg("p"),
        py::arg("predictions"), py::arg("labels"), py::arg("h"),
        py::arg("leave_one_out") = false);
    m.def(
        "proper_ce",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels, double h, bool leave_one_out) {
            return calibration_dict(proper_ce(score_kind_from_string(kind),
                                              make_lps(predictions, labels, ""), h,
                                              leave_one_out));
        },
        "Divergence-weighted calibration error with kernel-density conditionals.", py::arg("kind"),
        py::arg("predictions"), py::arg("labels"), py::arg("h"),
        py::arg("leave_one_out") = false);
    m.def(
        "sharpness",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels, double h, bool leave_one_out) {
            return sharpness(score_kind_from_string(kind), make_lps(predictions, labels, ""), h,
                             leave_one_out);
        },
        "Mean divergence from the marginal label law to the estimated conditionals.",
        py::arg("kind"), py::arg("predictions"), py::arg("labels"), py::arg("h"),
        py::arg("leave_one_out") = false);
    m.def(
        "temperature_scale",
        [](const Eigen::VectorXd& p, double alpha) {
            return temperature_scale(simplex(p), alpha).probs();
        },
        "Coordinatewise power transform p^alpha renormalized; argmax-preserving.", py::arg("p"),
        py::arg("alpha"));
    m.def(
        "fit_temperature",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels) {
            TemperatureFit f =
                fit_temperature(score_kind_from_string(kind), make_lps(predictions, labels, ""));
            py::dict d;
            d["alpha"] = f.alpha;
            d["risk_before"] = f.risk_before;
            d["risk_after"] = f.risk_after;
            return d;
        },
        "Golden-section temperature fit; never worse than alpha = 1.", py::arg("kind"),
        py::arg("predictions"), py::arg("labels"));
    m.def(
        "reliability",
        [](const Eigen::MatrixXd& predictions, const std::vector<int>& labels,
           const std::string& bins) {
            auto rows =
                reliability(make_lps(predictions, labels, ""), BinningScheme::parse(bins));
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["lo"] = r.lo;
                d["hi"] = r.hi;
                d["count"] = r.count;
                d["acc"] = r.acc;
                d["conf"] = r.conf;
                out.append(d);
            }
            return out;
        },
        "Reliability diagram rows over a binning scheme.", py::arg("predictions"),
        py::arg("labels"), py::arg("bins") = "uniform:10");
    m.def(
        "aleatoric_inequality_check",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels, int levels) {
            auto rows = aleatoric_inequality_check(score_kind_from_string(kind),
                                                   make_lps(predictions, labels, ""), levels);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["predicted_entropy"] = r.predicted_entropy;
                d["conditional_entropy_estimate"] = r.conditional_entropy_estimate;
                d["count"] = r.count;
                out.append(d);
            }
            return out;
        },
        "Per-level mean predicted entropy vs pooled conditional entropy.", py::arg("kind"),
        py::arg("predictions"), py::arg("labels"), py::arg("levels") = 10);
    m.def(
        "improvement_check",
        [](const std::string& kind, const Eigen::MatrixXd& predictions,
           const std::vector<int>& labels,
           const std::function<Eigen::VectorXd(Eigen::VectorXd)>& exact_conditional,
           double alpha) {
            auto wrapped = [&exact_conditional](const SimplexVector& p) {
                return SimplexVector(exact_conditional(p.probs()));
            };
            ImprovementCheck r = improvement_check(score_kind_from_string(kind),
                                                   make_lps(predictions, labels, ""), wrapped,
                                                   alpha);
            py::dict d;
            d["risk_delta"] = r.risk_delta;
            d["ce_delta"] = r.ce_delta;
            d["gap"] = r.gap;
            return d;
        },
        "Risk change vs exact calibration-error change under temperature re-scaling.",
        py::arg("kind"), py::arg("predictions"), py::arg("labels"), py::arg("exact_conditional"),
        py::arg("alpha"));

    // ---- calibration-estimator risk pipeline ----------------------------------
    m.def(
        "risk_pipeline",
        [](const std::vector<py::dict>& candidates, const Eigen::MatrixXd& train_predictions,
           const std::vector<int>& train_labels, const Eigen::MatrixXd& val_predictions,
           const std::vector<int>& val_labels, const Eigen::MatrixXd& test_predictions,
           const std::vector<int>& test_labels) {
            std::vector<HSpec> specs;
            specs.reserve(candidates.size());
            for (const auto& c : candidates) specs.push_back(spec_from_dict(c));
            RiskReport r = pipeline(specs, make_lps(train_predictions, train_labels, "py:train"),
                                    make_lps(val_predictions, val_labels, "py:val"),
                                    make_lps(test_predictions, test_labels, "py:test"));
            py::list rows;
            for (const auto& row : r.candidates) {
                py::dict d;
                d["name"] = row.name;
                d["hyperparams"] = row.hyperparams;
                d["train_risk"] = row.train_risk;
                d["val_risk"] = row.val_risk;
                d["test_risk"] = row.test_risk;
                d["test_ce"] = row.test_ce;
                rows.append(d);
            }
            py::dict out;
            out["candidates"] = rows;
            out["chosen_index"] = r.chosen_index;
            return out;
        },
        "Fit candidate conditionals on train, rank by validation risk, report test risk. "
        "Candidates use the same dict schema as the CLI candidate file.",
        py::arg("candidates"), py::arg("train_predictions"), py::arg("train_labels"),
        py::arg("val_predictions"), py::arg("val_labels"), py::arg("test_predictions"),
        py::arg("test_labels"));

    // ---- representation alignment ---------------------------------------------
    m.def(
        "hsic",
        [](const std::string& kx, const std::string& ky, const Eigen::MatrixXd& x,
           const Eigen::MatrixXd& y) {
            return hsic(KernelSpec::parse(kx), KernelSpec::parse(ky), SampleSet(x, ""),
                        SampleSet(y, ""));
        },
        "Biased HSIC V-statistic on doubly centered Gram matrices.", py::arg("kx"), py::arg("ky"),
        py::arg("x"), py::arg("y"));
    m.def(
        "cka",
        [](const std::string& kx, const std::string& ky, const Eigen::MatrixXd& x,
           const Eigen::MatrixXd& y) {
            return cka(KernelSpec::parse(kx), KernelSpec::parse(ky), SampleSet(x, ""),
                       SampleSet(y, ""));
        },
        "Normalized alignment in [0, 1]; squared Pearson r for 1-D linear kernels.",
        py::arg("kx"), py::arg("ky"), py::arg("x"), py::arg("y"));
    m.def(
        "cka_matrix",
        [](const Eigen::MatrixXd& samples, const std::string& kernel) {
            CkaMatrix r = cka_matrix(SampleSet(samples, ""), KernelSpec::parse(kernel));
            py::dict d;
            d["values"] = r.values;
            d["constant_coords"] = r.constant_coords;
            return d;
        },
        "Pairwise per-coordinate alignment matrix; constant coordinates are flagged.",
        py::arg("samples"), py::arg("kernel"));
    m.def(
        "cluster_dimensions",
        [](const Eigen::MatrixXd& values, const std::vector<int>& constant_coords, double tau) {
            CkaMatrix m2;
            m2.values = values;
            m2.constant_coords = constant_coords;
            return cluster_dimensions(m2, tau).clusters;
        },
        "Average-linkage clustering on 1 - alignment, merging while within 1 - tau.",
        py::arg("values"), py::arg("constant_coords") = std::vector<int>{}, py::arg("tau") = 0.3);
    m.def(
        "disentangled_cosine",
        [](const std::string& kernel, const std::vector<std::vector<int>>& clusters,
           const Eigen::MatrixXd& generated, const Eigen::MatrixXd& reference,
           const std::string& mode) {
            DimensionPartition part;
            part.clusters = clusters;
            DisentangleReport r =
                disentangled_cosine(KernelSpec::parse(kernel), part, SampleSet(generated, ""),
                                    SampleSet(reference, ""), disentangle_mode_from_string(mode));
            py::list factors;
            for (const auto& fct : r.factors) {
                py::dict fd;
                fd["indices"] = fct.indices;
                fd["factor"] = fct.factor;
                factors.append(fd);
            }
            py::dict d;
            d["factors"] = factors;
            d["product"] = r.product;
            d["full"] = r.full;
            d["residual"] = r.residual;
            d["mode"] = to_string(r.mode);
            return d;
        },
        "Per-cluster factors vs the full-space value; residual 0 iff blocks are independent.",
        py::arg("kernel"), py::arg("clusters"), py::arg("generated"), py::arg("reference"),
        py::arg("mode") = "cosine");

    // ---- synthetic generators ----------------------------------------------
    m.def(
        "gen_calibrated",
        [](int d, int n, double alpha, std::uint64_t seed) {
            return bundle_dict(gen_calibrated(d, n, alpha, Seed{seed}));
        },
        "Dirichlet predictions with labels drawn from them (canonically calibrated).",
        py::arg("d"), py::arg("n"), py::arg("alpha") = 1.0, py::arg("seed"));
    m.def(
        "gen_miscalibrated",
        [](int d, int n, double alpha, double ts_alpha, std::uint64_t seed) {
            return bundle_dict(gen_miscalibrated(d, n, alpha, ts_alpha, Seed{seed}));
        },
        "Calibrated bundle pushed through temperature ts_alpha; exact conditional is "
        "the inverse temperature.",
        py::arg("d"), py::arg("n"), py::arg("alpha") = 1.0, py::arg("ts_alpha") = 2.0,
        py::arg("seed"));
}
