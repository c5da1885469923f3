#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/estimator/llc.hpp"
#include "llc/io/csv.hpp"
#include "llc/numerics/parallel.hpp"
#include "llc/numerics/stats.hpp"
#include "llc/theory/dln.hpp"
#include "llc/training/sgd.hpp"

namespace llc {

/// One order-of-magnitude tier of the random-DLN sweep.
struct SweepTier {
    std::string name;
    std::size_t layers_lo = 0, layers_hi = 0;  ///< number of weight matrices M
    std::size_t width_lo = 0, width_hi = 0;    ///< every H_j, input included
    double epsilon = 0.0;
    std::size_t steps = 0;
    std::size_t n = 0;
    std::size_t runs = 0;
    bool long_running = false;
};

inline const std::vector<SweepTier>& sweep_tiers() {
    static const std::vector<SweepTier> tiers{
        {"1k", 2, 5, 5, 50, 5e-7, 10'000, 100'000, 99, false},
        {"10k", 2, 10, 5, 100, 5e-7, 10'000, 100'000, 100, false},
        {"100k", 2, 10, 50, 500, 1e-7, 50'000, 1'000'000, 100, false},
        {"1M", 5, 20, 100, 1000, 5e-8, 50'000, 1'000'000, 99, false},
        {"10M", 2, 20, 500, 2000, 2e-8, 50'000, 1'000'000, 93, true},
        {"100M", 2, 40, 500, 3000, 2e-8, 50'000, 1'000'000, 54, true},
    };
    return tiers;
}

inline SweepTier sweep_tier(const std::string& name) {
    for (const auto& t : sweep_tiers())
        if (t.name == name) return t;
    throw std::invalid_argument("unknown sweep tier: " + name + " (expected 1k, 10k, 100k, 1M, 10M or 100M)");
}

enum class EvaluateAt { true_param, sgd_param };

inline EvaluateAt parse_evaluate_at(const std::string& s) {
    if (s == "true_param" || s == "true") return EvaluateAt::true_param;
    if (s == "sgd_param" || s == "sgd") return EvaluateAt::sgd_param;
    throw std::invalid_argument("unknown evaluate_at: " + s + " (expected true_param or sgd_param)");
}

inline std::string to_string(EvaluateAt e) { return e == EvaluateAt::true_param ? "true_param" : "sgd_param"; }

struct SweepConfig {
    SweepTier tier = sweep_tier("1k");
    EvaluateAt evaluate_at = EvaluateAt::true_param;
    std::uint64_t base_seed = 0;
    std::size_t batch_size = 500;
    double gamma = 1.0;
    std::optional<double> beta;
    double burnin_frac = 0.9;
    std::size_t chains = 1;
    std::size_t mala_probe_stride = 20;
    ProbeSource probe_source = ProbeSource::minibatch;
    WeightScale weight_scale = WeightScale::unit;
    double input_range = 10.0;
    double truncate_prob = 0.5;
    TrainConfig train{0.01, 0.9, 500, 50'000, 0};

    void validate() const {
        const auto& t = tier;
        if (t.layers_lo == 0 || t.layers_lo > t.layers_hi) throw std::invalid_argument("sweep: empty layer range");
        if (t.width_lo == 0 || t.width_lo > t.width_hi) throw std::invalid_argument("sweep: empty width range");
        if (t.n < 2) throw std::invalid_argument("sweep: n must be >= 2");
        if (batch_size > t.n) throw std::invalid_argument("sweep: batch size exceeds n");
        sampler(0).validate(t.n, 0);
    }

    SamplerConfig sampler(std::uint64_t seed) const {
        SamplerConfig c;
        c.epsilon = tier.epsilon;
        c.gamma = gamma;
        c.beta = beta;
        c.steps = tier.steps;
        c.burnin_frac = burnin_frac;
        c.batch_size = batch_size;
        c.chains = chains;
        c.seed = seed;
        c.mala_probe_stride = mala_probe_stride;
        c.probe_source = probe_source;
        return c;
    }
};

struct SweepRow {
    std::uint64_t seed = 0;
    std::size_t d = 0;
    std::size_t M = 0;
    std::vector<std::size_t> widths;
    std::size_t r = 0;
    double lambda_true = std::nan("");
    double lambda_hat = std::nan("");
    double std_error = std::nan("");
    double rel_error = std::nan("");
    std::vector<std::string> flags;
    double wallclock = 0.0;
    double mean_accept = std::nan("");
    bool diverged = false;  ///< SGD training or every chain blew up
    bool failed = false;    ///< no estimate (divergence or another error)
};

inline const std::vector<std::string>& sweep_csv_header() {
    static const std::vector<std::string> h{"seed", "d", "M", "widths", "r", "lambda_true", "lambda_hat",
                                            "stderr", "rel_error", "flags", "wallclock"};
    return h;
}

inline void write_sweep_row(std::ostream& os, const SweepRow& row) {
    write_csv_row(os, {std::to_string(row.seed), std::to_string(row.d), std::to_string(row.M), join(row.widths, "-"),
                       std::to_string(row.r), format_double(row.lambda_true), format_double(row.lambda_hat),
                       format_double(row.std_error), format_double(row.rel_error), join(row.flags, ";"),
                       format_double(row.wallclock)});
}

/// Draws the architecture and true parameter of run `index`, generates its
/// dataset, optionally trains, and estimates the LLC. Failures are recorded
/// in the row rather than thrown.
inline SweepRow run_sweep_point(const SweepConfig& cfg, std::size_t index) {
    const auto start = std::chrono::steady_clock::now();
    SweepRow row;
    row.seed = cfg.base_seed + index;
    const Rng root(row.seed);
    Rng arch = root.derive(1), truth = root.derive(2), data_rng = root.derive(3);

    const auto& t = cfg.tier;
    row.M = static_cast<std::size_t>(arch.uniform_int(static_cast<std::int64_t>(t.layers_lo), static_cast<std::int64_t>(t.layers_hi)));
    for (std::size_t j = 0; j <= row.M; ++j)
        row.widths.push_back(static_cast<std::size_t>(arch.uniform_int(static_cast<std::int64_t>(t.width_lo), static_cast<std::int64_t>(t.width_hi))));
    const auto spec = ModelSpec::dln(row.widths);
    row.d = spec.param_count();
    auto finish = [&] {
        row.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return row;
    };
    try {
        const auto truth_param = random_true_dln(spec, truth, cfg.weight_scale, cfg.truncate_prob);
        row.r = dln_rank(spec, truth_param.params);
        row.lambda_true = dln_lambda(row.widths, row.r).lambda;
        const auto data = std::make_shared<const Dataset>(gen_realizable(spec, truth_param.params, t.n, data_rng, cfg.input_range));
        ModelObjective objective(spec, data);

        std::vector<double> w_star = truth_param.params;
        if (cfg.evaluate_at == EvaluateAt::sgd_param) {
            TrainConfig tc = cfg.train;
            tc.seed = root.derive(5).seed();
            try {
                w_star = train_model(spec, data, tc, cfg.weight_scale).params;
            } catch (const TrainingDiverged& e) {
                row.flags.push_back("training_diverged");
                row.diverged = true;
                row.failed = true;
                return finish();
            }
        }
        const auto est = estimate_llc(objective, w_star, cfg.sampler(root.derive(4).seed()));
        row.lambda_hat = est.lambda_hat;
        row.std_error = est.std_error;
        row.mean_accept = est.mean_accept;
        row.flags = est.flags.names();
        if (row.lambda_true > 0.0) row.rel_error = std::abs(est.lambda_hat - row.lambda_true) / row.lambda_true;
    } catch (const EstimationError&) {
        row.flags.push_back("all_chains_diverged");
        row.diverged = true;
        row.failed = true;
    } catch (const std::exception& e) {
        row.flags.push_back(std::string("error: ") + e.what());
        row.failed = true;
    }
    return finish();
}

struct SweepSummary {
    std::size_t runs = 0;
    std::size_t estimated = 0;
    std::size_t diverged = 0;
    std::size_t failed = 0;
    double median_rel_error = std::nan("");
    double p90_rel_error = std::nan("");

    double diverged_fraction() const { return runs ? static_cast<double>(diverged) / static_cast<double>(runs) : 0.0; }
};

inline SweepSummary summarize(const std::vector<SweepRow>& rows) {
    SweepSummary s;
    s.runs = rows.size();
    std::vector<double> rel;
    for (const auto& r : rows) {
        if (r.diverged) ++s.diverged;
        if (r.failed) ++s.failed;
        if (!r.failed && std::isfinite(r.rel_error)) rel.push_back(r.rel_error);
    }
    s.estimated = rel.size();
    if (!rel.empty()) {
        s.median_rel_error = quantile(rel, 0.5);
        s.p90_rel_error = quantile(rel, 0.9);
    }
    return s;
}

/// Runs `runs` sweep points on a work queue. Rows reach `csv` in run order as
/// soon as every earlier run has finished, and the stream is flushed after
/// each row, so an interrupted sweep leaves a valid prefix.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg, std::ostream* csv = nullptr, std::size_t workers = worker_count(),
                                       const std::function<void(const SweepRow&)>& on_row = {}) {
    cfg.validate();
    const std::size_t runs = cfg.tier.runs;
    std::vector<std::optional<SweepRow>> slots(runs);
    std::vector<SweepRow> rows;
    std::size_t next = 0;
    std::mutex mu;
    if (csv) {
        write_csv_row(*csv, sweep_csv_header());
        csv->flush();
    }
    parallel_for(
        runs,
        [&](std::size_t i) {
            SweepRow row = run_sweep_point(cfg, i);
            std::lock_guard lock(mu);
            if (on_row) on_row(row);
            slots[i] = std::move(row);
            while (next < runs && slots[next]) {
                if (csv) {
                    write_sweep_row(*csv, *slots[next]);
                    csv->flush();
                }
                rows.push_back(std::move(*slots[next]));
                ++next;
            }
        },
        workers);
    return rows;
}

}  // namespace llc
