#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/estimator/llc.hpp"
#include "llc/models/model.hpp"

namespace llc {

struct RescaleConfig {
    std::vector<std::size_t> widths{5, 10, 2};  ///< ReLU MLP with biases
    std::size_t layer = 0;                      ///< rescales layers `layer` and `layer + 1`
    std::vector<double> alphas{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4};
    std::size_t n = 2000;
    double input_range = 1.0;
    WeightScale weight_scale = WeightScale::unit;
    std::uint64_t data_seed = 0;
    bool precondition = true;
    SamplerConfig sampler = [] {
        SamplerConfig c;
        c.epsilon = 1e-4;
        c.steps = 5000;
        c.batch_size = 100;
        c.chains = 4;
        c.mala_probe_stride = 0;
        c.tally_full_batch = true;
        c.precondition_mode = PreconditionMode::metric;
        return c;
    }();
};

struct RescaleRow {
    double alpha = 1.0;
    double lambda_hat = std::nan("");
    double std_error = std::nan("");
    std::vector<std::string> flags;
    bool failed = false;
};

struct RescaleSummary {
    double spread = std::nan("");        ///< max - min lambda_hat over usable alphas
    double pooled_stderr = std::nan(""); ///< root-mean-square of the per-alpha stderrs
    std::size_t failed = 0;
};

/// Builds a random realizable ReLU network, then for every alpha rescales the
/// true parameter (function unchanged) and estimates the LLC there with the
/// matching diagonal preconditioner. Every alpha uses the same sampler seed.
inline std::vector<RescaleRow> run_rescale_test(const RescaleConfig& cfg) {
    const auto spec = ModelSpec::mlp(cfg.widths);
    if (cfg.layer + 1 >= spec.layer_count()) throw std::invalid_argument("rescale test: layer index needs a following layer");
    Rng rng(cfg.data_seed);
    const auto w_true = random_parameter(spec, rng, cfg.weight_scale);
    const auto data = std::make_shared<const Dataset>(gen_realizable(spec, w_true, cfg.n, rng, cfg.input_range));
    const ModelObjective objective(spec, data);

    std::vector<RescaleRow> rows;
    for (double alpha : cfg.alphas) {
        RescaleRow row;
        row.alpha = alpha;
        try {
            const auto w_alpha = rescale_layers(spec, w_true, cfg.layer, alpha);
            SamplerConfig sc = cfg.sampler;
            if (cfg.precondition) sc.preconditioner = rescale_preconditioner(spec, cfg.layer, alpha);
            const auto est = estimate_llc(objective, w_alpha, sc);
            row.lambda_hat = est.lambda_hat;
            row.std_error = est.std_error;
            row.flags = est.flags.names();
        } catch (const EstimationError&) {
            row.flags.push_back("all_chains_diverged");
            row.failed = true;
        } catch (const std::exception& e) {
            row.flags.push_back(std::string("error: ") + e.what());
            row.failed = true;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline RescaleSummary summarize(const std::vector<RescaleRow>& rows) {
    RescaleSummary s;
    double lo = INFINITY, hi = -INFINITY, var = 0.0;
    std::size_t used = 0;
    for (const auto& r : rows) {
        if (r.failed || !std::isfinite(r.lambda_hat)) {
            ++s.failed;
            continue;
        }
        lo = std::min(lo, r.lambda_hat);
        hi = std::max(hi, r.lambda_hat);
        var += r.std_error * r.std_error;
        ++used;
    }
    if (used > 0) {
        s.spread = hi - lo;
        s.pooled_stderr = std::sqrt(var / static_cast<double>(used));
    }
    return s;
}

}  // namespace llc
