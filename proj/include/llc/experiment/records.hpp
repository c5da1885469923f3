#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "llc/estimator/llc.hpp"
#include "llc/io/csv.hpp"
#include "llc/io/svg_plot.hpp"
#include "llc/samplers/config.hpp"
#include "llc/training/sgd.hpp"

namespace llc {

using Json = nlohmann::ordered_json;

/// JSON numbers cannot hold NaN or infinities; those become null.
inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const SamplerConfig& c, std::size_t n) {
    Json j;
    j["epsilon"] = c.epsilon;
    j["gamma"] = c.gamma;
    j["beta"] = c.resolved_beta(n);
    j["beta_default"] = !c.beta.has_value();
    j["steps"] = c.steps;
    j["burnin_frac"] = c.burnin_frac;
    j["batch_size"] = c.batch_size;
    j["chains"] = c.chains;
    j["seed"] = c.seed;
    j["preconditioner"] = c.preconditioner.empty() ? Json(nullptr) : Json(c.preconditioner);
    j["mala_probe_stride"] = c.mala_probe_stride;
    j["precondition_mode"] = to_string(c.precondition_mode);
    j["probe_source"] = to_string(c.probe_source);
    j["tally_full_batch"] = c.tally_full_batch;
    return j;
}

inline Json to_json(const TrainConfig& c) {
    return Json{{"learning_rate", c.learning_rate}, {"momentum", c.momentum}, {"batch_size", c.batch_size}, {"steps", c.steps}, {"seed", c.seed}};
}

/// Estimate record: lambda_hat, stderr, per_chain, n, beta, gamma, epsilon,
/// steps, burnin_frac, L_init, wbic_hat, flags, seed, followed by diagnostics.
inline Json estimate_record(const LlcEstimate& est, const SamplerConfig& cfg) {
    Json j;
    j["lambda_hat"] = json_number(est.lambda_hat);
    j["stderr"] = json_number(est.std_error);
    Json per = Json::array();
    for (double v : est.per_chain) per.push_back(json_number(v));
    j["per_chain"] = per;
    j["n"] = est.n;
    j["beta"] = est.beta;
    j["gamma"] = cfg.gamma;
    j["epsilon"] = cfg.epsilon;
    j["steps"] = cfg.steps;
    j["burnin_frac"] = cfg.burnin_frac;
    j["L_init"] = json_number(est.init_loss);
    j["wbic_hat"] = json_number(est.wbic_hat);
    j["flags"] = est.flags.names();
    j["seed"] = cfg.seed;
    j["mean_accept"] = json_number(est.mean_accept);
    Json burn = Json::array();
    for (auto b : est.burnin) burn.push_back(to_string(b));
    j["burnin"] = burn;
    j["hints"] = est.hints();
    return j;
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Trace CSV: chain, step, minibatch_loss, accept_prob_or_blank.
inline void write_trace_csv(std::ostream& os, std::span<const ChainTrace> traces) {
    write_csv_row(os, {"chain", "step", "minibatch_loss", "accept_prob_or_blank"});
    for (const auto& tr : traces) {
        std::size_t p = 0;
        for (std::size_t t = 0; t < tr.losses.size(); ++t) {
            while (p < tr.probes.size() && tr.probes[p].step < t) ++p;
            const bool has = p < tr.probes.size() && tr.probes[p].step == t;
            write_csv_row(os, {std::to_string(tr.chain), std::to_string(t), format_double(tr.losses[t]),
                               has ? format_double(tr.probes[p].accept) : std::string()});
        }
    }
}

/// Loss trace of every chain with the acceptance probes on a secondary axis.
inline SvgPlot trace_plot(std::span<const ChainTrace> traces, const std::string& title) {
    static const char* colors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
    SvgPlot plot(title, "step", "loss");
    plot.secondary_label("MALA acceptance", 0.0, 1.0);
    for (const auto& tr : traces) {
        SvgPlot::Series s;
        s.label = "chain " + std::to_string(tr.chain);
        s.style = SvgPlot::Style::line;
        s.color = colors[tr.chain % 6];
        const std::size_t stride = std::max<std::size_t>(1, tr.losses.size() / 2000);
        for (std::size_t t = 0; t < tr.losses.size(); t += stride) {
            s.x.push_back(static_cast<double>(t));
            s.y.push_back(tr.losses[t]);
        }
        plot.add(std::move(s));
        if (!tr.probes.empty()) {
            SvgPlot::Series a;
            a.color = "#d62728";
            a.secondary = true;
            if (tr.chain == 0) a.label = "acceptance";
            for (const auto& p : tr.probes) {
                a.x.push_back(static_cast<double>(p.step));
                a.y.push_back(p.accept);
            }
            plot.add(std::move(a));
        }
    }
    return plot;
}

}  // namespace llc
