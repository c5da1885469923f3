// llc_lab: command-line front end for the LLC estimation library.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "llc/estimator/llc.hpp"
#include "llc/estimator/tune.hpp"
#include "llc/experiment/config_file.hpp"
#include "llc/experiment/records.hpp"
#include "llc/experiment/rescale.hpp"
#include "llc/experiment/sweep.hpp"
#include "llc/io/svg_plot.hpp"
#include "llc/models/checkpoint.hpp"
#include "llc/numerics/stats.hpp"
#include "llc/theory/dln.hpp"
#include "llc/theory/free_energy.hpp"
#include "llc/theory/volume.hpp"
#include "llc/training/sgd.hpp"

namespace fs = std::filesystem;
using namespace llc;

namespace {

/// Sampler flags, named exactly like the [sampler] config keys.
struct SamplerFlags {
    std::optional<double> epsilon, gamma, beta, burnin_frac;
    std::optional<std::size_t> steps, batch_size, chains, mala_probe_stride;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> preconditioner, precondition_mode, probe_source, sampler;
    bool tally_full_batch = false;

    void add(CLI::App* app) {
        app->add_option("--epsilon", epsilon, "SGLD step size (noise variance)");
        app->add_option("--gamma", gamma, "localization strength");
        app->add_option("--beta", beta, "inverse temperature (default 1/log n)");
        app->add_option("--steps", steps, "chain length");
        app->add_option("--burnin_frac", burnin_frac, "fraction of each chain discarded");
        app->add_option("--batch_size", batch_size, "SGLD minibatch size");
        app->add_option("--chains", chains, "independent chains");
        app->add_option("--seed", seed, "base seed; chain c uses seed + c");
        app->add_option("--preconditioner", preconditioner, "comma-separated diagonal of A");
        app->add_option("--mala_probe_stride", mala_probe_stride, "steps between MALA acceptance probes (0 = off)");
        app->add_option("--precondition_mode", precondition_mode, "drift | drift_noise | metric");
        app->add_option("--probe_source", probe_source, "auto | full | minibatch");
        app->add_option("--sampler", sampler, "sgld | mala");
        app->add_flag("--tally_full_batch", tally_full_batch, "tally full-batch losses after burn-in");
    }

    SamplerSection apply(SamplerSection s) const {
        auto& c = s.config;
        if (epsilon) c.epsilon = *epsilon;
        if (gamma) c.gamma = *gamma;
        if (beta) c.beta = *beta;
        if (burnin_frac) c.burnin_frac = *burnin_frac;
        if (steps) c.steps = *steps;
        if (batch_size) c.batch_size = *batch_size;
        if (chains) c.chains = *chains;
        if (mala_probe_stride) c.mala_probe_stride = *mala_probe_stride;
        if (seed) c.seed = *seed;
        if (preconditioner) c.preconditioner = parse_double_list(*preconditioner);
        if (precondition_mode) c.precondition_mode = parse_precondition_mode(*precondition_mode);
        if (probe_source) c.probe_source = parse_probe_source(*probe_source);
        if (sampler) s.kind = parse_sampler_kind(*sampler);
        if (tally_full_batch) c.tally_full_batch = true;
        return s;
    }
};

/// Either a checkpoint + dataset pair or a named analytic potential.
struct TargetFlags {
    std::string checkpoint, data, potential;
    std::size_t n = 0;
    std::optional<double> radius;
    std::string rescale_precondition;

    void add(CLI::App* app) {
        app->add_option("--checkpoint", checkpoint, "model checkpoint (w*)");
        app->add_option("--data", data, "dataset file");
        app->add_option("--potential", potential, "analytic potential: quad1d | quad2d | w2w4 | w2w2");
        app->add_option("--n", n, "nominal sample size for --potential");
        app->add_option("--radius", radius, "half-width of the potential's neighbourhood");
        app->add_option("--rescale_precondition", rescale_precondition,
                        "LAYER:ALPHA, use the rescaling preconditioner for layers LAYER, LAYER+1 (0-based)");
    }

    bool is_potential() const { return !potential.empty(); }

    void check() const {
        if (is_potential()) {
            if (!checkpoint.empty() || !data.empty()) throw std::invalid_argument("give either --potential or --checkpoint/--data, not both");
            if (n < 2) throw std::invalid_argument("--potential needs --n >= 2");
        } else if (checkpoint.empty() || data.empty()) {
            throw std::invalid_argument("need --checkpoint and --data, or --potential and --n");
        }
    }
};

struct CommonFlags {
    std::string out = ".";
    std::string config;

    void add(CLI::App* app, bool with_config = true) {
        app->add_option("--out", out, "output directory");
        if (with_config) app->add_option("--config", config, "INI config file");
    }

    fs::path dir() const {
        fs::create_directories(out);
        return fs::path(out);
    }

    ConfigTree tree(const std::set<std::string>& sections) const {
        if (config.empty()) return {};
        auto t = load_config(config);
        check_sections(t, sections);
        return t;
    }
};

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

Potential named_potential(const TargetFlags& t) {
    auto p = potential_by_name(t.potential);
    if (t.radius) {
        if (!(*t.radius > 0.0)) throw std::invalid_argument("--radius must be positive");
        p.radius = *t.radius;
    }
    return p;
}

std::vector<double> rescale_vector(const ModelSpec& spec, const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("--rescale_precondition expects LAYER:ALPHA");
    const auto layer = static_cast<std::size_t>(std::stoul(text.substr(0, colon)));
    const double alpha = std::stod(text.substr(colon + 1));
    return rescale_preconditioner(spec, layer, alpha);
}

// ---------------------------------------------------------------- theory

int cmd_theory(const std::string& widths_text, std::size_t rank) {
    const auto widths = parse_size_list(widths_text);
    const auto sig = dln_lambda(widths, rank);
    std::cout << "widths       " << join(sig.widths, ",") << '\n'
              << "rank         " << sig.rank << '\n'
              << "params       " << sig.param_count() << '\n'
              << "deficiencies " << join(sig.deficiencies, ",") << '\n'
              << "sigma        " << join(sig.sigma, ",") << '\n'
              << "ell          " << sig.ell << '\n'
              << "a            " << sig.a << '\n'
              << "lambda       " << fmt(sig.lambda, 12) << '\n';
    return 0;
}

int cmd_depth_study(const std::string& widths, const std::string& depths, std::size_t draws, std::uint64_t seed,
                    const CommonFlags& common) {
    const auto w = parse_size_list(widths), m = parse_size_list(depths);
    if (w.size() != 2 || m.size() != 2) throw std::invalid_argument("--widths and --depths expect lo,hi");
    Rng rng(seed);
    const auto rows = dln_depth_study(w[0], w[1], m[0], m[1], draws, rng);
    const auto dir = common.dir();
    std::ofstream csv(dir / "depth_study.csv");
    write_csv_row(csv, {"depth", "d", "rank", "lambda", "widths"});
    std::vector<double> depth, lambda;
    SvgPlot::Series s;
    s.label = "random DLNs";
    for (const auto& r : rows) {
        write_csv_row(csv, {std::to_string(r.depth), std::to_string(r.params), std::to_string(r.rank), format_double(r.lambda),
                            join(r.widths, "-")});
        depth.push_back(static_cast<double>(r.depth));
        lambda.push_back(r.lambda);
    }
    s.x = depth;
    s.y = lambda;
    SvgPlot("Learning coefficient vs depth", "number of layers M", "lambda").add(std::move(s)).save(dir / "depth_study.svg");
    const double rho = rows.size() > 1 ? spearman(depth, lambda) : std::nan("");
    std::cout << "draws " << rows.size() << "  spearman(depth, lambda) = " << fmt(rho, 4) << '\n';
    write_json(dir / "depth_study.json", Json{{"widths", w}, {"depths", m}, {"draws", draws}, {"seed", seed}, {"spearman", json_number(rho)}});
    return 0;
}

// ---------------------------------------------------------------- volume / free energy

int cmd_volume(const std::string& name, const VolumeGridOptions& opt, std::optional<double> radius, const CommonFlags& common) {
    TargetFlags t;
    t.potential = name;
    t.radius = radius;
    const auto p = named_potential(t);
    const auto res = volume_scaling(p, opt);
    const auto dir = common.dir();
    std::ofstream csv(dir / ("volume_" + p.name + ".csv"));
    write_csv_row(csv, {"eps", "volume", "stderr", "hits", "samples"});
    std::cout << std::left << std::setw(14) << "eps" << std::setw(14) << "volume" << std::setw(14) << "stderr" << "hits\n";
    SvgPlot::Series pts, fit;
    pts.label = "Monte Carlo";
    fit.label = "fit";
    fit.style = SvgPlot::Style::line;
    fit.color = "#d62728";
    for (std::size_t k = 0; k < res.eps.size(); ++k) {
        const auto& v = res.volumes[k];
        write_csv_row(csv, {format_double(res.eps[k]), format_double(v.volume), format_double(v.std_error), std::to_string(v.hits),
                            std::to_string(v.samples)});
        std::cout << std::setw(14) << fmt(res.eps[k], 5) << std::setw(14) << fmt(v.volume, 5) << std::setw(14) << fmt(v.std_error, 3)
                  << v.hits << '\n';
        if (v.zero_hits) continue;
        pts.x.push_back(res.eps[k]);
        pts.y.push_back(v.volume);
        const double e = res.eps[k];
        fit.x.push_back(e);
        fit.y.push_back(res.fit.c * std::pow(e, res.fit.lambda) * std::pow(-std::log(e), res.fit.multiplicity - 1));
    }
    std::cout << "fit: lambda = " << fmt(res.fit.lambda, 5) << "  m = " << res.fit.multiplicity << "  c = " << fmt(res.fit.c, 5);
    if (p.lambda) std::cout << "   (known lambda = " << *p.lambda << ", m = " << p.multiplicity.value_or(1) << ")";
    std::cout << '\n';
    SvgPlot("Volume scaling: " + p.name, "eps", "V(eps)").log_x().log_y().add(std::move(pts)).add(std::move(fit)).save(dir / ("volume_" + p.name + ".svg"));
    Json j{{"potential", p.name}, {"radius", p.radius}, {"samples", opt.samples}, {"points", opt.points}, {"seed", opt.seed},
           {"eps0", res.eps.front()}, {"lambda", res.fit.lambda}, {"multiplicity", res.fit.multiplicity}, {"c", res.fit.c},
           {"residual_by_m", res.fit.residual_by_m}};
    if (p.lambda) j["known_lambda"] = *p.lambda;
    write_json(dir / ("volume_" + p.name + ".json"), j);
    return 0;
}

int cmd_free_energy(const std::string& name, const std::string& ns, std::optional<double> radius, const CommonFlags& common) {
    TargetFlags t;
    t.potential = name;
    t.radius = radius;
    const auto p = named_potential(t);
    const auto dir = common.dir();
    std::ofstream csv(dir / ("free_energy_" + p.name + ".csv"));
    write_csv_row(csv, {"n", "F_n", "idealized_llc"});
    std::cout << std::left << std::setw(12) << "n" << std::setw(16) << "F_n" << "idealized_llc\n";
    Json rows = Json::array();
    for (double n : parse_double_list(ns)) {
        const double f = quadrature_free_energy(p, n);
        const double lam = idealized_llc(p, n);
        write_csv_row(csv, {format_double(n), format_double(f), format_double(lam)});
        std::cout << std::setw(12) << fmt(n) << std::setw(16) << fmt(f, 8) << fmt(lam, 6) << '\n';
        rows.push_back(Json{{"n", n}, {"F_n", f}, {"idealized_llc", lam}});
    }
    write_json(dir / ("free_energy_" + p.name + ".json"), Json{{"potential", p.name}, {"radius", p.radius}, {"rows", rows}});
    return 0;
}

// ---------------------------------------------------------------- estimate / tune

template <class Fn>
int with_objective(const TargetFlags& t, Fn&& fn) {
    t.check();
    if (t.is_potential()) {
        const auto p = named_potential(t);
        PotentialObjective obj(p, t.n);
        return fn(obj, p.minimum, std::vector<double>{}, Json{{"potential", p.name}, {"n", t.n}, {"radius", p.radius}});
    }
    const auto ck = load_checkpoint(t.checkpoint);
    auto data = std::make_shared<const Dataset>(load_dataset(t.data));
    ModelObjective obj(ck.spec, data);
    std::vector<double> pre;
    if (!t.rescale_precondition.empty()) pre = rescale_vector(ck.spec, t.rescale_precondition);
    return fn(obj, ck.params, pre,
              Json{{"checkpoint", t.checkpoint}, {"data", t.data}, {"params", ck.params.size()}, {"n", data->size()},
                   {"note", "w* is used as given; if it was trained on the same data, that data is used twice"}});
}

int cmd_estimate(const TargetFlags& target, const SamplerFlags& flags, const CommonFlags& common) {
    const auto tree = common.tree({"sampler"});
    const auto section = flags.apply(apply_sampler_section(tree));
    return with_objective(target, [&](auto& obj, const std::vector<double>& w_star, const std::vector<double>& pre, Json source) {
        SamplerConfig cfg = section.config;
        if (!pre.empty()) cfg.preconditioner = pre;
        std::vector<ChainTrace> traces;
        const auto t0 = std::chrono::steady_clock::now();
        const auto est = estimate_llc(obj, w_star, cfg, section.kind, &traces);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto dir = common.dir();
        Json rec = estimate_record(est, cfg);
        rec["sampler"] = section.kind == SamplerKind::sgld ? "sgld" : "mala";
        rec["wallclock"] = secs;
        rec["source"] = std::move(source);
        rec["config"] = to_json(cfg, obj.sample_size());
        write_json(dir / "estimate.json", rec);
        std::ofstream trace_csv(dir / "trace.csv");
        write_trace_csv(trace_csv, traces);
        trace_plot(traces, "Loss trace").save(dir / "trace.svg");
        std::cout << "lambda_hat = " << fmt(est.lambda_hat) << " +- " << fmt(est.std_error, 3) << "  (n=" << est.n << ", beta="
                  << fmt(est.beta, 4) << ", wbic=" << fmt(est.wbic_hat) << ")\n";
        if (!std::isnan(est.mean_accept)) std::cout << "mean MALA acceptance " << fmt(est.mean_accept, 4) << '\n';
        for (const auto& f : est.flags.names()) std::cout << "flag: " << f << '\n';
        for (const auto& h : est.hints()) std::cout << "hint: " << h << '\n';
        return 0;
    });
}

int cmd_tune(const TargetFlags& target, const SamplerFlags& flags, const TuneOptions& opt, const CommonFlags& common) {
    const auto tree = common.tree({"sampler"});
    const auto section = flags.apply(apply_sampler_section(tree));
    return with_objective(target, [&](auto& obj, const std::vector<double>& w_star, const std::vector<double>& pre, Json source) {
        SamplerConfig cfg = section.config;
        if (!pre.empty()) cfg.preconditioner = pre;
        const auto res = tune_step_size(obj, w_star, cfg, opt);
        // Confirmation chain with a fresh seed.
        SamplerConfig confirm = cfg;
        confirm.epsilon = res.epsilon;
        confirm.steps = opt.pilot_steps;
        confirm.tally_full_batch = false;
        if (opt.probe_stride > 0) confirm.mala_probe_stride = opt.probe_stride;
        confirm.seed = cfg.seed + 7919;
        const auto trace = sgld_chain(obj, w_star, confirm, Rng(confirm.seed));
        const auto dir = common.dir();
        std::ofstream csv(dir / "tune_history.csv");
        write_csv_row(csv, {"epsilon", "mean_accept", "diverged"});
        for (const auto& p : res.history) write_csv_row(csv, {format_double(p.epsilon), format_double(p.accept), p.diverged ? "1" : "0"});
        write_json(dir / "tune.json", Json{{"epsilon", res.epsilon}, {"pilot_accept", res.accept},
                                           {"confirm_accept", json_number(trace.diverged ? 0.0 : trace.mean_accept())},
                                           {"target", {opt.target_low, opt.target_high}}, {"source", std::move(source)},
                                           {"config", to_json(cfg, obj.sample_size())}});
        std::cout << res.report() << "recommended epsilon = " << fmt(res.epsilon) << "  (pilot acceptance " << fmt(res.accept, 4)
                  << ", confirmation " << fmt(trace.diverged ? 0.0 : trace.mean_accept(), 4) << ")\n";
        return 0;
    });
}

// ---------------------------------------------------------------- train

struct TrainFlags {
    std::string kind = "dln";
    std::string widths;
    std::string task = "regression";
    std::size_t n = 10000;
    double input_range = 10.0;
    std::string weight_scale = "unit";
    double truncate_prob = 0.5;
    double noise_variance = 1.0;
    std::uint64_t seed = 0;
    std::optional<double> learning_rate, momentum;
    std::optional<std::size_t> batch_size, steps;
};

int cmd_train(const TrainFlags& f, const CommonFlags& common) {
    const auto tree = common.tree({"train"});
    TrainConfig tc = apply_train_section(tree);
    if (f.learning_rate) tc.learning_rate = *f.learning_rate;
    if (f.momentum) tc.momentum = *f.momentum;
    if (f.batch_size) tc.batch_size = *f.batch_size;
    if (f.steps) tc.steps = *f.steps;
    tc.seed = f.seed;

    const auto widths = parse_size_list(f.widths);
    const auto kind = parse_model_kind(f.kind);
    ModelSpec spec = kind == ModelKind::dln ? ModelSpec::dln(widths) : ModelSpec::mlp(widths, parse_task(f.task));
    spec.noise_variance = f.noise_variance;
    spec.validate();
    const auto scale = parse_weight_scale(f.weight_scale);

    Rng rng(f.seed);
    Rng truth_rng = rng.derive(2), data_rng = rng.derive(3);
    Json info{{"model", to_string(kind)}, {"widths", widths}, {"params", spec.param_count()}, {"n", f.n},
              {"input_range", f.input_range}, {"weight_scale", to_string(scale)}, {"seed", f.seed}, {"train", to_json(tc)}};
    std::vector<double> w_true;
    if (kind == ModelKind::dln) {
        const auto truth = random_true_dln(spec, truth_rng, scale, f.truncate_prob);
        w_true = truth.params;
        const auto r = dln_rank(spec, w_true);
        info["rank"] = r;
        info["lambda"] = dln_lambda(widths, r).lambda;
    } else {
        w_true = random_parameter(spec, truth_rng, scale);
    }
    const auto data = std::make_shared<const Dataset>(gen_realizable(spec, w_true, f.n, data_rng, f.input_range));
    const auto dir = common.dir();
    save_dataset(dir / "data.llcd", *data);
    save_checkpoint(dir / "true.llck", {spec, w_true});

    if (tc.steps == 0) {
        write_json(dir / "train.json", info);
        std::cout << "wrote data.llcd and true.llck (no training requested)\n";
        return 0;
    }
    TrainResult res;
    try {
        res = train_model(spec, data, tc, scale);
    } catch (const TrainingDiverged& e) {
        std::ofstream csv(dir / "train_loss.csv");
        write_csv_row(csv, {"step", "minibatch_loss"});
        for (std::size_t t = 0; t < e.losses().size(); ++t) write_csv_row(csv, {std::to_string(t), format_double(e.losses()[t])});
        info["diverged_at"] = e.step();
        write_json(dir / "train.json", info);
        std::cerr << "error: " << e.what() << " (partial loss curve in train_loss.csv)\n";
        return 3;
    }
    save_checkpoint(dir / "trained.llck", {spec, res.params});
    ModelObjective obj(spec, data);
    const double final_loss = obj.full_loss(res.params);
    info["final_loss"] = final_loss;
    info["final_residual"] = final_loss - spec.loss_floor();
    write_json(dir / "train.json", info);
    std::ofstream csv(dir / "train_loss.csv");
    write_csv_row(csv, {"step", "minibatch_loss"});
    SvgPlot::Series s;
    s.style = SvgPlot::Style::line;
    const std::size_t stride = std::max<std::size_t>(1, res.losses.size() / 2000);
    for (std::size_t t = 0; t < res.losses.size(); ++t) {
        write_csv_row(csv, {std::to_string(t), format_double(res.losses[t])});
        if (t % stride == 0) {
            s.x.push_back(static_cast<double>(t));
            s.y.push_back(res.losses[t] - spec.loss_floor());
        }
    }
    SvgPlot("Training loss (above the floor)", "step", "loss - floor").log_y().add(std::move(s)).save(dir / "train_loss.svg");
    std::cout << "final full-batch loss " << fmt(final_loss, 10) << "  (residual " << fmt(final_loss - spec.loss_floor(), 4) << ")\n";
    return 0;
}

// ---------------------------------------------------------------- sweep / rescale

struct SweepFlags {
    std::optional<std::string> tier, evaluate_at, weight_scale, layers, widths, probe_source;
    std::optional<std::size_t> runs, steps, n, batch_size, chains, mala_probe_stride;
    std::optional<double> epsilon, gamma, burnin_frac, input_range, truncate_prob;
    std::optional<std::uint64_t> seed;
    std::optional<double> learning_rate, momentum;
    std::optional<std::size_t> train_steps;
};

int cmd_sweep(const SweepFlags& f, const CommonFlags& common) {
    const auto tree = common.tree({"sweep", "train"});
    SweepConfig cfg;
    // The tier must be applied before anything that overrides its defaults.
    if (f.tier) cfg.tier = sweep_tier(*f.tier);
    cfg = apply_sweep_section(tree, cfg);
    if (f.tier && tree.get_child_optional("sweep.tier")) cfg.tier = sweep_tier(*f.tier);
    auto pair = [](const std::string& text, std::size_t& lo, std::size_t& hi) {
        const auto v = parse_size_list(text);
        if (v.size() != 2) throw std::invalid_argument("expected lo,hi");
        lo = v[0];
        hi = v[1];
    };
    if (f.layers) pair(*f.layers, cfg.tier.layers_lo, cfg.tier.layers_hi);
    if (f.widths) pair(*f.widths, cfg.tier.width_lo, cfg.tier.width_hi);
    if (f.runs) cfg.tier.runs = *f.runs;
    if (f.steps) cfg.tier.steps = *f.steps;
    if (f.n) cfg.tier.n = *f.n;
    if (f.epsilon) cfg.tier.epsilon = *f.epsilon;
    if (f.evaluate_at) cfg.evaluate_at = parse_evaluate_at(*f.evaluate_at);
    if (f.weight_scale) cfg.weight_scale = parse_weight_scale(*f.weight_scale);
    if (f.probe_source) cfg.probe_source = parse_probe_source(*f.probe_source);
    if (f.batch_size) cfg.batch_size = *f.batch_size;
    if (f.chains) cfg.chains = *f.chains;
    if (f.mala_probe_stride) cfg.mala_probe_stride = *f.mala_probe_stride;
    if (f.gamma) cfg.gamma = *f.gamma;
    if (f.burnin_frac) cfg.burnin_frac = *f.burnin_frac;
    if (f.input_range) cfg.input_range = *f.input_range;
    if (f.truncate_prob) cfg.truncate_prob = *f.truncate_prob;
    if (f.seed) cfg.base_seed = *f.seed;
    if (f.learning_rate) cfg.train.learning_rate = *f.learning_rate;
    if (f.momentum) cfg.train.momentum = *f.momentum;
    if (f.train_steps) cfg.train.steps = *f.train_steps;
    cfg.validate();
    if (cfg.tier.long_running) std::cerr << "note: tier " << cfg.tier.name << " is long-running at desk scale\n";

    const auto dir = common.dir();
    Json resolved{{"tier", cfg.tier.name}, {"layers", {cfg.tier.layers_lo, cfg.tier.layers_hi}},
                  {"widths", {cfg.tier.width_lo, cfg.tier.width_hi}}, {"epsilon", cfg.tier.epsilon}, {"steps", cfg.tier.steps},
                  {"n", cfg.tier.n}, {"runs", cfg.tier.runs}, {"evaluate_at", to_string(cfg.evaluate_at)}, {"seed", cfg.base_seed},
                  {"batch_size", cfg.batch_size}, {"gamma", cfg.gamma}, {"burnin_frac", cfg.burnin_frac}, {"chains", cfg.chains},
                  {"mala_probe_stride", cfg.mala_probe_stride}, {"probe_source", to_string(cfg.probe_source)},
                  {"weight_scale", to_string(cfg.weight_scale)}, {"input_range", cfg.input_range},
                  {"truncate_prob", cfg.truncate_prob}, {"train", to_json(cfg.train)}};
    write_json(dir / "sweep_config.json", resolved);
    std::ofstream csv(dir / "sweep.csv");
    std::size_t done = 0;
    const auto rows = run_sweep(cfg, &csv, worker_count(), [&](const SweepRow& r) {
        ++done;
        std::cerr << "[" << done << "/" << cfg.tier.runs << "] seed " << r.seed << " d=" << r.d << " lambda=" << fmt(r.lambda_true)
                  << " hat=" << fmt(r.lambda_hat) << (r.flags.empty() ? "" : " " + join(r.flags, ";")) << '\n';
    });
    const auto sum = summarize(rows);
    Json summary{{"config", resolved},
                 {"runs", sum.runs},
                 {"estimated", sum.estimated},
                 {"diverged", sum.diverged},
                 {"failed", sum.failed},
                 {"median_rel_error", json_number(sum.median_rel_error)},
                 {"p90_rel_error", json_number(sum.p90_rel_error)}};
    write_json(dir / "sweep_summary.json", summary);
    SvgPlot::Series s;
    s.label = "runs";
    for (const auto& r : rows)
        if (!r.failed) {
            s.x.push_back(r.lambda_true);
            s.y.push_back(r.lambda_hat);
        }
    SvgPlot("Estimated vs true learning coefficient", "lambda", "lambda_hat").log_x().log_y().identity_line().add(std::move(s)).save(dir / "sweep_scatter.svg");
    std::cout << "runs " << sum.runs << "  estimated " << sum.estimated << "  diverged " << sum.diverged << "  failed " << sum.failed
              << "\nmedian rel error " << fmt(sum.median_rel_error, 4) << "  90th pct " << fmt(sum.p90_rel_error, 4) << '\n';
    return 0;
}

int cmd_rescale(const std::string& alphas, const std::string& widths, std::size_t layer, std::size_t n, double input_range,
                std::uint64_t data_seed, bool no_precondition, const SamplerFlags& flags, const CommonFlags& common) {
    const auto tree = common.tree({"sampler"});
    RescaleConfig cfg;
    SamplerSection base{cfg.sampler, SamplerKind::sgld};
    cfg.sampler = flags.apply(apply_sampler_section(tree, base)).config;
    if (!alphas.empty()) cfg.alphas = parse_double_list(alphas);
    if (!widths.empty()) cfg.widths = parse_size_list(widths);
    for (double a : cfg.alphas)
        if (!(a > 0.0)) throw std::invalid_argument("alphas must be positive");
    cfg.layer = layer;
    cfg.n = n;
    cfg.input_range = input_range;
    cfg.data_seed = data_seed;
    cfg.precondition = !no_precondition;
    const auto rows = run_rescale_test(cfg);
    const auto sum = summarize(rows);
    const auto dir = common.dir();
    std::ofstream csv(dir / "rescale.csv");
    write_csv_row(csv, {"alpha", "lambda_hat", "stderr", "flags"});
    SvgPlot::Series s;
    s.label = cfg.precondition ? "preconditioned SGLD" : "plain SGLD";
    for (const auto& r : rows) {
        write_csv_row(csv, {format_double(r.alpha), format_double(r.lambda_hat), format_double(r.std_error), join(r.flags, ";")});
        std::cout << "alpha " << std::setw(8) << fmt(r.alpha, 3) << "  lambda_hat " << std::setw(10) << fmt(r.lambda_hat) << " +- "
                  << fmt(r.std_error, 3) << (r.flags.empty() ? "" : "  " + join(r.flags, ";")) << '\n';
        if (!r.failed) {
            s.x.push_back(r.alpha);
            s.y.push_back(r.lambda_hat);
        }
    }
    SvgPlot("LLC estimate under layer rescaling", "alpha", "lambda_hat").log_x().add(std::move(s)).save(dir / "rescale.svg");
    write_json(dir / "rescale_summary.json",
               Json{{"widths", cfg.widths}, {"layer", cfg.layer}, {"alphas", cfg.alphas}, {"n", cfg.n}, {"input_range", cfg.input_range},
                    {"data_seed", cfg.data_seed}, {"precondition", cfg.precondition}, {"sampler", to_json(cfg.sampler, cfg.n)},
                    {"spread", json_number(sum.spread)}, {"pooled_stderr", json_number(sum.pooled_stderr)}, {"failed", sum.failed}});
    std::cout << "spread " << fmt(sum.spread, 4) << "  pooled stderr " << fmt(sum.pooled_stderr, 4) << "  failed " << sum.failed << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local learning coefficient estimation and oracles"};
    app.require_subcommand(1);

    // theory
    std::string theory_widths;
    std::size_t theory_rank = 0;
    auto* theory = app.add_subcommand("theory", "closed-form learning coefficient of a deep linear network");
    theory->add_option("--widths", theory_widths, "H_0,...,H_M")->required();
    theory->add_option("--rank", theory_rank, "rank of the end-to-end map")->required();

    // depth-study
    std::string ds_widths = "100,2000", ds_depths = "2,800";
    std::size_t ds_draws = 1000;
    std::uint64_t ds_seed = 0;
    CommonFlags ds_common;
    auto* depth = app.add_subcommand("depth-study", "learning coefficient of random DLNs against depth");
    depth->add_option("--widths", ds_widths, "width range lo,hi")->capture_default_str();
    depth->add_option("--depths", ds_depths, "layer-count range lo,hi")->capture_default_str();
    depth->add_option("--draws", ds_draws, "number of random networks")->capture_default_str();
    depth->add_option("--seed", ds_seed)->capture_default_str();
    ds_common.add(depth, false);

    // volume
    std::string vol_potential;
    VolumeGridOptions vol_opt;
    std::optional<double> vol_radius;
    CommonFlags vol_common;
    auto* volume = app.add_subcommand("volume", "Monte Carlo volume scaling of an analytic potential");
    volume->add_option("--potential", vol_potential, "quad1d | quad2d | w2w4 | w2w2")->required();
    volume->add_option("--samples", vol_opt.samples, "uniform draws per tolerance")->capture_default_str();
    volume->add_option("--points", vol_opt.points, "grid points eps0 * 2^-k")->capture_default_str();
    volume->add_option("--eps0", vol_opt.eps0, "largest tolerance (0 = choose from a pilot)")->capture_default_str();
    volume->add_option("--seed", vol_opt.seed)->capture_default_str();
    volume->add_option("--radius", vol_radius, "half-width of the neighbourhood");
    vol_common.add(volume, false);

    // free-energy
    std::string fe_potential, fe_ns = "1e3,1e4,1e5,1e6";
    std::optional<double> fe_radius;
    CommonFlags fe_common;
    auto* free_energy = app.add_subcommand("free-energy", "quadrature free energy and idealized LLC of an analytic potential");
    free_energy->add_option("--potential", fe_potential, "quad1d | quad2d | w2w4 | w2w2")->required();
    free_energy->add_option("--n", fe_ns, "comma-separated sample sizes")->capture_default_str();
    free_energy->add_option("--radius", fe_radius, "half-width of the neighbourhood");
    fe_common.add(free_energy, false);

    // estimate
    TargetFlags est_target;
    SamplerFlags est_flags;
    CommonFlags est_common;
    auto* estimate = app.add_subcommand("estimate", "estimate the LLC at a checkpoint or potential minimum");
    est_target.add(estimate);
    est_flags.add(estimate);
    est_common.add(estimate);

    // tune
    TargetFlags tune_target;
    SamplerFlags tune_flags;
    TuneOptions tune_opt;
    CommonFlags tune_common;
    auto* tune = app.add_subcommand("tune", "bisect the step size to a target MALA acceptance");
    tune_target.add(tune);
    tune_flags.add(tune);
    tune->add_option("--pilot_steps", tune_opt.pilot_steps, "length of each pilot chain")->capture_default_str();
    tune->add_option("--max_bisections", tune_opt.max_bisections)->capture_default_str();
    tune->add_option("--probe_stride", tune_opt.probe_stride, "probe stride during tuning (0 = use --mala_probe_stride)")->capture_default_str();
    tune_common.add(tune);

    // train
    TrainFlags train_flags;
    CommonFlags train_common;
    auto* train = app.add_subcommand("train", "generate a realizable dataset and train with momentum SGD");
    train->add_option("--kind", train_flags.kind, "dln | mlp")->capture_default_str();
    train->add_option("--widths", train_flags.widths, "H_0,...,H_M")->required();
    train->add_option("--task", train_flags.task, "regression | classification (mlp only)")->capture_default_str();
    train->add_option("--n", train_flags.n, "dataset size")->capture_default_str();
    train->add_option("--input_range", train_flags.input_range, "inputs uniform on [-r, r]")->capture_default_str();
    train->add_option("--weight_scale", train_flags.weight_scale, "unit | fan_in")->capture_default_str();
    train->add_option("--truncate_prob", train_flags.truncate_prob, "chance each true DLN layer gets a random rank")->capture_default_str();
    train->add_option("--noise_variance", train_flags.noise_variance, "Gaussian likelihood variance")->capture_default_str();
    train->add_option("--seed", train_flags.seed)->capture_default_str();
    train->add_option("--learning_rate", train_flags.learning_rate);
    train->add_option("--momentum", train_flags.momentum);
    train->add_option("--batch_size", train_flags.batch_size);
    train->add_option("--steps", train_flags.steps, "SGD steps (0 only exports data and the true checkpoint)");
    train_common.add(train);

    // sweep
    SweepFlags sw;
    CommonFlags sw_common;
    auto* sweep = app.add_subcommand("sweep", "random DLN sweep comparing the estimate with the true learning coefficient");
    sweep->add_option("--tier", sw.tier, "1k | 10k | 100k | 1M | 10M | 100M");
    sweep->add_option("--runs", sw.runs);
    sweep->add_option("--evaluate_at", sw.evaluate_at, "true_param | sgd_param");
    sweep->add_option("--seed", sw.seed, "base seed; run i uses seed + i");
    sweep->add_option("--layers", sw.layers, "layer-count range lo,hi");
    sweep->add_option("--widths", sw.widths, "width range lo,hi");
    sweep->add_option("--epsilon", sw.epsilon);
    sweep->add_option("--steps", sw.steps);
    sweep->add_option("--n", sw.n);
    sweep->add_option("--batch_size", sw.batch_size);
    sweep->add_option("--chains", sw.chains);
    sweep->add_option("--gamma", sw.gamma);
    sweep->add_option("--burnin_frac", sw.burnin_frac);
    sweep->add_option("--mala_probe_stride", sw.mala_probe_stride);
    sweep->add_option("--probe_source", sw.probe_source, "auto | full | minibatch");
    sweep->add_option("--weight_scale", sw.weight_scale, "unit | fan_in");
    sweep->add_option("--input_range", sw.input_range);
    sweep->add_option("--truncate_prob", sw.truncate_prob);
    sweep->add_option("--learning_rate", sw.learning_rate, "SGD learning rate for sgd_param runs");
    sweep->add_option("--momentum", sw.momentum, "SGD momentum for sgd_param runs");
    sweep->add_option("--train_steps", sw.train_steps, "SGD steps for sgd_param runs");
    sw_common.add(sweep);

    // rescale-test
    std::string rs_alphas, rs_widths;
    std::size_t rs_layer = 0, rs_n = 2000;
    double rs_range = 1.0;
    std::uint64_t rs_seed = 0;
    bool rs_plain = false;
    SamplerFlags rs_flags;
    CommonFlags rs_common;
    auto* rescale = app.add_subcommand("rescale-test", "LLC estimates of a ReLU network under layer rescaling");
    rescale->add_option("--alphas", rs_alphas, "comma-separated rescaling factors (default 1e-4..1e4)");
    rescale->add_option("--widths", rs_widths, "MLP widths (default 5,10,2)");
    rescale->add_option("--layer", rs_layer, "first of the two rescaled layers (0-based)")->capture_default_str();
    rescale->add_option("--n", rs_n)->capture_default_str();
    rescale->add_option("--input_range", rs_range)->capture_default_str();
    rescale->add_option("--data_seed", rs_seed)->capture_default_str();
    rescale->add_flag("--no_precondition", rs_plain, "sample without the rescaling preconditioner");
    rs_flags.add(rescale);
    rs_common.add(rescale);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*theory) return cmd_theory(theory_widths, theory_rank);
        if (*depth) return cmd_depth_study(ds_widths, ds_depths, ds_draws, ds_seed, ds_common);
        if (*volume) return cmd_volume(vol_potential, vol_opt, vol_radius, vol_common);
        if (*free_energy) return cmd_free_energy(fe_potential, fe_ns, fe_radius, fe_common);
        if (*estimate) return cmd_estimate(est_target, est_flags, est_common);
        if (*tune) return cmd_tune(tune_target, tune_flags, tune_opt, tune_common);
        if (*train) return cmd_train(train_flags, train_common);
        if (*sweep) return cmd_sweep(sw, sw_common);
        if (*rescale) return cmd_rescale(rs_alphas, rs_widths, rs_layer, rs_n, rs_range, rs_seed, rs_plain, rs_flags, rs_common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
