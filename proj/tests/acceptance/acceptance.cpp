// Acceptance suite: one PASS/FAIL line per criterion.
//
//   llc_acceptance            quick mode (reduced sweep run counts)
//   llc_acceptance --full     full run counts
//   llc_acceptance --only 3,5

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/estimator/llc.hpp"
#include "llc/estimator/tune.hpp"
#include "llc/experiment/config_file.hpp"
#include "llc/experiment/rescale.hpp"
#include "llc/experiment/sweep.hpp"
#include "llc/models/model.hpp"
#include "llc/numerics/stats.hpp"
#include "llc/theory/dln.hpp"
#include "llc/theory/free_energy.hpp"
#include "llc/theory/potential.hpp"
#include "llc/theory/volume.hpp"
#include "support/dln_oracle.hpp"

using namespace llc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Options {
    bool full = false;
};

// ---------------------------------------------------------------- 1 and 2

Outcome sweep_check(const std::vector<SweepConfig>& configs) {
    Outcome out{true, ""};
    for (const auto& cfg : configs) {
        const auto rows = run_sweep(cfg);
        const auto s = summarize(rows);
        const bool ok = s.median_rel_error <= 0.15 && s.p90_rel_error <= 0.35 && s.diverged_fraction() <= 0.10;
        out.pass = out.pass && ok;
        out.detail += fmt("[%s%s: runs=%zu estimated=%zu failed=%zu diverged=%.0f%% median=%.3g p90=%.3g] ", cfg.tier.name.c_str(),
                          cfg.evaluate_at == EvaluateAt::sgd_param ? "/sgd" : "", s.runs, s.estimated, s.failed,
                          100.0 * s.diverged_fraction(), s.median_rel_error, s.p90_rel_error);
    }
    return out;
}

Outcome criterion1(const Options& o) {
    SweepConfig a;
    a.tier = sweep_tier("1k");
    a.tier.runs = o.full ? 99 : 8;
    SweepConfig b;
    b.tier = sweep_tier("10k");
    b.tier.runs = o.full ? 50 : 4;
    return sweep_check({a, b});
}

Outcome criterion2(const Options& o) {
    SweepConfig a;
    a.tier = sweep_tier("1k");
    a.tier.runs = o.full ? 30 : 4;
    a.evaluate_at = EvaluateAt::sgd_param;
    a.train = TrainConfig{0.01, 0.9, 500, 50'000, 0};
    return sweep_check({a});
}

// ---------------------------------------------------------------- 3

Outcome criterion3(const Options&) {
    struct Case {
        const char* name;
        double lambda;
        int m;  // 0: any
    };
    Outcome out{true, ""};
    for (const Case c : {Case{"quad2d", 1.0, 0}, Case{"w2w4", 0.25, 0}, Case{"w2w2", 0.5, 2}}) {
        VolumeGridOptions opt;
        opt.samples = 1'000'000;
        const auto vs = volume_scaling(potential_by_name(c.name), opt);
        const bool ok = std::abs(vs.fit.lambda - c.lambda) <= 0.05 && (c.m == 0 || vs.fit.multiplicity == c.m);
        out.pass = out.pass && ok;
        out.detail += fmt("%s lambda=%.3f m=%d; ", c.name, vs.fit.lambda, vs.fit.multiplicity);
    }
    return out;
}

// ---------------------------------------------------------------- 4

Outcome criterion4(const Options&) {
    struct Case {
        const char* name;
        double epsilon;
        bool quadratic;
    };
    constexpr std::size_t n = 1'000'000;
    Outcome out{true, ""};
    for (const Case c : {Case{"quad1d", 2e-7, true}, Case{"quad2d", 2e-7, true}, Case{"w2w4", 1e-4, false}}) {
        const auto p = potential_by_name(c.name);
        SamplerConfig cfg;
        cfg.epsilon = c.epsilon;
        cfg.steps = 100'000;
        cfg.chains = 8;
        cfg.batch_size = 1;
        cfg.seed = 11;
        cfg.mala_probe_stride = 0;
        const auto est = estimate_llc(PotentialObjective(p, n), p.minimum, cfg);
        const double ideal = idealized_llc(p, static_cast<double>(n));
        bool ok = std::abs(est.lambda_hat - ideal) < 0.1;
        if (c.quadratic) ok = ok && std::abs(est.lambda_hat - *p.lambda) < 0.1 && std::abs(ideal - *p.lambda) < 0.1;
        out.pass = out.pass && ok;
        out.detail += fmt("%s sgld=%.3f+-%.3f ideal=%.3f; ", c.name, est.lambda_hat, est.std_error, ideal);
    }
    return out;
}

// ---------------------------------------------------------------- 5

// Mean post-burn-in loss over all chains. The standard error comes from 20
// batch means per chain pooled across chains; 8 chain means alone give an
// error estimate with only 7 degrees of freedom.
MeanStderr pooled_loss_mean(const std::vector<ChainTrace>& traces, double burnin_frac) {
    constexpr std::size_t batches = 20;
    std::vector<double> means;
    for (const auto& tr : traces) {
        if (tr.diverged) throw std::runtime_error("a chain diverged");
        const auto start = static_cast<std::size_t>(burnin_frac * static_cast<double>(tr.losses.size()));
        const std::size_t len = (tr.losses.size() - start) / batches;
        for (std::size_t b = 0; b < batches; ++b) {
            double s = 0.0;
            for (std::size_t t = start + b * len; t < start + (b + 1) * len; ++t) s += tr.losses[t];
            means.push_back(s / static_cast<double>(len));
        }
    }
    return mean_and_stderr(means);
}

Outcome criterion5(const Options&) {
    constexpr std::size_t n = 1000;
    const auto p = potential_by_name("quad2d");
    const PotentialObjective obj(p, n);
    SamplerConfig cfg;
    cfg.gamma = 1.0;
    cfg.chains = 8;
    cfg.batch_size = 1;
    cfg.burnin_frac = 0.1;
    cfg.mala_probe_stride = 0;
    cfg.seed = 5;
    const double nb = static_cast<double>(n) * cfg.resolved_beta(n);
    const double expected = static_cast<double>(p.dim) / (2.0 * (nb + cfg.gamma));

    SamplerConfig sgld = cfg;
    sgld.epsilon = 1e-5;
    sgld.steps = 400'000;
    const auto s = pooled_loss_mean(run_chains(obj, p.minimum, sgld, SamplerKind::sgld), sgld.burnin_frac);

    const auto tuned = tune_step_size(obj, p.minimum, cfg);
    SamplerConfig mala = cfg;
    mala.epsilon = tuned.epsilon;
    mala.steps = 100'000;
    const auto traces = run_chains(obj, p.minimum, mala, SamplerKind::mala);
    const auto m = pooled_loss_mean(traces, mala.burnin_frac);
    std::vector<double> acc;
    for (const auto& tr : traces) acc.push_back(tr.mean_accept());
    const double accept = mean_and_stderr(acc).mean;

    const bool ok_s = std::abs(s.mean - expected) <= 3.0 * s.std_error;
    const bool ok_m = std::abs(m.mean - expected) <= 3.0 * m.std_error;
    const bool ok_a = accept >= 0.90 && accept <= 0.95;
    return {ok_s && ok_m && ok_a,
            fmt("E[L]=%.6g sgld=%.6g+-%.2g mala=%.6g+-%.2g tuned eps=%.3g accept=%.3f", expected, s.mean, s.std_error, m.mean,
                m.std_error, tuned.epsilon, accept)};
}

// ---------------------------------------------------------------- 6

Outcome criterion6(const Options&) {
    const auto spec = ModelSpec::mlp({10, 20, 20, 10});
    Rng rng(0);
    const auto w = random_parameter(spec, rng, WeightScale::fan_in);
    SamplerConfig cfg;
    cfg.epsilon = 1e-5;
    cfg.steps = 10'000;
    cfg.batch_size = 32;
    cfg.chains = 4;
    cfg.gamma = 1.0;
    cfg.mala_probe_stride = 0;
    Outcome out{true, ""};
    for (std::size_t n : {100, 1000, 10000}) {
        Rng data_rng = Rng(1).derive(n);
        const auto data = std::make_shared<const Dataset>(gen_realizable(spec, w, n, data_rng, 1.0));
        const ModelObjective obj(spec, data);
        std::vector<ChainTrace> ts, tm;
        const auto es = estimate_llc(obj, w, cfg, SamplerKind::sgld, &ts);
        const auto em = estimate_llc(obj, w, cfg, SamplerKind::mala, &tm);
        double secs_s = 0.0, secs_m = 0.0;
        for (const auto& t : ts) secs_s += t.seconds;
        for (const auto& t : tm) secs_m += t.seconds;
        const double pooled = std::hypot(es.std_error, em.std_error);
        bool ok = std::abs(es.lambda_hat - em.lambda_hat) < 2.0 * pooled;
        if (n == 10000) ok = ok && secs_s < secs_m;
        out.pass = out.pass && ok;
        out.detail += fmt("n=%zu sgld=%.1f+-%.1f (%.0fs) mala=%.1f+-%.1f (%.0fs, accept %.3f); ", n, es.lambda_hat, es.std_error,
                          secs_s, em.lambda_hat, em.std_error, secs_m, em.mean_accept);
    }
    return out;
}

// ---------------------------------------------------------------- 7

Outcome criterion7(const Options&) {
    const RescaleConfig cfg;
    const auto rows = run_rescale_test(cfg);
    const auto s = summarize(rows);
    std::string per;
    for (const auto& r : rows) per += fmt("%g:%.2f ", r.alpha, r.lambda_hat);
    return {s.failed == 0 && s.spread < 3.0 * s.pooled_stderr,
            fmt("spread=%.3g pooled stderr=%.3g failed=%zu [", s.spread, s.pooled_stderr, s.failed) + per + "]"};
}

// ---------------------------------------------------------------- 8

Outcome criterion8(const Options&) {
    std::size_t exhaustive = 0, mismatches = 0;
    for (std::size_t len = 2; len <= 6; ++len) {
        const std::size_t hi = len <= 4 ? 6 : 4;
        std::vector<std::size_t> w(len, 1);
        while (true) {
            const auto min_w = *std::min_element(w.begin(), w.end());
            for (std::size_t r = 0; r <= min_w; ++r) {
                const auto brute = llc_test::brute_force_lambda(w, r);
                if (brute.admissible != 1 || std::abs(dln_lambda(w, r).lambda - brute.lambda) > 1e-9) ++mismatches;
                ++exhaustive;
            }
            std::size_t k = 0;
            while (k < len && w[k] == hi) w[k++] = 1;
            if (k == len) break;
            ++w[k];
        }
    }

    // Regular case: a single full-rank linear layer.
    std::size_t regular_bad = 0;
    for (std::size_t a = 1; a <= 20; ++a)
        for (std::size_t b = 1; b <= 20; ++b) {
            const std::vector<std::size_t> w{a, b};
            const auto sig = dln_lambda(w, std::min(a, b));
            if (std::abs(sig.lambda - static_cast<double>(sig.param_count()) / 2.0) > 1e-9) ++regular_bad;
        }

    const bool ex1 = dln_lambda(std::vector<std::size_t>{1, 1, 1}, 0).lambda == 0.5;
    const bool ex2 = dln_lambda(std::vector<std::size_t>{2, 1, 2}, 1).lambda == 1.5;

    Rng rng(8);
    std::size_t above = 0;
    for (const auto& row : dln_depth_study(1, 20, 1, 10, 1000, rng))
        if (row.lambda > static_cast<double>(row.params) / 2.0 + 1e-9) ++above;

    return {mismatches == 0 && regular_bad == 0 && ex1 && ex2 && above == 0,
            fmt("exhaustive %zu signatures, %zu mismatches; regular mismatches %zu; examples %s; random above d/2: %zu/1000",
                exhaustive, mismatches, regular_bad, ex1 && ex2 ? "ok" : "wrong", above)};
}

// ---------------------------------------------------------------- 9

double max_fd_error(const ModelSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    const auto w = random_parameter(spec, rng, WeightScale::fan_in);
    const auto data = gen_realizable(spec, random_parameter(spec, rng, WeightScale::fan_in), 20, rng, 1.0);
    const auto g = nll_grad(spec, w, data.inputs, data.targets);
    double worst = 0.0;
    auto wp = w;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double h = 1e-6;
        wp[i] = w[i] + h;
        const double up = nll_loss(spec, wp, data.inputs, data.targets);
        wp[i] = w[i] - h;
        const double down = nll_loss(spec, wp, data.inputs, data.targets);
        wp[i] = w[i];
        worst = std::max(worst, std::abs((up - down) / (2 * h) - g[i]) / std::max(1.0, std::abs(g[i])));
    }
    return worst;
}

Outcome criterion9(const Options&) {
    std::vector<std::string> failed;

    // Finite-difference gradients; the perturbed weights move off ReLU kinks.
    const double fd = std::max(max_fd_error(ModelSpec::dln({3, 4, 2}), 1), max_fd_error(ModelSpec::mlp({3, 5, 4, 2}), 2));
    if (fd > 1e-6) failed.push_back("gradients");

    // Determinism by seed.
    const auto spec = ModelSpec::mlp({3, 6, 2});
    Rng r1(4), r2(4);
    const auto w1 = random_parameter(spec, r1), w2 = random_parameter(spec, r2);
    const auto d1 = gen_realizable(spec, w1, 200, r1, 1.0), d2 = gen_realizable(spec, w2, 200, r2, 1.0);
    const ModelObjective obj(spec, std::make_shared<const Dataset>(d1));
    SamplerConfig cfg;
    cfg.epsilon = 1e-4;
    cfg.steps = 500;
    cfg.batch_size = 20;
    cfg.chains = 2;
    cfg.seed = 9;
    const auto a = run_chains(obj, w1, cfg, SamplerKind::sgld), b = run_chains(obj, w1, cfg, SamplerKind::sgld);
    bool same = w1 == w2 && d1.inputs == d2.inputs && d1.targets == d2.targets;
    for (std::size_t c = 0; c < a.size(); ++c) same = same && a[c].losses == b[c].losses && a[c].final_params == b[c].final_params;
    if (!same) failed.push_back("determinism");

    // Every row exactly once per epoch, including a short final batch.
    Rng sr(5);
    MinibatchSchedule sched(103, 10, sr);
    std::vector<int> seen(103, 0);
    for (std::size_t k = 0; k < sched.batches_per_epoch(); ++k)
        for (auto i : sched.next_batch()) ++seen[i];
    if (std::any_of(seen.begin(), seen.end(), [](int v) { return v != 1; })) failed.push_back("epoch coverage");

    // Rescaling leaves the network function unchanged.
    double rescale_err = 0.0;
    for (double alpha : {1e-4, 0.3, 7.0, 1e4}) {
        const auto wa = rescale_layers(spec, w1, 0, alpha);
        for (Eigen::Index i = 0; i < 20; ++i) {
            const std::span<const double> x(d1.inputs.row(i).data(), spec.input_dim());
            const auto y0 = forward(spec, w1, x), ya = forward(spec, wa, x);
            for (std::size_t k = 0; k < y0.size(); ++k)
                rescale_err = std::max(rescale_err, std::abs(y0[k] - ya[k]) / std::max(1.0, std::abs(y0[k])));
        }
    }
    if (rescale_err > 1e-9) failed.push_back("rescale invariance");

    // lambda_hat = n beta (mean tail loss - L_n(w*)), recomputed by hand.
    std::vector<ChainTrace> traces;
    const auto est = estimate_llc(obj, w1, cfg, SamplerKind::sgld, &traces);
    ModelObjective probe = obj;
    const double l0 = probe.full_loss(w1);
    const double nb = 200.0 / std::log(200.0);
    double by_hand = 0.0;
    for (const auto& tr : traces) {
        double s = 0.0;
        for (std::size_t t = 450; t < 500; ++t) s += tr.losses[t];
        by_hand += nb * (s / 50.0 - l0) / static_cast<double>(traces.size());
    }
    if (std::abs(by_hand - est.lambda_hat) > 1e-9 * std::max(1.0, std::abs(by_hand))) failed.push_back("lambda identity");

    std::string detail = fmt("max fd error %.2g, max rescale error %.2g", fd, rescale_err);
    for (const auto& f : failed) detail += "; failed: " + f;
    return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLC acceptance suite"};
    Options opt;
    std::string only;
    app.add_flag("--full", opt.full, "full sweep run counts for criteria 1 and 2");
    app.add_option("--only", only, "comma-separated criterion numbers");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<const char*, std::function<Outcome(const Options&)>>> criteria{
        {"DLN sweep accuracy at the true parameter", criterion1},
        {"DLN sweep accuracy at SGD-found parameters", criterion2},
        {"volume scaling of analytic potentials", criterion3},
        {"idealized LLC against SGLD at n = 1e6", criterion4},
        {"Gaussian Gibbs expectation and tuned MALA acceptance", criterion5},
        {"MALA and SGLD agreement on a ReLU network", criterion6},
        {"rescaling invariance with preconditioned SGLD", criterion7},
        {"theory oracle self-consistency", criterion8},
        {"property suite", criterion9},
    };
    std::set<std::size_t> selected;
    try {
        for (auto k : parse_size_list(only)) selected.insert(k);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "--only: %s\n", e.what());
        return 2;
    }

    std::printf("acceptance mode: %s\n", opt.full ? "full" : "quick");
    std::size_t passed = 0, ran = 0;
    for (std::size_t k = 1; k <= criteria.size(); ++k) {
        if (!selected.empty() && !selected.count(k)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[k - 1].second(opt);
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %zu (%s): %s [%.0fs]\n", out.pass ? "PASS" : "FAIL", k, criteria[k - 1].first,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        ++ran;
        passed += out.pass;
    }
    std::printf("acceptance summary: %zu/%zu passed\n", passed, ran);
    return 0;
}
