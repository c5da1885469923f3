#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <filesystem>
#include <sstream>
#include <vector>

#include "llc/data/dataset.hpp"
#include "llc/models/checkpoint.hpp"
#include "llc/models/model.hpp"

using namespace llc;

namespace {

// Central differences of the batch loss.
std::vector<double> numeric_grad(const ModelSpec& spec, std::vector<double> w, const RowMatrix& x, const RowMatrix& y,
                                 double h = 1e-6) {
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double keep = w[i];
        w[i] = keep + h;
        const double up = nll_loss(spec, w, x, y);
        w[i] = keep - h;
        const double down = nll_loss(spec, w, x, y);
        w[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

void expect_grad_matches(const ModelSpec& spec, std::uint64_t seed, bool classification = false) {
    Rng rng(seed);
    const auto w = random_parameter(spec, rng, WeightScale::fan_in);
    RowMatrix x(7, static_cast<Eigen::Index>(spec.input_dim()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    RowMatrix y(7, static_cast<Eigen::Index>(spec.target_dim()));
    for (Eigen::Index i = 0; i < y.size(); ++i)
        y.data()[i] = classification ? static_cast<double>(rng.uniform_int(0, static_cast<std::int64_t>(spec.output_dim()) - 1)) : rng.normal();
    const auto exact = nll_grad(spec, w, x, y);
    const auto approx = numeric_grad(spec, w, x, y);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(exact[i], approx[i], 1e-6 * std::max(1.0, std::abs(approx[i]))) << "coordinate " << i;
}

}  // namespace

TEST(ModelSpec, ParameterCountsAndOffsets) {
    const auto dln = ModelSpec::dln({3, 4, 2});
    EXPECT_EQ(dln.param_count(), 3u * 4u + 4u * 2u);
    const auto mlp = ModelSpec::mlp({3, 4, 2});
    EXPECT_EQ(mlp.param_count(), 3u * 4u + 4u + 4u * 2u + 2u);
    EXPECT_EQ(mlp.weight_offset(1), 16u);
    EXPECT_EQ(mlp.bias_offset(0), 12u);
    EXPECT_THROW(ModelSpec::dln({3}), std::invalid_argument);
    EXPECT_THROW(ModelSpec::dln({3, 0, 2}), std::invalid_argument);
}

TEST(Forward, DlnIsMatrixProduct) {
    const auto spec = ModelSpec::dln({2, 3, 1});
    // W1 = [[1,2],[3,4],[5,6]], W2 = [[1,-1,2]]
    const std::vector<double> w{1, 2, 3, 4, 5, 6, 1, -1, 2};
    const std::vector<double> x{1, -1};
    // W1 x = (-1,-1,-1); W2 (W1 x) = -1 + 1 - 2 = -2
    EXPECT_DOUBLE_EQ(forward(spec, w, x)[0], -2.0);
}

TEST(Forward, MlpAppliesReluOnHiddenLayersOnly) {
    const auto spec = ModelSpec::mlp({1, 2, 1});
    // W1 = [1,-1]^T, b1 = (0,0), W2 = [1, 1], b2 = -3
    const std::vector<double> w{1, -1, 0, 0, 1, 1, -3};
    EXPECT_DOUBLE_EQ(forward(spec, w, std::vector<double>{2.0})[0], -1.0);   // relu(2)+relu(-2)-3
    EXPECT_DOUBLE_EQ(forward(spec, w, std::vector<double>{-5.0})[0], 2.0);   // relu(-5)+relu(5)-3
}

TEST(Loss, GaussianNllValue) {
    const auto spec = ModelSpec::dln({1, 1});
    const std::vector<double> w{2.0};
    RowMatrix x(2, 1), y(2, 1);
    x << 1, 2;
    y << 1, 5;
    // residuals 1, -1; mean 0.5*r^2 = 0.5; plus 0.5 log(2 pi)
    EXPECT_NEAR(nll_loss(spec, w, x, y), 0.5 + 0.5 * std::log(2.0 * std::numbers::pi), 1e-12);
}

TEST(Loss, CrossEntropyValue) {
    auto spec = ModelSpec::mlp({1, 2}, Task::classification);
    const std::vector<double> w{0, 0, 0, 0};
    RowMatrix x(1, 1), y(1, 1);
    x << 3;
    y << 1;
    EXPECT_NEAR(nll_loss(spec, w, x, y), std::log(2.0), 1e-12);
}

TEST(Gradient, DlnMatchesFiniteDifferences) { expect_grad_matches(ModelSpec::dln({3, 4, 5, 2}), 1); }
TEST(Gradient, MlpMatchesFiniteDifferences) { expect_grad_matches(ModelSpec::mlp({4, 6, 5, 3}), 2); }
TEST(Gradient, ClassifierMatchesFiniteDifferences) { expect_grad_matches(ModelSpec::mlp({3, 5, 4}, Task::classification), 3, true); }

TEST(Gradient, NoiseVarianceScalesResidualTerm) {
    auto spec = ModelSpec::dln({2, 2});
    spec.noise_variance = 4.0;
    expect_grad_matches(spec, 4);
}

TEST(Gradient, ChunkedMatchesSingleBatch) {
    const auto spec = ModelSpec::mlp({3, 4, 2});
    Rng rng(9);
    const auto w = random_parameter(spec, rng);
    RowMatrix x(50, 3), y(50, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = rng.normal();
    Evaluator ev(spec);
    std::vector<double> g1(w.size()), g2(w.size());
    const double l1 = ev.loss_grad(w, x, y, g1);
    const double l2 = ev.chunked_loss_grad(w, x, y, g2, 7);
    EXPECT_NEAR(l1, l2, 1e-12);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-12);
}

TEST(Rescale, FunctionIsInvariant) {
    const auto spec = ModelSpec::mlp({3, 5, 4, 2});
    Rng rng(11);
    const auto w = random_parameter(spec, rng);
    for (double alpha : {1e-3, 0.5, 7.0, 1e4}) {
        for (std::size_t layer : {0u, 1u}) {
            const auto ws = rescale_layers(spec, w, layer, alpha);
            for (int t = 0; t < 5; ++t) {
                const std::vector<double> x{rng.normal(), rng.normal(), rng.normal()};
                const auto a = forward(spec, w, x), b = forward(spec, ws, x);
                for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-9 * std::max(1.0, std::abs(a[k])));
            }
        }
    }
}

TEST(Rescale, TouchesOnlyTheTwoLayers) {
    const auto spec = ModelSpec::mlp({2, 3, 3, 1});
    std::vector<double> w(spec.param_count(), 1.0);
    const auto ws = rescale_layers(spec, w, 1, 2.0);
    for (std::size_t i = 0; i < spec.weight_offset(1); ++i) EXPECT_EQ(ws[i], 1.0);
    for (std::size_t i = spec.weight_offset(1); i < spec.weight_offset(2); ++i) EXPECT_EQ(ws[i], 0.5);
    for (std::size_t i = spec.weight_offset(2); i < spec.bias_offset(2); ++i) EXPECT_EQ(ws[i], 2.0);
    for (std::size_t i = spec.bias_offset(2); i < ws.size(); ++i) EXPECT_EQ(ws[i], 1.0);
    const auto a = rescale_preconditioner(spec, 1, 2.0);
    EXPECT_EQ(a[spec.weight_offset(1)], 0.25);
    EXPECT_EQ(a[spec.weight_offset(2)], 4.0);
    EXPECT_EQ(a[0], 1.0);
}

TEST(Rescale, RejectsInvalidArguments) {
    const auto spec = ModelSpec::mlp({2, 3, 1});
    std::vector<double> w(spec.param_count(), 1.0);
    EXPECT_THROW(rescale_layers(spec, w, 1, 2.0), std::invalid_argument);
    EXPECT_THROW(rescale_layers(spec, w, 0, -1.0), std::invalid_argument);
    EXPECT_THROW(rescale_layers(ModelSpec::dln({2, 3, 1}), w, 0, 2.0), std::invalid_argument);
}

TEST(Checkpoint, RoundTrip) {
    auto spec = ModelSpec::mlp({3, 4, 2}, Task::classification);
    Rng rng(3);
    const Checkpoint ck{spec, random_parameter(spec, rng)};
    std::stringstream ss;
    write_checkpoint(ss, ck);
    const auto back = read_checkpoint(ss);
    EXPECT_EQ(back.spec.widths, spec.widths);
    EXPECT_EQ(back.spec.kind, spec.kind);
    EXPECT_EQ(back.spec.task, spec.task);
    EXPECT_EQ(back.params, ck.params);
}

TEST(Checkpoint, SinglePrecisionRoundTripIsClose) {
    const auto spec = ModelSpec::dln({2, 2});
    const Checkpoint ck{spec, {0.1, -0.2, 0.3, 1e-3}};
    std::stringstream ss;
    write_checkpoint(ss, ck, 4);
    const auto back = read_checkpoint(ss);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(back.params[i], ck.params[i], 1e-7);
}

TEST(Checkpoint, RejectsCorruptInput) {
    std::stringstream bad("NOTACKPT........");
    EXPECT_THROW(read_checkpoint(bad), std::exception);
    const Checkpoint ck{ModelSpec::dln({2, 2}), {1, 2, 3, 4}};
    std::stringstream ss;
    write_checkpoint(ss, ck);
    std::string bytes = ss.str();
    bytes.resize(bytes.size() - 4);
    std::stringstream truncated(bytes);
    EXPECT_THROW(read_checkpoint(truncated), std::exception);
    EXPECT_THROW(load_checkpoint("/nonexistent/file.llck"), std::exception);
}
