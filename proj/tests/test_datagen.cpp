#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <vector>

#include "llc/data/dataset.hpp"

using namespace llc;

TEST(Realizable, TargetsAreNoiselessModelOutputs) {
    const auto spec = ModelSpec::mlp({3, 4, 2});
    Rng rng(1);
    const auto w = random_parameter(spec, rng);
    const auto data = gen_realizable(spec, w, 20, rng, 2.0);
    ASSERT_EQ(data.size(), 20u);
    for (Eigen::Index i = 0; i < 20; ++i) {
        const std::vector<double> x(data.inputs.row(i).data(), data.inputs.row(i).data() + 3);
        for (double v : x) {
            EXPECT_GE(v, -2.0);
            EXPECT_LE(v, 2.0);
        }
        const auto y = forward(spec, w, x);
        EXPECT_NEAR(y[0], data.targets(i, 0), 1e-12);
        EXPECT_NEAR(y[1], data.targets(i, 1), 1e-12);
    }
    // The true parameter sits at the loss floor.
    EXPECT_NEAR(nll_loss(spec, w, data.inputs, data.targets), spec.loss_floor(), 1e-12);
}

TEST(Realizable, ClassificationTargetsAreArgmax) {
    const auto spec = ModelSpec::mlp({2, 5, 3}, Task::classification);
    Rng rng(2);
    const auto w = random_parameter(spec, rng);
    const auto data = gen_realizable(spec, w, 30, rng, 1.0);
    for (Eigen::Index i = 0; i < 30; ++i) {
        const auto y = forward(spec, w, std::vector<double>{data.inputs(i, 0), data.inputs(i, 1)});
        const auto arg = std::max_element(y.begin(), y.end()) - y.begin();
        EXPECT_EQ(static_cast<double>(arg), data.targets(i, 0));
    }
}

TEST(Realizable, SameSeedSameData) {
    const auto spec = ModelSpec::dln({2, 2});
    const std::vector<double> w{1, 0, 0, 1};
    Rng a(5), b(5);
    EXPECT_EQ(gen_realizable(spec, w, 10, a).inputs, gen_realizable(spec, w, 10, b).inputs);
}

TEST(Realizable, RejectsBadArguments) {
    const auto spec = ModelSpec::dln({2, 2});
    Rng rng(0);
    EXPECT_THROW(gen_realizable(spec, std::vector<double>{1, 2, 3}, 10, rng), std::invalid_argument);
    EXPECT_THROW(gen_realizable(spec, std::vector<double>{1, 0, 0, 1}, 0, rng), std::invalid_argument);
    EXPECT_THROW(gen_realizable(spec, std::vector<double>{1, 0, 0, 1}, 5, rng, 0.0), std::invalid_argument);
}

TEST(TrueDln, TruncatedLayersHaveRequestedRank) {
    const auto spec = ModelSpec::dln({6, 7, 5, 6});
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const auto truth = random_true_dln(spec, rng, WeightScale::unit, 1.0);
        ASSERT_EQ(truth.layer_ranks.size(), 3u);
        std::size_t min_rank = 99;
        for (std::size_t j = 0; j < 3; ++j) {
            const auto W = layer_weight(spec, std::span<const double>(truth.params), j);
            const Eigen::MatrixXd M = W;
            const auto r = M.isZero(0.0) ? 0 : static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(M).rank());
            EXPECT_EQ(r, truth.layer_ranks[j]);
            min_rank = std::min(min_rank, r);
        }
        EXPECT_LE(dln_rank(spec, truth.params), min_rank);
    }
}

TEST(TrueDln, NoTruncationGivesFullRank) {
    const auto spec = ModelSpec::dln({4, 6, 3});
    Rng rng(3);
    const auto truth = random_true_dln(spec, rng, WeightScale::unit, 0.0);
    EXPECT_EQ(truth.layer_ranks, (std::vector<std::size_t>{4, 3}));
    EXPECT_EQ(dln_rank(spec, truth.params), 3u);
}

TEST(TrueDln, RankOfKnownProduct) {
    const auto spec = ModelSpec::dln({2, 2, 2});
    // W1 = diag(1, 0), W2 = identity -> rank 1; zero matrix -> rank 0
    EXPECT_EQ(dln_rank(spec, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 1}), 1u);
    EXPECT_EQ(dln_rank(spec, std::vector<double>(8, 0.0)), 0u);
}

TEST(Minibatch, EpochCoversEveryRowExactlyOnce) {
    for (std::size_t batch : {1u, 7u, 10u, 33u}) {
        Rng rng(batch);
        MinibatchSchedule s(33, batch, rng);
        std::vector<int> seen(33, 0);
        for (std::size_t b = 0; b < s.batches_per_epoch(); ++b)
            for (auto i : s.next_batch()) seen[i]++;
        for (int c : seen) EXPECT_EQ(c, 1) << "batch " << batch;
        // The second epoch repeats the same permutation.
        std::vector<std::size_t> again;
        for (std::size_t b = 0; b < s.batches_per_epoch(); ++b)
            for (auto i : s.next_batch()) again.push_back(i);
        EXPECT_TRUE(std::equal(again.begin(), again.end(), s.permutation().begin()));
    }
}

TEST(Minibatch, ShortFinalBatch) {
    Rng rng(0);
    MinibatchSchedule s(10, 4, rng);
    EXPECT_EQ(s.next_batch().size(), 4u);
    EXPECT_EQ(s.next_batch().size(), 4u);
    EXPECT_EQ(s.next_batch().size(), 2u);
    EXPECT_EQ(s.next_batch().size(), 4u);
}

TEST(Minibatch, RejectsBadBatchSize) {
    Rng rng(0);
    EXPECT_THROW(MinibatchSchedule(10, 0, rng), std::invalid_argument);
    EXPECT_THROW(MinibatchSchedule(10, 11, rng), std::invalid_argument);
    EXPECT_THROW(MinibatchSchedule(0, 1, rng), std::invalid_argument);
}

TEST(DatasetFile, RoundTrip) {
    const auto spec = ModelSpec::mlp({3, 2}, Task::classification);
    Rng rng(4);
    const auto w = random_parameter(spec, rng);
    const auto data = gen_realizable(spec, w, 15, rng);
    std::stringstream ss;
    write_dataset(ss, data);
    const auto back = read_dataset(ss);
    EXPECT_EQ(back.inputs, data.inputs);
    EXPECT_EQ(back.targets, data.targets);
    EXPECT_EQ(back.task, data.task);
}

TEST(DatasetFile, RejectsWrongMagic) {
    std::stringstream ss("LLCCKPT1 and more bytes");
    EXPECT_THROW(read_dataset(ss), std::exception);
}
