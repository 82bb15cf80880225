#include "resmia/nn.h"

#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"
#include "resmia/errors.h"
#include "support/gradient_check.h"
#include "support/test_util.h"

namespace resmia {
namespace {

using testing::RandomImage;

Architecture LinearArch(ImageShape in, int classes) {
  return Architecture(in, {{LayerKind::kFlatten}, {LayerKind::kDense, classes}},
                      classes);
}

TEST(ArchitectureTest, DeskScaleShapes) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  ASSERT_EQ(arch.layers().size(), 7u);
  const auto& s = arch.activation_shapes();
  EXPECT_EQ(s[1], (ImageShape{8, 32, 32}));
  EXPECT_EQ(s[2], (ImageShape{8, 16, 16}));
  EXPECT_EQ(s[3], (ImageShape{16, 16, 16}));
  EXPECT_EQ(s[4], (ImageShape{16, 8, 8}));
  EXPECT_EQ(s[5], (ImageShape{1024, 1, 1}));
  EXPECT_EQ(s[6], (ImageShape{64, 1, 1}));
  EXPECT_EQ(s[7], (ImageShape{10, 1, 1}));
}

TEST(ArchitectureTest, RejectsInconsistentLayers) {
  EXPECT_THROW(Architecture({1, 4, 4}, {{LayerKind::kFlatten}, {LayerKind::kDense, 3}}, 2),
               ConfigError);
  EXPECT_THROW(Architecture({1, 4, 4}, {{LayerKind::kFlatten}, {LayerKind::kDenseRelu, 2}}, 2),
               ConfigError);
  EXPECT_THROW(Architecture({1, 4, 4}, {{LayerKind::kDense, 2}}, 2), ConfigError);
  EXPECT_THROW(Architecture({1, 3, 4}, {{LayerKind::kMaxPool2}, {LayerKind::kFlatten},
                                        {LayerKind::kDense, 2}}, 2),
               ConfigError);
  EXPECT_THROW(Architecture({1, 4, 4}, {{LayerKind::kFlatten}, {LayerKind::kConv3x3Relu, 2},
                                        {LayerKind::kDense, 2}}, 2),
               ConfigError);
  EXPECT_THROW(Architecture({1, 4, 4}, {}, 2), ConfigError);
}

TEST(LayerKindTest, NamesRoundTrip) {
  for (auto k : {LayerKind::kConv3x3Relu, LayerKind::kMaxPool2, LayerKind::kFlatten,
                 LayerKind::kDenseRelu, LayerKind::kDense}) {
    EXPECT_EQ(ParseLayerKind(LayerKindName(k)), k);
  }
  EXPECT_THROW(ParseLayerKind("conv5x5"), ConfigError);
}

TEST(InitParamsTest, GlorotRangeAndZeroBiases) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams p = InitParams(arch, 5);
  ASSERT_EQ(p.blocks.size(), 8u);
  const double conv1 = std::sqrt(6.0 / (3 * 9 + 8 * 9));
  for (float v : p.blocks[0].values) EXPECT_LE(std::abs(v), conv1);
  for (float v : p.blocks[1].values) EXPECT_EQ(v, 0.0f);
  const double dense2 = std::sqrt(6.0 / (64 + 10));
  for (float v : p.blocks[6].values) EXPECT_LE(std::abs(v), dense2);
  EXPECT_TRUE(p.AllFinite());
  EXPECT_NO_THROW(CheckParams(p, arch));
}

TEST(InitParamsTest, SameSeedSameParams) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams a = InitParams(arch, 9);
  const ModelParams b = InitParams(arch, 9);
  const ModelParams c = InitParams(arch, 10);
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    EXPECT_EQ(a.blocks[i].values, b.blocks[i].values);
  }
  EXPECT_NE(a.blocks[0].values, c.blocks[0].values);
}

TEST(ForwardTest, ZeroFinalLayerGivesUniformOutput) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  ModelParams p = InitParams(arch, 1);
  for (std::size_t b = p.blocks.size() - 2; b < p.blocks.size(); ++b) {
    std::fill(p.blocks[b].values.begin(), p.blocks[b].values.end(), 0.0f);
  }
  const ProbVector out = Forward(p, arch, RandomImage({3, 32, 32}, 2));
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_FLOAT_EQ(out[i], 0.1f);
}

TEST(ForwardTest, OutputsAreValidDistributions) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProbVector out = Forward(InitParams(arch, seed), arch, RandomImage({3, 32, 32}, seed));
    EXPECT_TRUE(out.IsValid(1e-5));
  }
}

TEST(ForwardTest, RepeatedCallsAreBitIdentical) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams p = InitParams(arch, 3);
  const ImageTensor img = RandomImage({3, 32, 32}, 3);
  EXPECT_EQ(Forward(p, arch, img), Forward(p, arch, img));
}

TEST(ForwardTest, RejectsWrongImageShape) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams p = InitParams(arch, 3);
  EXPECT_THROW(Forward(p, arch, RandomImage({1, 32, 32}, 1)), ShapeError);
}

TEST(ForwardTest, RejectsParamsOfAnotherArchitecture) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams other = InitParams(Architecture::DeskScale({3, 32, 32}, 5), 1);
  EXPECT_THROW(Forward(other, arch, RandomImage({3, 32, 32}, 1)), ShapeError);
}

TEST(SoftmaxTest, StableForLargeLogits) {
  const std::vector<double> logits = {1e4, -1e4, 0.0, 1e4 - 1.0};
  const auto p = Softmax<double>(logits);
  double sum = 0.0;
  for (double v : p) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  const std::vector<float> neg = {-1e4f, -1e4f};
  const auto q = Softmax<float>(neg);
  EXPECT_FLOAT_EQ(q[0], 0.5f);
}

TEST(SoftmaxTest, RandomLogitsGiveValidProbVectors) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(-1e4f, 1e4f);
  for (int t = 0; t < 200; ++t) {
    std::vector<float> z(10);
    for (float& v : z) v = u(rng);
    EXPECT_TRUE(ProbVector(Softmax<float>(z)).IsValid(1e-5));
  }
}

TEST(ProbVectorTest, ArgmaxPrefersLowestIndexOnTies) {
  EXPECT_EQ(ProbVector({0.2f, 0.4f, 0.4f}).Argmax(), 1);
  EXPECT_EQ(ProbVector({0.25f, 0.25f, 0.25f, 0.25f}).Argmax(), 0);
  EXPECT_FLOAT_EQ(ProbVector({0.2f, 0.5f, 0.3f}).Max(), 0.5f);
  EXPECT_FALSE(ProbVector({0.5f, 0.6f}).IsValid());
  EXPECT_FALSE(ProbVector({1.2f, -0.2f}).IsValid());
}

TEST(LossTest, UniformModelGivesLogClasses) {
  const Architecture arch = LinearArch({1, 4, 4}, 10);
  const ModelParams p = ZeroParams<float>(arch);
  const ImageTensor img = RandomImage({1, 4, 4}, 1);
  const BatchItem batch[] = {{&img, 3}, {&img, 7}};
  EXPECT_NEAR(LossAndGradients(p, arch, batch).loss, std::log(10.0), 1e-4);
}

TEST(LossTest, DuplicatedBatchGivesSameLossAndGradients) {
  const Architecture arch = Architecture(
      {2, 8, 8},
      {{LayerKind::kConv3x3Relu, 3}, {LayerKind::kMaxPool2}, {LayerKind::kFlatten},
       {LayerKind::kDenseRelu, 6}, {LayerKind::kDense, 4}},
      4);
  const auto p = CastParams<double>(InitParams(arch, 4));
  const ImageTensor a = RandomImage({2, 8, 8}, 1);
  const ImageTensor b = RandomImage({2, 8, 8}, 2);
  const BatchItem once[] = {{&a, 1}, {&b, 3}};
  const BatchItem twice[] = {{&a, 1}, {&b, 3}, {&a, 1}, {&b, 3}};
  const auto g1 = LossAndGradients(p, arch, once);
  const auto g2 = LossAndGradients(p, arch, twice);
  EXPECT_NEAR(g1.loss, g2.loss, 1e-12);
  for (std::size_t i = 0; i < g1.grads.blocks.size(); ++i) {
    for (std::size_t j = 0; j < g1.grads.blocks[i].values.size(); ++j) {
      ASSERT_NEAR(g1.grads.blocks[i].values[j], g2.grads.blocks[i].values[j], 1e-12);
    }
  }
}

TEST(LossTest, RejectsBadBatches) {
  const Architecture arch = LinearArch({1, 4, 4}, 3);
  const ModelParams p = ZeroParams<float>(arch);
  const ImageTensor img = RandomImage({1, 4, 4}, 1);
  const BatchItem bad[] = {{&img, 3}};
  EXPECT_THROW(LossAndGradients(p, arch, bad), ConfigError);
  const BatchItem negative[] = {{&img, -1}};
  EXPECT_THROW(LossAndGradients(p, arch, negative), ConfigError);
  EXPECT_THROW(LossAndGradients(p, arch, std::span<const BatchItem>()), ConfigError);
}

// Finite-difference checks; the shared driver lives in support/.

TEST(GradientTest, EveryLayerMatchesFiniteDifferences) {
  // A coordinate is skipped when a +-step perturbation moves any ReLU or
  // pool winner; coverage is then required across seeds, not per seed.
  constexpr int kSeeds = 20;
  int total = 0;
  int checked = 0;
  std::vector<int> seeds_with_block(testing::GradientCheckArch().layers().size() * 2, 0);
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const testing::GradientCheckResult r = testing::CheckGradients(
        testing::GradientCheckArch(), seed, 1e-3, 1e-3);
    EXPECT_EQ(r.failures, 0) << "seed " << seed << ": " << r.worst;
    total += r.total;
    checked += r.checked;
    seeds_with_block.resize(r.checked_per_block.size());
    for (std::size_t b = 0; b < r.checked_per_block.size(); ++b) {
      seeds_with_block[b] += r.checked_per_block[b] > 0;
    }
  }
  EXPECT_GE(checked, total * 8 / 10);
  for (std::size_t b = 0; b < seeds_with_block.size(); ++b) {
    EXPECT_GE(seeds_with_block[b], kSeeds / 2) << "block " << b;
  }
}

TEST(GradientTest, DeskScaleSpotCheck) {
  const testing::GradientCheckResult r = testing::CheckGradients(
      Architecture::DeskScale({3, 8, 8}, 4), 77, 1e-3, 1e-3);
  EXPECT_EQ(r.failures, 0) << r.worst;
  EXPECT_GT(r.checked, 0);
}

TEST(SgdStepTest, ScalarCase) {
  ModelParams p{{{{1}, {1.0f}}}};
  ModelParams g{{{{1}, {0.5f}}}};
  EXPECT_FLOAT_EQ(SgdStep(p, g, 0.1f).blocks[0].values[0], 0.95f);
}

TEST(SgdStepTest, ZeroRateOrZeroGradientKeepsParams) {
  const Architecture arch = Architecture::DeskScale({3, 32, 32}, 10);
  const ModelParams p = InitParams(arch, 1);
  const ModelParams g = InitParams(arch, 2);
  const ModelParams zero = ZeroParams<float>(arch);
  const ModelParams a = SgdStep(p, g, 0.0f);
  const ModelParams b = SgdStep(p, zero, 0.5f);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    EXPECT_EQ(a.blocks[i].values, p.blocks[i].values);
    EXPECT_EQ(b.blocks[i].values, p.blocks[i].values);
  }
}

TEST(SgdStepTest, RejectsMismatchedShapes) {
  ModelParams p{{{{2}, {1.0f, 2.0f}}}};
  ModelParams g{{{{1}, {0.5f}}}};
  EXPECT_THROW(SgdStep(p, g, 0.1f), ShapeError);
}

TEST(TrainingTest, SeparableToySetReachesFullAccuracy) {
  const ImageShape shape{1, 4, 4};
  const Architecture arch = LinearArch(shape, 2);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0.0f, 0.4f);
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    std::vector<float> d(shape.size());
    const int label = i % 2;
    for (float& v : d) v = u(rng) + (label == 1 ? 0.6f : 0.0f);
    images.emplace_back(shape, d);
    labels.push_back(label);
  }
  std::vector<BatchItem> batch;
  for (std::size_t i = 0; i < images.size(); ++i) batch.push_back({&images[i], labels[i]});
  ModelParams p = InitParams(arch, 1);
  for (int step = 0; step < 200; ++step) {
    ApplySgdStep(p, LossAndGradients(p, arch, batch).grads, 0.1f);
  }
  int correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    correct += Forward(p, arch, images[i]).Argmax() == labels[i];
  }
  EXPECT_EQ(correct, 20);
}

TEST(ActivationSignatureTest, StableUnderTinyPerturbation) {
  const Architecture arch = testing::GradientCheckArch();
  const auto p = CastParams<double>(InitParams(arch, 1));
  const ImageTensor img = RandomImage(arch.input(), 1);
  EXPECT_EQ(ActivationSignature(p, arch, img), ActivationSignature(p, arch, img));
  EXPECT_FALSE(ActivationSignature(p, arch, img).empty());
}

}  // namespace
}  // namespace resmia
