#include "pak/scorer.hpp"

#include "pak/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

using namespace pak;

namespace {

VecX random_scores(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  VecX v(n);
  for (int i = 0; i < n; ++i) v[i] = unit(rng);
  return v;
}

// O(P*N) pairwise comparison oracle with half credit for ties.
Scalar pairwise_auc(const VecX& scores, const std::vector<int>& labels) {
  Scalar wins = 0;
  std::int64_t pairs = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (labels[static_cast<std::size_t>(i)] != 1) continue;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (labels[static_cast<std::size_t>(j)] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<Scalar>(pairs);
}

}  // namespace

TEST(WindowScore, IdenticalTensorsScoreZero) {
  const MatX x = MatX::Random(24, 2);
  EXPECT_EQ(window_score(x, x), 0.0);
}

TEST(WindowScore, SingleJointL1) {
  MatX pred = MatX::Zero(4, 2), target = MatX::Zero(4, 2);
  pred(2, 0) = 0.5;
  pred(2, 1) = -0.5;
  EXPECT_DOUBLE_EQ(window_score(pred, target), 1.0);
}

TEST(WindowScore, MatchesElementWiseOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    MatX a(12, 2), b(12, 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = gauss(rng);
      b.data()[i] = gauss(rng);
    }
    Scalar expected = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      expected += std::abs(a(i, 0) - b(i, 0)) + std::abs(a(i, 1) - b(i, 1));
    EXPECT_NEAR(window_score(a, b), expected, 1e-9);
  }
}

TEST(WindowScore, SymmetricNonNegativeTriangle) {
  std::mt19937_64 rng(4);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    MatX a(6, 2), b(6, 2), c(6, 2);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = gauss(rng);
      b.data()[i] = gauss(rng);
      c.data()[i] = gauss(rng);
    }
    EXPECT_EQ(window_score(a, b), window_score(b, a));
    EXPECT_GE(window_score(a, b), 0.0);
    EXPECT_LE(window_score(a, c),
              window_score(a, b) + window_score(b, c) + 1e-12);
  }
}

TEST(WindowScore, NanIsNumericError) {
  MatX a = MatX::Zero(2, 2), b = MatX::Zero(2, 2);
  a(0, 0) = std::nan("");
  EXPECT_THROW(window_score(a, b), NumericError);
}

TEST(FrameScores, SingleWindowCoversItsSpan) {
  std::vector<int> frames;
  for (int f = 0; f <= 15; ++f) frames.push_back(f);
  const VecX scores = frame_scores({{1, frames, 3.0}}, 20);
  for (int f = 0; f <= 15; ++f) EXPECT_EQ(scores[f], 3.0);
  for (int f = 16; f < 20; ++f) EXPECT_EQ(scores[f], 0.0);
}

TEST(FrameScores, MaxOverPersons) {
  const VecX scores = frame_scores({{1, {7}, 2.0}, {2, {7}, 5.0}}, 10);
  EXPECT_EQ(scores[7], 5.0);
}

TEST(FrameScores, MeanOverOnePersonsWindowsThenMax) {
  // Frame 9 covered by two windows of the same person: mean(2, 4) = 3.
  const VecX scores = frame_scores({{1, {9}, 2.0}, {1, {9}, 4.0}}, 10);
  EXPECT_DOUBLE_EQ(scores[9], 3.0);
}

TEST(FrameScores, AddingAPersonNeverDecreasesScores) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  std::vector<WindowScoreRecord> records;
  for (int p = 1; p <= 4; ++p) {
    std::vector<int> frames;
    for (int f = 0; f < 30; ++f)
      if (unit(rng) < 0.5) frames.push_back(f);
    records.push_back({p, frames, unit(rng)});
    // Score with p persons, then with p+1: monotone per frame.
    if (p >= 2) {
      std::vector<WindowScoreRecord> fewer(records.begin(), records.end() - 1);
      const VecX with_fewer = frame_scores(fewer, 30);
      const VecX with_all = frame_scores(records, 30);
      for (int f = 0; f < 30; ++f) EXPECT_GE(with_all[f], with_fewer[f]);
    }
  }
}

TEST(FrameScores, UncoveredFramesAreZero) {
  EXPECT_EQ(frame_scores({}, 5).norm(), 0.0);
}

TEST(NormalizePerScene, MinMaxWithinScene) {
  std::vector<ScoreSeries> series(1);
  series[0].scene_id = "01";
  series[0].video_id = "01_0001";
  series[0].frame_scores = VecX(3);
  series[0].frame_scores << 1, 3, 5;
  normalize_per_scene(series);
  EXPECT_EQ(series[0].frame_scores[0], 0.0);
  EXPECT_EQ(series[0].frame_scores[1], 0.5);
  EXPECT_EQ(series[0].frame_scores[2], 1.0);
  EXPECT_TRUE(series[0].normalized);
}

TEST(NormalizePerScene, ConstantSceneMapsToZeros) {
  std::vector<ScoreSeries> series(1);
  series[0].scene_id = "01";
  series[0].frame_scores = VecX::Constant(2, 4.0);
  normalize_per_scene(series);
  EXPECT_EQ(series[0].frame_scores.norm(), 0.0);
}

TEST(NormalizePerScene, ScenesNormalizeIndependently) {
  std::vector<ScoreSeries> series(2);
  series[0].scene_id = "01";
  series[0].frame_scores = VecX(2);
  series[0].frame_scores << 0.0, 10.0;
  series[1].scene_id = "02";
  series[1].frame_scores = VecX(2);
  series[1].frame_scores << 100.0, 200.0;
  normalize_per_scene(series);
  // Raw cross-scene ordering is not preserved: 10 -> 1.0, 100 -> 0.0.
  EXPECT_EQ(series[0].frame_scores[1], 1.0);
  EXPECT_EQ(series[1].frame_scores[0], 0.0);
  EXPECT_EQ(series[1].frame_scores[1], 1.0);
}

TEST(NormalizePerScene, SharedSceneNormalizesJointly) {
  std::vector<ScoreSeries> series(2);
  series[0].scene_id = "01";
  series[0].frame_scores = VecX::Constant(1, 2.0);
  series[1].scene_id = "01";
  series[1].frame_scores = VecX::Constant(1, 6.0);
  normalize_per_scene(series);
  EXPECT_EQ(series[0].frame_scores[0], 0.0);
  EXPECT_EQ(series[1].frame_scores[0], 1.0);
}

TEST(Auc, PerfectSeparation) {
  VecX scores(4);
  scores << 0.9, 0.8, 0.1, 0.2;
  EXPECT_EQ(auc(scores, {1, 1, 0, 0}), 1.0);
  EXPECT_EQ(auc(scores, {0, 0, 1, 1}), 0.0);
}

TEST(Auc, TiesCountHalf) {
  VecX scores(2);
  scores << 0.5, 0.5;
  EXPECT_EQ(auc(scores, {1, 0}), 0.5);
}

TEST(Auc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> quantized(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 200;
    VecX scores(n);
    std::vector<int> labels(n);
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Quantized scores force plenty of ties.
      scores[i] = quantized(rng) / 10.0;
      labels[static_cast<std::size_t>(i)] = coin(rng);
      has_pos |= labels[static_cast<std::size_t>(i)] == 1;
      has_neg |= labels[static_cast<std::size_t>(i)] == 0;
    }
    if (!has_pos || !has_neg) continue;
    EXPECT_NEAR(auc(scores, labels), pairwise_auc(scores, labels), 1e-12);
  }
}

TEST(Auc, SingleClassIsMetricError) {
  VecX scores(3);
  scores << 0.1, 0.2, 0.3;
  EXPECT_THROW(auc(scores, {1, 1, 1}), MetricError);
  EXPECT_THROW(auc(scores, {0, 0, 0}), MetricError);
}

TEST(Auc, InvariantUnderStrictlyIncreasingTransforms) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coin(0, 1);
  const int n = 300;
  VecX scores = random_scores(n, 8);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = coin(rng);
  labels[0] = 1;
  labels[1] = 0;
  const Scalar base = auc(scores, labels);

  VecX exp_scores = scores.array().exp();
  EXPECT_NEAR(auc(exp_scores, labels), base, 1e-12);
  VecX affine_scores = 3.5 * scores.array() + 11.0;
  EXPECT_NEAR(auc(affine_scores, labels), base, 1e-12);
}

TEST(ScoreCsv, RoundTripPreservesSeriesShape) {
  std::vector<ScoreSeries> series(2);
  series[0] = {"01", "01_0001", random_scores(10, 9), std::vector<int>(10, 0), true};
  series[1] = {"02", "02_0003", random_scores(6, 10), std::vector<int>(6, 1), true};
  series[0].labels[3] = 1;

  const std::string path = ::testing::TempDir() + "pak_scores_test.csv";
  write_score_csv(path, series);
  const auto loaded = read_score_csv(path);
  ASSERT_EQ(loaded.size(), 2u);
  for (const ScoreSeries& s : loaded) {
    const ScoreSeries& orig = s.video_id == "01_0001" ? series[0] : series[1];
    ASSERT_EQ(s.frame_scores.size(), orig.frame_scores.size());
    for (Eigen::Index i = 0; i < s.frame_scores.size(); ++i)
      EXPECT_EQ(s.frame_scores[i], orig.frame_scores[i]);
    EXPECT_EQ(s.labels, orig.labels);
  }
  std::remove(path.c_str());
}

TEST(LabelsCsv, ApplyMergesByFrame) {
  std::vector<ScoreSeries> series(1);
  series[0].scene_id = "00";
  series[0].video_id = "00_0000";
  series[0].frame_scores = random_scores(4, 11);

  const std::string path = ::testing::TempDir() + "pak_labels_test.csv";
  write_labels_csv(path, {{"00", "00_0000", 1, 1}, {"00", "00_0000", 2, 0}});
  apply_labels_csv(path, series);
  ASSERT_EQ(series[0].labels.size(), 4u);
  EXPECT_EQ(series[0].labels[0], -1);
  EXPECT_EQ(series[0].labels[1], 1);
  EXPECT_EQ(series[0].labels[2], 0);
  EXPECT_EQ(series[0].labels[3], -1);
  std::remove(path.c_str());
}
