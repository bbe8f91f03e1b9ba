#include "pak/trainer.hpp"

#include "pak/errors.hpp"
#include "pak/preprocess.hpp"
#include "pak/synth.hpp"
#include "pak/trajectory.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

using namespace pak;

namespace {

TransformerConfig tiny_net() {
  TransformerConfig c;
  c.embed_dim = 16;
  c.spatial_layers = 1;
  c.temporal_layers = 1;
  c.heads = 2;
  c.poses_per_window = 3;
  c.joints_per_pose = 4;
  c.mask_ratio = 0.0;
  return c;
}

std::vector<TrainingWindow> random_windows(const TransformerConfig& c, int count,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  std::vector<TrainingWindow> out(static_cast<std::size_t>(count));
  for (TrainingWindow& w : out) {
    w.input.resize(c.tokens(), 2);
    w.target.resize(c.tokens(), 2);
    w.weights.resize(c.tokens());
    for (int i = 0; i < c.tokens(); ++i) {
      w.input(i, 0) = unit(rng);
      w.input(i, 1) = unit(rng);
      w.target(i, 0) = unit(rng);
      w.target(i, 1) = unit(rng);
      w.weights[i] = 1.0 / c.tokens();
    }
  }
  return out;
}

bool params_equal(const TransformerParams& a, const TransformerParams& b) {
  auto ta = named_tensors(const_cast<TransformerParams&>(a));
  auto tb = named_tensors(const_cast<TransformerParams&>(b));
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i].data != tb[i].data) return false;
  return true;
}

}  // namespace

TEST(NormalizeConfidence, UniformWeightsBecomeEqualShares) {
  const MatX raw = MatX::Constant(2, 4, 0.8);
  const MatX norm = normalize_confidence(raw);
  EXPECT_TRUE((norm.array() == 0.25).all());
}

TEST(NormalizeConfidence, OneHotIsIdempotent) {
  MatX raw(1, 3);
  raw << 1, 0, 0;
  EXPECT_EQ(normalize_confidence(raw), raw);
}

TEST(NormalizeConfidence, RowsSumToOneOrZero) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  MatX raw(8, 17);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw.data()[i] = unit(rng);
  raw.row(3).setZero();  // all-zero pose stays all-zero
  const MatX norm = normalize_confidence(raw);
  for (Eigen::Index r = 0; r < norm.rows(); ++r) {
    const Scalar sum = norm.row(r).sum();
    if (r == 3)
      EXPECT_EQ(sum, 0.0);
    else
      EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(NormalizeConfidence, RejectsOutOfRangeValues) {
  MatX raw(1, 2);
  raw << 0.5, 1.5;
  EXPECT_THROW(normalize_confidence(raw), ArgumentError);
}

TEST(ReconstructionLoss, PerfectReconstructionIsZero) {
  const MatX x = MatX::Random(6, 2);
  EXPECT_EQ(reconstruction_loss(x, x, VecX::Ones(6)), 0.0);
}

TEST(ReconstructionLoss, SingleJointDiagonal) {
  MatX pred(1, 2), target(1, 2);
  pred << 1, 1;
  target << 0, 0;
  EXPECT_DOUBLE_EQ(reconstruction_loss(pred, target, VecX::Ones(1)),
                   std::sqrt(2.0));
}

TEST(ReconstructionLoss, ZeroWeightsGiveZeroLoss) {
  const MatX pred = MatX::Random(5, 2);
  const MatX target = MatX::Random(5, 2);
  EXPECT_EQ(reconstruction_loss(pred, target, VecX::Zero(5)), 0.0);
}

TEST(ReconstructionLoss, NanInputIsNumericError) {
  MatX pred = MatX::Zero(2, 2);
  MatX target = MatX::Zero(2, 2);
  pred(0, 0) = std::nan("");
  EXPECT_THROW(reconstruction_loss(pred, target, VecX::Ones(2)), NumericError);
}

TEST(WarmupLr, LinearRampThenConstant) {
  TrainConfig c;
  c.learning_rate = 5e-5;
  c.warmup_steps = 1000;
  EXPECT_EQ(warmup_lr(0, c), 0.0);
  EXPECT_DOUBLE_EQ(warmup_lr(500, c), 2.5e-5);
  EXPECT_DOUBLE_EQ(warmup_lr(1000, c), 5e-5);
  EXPECT_DOUBLE_EQ(warmup_lr(10000, c), 5e-5);
  EXPECT_THROW(warmup_lr(-1, c), ArgumentError);
}

TEST(AdamW, ZeroGradZeroDecayLeavesParamsUnchanged) {
  const TransformerConfig net = tiny_net();
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamW opt(net, c);
  TransformerParams params = TransformerParams::init(net, 3);
  const TransformerParams before = params;
  TransformerParams grads = TransformerParams::zeros(net);
  opt.step(params, grads, 1e-3);
  opt.step(params, grads, 1e-3);
  EXPECT_TRUE(params_equal(params, before));
}

TEST(AdamW, DecayPullsWeightsTowardZero) {
  const TransformerConfig net = tiny_net();
  TrainConfig c;
  c.weight_decay = 0.1;
  AdamW opt(net, c);
  TransformerParams params = TransformerParams::init(net, 4);
  const Scalar norm_before = params.embed.norm();
  TransformerParams grads = TransformerParams::zeros(net);
  opt.step(params, grads, 1e-2);
  EXPECT_LT(params.embed.norm(), norm_before);
}

TEST(Train, ZeroLearningRateLeavesParamsBitwiseUnchanged) {
  const TransformerConfig net = tiny_net();
  const auto windows = random_windows(net, 8, 5);
  TrainConfig c;
  c.learning_rate = 0.0;
  c.warmup_steps = 0;
  c.batch_size = 4;
  c.epochs = 3;
  c.weight_decay = 0.0;
  c.seed = 11;
  const TransformerParams initial = TransformerParams::init(net, 6);
  const TrainResult result = train(windows, initial, net, c);
  EXPECT_TRUE(params_equal(result.params, initial));
  EXPECT_EQ(result.steps, 6);
}

TEST(Train, SameSeedGivesIdenticalLossHistory) {
  const TransformerConfig net = tiny_net();
  const auto windows = random_windows(net, 12, 7);
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.warmup_steps = 2;
  c.batch_size = 4;
  c.epochs = 2;
  c.seed = 21;
  const TransformerParams initial = TransformerParams::init(net, 8);
  const TrainResult a = train(windows, initial, net, c);
  const TrainResult b = train(windows, initial, net, c);
  ASSERT_EQ(a.loss_history.size(), b.loss_history.size());
  for (std::size_t i = 0; i < a.loss_history.size(); ++i)
    EXPECT_EQ(a.loss_history[i], b.loss_history[i]);
  EXPECT_TRUE(params_equal(a.params, b.params));
}

TEST(Train, ThreadCountDoesNotChangeResults) {
  const TransformerConfig net = tiny_net();
  const auto windows = random_windows(net, 16, 9);
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.warmup_steps = 0;
  c.batch_size = 8;
  c.epochs = 2;
  c.seed = 31;
  const TransformerParams initial = TransformerParams::init(net, 10);
  c.threads = 1;
  const TrainResult a = train(windows, initial, net, c);
  c.threads = 4;
  const TrainResult b = train(windows, initial, net, c);
  ASSERT_EQ(a.loss_history.size(), b.loss_history.size());
  for (std::size_t i = 0; i < a.loss_history.size(); ++i)
    EXPECT_EQ(a.loss_history[i], b.loss_history[i]);
  EXPECT_TRUE(params_equal(a.params, b.params));
}

TEST(Train, OverfitsOneFixedBatch) {
  TransformerConfig net = tiny_net();
  net.mask_ratio = 0.0;  // pure reconstruction, no augmentation noise
  const auto windows = random_windows(net, 4, 13);
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.warmup_steps = 50;
  c.batch_size = 4;  // the whole dataset is one batch
  c.epochs = 500;
  c.weight_decay = 0.0;
  c.seed = 41;
  const TrainResult result =
      train(windows, TransformerParams::init(net, 12), net, c);
  ASSERT_EQ(result.steps, 500);
  const Scalar initial = result.loss_history.front();
  const Scalar final = result.loss_history.back();
  EXPECT_LT(final, 0.1 * initial)
      << "initial " << initial << " final " << final;
}

TEST(Train, OverfitModelScoresSeenWindowsNearZero) {
  TransformerConfig net = tiny_net();
  net.mask_ratio = 0.0;
  const auto windows = random_windows(net, 4, 19);
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.warmup_steps = 50;
  c.batch_size = 4;
  c.epochs = 500;
  c.weight_decay = 0.0;
  c.seed = 61;
  const TransformerParams initial = TransformerParams::init(net, 18);
  const TrainResult result = train(windows, initial, net, c);

  // L1 reconstruction error on the training windows collapses relative to
  // the untrained model.
  Scalar untrained = 0, trained = 0;
  for (const TrainingWindow& w : windows) {
    untrained += (transformer_forward(w.input, initial, net, false, 0) - w.target)
                     .cwiseAbs()
                     .sum();
    trained +=
        (transformer_forward(w.input, result.params, net, false, 0) - w.target)
            .cwiseAbs()
            .sum();
  }
  EXPECT_LT(trained, 0.1 * untrained);
}

TEST(Train, DivergenceAbortsWithDiagnosticAndKeepsCheckpoint) {
  const TransformerConfig net = tiny_net();
  auto windows = random_windows(net, 4, 15);
  // Finite inputs whose residual norm overflows: the loss becomes inf and
  // training must abort before applying the update.
  windows[0].target.array() += 1e307;
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.warmup_steps = 0;
  c.batch_size = 4;
  c.epochs = 1;
  c.seed = 51;
  bool checkpoint_called = false;
  EXPECT_THROW(train(windows, TransformerParams::init(net, 14), net, c,
                     [&](std::int64_t, const TransformerParams&) {
                       checkpoint_called = true;
                     }),
               NumericError);
  EXPECT_TRUE(checkpoint_called);
}

TEST(Train, WarmupLongerThanRunIsConfigError) {
  const TransformerConfig net = tiny_net();
  const auto windows = random_windows(net, 4, 17);
  TrainConfig c;
  c.warmup_steps = 1000;
  c.batch_size = 4;
  c.epochs = 1;  // one step total
  EXPECT_THROW(train(windows, TransformerParams::init(net, 16), net, c),
               ConfigError);
}

TEST(PrepareTrainingWindows, DivideFusionSeparatesInputFromTarget) {
  // The model reconstructs the unscaled normalized pose from the scaled
  // input; wherever the scale is not 1 the two must differ. That asymmetry
  // is what inflates reconstruction error for rare motion.
  TransformerConfig net;
  net.embed_dim = 16;
  net.heads = 2;
  net.poses_per_window = 4;
  net.joints_per_pose = 17;

  SynthSpec spec;
  spec.n_normal = 4;
  spec.n_anomalous = 0;
  spec.frames_per_trajectory = 20;
  spec.seed = 71;
  const SynthData data = generate(spec);

  std::vector<WindowSample> samples;
  std::vector<std::vector<DecomposedPose>> decomposed;
  for (const PoseTrajectory& traj : data.trajectories) {
    for (WindowSample& w : sample_windows(traj, 8, 2, 4)) {
      decomposed.push_back(decompose_sequence(w));
      samples.push_back(std::move(w));
    }
  }
  const MotionPrior prior =
      fit_prior(collect_displacements(decomposed), PriorFamily::rayleigh);

  const auto windows = prepare_training_windows(samples, prior,
                                                FuseMode::divide, true, net);
  ASSERT_FALSE(windows.empty());
  bool any_scaled = false;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto scaled = embed_window(decomposed[i], prior, FuseMode::divide);
    for (int t = 0; t < net.poses_per_window; ++t) {
      const auto input =
          windows[i].input.middleRows(t * net.joints_per_pose, net.joints_per_pose);
      const auto target =
          windows[i].target.middleRows(t * net.joints_per_pose, net.joints_per_pose);
      if (scaled[static_cast<std::size_t>(t)].scale != 1.0) {
        any_scaled = true;
        EXPECT_GT((input - target).cwiseAbs().maxCoeff(), 0.0);
      }
    }
  }
  EXPECT_TRUE(any_scaled);
}

TEST(Train, CheckpointCallbackFiresAtInterval) {
  const TransformerConfig net = tiny_net();
  const auto windows = random_windows(net, 8, 21);
  TrainConfig c;
  c.learning_rate = 1e-4;
  c.warmup_steps = 0;
  c.batch_size = 4;
  c.epochs = 3;  // 6 steps
  c.checkpoint_interval = 2;
  c.seed = 71;
  std::vector<std::int64_t> fired;
  train(windows, TransformerParams::init(net, 20), net, c,
        [&](std::int64_t step, const TransformerParams&) {
          fired.push_back(step);
        });
  EXPECT_EQ(fired, (std::vector<std::int64_t>{2, 4, 6}));
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c;
  c.learning_rate = 1.25e-4;
  c.warmup_steps = 77;
  c.batch_size = 33;
  c.epochs = 9;
  c.weight_decay = 0.005;
  c.seed = 123456789;
  const TrainConfig d = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(d.learning_rate, c.learning_rate);
  EXPECT_EQ(d.warmup_steps, c.warmup_steps);
  EXPECT_EQ(d.batch_size, c.batch_size);
  EXPECT_EQ(d.epochs, c.epochs);
  EXPECT_EQ(d.weight_decay, c.weight_decay);
  EXPECT_EQ(d.seed, c.seed);
}
