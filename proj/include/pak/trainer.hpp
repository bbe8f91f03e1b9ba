#pragma once

#include "pak/motion_prior.hpp"
#include "pak/transformer.hpp"
#include "pak/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace pak {

struct TrainConfig {
  Scalar learning_rate = 5e-5;
  int warmup_steps = 1000;
  int batch_size = 256;
  int epochs = 20;
  Scalar weight_decay = 0.01;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar adam_eps = 1e-8;
  int checkpoint_interval = 0;  // steps between snapshots, 0 = none
  int threads = 0;              // 0 = auto
  std::uint64_t seed = 0;

  void validate(std::int64_t total_steps) const;

  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Per-pose confidence normalization: each pose's joint weights are divided
/// by their sum (all-zero poses stay all-zero). Rows are poses.
MatX normalize_confidence(const MatX& raw);

/// Weighted sum over all joints of the Euclidean distance between the
/// reconstructed and the target joint. `weights` is the flattened (T*N)
/// normalized confidence vector.
Scalar reconstruction_loss(const MatX& pred, const MatX& target,
                           const VecX& weights);

/// Loss value plus d(loss)/d(pred); the gradient is zero at exact-zero
/// residuals (the distance kink).
Scalar reconstruction_loss_grad(const MatX& pred, const MatX& target,
                                const VecX& weights, MatX& d_pred);

/// Linear ramp from 0 to the configured rate over warmup_steps, constant
/// afterwards.
Scalar warmup_lr(std::int64_t step, const TrainConfig& config);

/// Adaptive moment estimation with decoupled weight decay.
class AdamW {
 public:
  AdamW(const TransformerConfig& net_config, const TrainConfig& train_config);

  /// Applies one update in place. A zero gradient with zero weight decay
  /// leaves parameters bitwise unchanged.
  void step(TransformerParams& params, TransformerParams& grads, Scalar lr);

 private:
  TrainConfig config_;
  TransformerParams m_, v_;
  std::int64_t t_ = 0;
};

/// One prepared window: motion-embedded input tokens, the unscaled
/// normalized pose targets, and flattened normalized confidences.
struct TrainingWindow {
  CoordMat input;   // (T*N) x 2
  CoordMat target;  // (T*N) x 2
  VecX weights;     // T*N
};

/// Decomposes, motion-embeds and flattens window samples. Windows with a
/// degenerate pose are dropped (counted in *dropped when given).
std::vector<TrainingWindow> prepare_training_windows(
    const std::vector<WindowSample>& samples, const MotionPrior& prior,
    FuseMode fuse, bool motion_embed, const TransformerConfig& config,
    std::size_t* dropped = nullptr);

struct TrainResult {
  TransformerParams params;
  std::vector<Scalar> loss_history;  // batch-mean loss per step
  std::int64_t steps = 0;
};

using CheckpointFn =
    std::function<void(std::int64_t step, const TransformerParams& params)>;

/// Keeps large per-window buffers on the heap freelist instead of mmap
/// (their sizes sit above glibc's default threshold, and the resulting
/// munmap storms serialize worker threads). Idempotent; called by train().
void tune_allocator_for_large_buffers();

/// Self-supervised reconstruction training. Deterministic given the seed
/// regardless of the thread count. Throws NumericError if the loss stops
/// being finite (parameters keep their last finite state).
TrainResult train(const std::vector<TrainingWindow>& windows,
                  TransformerParams initial, const TransformerConfig& net_config,
                  const TrainConfig& config,
                  const CheckpointFn& on_checkpoint = nullptr);

}  // namespace pak
