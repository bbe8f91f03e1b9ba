#include "pak/trainer.hpp"

#include "pak/errors.hpp"
#include "pak/preprocess.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace pak {

using Eigen::Index;

namespace {

// Gradient reduction uses a fixed number of batch chunks summed in chunk
// order, so results do not depend on how many threads execute them.
constexpr int kGradChunks = 8;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mask_seed_for(std::uint64_t seed, std::int64_t step,
                            std::int64_t slot) {
  return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(step)) ^
                    static_cast<std::uint64_t>(slot));
}

}  // namespace

void TrainConfig::validate(std::int64_t total_steps) const {
  if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
  if (warmup_steps < 0) throw ConfigError("warmup_steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("adam betas must be in [0, 1)");
  if (adam_eps <= 0) throw ConfigError("adam_eps must be > 0");
  if (warmup_steps > total_steps) {
    std::ostringstream os;
    os << "warmup_steps (" << warmup_steps << ") exceeds total steps ("
       << total_steps << "); lower warmup_steps or train longer";
    throw ConfigError(os.str());
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"warmup_steps", warmup_steps},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps},
          {"checkpoint_interval", checkpoint_interval},
          {"threads", threads},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<Scalar>();
  c.warmup_steps = j.at("warmup_steps").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.weight_decay = j.at("weight_decay").get<Scalar>();
  c.beta1 = j.at("beta1").get<Scalar>();
  c.beta2 = j.at("beta2").get<Scalar>();
  c.adam_eps = j.at("adam_eps").get<Scalar>();
  c.checkpoint_interval = j.at("checkpoint_interval").get<int>();
  c.threads = j.at("threads").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

MatX normalize_confidence(const MatX& raw) {
  if ((raw.array() < 0).any() || (raw.array() > 1).any())
    throw ArgumentError("normalize_confidence: values must be in [0, 1]");
  MatX out = raw;
  for (Index r = 0; r < out.rows(); ++r) {
    const Scalar sum = out.row(r).sum();
    if (sum > 0) out.row(r) /= sum;
  }
  return out;
}

Scalar reconstruction_loss(const MatX& pred, const MatX& target,
                           const VecX& weights) {
  MatX unused;
  return reconstruction_loss_grad(pred, target, weights, unused);
}

Scalar reconstruction_loss_grad(const MatX& pred, const MatX& target,
                                const VecX& weights, MatX& d_pred) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
      weights.size() != pred.rows())
    throw ArgumentError("reconstruction_loss: shape mismatch");
  if (!pred.allFinite() || !target.allFinite() || !weights.allFinite())
    throw NumericError("reconstruction_loss: non-finite input");

  d_pred = MatX::Zero(pred.rows(), pred.cols());
  Scalar loss = 0;
  for (Index i = 0; i < pred.rows(); ++i) {
    const Scalar dx = pred(i, 0) - target(i, 0);
    const Scalar dy = pred(i, 1) - target(i, 1);
    const Scalar dist = std::sqrt(dx * dx + dy * dy);
    loss += weights[i] * dist;
    if (dist > 0) {
      d_pred(i, 0) = weights[i] * dx / dist;
      d_pred(i, 1) = weights[i] * dy / dist;
    }
  }
  return loss;
}

Scalar warmup_lr(std::int64_t step, const TrainConfig& config) {
  if (step < 0) throw ArgumentError("warmup_lr: step must be >= 0");
  if (config.warmup_steps == 0 || step >= config.warmup_steps)
    return config.learning_rate;
  return config.learning_rate * static_cast<Scalar>(step) /
         static_cast<Scalar>(config.warmup_steps);
}

AdamW::AdamW(const TransformerConfig& net_config, const TrainConfig& train_config)
    : config_(train_config),
      m_(TransformerParams::zeros(net_config)),
      v_(TransformerParams::zeros(net_config)) {}

void AdamW::step(TransformerParams& params, TransformerParams& grads, Scalar lr) {
  ++t_;
  const Scalar bias1 = 1.0 - std::pow(config_.beta1, static_cast<Scalar>(t_));
  const Scalar bias2 = 1.0 - std::pow(config_.beta2, static_cast<Scalar>(t_));
  std::vector<NamedTensor> p = named_tensors(params);
  std::vector<NamedTensor> g = named_tensors(grads);
  std::vector<NamedTensor> m = named_tensors(m_);
  std::vector<NamedTensor> v = named_tensors(v_);
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i].data = config_.beta1 * m[i].data + (1.0 - config_.beta1) * g[i].data;
    v[i].data.array() = config_.beta2 * v[i].data.array() +
                        (1.0 - config_.beta2) * g[i].data.array().square();
    const auto m_hat = m[i].data.array() / bias1;
    const auto v_hat = v[i].data.array() / bias2;
    p[i].data.array() -=
        lr * (m_hat / (v_hat.sqrt() + config_.adam_eps) +
              config_.weight_decay * p[i].data.array());
  }
}

std::vector<TrainingWindow> prepare_training_windows(
    const std::vector<WindowSample>& samples, const MotionPrior& prior,
    FuseMode fuse, bool motion_embed, const TransformerConfig& config,
    std::size_t* dropped) {
  const int t_len = config.poses_per_window;
  const int n_len = config.joints_per_pose;
  std::vector<TrainingWindow> out;
  out.reserve(samples.size());
  std::size_t drop_count = 0;

  for (const WindowSample& sample : samples) {
    if (static_cast<int>(sample.poses.size()) != t_len)
      throw ConfigError("window has " + std::to_string(sample.poses.size()) +
                        " poses, config expects " + std::to_string(t_len));
    std::vector<DecomposedPose> decomposed;
    try {
      decomposed = decompose_sequence(sample);
    } catch (const DegeneratePoseError&) {
      ++drop_count;
      continue;
    }
    if (static_cast<int>(decomposed.front().normalized.rows()) != n_len)
      throw ConfigError("pose has " +
                        std::to_string(decomposed.front().normalized.rows()) +
                        " joints, config expects " + std::to_string(n_len));

    const std::vector<ScaledPose> scaled =
        embed_window(decomposed, prior, fuse, motion_embed);

    TrainingWindow w;
    w.input.resize(config.tokens(), 2);
    w.target.resize(config.tokens(), 2);
    MatX conf(t_len, n_len);
    for (int t = 0; t < t_len; ++t) {
      w.input.middleRows(static_cast<Index>(t) * n_len, n_len) = scaled[t].scaled;
      w.target.middleRows(static_cast<Index>(t) * n_len, n_len) =
          decomposed[t].normalized;
      conf.row(t) = decomposed[t].confidences.transpose();
    }
    const MatX norm_conf = normalize_confidence(conf);
    w.weights.resize(config.tokens());
    for (int t = 0; t < t_len; ++t)
      for (int j = 0; j < n_len; ++j)
        w.weights[static_cast<Index>(t) * n_len + j] = norm_conf(t, j);
    out.push_back(std::move(w));
  }
  if (dropped) *dropped = drop_count;
  return out;
}

void tune_allocator_for_large_buffers() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 64 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 128 * 1024 * 1024);
    return true;
  }();
  (void)done;
#endif
}

TrainResult train(const std::vector<TrainingWindow>& windows,
                  TransformerParams initial, const TransformerConfig& net_config,
                  const TrainConfig& config, const CheckpointFn& on_checkpoint) {
  tune_allocator_for_large_buffers();
  net_config.validate();
  if (windows.empty()) throw ArgumentError("train: no windows");
  const std::int64_t n_windows = static_cast<std::int64_t>(windows.size());
  const std::int64_t steps_per_epoch =
      (n_windows + config.batch_size - 1) / config.batch_size;
  const std::int64_t total_steps = steps_per_epoch * config.epochs;
  config.validate(total_steps);

  TrainResult result;
  result.params = std::move(initial);
  result.loss_history.reserve(static_cast<std::size_t>(total_steps));

  AdamW optimizer(net_config, config);
  std::mt19937_64 shuffle_rng(splitmix64(config.seed));

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::clamp(n_threads, 1, kGradChunks);

  std::vector<TransformerParams> chunk_grads(
      kGradChunks, TransformerParams::zeros(net_config));
  std::vector<Scalar> chunk_loss(kGradChunks, 0.0);

  std::vector<std::int64_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::int64_t start = 0; start < n_windows;
         start += config.batch_size, ++step) {
      const std::int64_t batch_count =
          std::min<std::int64_t>(config.batch_size, n_windows - start);

      for (int c = 0; c < kGradChunks; ++c) {
        chunk_grads[static_cast<std::size_t>(c)].set_zero();
        chunk_loss[static_cast<std::size_t>(c)] = 0;
      }

      std::atomic<int> next_chunk{0};
      std::exception_ptr worker_error;
      std::mutex error_mutex;
      auto worker = [&]() {
        try {
          ForwardCache cache;
          MatX d_pred;
          for (;;) {
            const int c = next_chunk.fetch_add(1);
            if (c >= kGradChunks) break;
            for (std::int64_t slot = c; slot < batch_count; slot += kGradChunks) {
              const TrainingWindow& w =
                  windows[static_cast<std::size_t>(order[start + slot])];
              const std::uint64_t mask_seed =
                  mask_seed_for(config.seed, step, slot);
              const MatX pred = transformer_forward(
                  w.input, result.params, net_config, true, mask_seed, &cache);
              chunk_loss[static_cast<std::size_t>(c)] +=
                  reconstruction_loss_grad(pred, w.target, w.weights, d_pred);
              transformer_backward(cache, d_pred, result.params,
                                   chunk_grads[static_cast<std::size_t>(c)]);
            }
          }
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!worker_error) worker_error = std::current_exception();
        }
      };
      if (n_threads == 1) {
        worker();
      } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
      }
      if (worker_error) std::rethrow_exception(worker_error);

      TransformerParams& grads = chunk_grads[0];
      Scalar loss = chunk_loss[0];
      for (int c = 1; c < kGradChunks; ++c) {
        std::vector<NamedTensor> dst = named_tensors(grads);
        std::vector<NamedTensor> src =
            named_tensors(chunk_grads[static_cast<std::size_t>(c)]);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i].data += src[i].data;
        loss += chunk_loss[static_cast<std::size_t>(c)];
      }
      const Scalar inv_batch = 1.0 / static_cast<Scalar>(batch_count);
      for (NamedTensor& t : named_tensors(grads)) t.data *= inv_batch;
      loss *= inv_batch;

      if (!std::isfinite(loss)) {
        // Abort before applying the update; parameters are still finite, so
        // give the caller one last snapshot to retain.
        if (on_checkpoint) on_checkpoint(step, result.params);
        std::ostringstream os;
        os << "training diverged: non-finite loss at step " << step;
        throw NumericError(os.str());
      }

      optimizer.step(result.params, grads, warmup_lr(step, config));
      result.loss_history.push_back(loss);

      if (on_checkpoint && config.checkpoint_interval > 0 &&
          (step + 1) % config.checkpoint_interval == 0)
        on_checkpoint(step + 1, result.params);
    }
  }
  result.steps = step;
  return result;
}

}  // namespace pak
