#pragma once

#include "pak/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pak {

enum class AttentionMode { spatial_temporal, joint, spatial_only, temporal_only, none };

AttentionMode attention_mode_from_string(const std::string& name);
std::string to_string(AttentionMode mode);

struct TransformerConfig {
  int embed_dim = 128;       // C
  int spatial_layers = 2;    // depth of the per-frame stack
  int temporal_layers = 2;   // depth of the per-joint stack
  int heads = 8;
  int poses_per_window = 8;  // T
  int joints_per_pose = 17;  // N
  double mask_ratio = 0.15;
  AttentionMode attention_mode = AttentionMode::spatial_temporal;
  bool use_spe = true;
  bool use_tpe = true;

  int tokens() const { return poses_per_window * joints_per_pose; }
  int head_dim() const { return embed_dim / heads; }
  void validate() const;

  nlohmann::json to_json() const;
  static TransformerConfig from_json(const nlohmann::json& j);
};

inline constexpr int kFeedForwardMult = 4;
inline constexpr Scalar kLayerNormEps = 1e-5;
inline constexpr Scalar kInitStd = 0.02;

/// One pre-norm residual attention block: layer-normed input feeds the
/// multi-head attention, a second layer norm feeds the feed-forward, and a
/// final layer norm wraps the residual sum.
struct AttentionLayerParams {
  MatX w_q, w_k, w_v;  // C x C, no bias
  MatX ff_w1;          // C x 4C
  VecX ff_b1;          // 4C
  MatX ff_w2;          // 4C x C
  VecX ff_b2;          // C
  VecX ln_attn_gamma, ln_attn_beta;
  VecX ln_fc_gamma, ln_fc_beta;
  VecX ln_out_gamma, ln_out_beta;
};

struct TransformerParams {
  MatX embed;       // 2 x C, projects (x, y) into the token space
  MatX spe;         // N x C spatial position table
  MatX tpe;         // T x C temporal position table
  VecX mask_token;  // C
  std::vector<AttentionLayerParams> spatial;
  std::vector<AttentionLayerParams> temporal;
  MatX head_w;  // C x 2 reconstruction head
  VecX head_b;  // 2

  static TransformerParams init(const TransformerConfig& config, std::uint64_t seed);
  static TransformerParams zeros(const TransformerConfig& config);

  void set_zero();
  bool all_finite() const;
};

/// Flat named view over every learnable tensor, in a fixed canonical order
/// ("e", "e_spe", "e_tpe", "mask_token", "spatial.0.w_q", ..., "head_rec.w").
/// Vectors appear as n x 1 maps.
struct NamedTensor {
  std::string name;
  Eigen::Map<MatX> data;
};
std::vector<NamedTensor> named_tensors(TransformerParams& params);

/// Bernoulli(ratio) mask flags for `slots` token positions.
std::vector<std::uint8_t> sample_mask(std::size_t slots, double ratio,
                                      std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Forward pieces. Token rows are frame-major: row t*N + j is joint j of
// frame t. All pieces are pure given their arguments.
// ---------------------------------------------------------------------------

struct LayerNormCache {
  MatX xhat;
  VecX sigma;
};

struct AttentionLayerCache {
  int block_len = 0;
  MatX z_in;
  LayerNormCache ln_attn;
  MatX a;                  // ln_attn output
  MatX q, k, v;
  std::vector<MatX> probs;  // per head: M x block_len attention rows
  MatX u;                   // z_in + attention output
  LayerNormCache ln_fc;
  MatX b;       // ln_fc output (feed-forward input)
  MatX h_pre;   // M x 4C preactivation
  MatX h_tanh;  // tanh term of the gelu, reused by the backward pass
  MatX h_act;   // gelu(h_pre)
  LayerNormCache ln_out;
};

struct ForwardCache {
  TransformerConfig config;
  CoordMat coords;
  std::vector<std::uint8_t> mask;
  std::vector<AttentionLayerCache> spatial;
  std::vector<AttentionLayerCache> temporal;
  MatX pre_head;  // M x C input to the reconstruction head
};

/// Projects (masked) joint coordinates into token space and adds the spatial
/// position embedding. Masking replaces the projection with the learned mask
/// token; it is applied only when `training` is true.
MatX embed_joints(const CoordMat& coords, const TransformerParams& params,
                  const TransformerConfig& config, bool training,
                  std::uint64_t seed,
                  std::vector<std::uint8_t>* mask_out = nullptr);

/// One attention block over independent sequences of `block_len` consecutive
/// rows (z.rows() must be a multiple of block_len).
MatX attention_layer(const MatX& z, const AttentionLayerParams& layer, int heads,
                     int block_len, AttentionLayerCache* cache = nullptr);

/// The spatial stack: every frame's N joint tokens attend among themselves.
MatX spatial_pass(const MatX& z, const TransformerParams& params,
                  const TransformerConfig& config);

/// The temporal stack: adds the temporal position embedding, then every
/// joint's T frame tokens attend among themselves.
MatX temporal_pass(const MatX& z, const TransformerParams& params,
                   const TransformerConfig& config);

/// Full network: embedding, attention passes per `config.attention_mode`,
/// reconstruction head. Returns the reconstructed (T*N) x 2 coordinates.
/// Bitwise deterministic given (params, coords, seed, training).
MatX transformer_forward(const CoordMat& coords, const TransformerParams& params,
                         const TransformerConfig& config, bool training,
                         std::uint64_t seed, ForwardCache* cache = nullptr);

/// Gradients of a scalar loss w.r.t. every parameter tensor, given the
/// cached forward and d(loss)/d(output). Accumulates into `grads`.
void transformer_backward(const ForwardCache& cache, const MatX& d_out,
                          const TransformerParams& params,
                          TransformerParams& grads);

/// Attention score-matrix element count per layer for each mode; the divided
/// layout trades (T*N)^2 for T*N^2 + N*T^2.
std::int64_t count_attention_flops(const TransformerConfig& config);

}  // namespace pak
