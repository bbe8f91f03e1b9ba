#include "pak/transformer.hpp"

#include "pak/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <utility>

namespace pak {

using Eigen::Index;
using nlohmann::json;

namespace {

// tanh-form gelu; the tanh matrix is cached so the backward pass is pure
// arithmetic.
constexpr Scalar kGeluScale = 0.7978845608028654;  // sqrt(2/pi)
constexpr Scalar kGeluCubic = 0.044715;

MatX gelu(const MatX& x, MatX& tanh_cache) {
  tanh_cache =
      (kGeluScale * (x.array() + kGeluCubic * x.array().cube())).tanh();
  return (0.5 * x.array() * (1.0 + tanh_cache.array())).matrix();
}

MatX gelu_prime_from_cache(const MatX& x, const MatX& tanh_cache) {
  const auto t = tanh_cache.array();
  const auto inner =
      kGeluScale * (1.0 + 3.0 * kGeluCubic * x.array().square());
  return (0.5 * (1.0 + t) + 0.5 * x.array() * (1.0 - t.square()) * inner)
      .matrix();
}

MatX layer_norm(const MatX& x, const VecX& gamma, const VecX& beta,
                LayerNormCache* cache) {
  const Index rows = x.rows();
  MatX xhat(rows, x.cols());
  VecX sigma(rows);
  for (Index r = 0; r < rows; ++r) {
    const Scalar mu = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mu).square().mean();
    const Scalar sd = std::sqrt(var + kLayerNormEps);
    xhat.row(r) = (x.row(r).array() - mu) / sd;
    sigma[r] = sd;
  }
  MatX y = ((xhat.array().rowwise() * gamma.transpose().array()).rowwise() +
            beta.transpose().array())
               .matrix();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->sigma = std::move(sigma);
  }
  return y;
}

MatX layer_norm_backward(const MatX& dy, const LayerNormCache& cache,
                         const VecX& gamma, VecX& dgamma, VecX& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix().transpose();
  dbeta += dy.colwise().sum().transpose();
  MatX dxhat = (dy.array().rowwise() * gamma.transpose().array()).matrix();
  const VecX m1 = dxhat.rowwise().mean();
  const VecX m2 = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  MatX dx = dxhat.colwise() - m1;
  dx.array() -= cache.xhat.array().colwise() * m2.array();
  dx.array().colwise() /= cache.sigma.array();
  return dx;
}

void softmax_rows_inplace(MatX& s) {
  for (Index r = 0; r < s.rows(); ++r) {
    const Scalar max = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - max).exp();
    s.row(r) /= s.row(r).sum();
  }
}

MatX run_layers(const std::vector<AttentionLayerParams>& layers, MatX z,
                int heads, int block_len,
                std::vector<AttentionLayerCache>* caches) {
  if (caches) caches->resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i)
    z = attention_layer(z, layers[i], heads, block_len,
                        caches ? &(*caches)[i] : nullptr);
  return z;
}

MatX attention_layer_backward(const MatX& dy, const AttentionLayerCache& cache,
                              const AttentionLayerParams& layer, int heads,
                              AttentionLayerParams& grads) {
  const Index m = dy.rows();
  const Index c = dy.cols();
  const Index d = c / heads;
  const int block_len = cache.block_len;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(c));

  MatX dr = layer_norm_backward(dy, cache.ln_out, layer.ln_out_gamma,
                                grads.ln_out_gamma, grads.ln_out_beta);
  MatX du = dr;

  grads.ff_w2.noalias() += cache.h_act.transpose() * dr;
  grads.ff_b2 += dr.colwise().sum().transpose();
  MatX dh_act = dr * layer.ff_w2.transpose();
  MatX dh_pre =
      (dh_act.array() *
       gelu_prime_from_cache(cache.h_pre, cache.h_tanh).array())
          .matrix();
  grads.ff_w1.noalias() += cache.b.transpose() * dh_pre;
  grads.ff_b1 += dh_pre.colwise().sum().transpose();
  MatX db = dh_pre * layer.ff_w1.transpose();
  du += layer_norm_backward(db, cache.ln_fc, layer.ln_fc_gamma,
                            grads.ln_fc_gamma, grads.ln_fc_beta);

  MatX dz = du;

  MatX dq = MatX::Zero(m, c), dk = MatX::Zero(m, c), dv = MatX::Zero(m, c);
  for (Index b0 = 0; b0 < m; b0 += block_len) {
    for (int h = 0; h < heads; ++h) {
      const Index c0 = h * d;
      const auto p = cache.probs[h].middleRows(b0, block_len);
      const auto d_ob = du.block(b0, c0, block_len, d);
      const auto qb = cache.q.block(b0, c0, block_len, d);
      const auto kb = cache.k.block(b0, c0, block_len, d);
      const auto vb = cache.v.block(b0, c0, block_len, d);
      dv.block(b0, c0, block_len, d).noalias() += p.transpose() * d_ob;
      MatX dp = d_ob * vb.transpose();
      const VecX row_dot = (dp.array() * p.array()).rowwise().sum();
      MatX ds = (p.array() * (dp.colwise() - row_dot).array()).matrix();
      ds *= scale;
      dq.block(b0, c0, block_len, d).noalias() += ds * kb;
      dk.block(b0, c0, block_len, d).noalias() += ds.transpose() * qb;
    }
  }
  grads.w_q.noalias() += cache.a.transpose() * dq;
  grads.w_k.noalias() += cache.a.transpose() * dk;
  grads.w_v.noalias() += cache.a.transpose() * dv;
  MatX da = dq * layer.w_q.transpose() + dk * layer.w_k.transpose() +
            dv * layer.w_v.transpose();
  dz += layer_norm_backward(da, cache.ln_attn, layer.ln_attn_gamma,
                            grads.ln_attn_gamma, grads.ln_attn_beta);
  return dz;
}

MatX run_layers_backward(const std::vector<AttentionLayerParams>& layers,
                         const std::vector<AttentionLayerCache>& caches,
                         MatX dz, int heads,
                         std::vector<AttentionLayerParams>& layer_grads) {
  for (std::size_t i = layers.size(); i-- > 0;)
    dz = attention_layer_backward(dz, caches[i], layers[i], heads,
                                  layer_grads[i]);
  return dz;
}

MatX to_joint_major(const MatX& z, int t_len, int n_len) {
  MatX out(z.rows(), z.cols());
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < n_len; ++j)
      out.row(static_cast<Index>(j) * t_len + t) =
          z.row(static_cast<Index>(t) * n_len + j);
  return out;
}

MatX to_frame_major(const MatX& z, int t_len, int n_len) {
  MatX out(z.rows(), z.cols());
  for (int t = 0; t < t_len; ++t)
    for (int j = 0; j < n_len; ++j)
      out.row(static_cast<Index>(t) * n_len + j) =
          z.row(static_cast<Index>(j) * t_len + t);
  return out;
}

void add_tpe(MatX& z, const TransformerParams& params,
             const TransformerConfig& config) {
  if (!config.use_tpe) return;
  const int n = config.joints_per_pose;
  for (int t = 0; t < config.poses_per_window; ++t)
    z.middleRows(static_cast<Index>(t) * n, n).rowwise() += params.tpe.row(t);
}

void accumulate_tpe_grad(const MatX& dz, const TransformerConfig& config,
                         TransformerParams& grads) {
  if (!config.use_tpe) return;
  const int n = config.joints_per_pose;
  for (int t = 0; t < config.poses_per_window; ++t)
    grads.tpe.row(t) +=
        dz.middleRows(static_cast<Index>(t) * n, n).colwise().sum();
}

Scalar truncated_normal(std::mt19937_64& rng, Scalar std_dev) {
  std::normal_distribution<Scalar> dist(0.0, std_dev);
  Scalar x;
  do {
    x = dist(rng);
  } while (std::abs(x) > 2.0 * std_dev);
  return x;
}

void fill_truncated_normal(MatX& m, std::mt19937_64& rng, Scalar std_dev) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = truncated_normal(rng, std_dev);
}

void fill_truncated_normal(VecX& v, std::mt19937_64& rng, Scalar std_dev) {
  for (Index i = 0; i < v.size(); ++i) v[i] = truncated_normal(rng, std_dev);
}

AttentionLayerParams layer_zeros(int c) {
  const int h = c * kFeedForwardMult;
  AttentionLayerParams p;
  p.w_q = MatX::Zero(c, c);
  p.w_k = MatX::Zero(c, c);
  p.w_v = MatX::Zero(c, c);
  p.ff_w1 = MatX::Zero(c, h);
  p.ff_b1 = VecX::Zero(h);
  p.ff_w2 = MatX::Zero(h, c);
  p.ff_b2 = VecX::Zero(c);
  p.ln_attn_gamma = VecX::Zero(c);
  p.ln_attn_beta = VecX::Zero(c);
  p.ln_fc_gamma = VecX::Zero(c);
  p.ln_fc_beta = VecX::Zero(c);
  p.ln_out_gamma = VecX::Zero(c);
  p.ln_out_beta = VecX::Zero(c);
  return p;
}

}  // namespace

AttentionMode attention_mode_from_string(const std::string& name) {
  if (name == "spatial_temporal") return AttentionMode::spatial_temporal;
  if (name == "joint") return AttentionMode::joint;
  if (name == "spatial_only") return AttentionMode::spatial_only;
  if (name == "temporal_only") return AttentionMode::temporal_only;
  if (name == "none") return AttentionMode::none;
  throw ArgumentError("unknown attention mode: " + name);
}

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::spatial_temporal: return "spatial_temporal";
    case AttentionMode::joint: return "joint";
    case AttentionMode::spatial_only: return "spatial_only";
    case AttentionMode::temporal_only: return "temporal_only";
    case AttentionMode::none: return "none";
  }
  throw ArgumentError("invalid attention mode value");
}

void TransformerConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (heads < 1) throw ConfigError("heads must be >= 1");
  if (embed_dim % heads != 0)
    throw ConfigError("embed_dim must be divisible by heads");
  if (spatial_layers < 0 || temporal_layers < 0)
    throw ConfigError("layer counts must be >= 0");
  if (poses_per_window < 1) throw ConfigError("poses_per_window must be >= 1");
  if (joints_per_pose < 1) throw ConfigError("joints_per_pose must be >= 1");
  if (!(mask_ratio >= 0.0 && mask_ratio < 1.0))
    throw ConfigError("mask_ratio must be in [0, 1)");
}

json TransformerConfig::to_json() const {
  return {{"embed_dim", embed_dim},
          {"spatial_layers", spatial_layers},
          {"temporal_layers", temporal_layers},
          {"heads", heads},
          {"poses_per_window", poses_per_window},
          {"joints_per_pose", joints_per_pose},
          {"mask_ratio", mask_ratio},
          {"attention_mode", to_string(attention_mode)},
          {"use_spe", use_spe},
          {"use_tpe", use_tpe}};
}

TransformerConfig TransformerConfig::from_json(const json& j) {
  TransformerConfig c;
  c.embed_dim = j.at("embed_dim").get<int>();
  c.spatial_layers = j.at("spatial_layers").get<int>();
  c.temporal_layers = j.at("temporal_layers").get<int>();
  c.heads = j.at("heads").get<int>();
  c.poses_per_window = j.at("poses_per_window").get<int>();
  c.joints_per_pose = j.at("joints_per_pose").get<int>();
  c.mask_ratio = j.at("mask_ratio").get<double>();
  c.attention_mode = attention_mode_from_string(j.at("attention_mode").get<std::string>());
  c.use_spe = j.at("use_spe").get<bool>();
  c.use_tpe = j.at("use_tpe").get<bool>();
  c.validate();
  return c;
}

TransformerParams TransformerParams::zeros(const TransformerConfig& config) {
  config.validate();
  const int c = config.embed_dim;
  TransformerParams p;
  p.embed = MatX::Zero(2, c);
  p.spe = MatX::Zero(config.joints_per_pose, c);
  p.tpe = MatX::Zero(config.poses_per_window, c);
  p.mask_token = VecX::Zero(c);
  p.spatial.assign(config.spatial_layers, layer_zeros(c));
  p.temporal.assign(config.temporal_layers, layer_zeros(c));
  p.head_w = MatX::Zero(c, 2);
  p.head_b = VecX::Zero(2);
  return p;
}

TransformerParams TransformerParams::init(const TransformerConfig& config,
                                          std::uint64_t seed) {
  TransformerParams p = zeros(config);
  std::mt19937_64 rng(seed);
  fill_truncated_normal(p.embed, rng, kInitStd);
  fill_truncated_normal(p.mask_token, rng, kInitStd);
  // Position tables start at zero; layer norms start as identity.
  for (auto* stack : {&p.spatial, &p.temporal}) {
    for (AttentionLayerParams& layer : *stack) {
      fill_truncated_normal(layer.w_q, rng, kInitStd);
      fill_truncated_normal(layer.w_k, rng, kInitStd);
      fill_truncated_normal(layer.w_v, rng, kInitStd);
      fill_truncated_normal(layer.ff_w1, rng, kInitStd);
      fill_truncated_normal(layer.ff_w2, rng, kInitStd);
      layer.ln_attn_gamma.setOnes();
      layer.ln_fc_gamma.setOnes();
      layer.ln_out_gamma.setOnes();
    }
  }
  fill_truncated_normal(p.head_w, rng, kInitStd);
  return p;
}

void TransformerParams::set_zero() {
  for (NamedTensor& t : named_tensors(*this)) t.data.setZero();
}

bool TransformerParams::all_finite() const {
  auto& self = const_cast<TransformerParams&>(*this);
  for (NamedTensor& t : named_tensors(self))
    if (!t.data.allFinite()) return false;
  return true;
}

std::vector<NamedTensor> named_tensors(TransformerParams& params) {
  std::vector<NamedTensor> out;
  auto add_mat = [&out](const std::string& name, MatX& m) {
    out.push_back({name, Eigen::Map<MatX>(m.data(), m.rows(), m.cols())});
  };
  auto add_vec = [&out](const std::string& name, VecX& v) {
    out.push_back({name, Eigen::Map<MatX>(v.data(), v.size(), 1)});
  };
  add_mat("e", params.embed);
  add_mat("e_spe", params.spe);
  add_mat("e_tpe", params.tpe);
  add_vec("mask_token", params.mask_token);
  auto add_stack = [&](const std::string& prefix,
                       std::vector<AttentionLayerParams>& stack) {
    for (std::size_t i = 0; i < stack.size(); ++i) {
      const std::string base = prefix + "." + std::to_string(i) + ".";
      AttentionLayerParams& l = stack[i];
      add_mat(base + "w_q", l.w_q);
      add_mat(base + "w_k", l.w_k);
      add_mat(base + "w_v", l.w_v);
      add_mat(base + "ff_w1", l.ff_w1);
      add_vec(base + "ff_b1", l.ff_b1);
      add_mat(base + "ff_w2", l.ff_w2);
      add_vec(base + "ff_b2", l.ff_b2);
      add_vec(base + "ln_attn_gamma", l.ln_attn_gamma);
      add_vec(base + "ln_attn_beta", l.ln_attn_beta);
      add_vec(base + "ln_fc_gamma", l.ln_fc_gamma);
      add_vec(base + "ln_fc_beta", l.ln_fc_beta);
      add_vec(base + "ln_out_gamma", l.ln_out_gamma);
      add_vec(base + "ln_out_beta", l.ln_out_beta);
    }
  };
  add_stack("spatial", params.spatial);
  add_stack("temporal", params.temporal);
  add_mat("head_rec.w", params.head_w);
  add_vec("head_rec.b", params.head_b);
  return out;
}

std::vector<std::uint8_t> sample_mask(std::size_t slots, double ratio,
                                      std::mt19937_64& rng) {
  std::vector<std::uint8_t> mask(slots, 0);
  if (ratio <= 0) return mask;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < slots; ++i) mask[i] = unit(rng) < ratio ? 1 : 0;
  return mask;
}

MatX embed_joints(const CoordMat& coords, const TransformerParams& params,
                  const TransformerConfig& config, bool training,
                  std::uint64_t seed, std::vector<std::uint8_t>* mask_out) {
  const Index m = coords.rows();
  const int n = config.joints_per_pose;

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(m), 0);
  if (training && config.mask_ratio > 0) {
    std::mt19937_64 rng(seed);
    mask = sample_mask(static_cast<std::size_t>(m), config.mask_ratio, rng);
  }

  MatX z = coords * params.embed;
  for (Index i = 0; i < m; ++i)
    if (mask[static_cast<std::size_t>(i)]) z.row(i) = params.mask_token.transpose();
  if (config.use_spe)
    for (Index i = 0; i < m; ++i) z.row(i) += params.spe.row(i % n);

  if (mask_out) *mask_out = std::move(mask);
  return z;
}

MatX attention_layer(const MatX& z, const AttentionLayerParams& layer, int heads,
                     int block_len, AttentionLayerCache* cache) {
  const Index m = z.rows();
  const Index c = z.cols();
  if (block_len < 1 || m % block_len != 0)
    throw ArgumentError("attention_layer: rows must be a multiple of block_len");
  if (heads < 1 || c % heads != 0)
    throw ArgumentError("attention_layer: cols must be divisible by heads");
  const Index d = c / heads;
  const Scalar scale = 1.0 / std::sqrt(static_cast<Scalar>(c));

  LayerNormCache ln1;
  MatX a = layer_norm(z, layer.ln_attn_gamma, layer.ln_attn_beta, &ln1);
  MatX q = a * layer.w_q;
  MatX k = a * layer.w_k;
  MatX v = a * layer.w_v;

  MatX attn(m, c);
  std::vector<MatX> probs(static_cast<std::size_t>(heads));
  for (auto& p : probs) p.resize(m, block_len);
  for (Index b0 = 0; b0 < m; b0 += block_len) {
    for (int h = 0; h < heads; ++h) {
      const Index c0 = h * d;
      const auto qb = q.block(b0, c0, block_len, d);
      const auto kb = k.block(b0, c0, block_len, d);
      const auto vb = v.block(b0, c0, block_len, d);
      MatX s = (qb * kb.transpose()) * scale;
      softmax_rows_inplace(s);
      probs[static_cast<std::size_t>(h)].middleRows(b0, block_len) = s;
      attn.block(b0, c0, block_len, d).noalias() = s * vb;
    }
  }

  MatX u = z + attn;
  LayerNormCache ln2;
  MatX b = layer_norm(u, layer.ln_fc_gamma, layer.ln_fc_beta, &ln2);
  MatX h_pre = (b * layer.ff_w1).rowwise() + layer.ff_b1.transpose();
  MatX h_tanh;
  MatX h_act = gelu(h_pre, h_tanh);
  MatX f = (h_act * layer.ff_w2).rowwise() + layer.ff_b2.transpose();
  MatX r = u + f;
  LayerNormCache ln3;
  MatX y = layer_norm(r, layer.ln_out_gamma, layer.ln_out_beta, &ln3);

  if (cache) {
    cache->block_len = block_len;
    cache->z_in = z;
    cache->ln_attn = std::move(ln1);
    cache->a = std::move(a);
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->u = std::move(u);
    cache->ln_fc = std::move(ln2);
    cache->b = std::move(b);
    cache->h_pre = std::move(h_pre);
    cache->h_tanh = std::move(h_tanh);
    cache->h_act = std::move(h_act);
    cache->ln_out = std::move(ln3);
  }
  return y;
}

MatX spatial_pass(const MatX& z, const TransformerParams& params,
                  const TransformerConfig& config) {
  return run_layers(params.spatial, z, config.heads, config.joints_per_pose,
                    nullptr);
}

MatX temporal_pass(const MatX& z, const TransformerParams& params,
                   const TransformerConfig& config) {
  MatX out = z;
  add_tpe(out, params, config);
  out = to_joint_major(out, config.poses_per_window, config.joints_per_pose);
  out = run_layers(params.temporal, out, config.heads, config.poses_per_window,
                   nullptr);
  return to_frame_major(out, config.poses_per_window, config.joints_per_pose);
}

MatX transformer_forward(const CoordMat& coords, const TransformerParams& params,
                         const TransformerConfig& config, bool training,
                         std::uint64_t seed, ForwardCache* cache) {
  config.validate();
  if (coords.rows() != config.tokens())
    throw ConfigError("transformer_forward: window has " +
                      std::to_string(coords.rows()) + " tokens, config expects " +
                      std::to_string(config.tokens()));
  if (!coords.allFinite())
    throw NumericError("transformer_forward: non-finite input coordinates");

  const int t_len = config.poses_per_window;
  const int n_len = config.joints_per_pose;

  std::vector<std::uint8_t> mask;
  MatX z = embed_joints(coords, params, config, training, seed, &mask);

  std::vector<AttentionLayerCache>* sp = cache ? &cache->spatial : nullptr;
  std::vector<AttentionLayerCache>* tp = cache ? &cache->temporal : nullptr;

  switch (config.attention_mode) {
    case AttentionMode::spatial_temporal:
      z = run_layers(params.spatial, std::move(z), config.heads, n_len, sp);
      add_tpe(z, params, config);
      z = to_joint_major(z, t_len, n_len);
      z = run_layers(params.temporal, std::move(z), config.heads, t_len, tp);
      z = to_frame_major(z, t_len, n_len);
      break;
    case AttentionMode::spatial_only:
      z = run_layers(params.spatial, std::move(z), config.heads, n_len, sp);
      break;
    case AttentionMode::temporal_only:
      add_tpe(z, params, config);
      z = to_joint_major(z, t_len, n_len);
      z = run_layers(params.temporal, std::move(z), config.heads, t_len, tp);
      z = to_frame_major(z, t_len, n_len);
      break;
    case AttentionMode::joint:
      add_tpe(z, params, config);
      z = run_layers(params.spatial, std::move(z), config.heads, config.tokens(), sp);
      z = run_layers(params.temporal, std::move(z), config.heads, config.tokens(), tp);
      break;
    case AttentionMode::none:
      break;
  }

  MatX out = (z * params.head_w).rowwise() + params.head_b.transpose();
  if (cache) {
    cache->config = config;
    cache->coords = coords;
    cache->mask = std::move(mask);
    cache->pre_head = std::move(z);
  }
  return out;
}

void transformer_backward(const ForwardCache& cache, const MatX& d_out,
                          const TransformerParams& params,
                          TransformerParams& grads) {
  const TransformerConfig& config = cache.config;
  const int t_len = config.poses_per_window;
  const int n_len = config.joints_per_pose;
  const Index m = cache.pre_head.rows();

  grads.head_w.noalias() += cache.pre_head.transpose() * d_out;
  grads.head_b += d_out.colwise().sum().transpose();
  MatX dz = d_out * params.head_w.transpose();

  switch (config.attention_mode) {
    case AttentionMode::spatial_temporal:
      dz = to_joint_major(dz, t_len, n_len);
      dz = run_layers_backward(params.temporal, cache.temporal, std::move(dz),
                               config.heads, grads.temporal);
      dz = to_frame_major(dz, t_len, n_len);
      accumulate_tpe_grad(dz, config, grads);
      dz = run_layers_backward(params.spatial, cache.spatial, std::move(dz),
                               config.heads, grads.spatial);
      break;
    case AttentionMode::spatial_only:
      dz = run_layers_backward(params.spatial, cache.spatial, std::move(dz),
                               config.heads, grads.spatial);
      break;
    case AttentionMode::temporal_only:
      dz = to_joint_major(dz, t_len, n_len);
      dz = run_layers_backward(params.temporal, cache.temporal, std::move(dz),
                               config.heads, grads.temporal);
      dz = to_frame_major(dz, t_len, n_len);
      accumulate_tpe_grad(dz, config, grads);
      break;
    case AttentionMode::joint:
      dz = run_layers_backward(params.temporal, cache.temporal, std::move(dz),
                               config.heads, grads.temporal);
      dz = run_layers_backward(params.spatial, cache.spatial, std::move(dz),
                               config.heads, grads.spatial);
      accumulate_tpe_grad(dz, config, grads);
      break;
    case AttentionMode::none:
      break;
  }

  for (Index i = 0; i < m; ++i) {
    if (config.use_spe) grads.spe.row(i % n_len) += dz.row(i);
    if (cache.mask[static_cast<std::size_t>(i)]) {
      grads.mask_token += dz.row(i).transpose();
    } else {
      grads.embed.noalias() += cache.coords.row(i).transpose() * dz.row(i);
    }
  }
}

std::int64_t count_attention_flops(const TransformerConfig& config) {
  const auto t = static_cast<std::int64_t>(config.poses_per_window);
  const auto n = static_cast<std::int64_t>(config.joints_per_pose);
  switch (config.attention_mode) {
    case AttentionMode::joint: return (t * n) * (t * n);
    case AttentionMode::spatial_only: return t * n * n;
    case AttentionMode::temporal_only: return n * t * t;
    case AttentionMode::spatial_temporal: return t * n * n + n * t * t;
    case AttentionMode::none: return 0;
  }
  throw ArgumentError("invalid attention mode value");
}

}  // namespace pak
