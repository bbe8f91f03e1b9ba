#include "pak/motion_prior.hpp"

#include "pak/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pak {

using nlohmann::json;

namespace {

constexpr Scalar kSqrt2 = 1.4142135623730951;
constexpr Scalar kSqrt2Pi = 2.5066282746310002;

Scalar normal_pdf(Scalar x) { return std::exp(-0.5 * x * x) / kSqrt2Pi; }
Scalar normal_cdf(Scalar x) { return 0.5 * std::erfc(-x / kSqrt2); }

}  // namespace

PriorFamily prior_family_from_string(const std::string& name) {
  if (name == "rayleigh") return PriorFamily::rayleigh;
  if (name == "gaussian") return PriorFamily::gaussian;
  if (name == "uniform") return PriorFamily::uniform;
  throw ArgumentError("unknown prior family: " + name);
}

std::string to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::rayleigh: return "rayleigh";
    case PriorFamily::gaussian: return "gaussian";
    case PriorFamily::uniform: return "uniform";
  }
  throw ArgumentError("invalid prior family value");
}

Scalar MotionPrior::density(Scalar v) const {
  if (v < 0) return 0;
  switch (family) {
    case PriorFamily::rayleigh:
      return v / (sigma * sigma) * std::exp(-0.5 * v * v / (sigma * sigma));
    case PriorFamily::gaussian: {
      // Truncated to [0, inf) so the density integrates to 1 there.
      const Scalar z = normal_cdf(mu / sigma);
      return normal_pdf((v - mu) / sigma) / (sigma * z);
    }
    case PriorFamily::uniform:
      return (v >= lo && v <= hi) ? 1.0 / (hi - lo) : 0.0;
  }
  throw ArgumentError("invalid prior family value");
}

Scalar MotionPrior::mode() const {
  switch (family) {
    case PriorFamily::rayleigh: return sigma;
    case PriorFamily::gaussian: return std::max(mu, 0.0);
    case PriorFamily::uniform: return lo;
  }
  throw ArgumentError("invalid prior family value");
}

json MotionPrior::to_json() const {
  json params;
  switch (family) {
    case PriorFamily::rayleigh: params = {{"sigma", sigma}}; break;
    case PriorFamily::gaussian: params = {{"mu", mu}, {"sigma", sigma}}; break;
    case PriorFamily::uniform: params = {{"lo", lo}, {"hi", hi}}; break;
  }
  return {{"family", to_string(family)},
          {"params", params},
          {"mode_density", mode_density}};
}

MotionPrior MotionPrior::from_json(const json& j) {
  MotionPrior p;
  p.family = prior_family_from_string(j.at("family").get<std::string>());
  const json& params = j.at("params");
  switch (p.family) {
    case PriorFamily::rayleigh:
      p.sigma = params.at("sigma").get<Scalar>();
      break;
    case PriorFamily::gaussian:
      p.mu = params.at("mu").get<Scalar>();
      p.sigma = params.at("sigma").get<Scalar>();
      break;
    case PriorFamily::uniform:
      p.lo = params.at("lo").get<Scalar>();
      p.hi = params.at("hi").get<Scalar>();
      break;
  }
  p.mode_density = j.at("mode_density").get<Scalar>();
  return p;
}

void MotionPrior::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open prior file for writing: " + path);
  out << to_json().dump(2) << '\n';
}

MotionPrior MotionPrior::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open prior file: " + path);
  json j;
  in >> j;
  return from_json(j);
}

Scalar normalized_displacement(const DecomposedPose& prev,
                               const DecomposedPose& cur) {
  const Scalar v = (cur.center - prev.center).norm();
  return v / (prev.box.x() + prev.box.y());
}

std::vector<Scalar> collect_displacements(
    const std::vector<std::vector<DecomposedPose>>& windows) {
  std::vector<Scalar> out;
  for (const auto& window : windows) {
    for (std::size_t i = 0; i + 1 < window.size(); ++i)
      out.push_back(normalized_displacement(window[i], window[i + 1]));
  }
  return out;
}

json DisplacementHistogram::to_json() const {
  return {{"bin_width", bin_width}, {"counts", counts}, {"total", total}};
}

DisplacementHistogram collect_statistics(
    const std::vector<std::vector<DecomposedPose>>& windows, int bins) {
  if (windows.empty()) throw ArgumentError("collect_statistics: no windows");
  if (bins < 1) throw ArgumentError("collect_statistics: bins must be >= 1");
  const std::vector<Scalar> samples = collect_displacements(windows);
  if (samples.empty())
    throw ArgumentError("collect_statistics: windows contain no pose pairs");

  const Scalar max_v = *std::max_element(samples.begin(), samples.end());
  DisplacementHistogram hist;
  hist.counts.assign(bins, 0);
  hist.bin_width = max_v > 0 ? max_v / bins : 1.0;
  for (Scalar v : samples) {
    auto bin = static_cast<std::int64_t>(v / hist.bin_width);
    bin = std::min<std::int64_t>(bin, bins - 1);
    ++hist.counts[static_cast<std::size_t>(bin)];
  }
  hist.total = static_cast<std::int64_t>(samples.size());
  return hist;
}

MotionPrior fit_prior(const std::vector<Scalar>& samples, PriorFamily family) {
  const auto n = static_cast<Scalar>(samples.size());
  if (samples.size() < 2)
    throw FitError("fit_prior: need at least 2 samples");

  MotionPrior prior;
  prior.family = family;
  switch (family) {
    case PriorFamily::rayleigh: {
      Scalar sum_sq = 0;
      for (Scalar v : samples) sum_sq += v * v;
      prior.sigma = std::sqrt(sum_sq / (2 * n));
      if (prior.sigma <= 0)
        throw FitError("fit_prior: rayleigh fit degenerate (all samples zero)");
      break;
    }
    case PriorFamily::gaussian: {
      const Scalar mean =
          std::accumulate(samples.begin(), samples.end(), 0.0) / n;
      Scalar var = 0;
      for (Scalar v : samples) var += (v - mean) * (v - mean);
      var /= n;
      prior.mu = mean;
      prior.sigma = std::sqrt(var);
      if (prior.sigma <= 0)
        throw FitError("fit_prior: gaussian fit degenerate (identical samples)");
      break;
    }
    case PriorFamily::uniform: {
      const auto [lo_it, hi_it] =
          std::minmax_element(samples.begin(), samples.end());
      prior.lo = *lo_it;
      prior.hi = *hi_it;
      if (prior.hi <= prior.lo)
        throw FitError("fit_prior: uniform fit degenerate (identical samples)");
      break;
    }
  }
  prior.mode_density = prior.density(prior.mode());
  return prior;
}

Scalar scale_factor(Scalar displacement, const MotionPrior& prior) {
  const Scalar raw = prior.density(displacement) / prior.mode_density;
  return kScaleSpan * raw + kScaleFloor;
}

FuseMode fuse_mode_from_string(const std::string& name) {
  if (name == "divide") return FuseMode::divide;
  if (name == "multiply") return FuseMode::multiply;
  if (name == "add") return FuseMode::add;
  throw ArgumentError("unknown fuse mode: " + name);
}

std::string to_string(FuseMode mode) {
  switch (mode) {
    case FuseMode::divide: return "divide";
    case FuseMode::multiply: return "multiply";
    case FuseMode::add: return "add";
  }
  throw ArgumentError("invalid fuse mode value");
}

ScaledPose fuse_pose(const CoordMat& normalized, Scalar scale, FuseMode mode,
                     Scalar displacement) {
  ScaledPose out;
  out.scale = scale;
  out.displacement = displacement;
  switch (mode) {
    case FuseMode::divide: out.scaled = normalized / scale; break;
    case FuseMode::multiply: out.scaled = normalized * scale; break;
    case FuseMode::add: out.scaled = normalized.array() + scale; break;
    default: throw ArgumentError("invalid fuse mode value");
  }
  return out;
}

std::vector<ScaledPose> embed_window(const std::vector<DecomposedPose>& window,
                                     const MotionPrior& prior, FuseMode mode,
                                     bool motion_embed) {
  if (window.size() < 2)
    throw ArgumentError("embed_window: need at least 2 poses");

  std::vector<Scalar> disp(window.size() - 1);
  for (std::size_t i = 0; i + 1 < window.size(); ++i)
    disp[i] = normalized_displacement(window[i], window[i + 1]);

  std::vector<ScaledPose> out;
  out.reserve(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    // Pose i takes the displacement ending at it; the first pose has none
    // and borrows its successor displacement.
    const Scalar v = disp[i == 0 ? 0 : i - 1];
    const Scalar s = motion_embed ? scale_factor(v, prior) : 1.0;
    out.push_back(fuse_pose(window[i].normalized, s, mode, v));
  }
  return out;
}

}  // namespace pak
