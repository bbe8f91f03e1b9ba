#pragma once

#include "pak/preprocess.hpp"
#include "pak/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace pak {

enum class PriorFamily { rayleigh, gaussian, uniform };

PriorFamily prior_family_from_string(const std::string& name);
std::string to_string(PriorFamily family);

/// A continuous distribution fitted to normalized pose-center displacements
/// observed in training data. The density is supported on v >= 0 and
/// integrates to 1 there (the gaussian family is truncated at 0 and
/// renormalized accordingly).
struct MotionPrior {
  PriorFamily family = PriorFamily::rayleigh;
  Scalar sigma = 0;  // rayleigh, gaussian
  Scalar mu = 0;     // gaussian
  Scalar lo = 0;     // uniform
  Scalar hi = 0;     // uniform
  Scalar mode_density = 0;

  Scalar density(Scalar v) const;
  Scalar mode() const;

  nlohmann::json to_json() const;
  static MotionPrior from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static MotionPrior load(const std::string& path);
};

/// Euclidean center movement between adjacent poses divided by the first
/// pose's box perimeter proxy (w + h). Unitless and similarity-invariant.
Scalar normalized_displacement(const DecomposedPose& prev,
                               const DecomposedPose& cur);

/// All adjacent-pose displacements of the given windows, in window order.
std::vector<Scalar> collect_displacements(
    const std::vector<std::vector<DecomposedPose>>& windows);

/// Fixed-width histogram over [0, max displacement]; diagnostic only, the
/// prior is fitted on the raw samples.
struct DisplacementHistogram {
  Scalar bin_width = 0;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;

  nlohmann::json to_json() const;
};

DisplacementHistogram collect_statistics(
    const std::vector<std::vector<DecomposedPose>>& windows, int bins = 100);

/// Maximum-likelihood / moment fits:
///   rayleigh: sigma = sqrt(sum v^2 / 2n)
///   gaussian: mu = mean, sigma = population std
///   uniform:  [min, max]
/// Throws FitError on fewer than 2 samples or a degenerate spread.
MotionPrior fit_prior(const std::vector<Scalar>& samples, PriorFamily family);

/// Affine guard applied to the mode-normalized density so the factor stays
/// in [kScaleFloor, kScaleFloor + kScaleSpan] and is safe as a denominator.
inline constexpr Scalar kScaleSpan = 0.9;
inline constexpr Scalar kScaleFloor = 0.1;

/// s = kScaleSpan * density(v)/mode_density + kScaleFloor, in [0.1, 1.0].
Scalar scale_factor(Scalar displacement, const MotionPrior& prior);

enum class FuseMode { divide, multiply, add };

FuseMode fuse_mode_from_string(const std::string& name);
std::string to_string(FuseMode mode);

/// A normalized pose with its motion scale fused in.
struct ScaledPose {
  CoordMat scaled;       // K x 2
  Scalar scale = 1;      // s
  Scalar displacement = 0;  // v of the pair that produced s
};

ScaledPose fuse_pose(const CoordMat& normalized, Scalar scale, FuseMode mode,
                     Scalar displacement = 0);

/// Fuses each pose of a decomposed window with the scale of the displacement
/// ending at it; the first pose borrows the first displacement. With
/// motion_embed disabled every scale is 1 (inputs stay the normalized pose).
std::vector<ScaledPose> embed_window(const std::vector<DecomposedPose>& window,
                                     const MotionPrior& prior, FuseMode mode,
                                     bool motion_embed = true);

}  // namespace pak
