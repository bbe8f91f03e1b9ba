#pragma once

#include "pak/types.hpp"

#include <vector>

namespace pak {

/// Smallest admissible box extent in pixels; degenerate axes are clamped.
inline constexpr Scalar kMinBoxExtent = 1e-6;

/// A pose split into where it is (center), how big it is (box) and what it
/// looks like (normalized): joint coordinates min-max rescaled into [0,1]^2
/// within the pose's own bounding box. Confidence-0 joints are excluded
/// from the box and normalize to (0, 0).
struct DecomposedPose {
  Vec2 center;       // box midpoint, pixels
  Vec2 box;          // (w, h), pixels, each >= kMinBoxExtent
  CoordMat normalized;  // K x 2, in [0,1]^2
  VecX confidences;     // K, in [0,1]
};

/// Throws DegeneratePoseError when no joint has confidence > 0.
DecomposedPose decompose(const Pose& pose);

/// Element-wise decompose; error messages name the failing pose offset.
std::vector<DecomposedPose> decompose_sequence(const WindowSample& window);

/// Maps normalized coordinates back to pixels. Exact for poses whose box
/// was not clamped; degenerate axes reconstruct to the axis midpoint.
CoordMat denormalize(const DecomposedPose& pose);

}  // namespace pak
