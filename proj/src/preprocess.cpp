#include "pak/preprocess.hpp"

#include "pak/errors.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace pak {

DecomposedPose decompose(const Pose& pose) {
  const int k = static_cast<int>(pose.size());
  Scalar x_min = std::numeric_limits<Scalar>::infinity();
  Scalar y_min = std::numeric_limits<Scalar>::infinity();
  Scalar x_max = -std::numeric_limits<Scalar>::infinity();
  Scalar y_max = -std::numeric_limits<Scalar>::infinity();
  bool any_confident = false;
  for (const Joint& j : pose) {
    if (j.confidence <= 0) continue;
    any_confident = true;
    x_min = std::min(x_min, j.x);
    x_max = std::max(x_max, j.x);
    y_min = std::min(y_min, j.y);
    y_max = std::max(y_max, j.y);
  }
  if (!any_confident)
    throw DegeneratePoseError("pose has no joint with confidence > 0");

  DecomposedPose out;
  out.center = Vec2(0.5 * (x_min + x_max), 0.5 * (y_min + y_max));
  out.box = Vec2(std::max(x_max - x_min, kMinBoxExtent),
                 std::max(y_max - y_min, kMinBoxExtent));
  out.normalized.resize(k, 2);
  out.confidences.resize(k);
  for (int i = 0; i < k; ++i) {
    const Joint& j = pose[i];
    out.confidences[i] = j.confidence;
    if (j.confidence <= 0) {
      out.normalized.row(i).setZero();
    } else {
      out.normalized(i, 0) = (j.x - x_min) / out.box.x();
      out.normalized(i, 1) = (j.y - y_min) / out.box.y();
    }
  }
  return out;
}

std::vector<DecomposedPose> decompose_sequence(const WindowSample& window) {
  std::vector<DecomposedPose> out;
  out.reserve(window.poses.size());
  for (std::size_t i = 0; i < window.poses.size(); ++i) {
    try {
      out.push_back(decompose(window.poses[i]));
    } catch (const DegeneratePoseError& e) {
      std::ostringstream os;
      os << "pose " << i << " of window at frame " << window.start_frame
         << ": " << e.what();
      throw DegeneratePoseError(os.str());
    }
  }
  return out;
}

CoordMat denormalize(const DecomposedPose& pose) {
  const Scalar x_min = pose.center.x() - 0.5 * pose.box.x();
  const Scalar y_min = pose.center.y() - 0.5 * pose.box.y();
  CoordMat raw(pose.normalized.rows(), 2);
  raw.col(0) = pose.normalized.col(0) * pose.box.x();
  raw.col(1) = pose.normalized.col(1) * pose.box.y();
  raw.col(0).array() += x_min;
  raw.col(1).array() += y_min;
  return raw;
}

}  // namespace pak
