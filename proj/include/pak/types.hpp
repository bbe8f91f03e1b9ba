#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace pak {

using Scalar = double;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;

/// Per-joint (x, y) rows; one row per joint or per token.
using CoordMat = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

/// A single 2D keypoint with detector confidence in [0, 1].
/// Missing joints are encoded as confidence 0 at (0, 0).
struct Joint {
  Scalar x = 0;
  Scalar y = 0;
  Scalar confidence = 0;
};

using Pose = std::vector<Joint>;

/// One tracked person's pose sequence within a video.
/// frame_indices are strictly increasing; poses[i] belongs to frame_indices[i].
struct PoseTrajectory {
  std::string scene_id;
  std::string video_id;
  int track_id = 0;
  std::vector<int> frame_indices;
  std::vector<Pose> poses;

  int joints_per_pose() const {
    return poses.empty() ? 0 : static_cast<int>(poses.front().size());
  }
};

/// A fixed-length slice of a trajectory used for training or scoring.
/// `poses` holds the T sub-sampled poses; `covered_frames` the full frame
/// span of the window (the frames this window's score applies to).
struct WindowSample {
  std::string scene_id;
  std::string video_id;
  int track_id = 0;
  int start_frame = 0;
  std::vector<Pose> poses;
  std::vector<int> covered_frames;
};

}  // namespace pak
