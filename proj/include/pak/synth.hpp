#pragma once

#include "pak/scorer.hpp"
#include "pak/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pak {

/// Synthetic trajectory generator: normal tracks perform a jittered random
/// walk with Rayleigh-distributed normalized step sizes, anomalous tracks
/// walk `anomaly_speed_multiplier` times faster with identical pose shapes.
struct SynthSpec {
  int n_normal = 200;
  int n_anomalous = 200;
  double normal_speed = 0.02;  // Rayleigh sigma of step / (w + h)
  double anomaly_speed_multiplier = 5.0;
  int joints_per_pose = 17;
  double jitter_std = 0.02;  // per-joint jitter std, fraction of box size
  int frames_per_trajectory = 40;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SynthData {
  std::vector<PoseTrajectory> trajectories;  // one video per trajectory
  std::vector<FrameLabel> labels;
};

/// Deterministic given spec.seed; anomalous trajectories' frames are
/// labeled 1, everything else 0.
SynthData generate(const SynthSpec& spec);

/// Certifies the benchmark is solvable: scores every frame by the mean
/// normalized displacement of its covering windows (same aggregation as the
/// model pipeline) and returns the resulting AUC. Requires
/// anomaly_speed_multiplier >= 3; a trained model scoring well below this
/// value indicates a pipeline bug rather than a hard benchmark.
Scalar oracle_auc_floor(const SynthSpec& spec, int window = 16, int stride = 2,
                        int poses_per_window = 8);

}  // namespace pak
