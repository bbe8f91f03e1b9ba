#include "pak/synth.hpp"

#include "pak/errors.hpp"
#include "pak/motion_prior.hpp"
#include "pak/preprocess.hpp"
#include "pak/scorer.hpp"
#include "pak/trajectory.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace pak {

namespace {

constexpr Scalar kTau = 6.283185307179586;

// COCO-style 17-joint body plan (x right, y down); other joint counts use a
// spiral layout. Either way the template is rescaled to span [0,1]^2 exactly
// so a clean pose's bounding box equals the nominal (w, h).
std::vector<Vec2> skeleton_template(int joints) {
  std::vector<Vec2> out;
  if (joints == 17) {
    out = {
        {0.50, 0.00},  // nose
        {0.44, 0.03}, {0.56, 0.03},  // eyes
        {0.36, 0.06}, {0.64, 0.06},  // ears
        {0.28, 0.20}, {0.72, 0.20},  // shoulders
        {0.14, 0.36}, {0.86, 0.36},  // elbows
        {0.00, 0.52}, {1.00, 0.52},  // wrists
        {0.36, 0.52}, {0.64, 0.52},  // hips
        {0.33, 0.76}, {0.67, 0.76},  // knees
        {0.30, 1.00}, {0.70, 1.00},  // ankles
    };
  } else {
    out.resize(static_cast<std::size_t>(joints));
    for (int i = 0; i < joints; ++i) {
      const Scalar frac =
          joints > 1 ? static_cast<Scalar>(i) / (joints - 1) : 0.0;
      out[static_cast<std::size_t>(i)] =
          Vec2(0.5 + 0.5 * std::sin(2.39996 * i), frac);
    }
  }
  for (int axis = 0; axis < 2; ++axis) {
    Scalar lo = out[0][axis], hi = out[0][axis];
    for (const Vec2& p : out) {
      lo = std::min(lo, p[axis]);
      hi = std::max(hi, p[axis]);
    }
    const Scalar span = hi > lo ? hi - lo : 1.0;
    for (Vec2& p : out) p[axis] = (p[axis] - lo) / span;
  }
  return out;
}

Scalar rayleigh_draw(std::mt19937_64& rng, Scalar sigma) {
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  return sigma * std::sqrt(-2.0 * std::log(1.0 - unit(rng)));
}

std::string video_name(int index) {
  std::ostringstream os;
  os << "00_" << std::setw(4) << std::setfill('0') << index;
  return os.str();
}

PoseTrajectory make_trajectory(const SynthSpec& spec, int video_index,
                               Scalar speed_sigma, std::mt19937_64& rng) {
  std::uniform_real_distribution<Scalar> unit(0.0, 1.0);
  std::normal_distribution<Scalar> gauss(0.0, 1.0);

  const std::vector<Vec2> tmpl = skeleton_template(spec.joints_per_pose);
  const Scalar w = 30.0 + 30.0 * unit(rng);
  const Scalar h = 70.0 + 50.0 * unit(rng);
  Vec2 center(200.0 + 600.0 * unit(rng), 200.0 + 600.0 * unit(rng));
  Scalar heading = kTau * unit(rng);

  PoseTrajectory traj;
  traj.scene_id = "00";
  traj.video_id = video_name(video_index);
  traj.track_id = 1;
  traj.frame_indices.resize(static_cast<std::size_t>(spec.frames_per_trajectory));
  traj.poses.resize(static_cast<std::size_t>(spec.frames_per_trajectory));

  for (int f = 0; f < spec.frames_per_trajectory; ++f) {
    traj.frame_indices[static_cast<std::size_t>(f)] = f;
    Pose& pose = traj.poses[static_cast<std::size_t>(f)];
    pose.resize(tmpl.size());
    for (std::size_t j = 0; j < tmpl.size(); ++j) {
      pose[j].x = center.x() - 0.5 * w + tmpl[j].x() * w +
                  spec.jitter_std * w * gauss(rng);
      pose[j].y = center.y() - 0.5 * h + tmpl[j].y() * h +
                  spec.jitter_std * h * gauss(rng);
      pose[j].confidence = 0.7 + 0.3 * unit(rng);
    }
    heading += 0.3 * gauss(rng);
    const Scalar step = rayleigh_draw(rng, speed_sigma) * (w + h);
    center += step * Vec2(std::cos(heading), std::sin(heading));
  }
  return traj;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_normal < 0 || n_anomalous < 0)
    throw ArgumentError("synth: trajectory counts must be >= 0");
  if (!(anomaly_speed_multiplier > 1))
    throw ArgumentError("synth: anomaly_speed_multiplier must be > 1");
  if (normal_speed <= 0) throw ArgumentError("synth: normal_speed must be > 0");
  if (jitter_std < 0) throw ArgumentError("synth: jitter_std must be >= 0");
  if (joints_per_pose < 2)
    throw ArgumentError("synth: joints_per_pose must be >= 2");
  if (frames_per_trajectory < 1)
    throw ArgumentError("synth: frames_per_trajectory must be >= 1");
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  SynthData data;
  data.trajectories.reserve(
      static_cast<std::size_t>(spec.n_normal + spec.n_anomalous));
  int video_index = 0;
  for (int i = 0; i < spec.n_normal; ++i)
    data.trajectories.push_back(
        make_trajectory(spec, video_index++, spec.normal_speed, rng));
  for (int i = 0; i < spec.n_anomalous; ++i)
    data.trajectories.push_back(make_trajectory(
        spec, video_index++, spec.normal_speed * spec.anomaly_speed_multiplier,
        rng));

  for (int v = 0; v < video_index; ++v) {
    const int label = v < spec.n_normal ? 0 : 1;
    for (int f = 0; f < spec.frames_per_trajectory; ++f)
      data.labels.push_back({"00", video_name(v), f, label});
  }
  return data;
}

Scalar oracle_auc_floor(const SynthSpec& spec, int window, int stride,
                        int poses_per_window) {
  if (spec.anomaly_speed_multiplier < 3)
    throw ArgumentError(
        "oracle_auc_floor: requires anomaly_speed_multiplier >= 3");
  const SynthData data = generate(spec);

  std::vector<Scalar> all_scores;
  std::vector<int> all_labels;
  for (std::size_t i = 0; i < data.trajectories.size(); ++i) {
    const PoseTrajectory& traj = data.trajectories[i];
    std::vector<WindowScoreRecord> records;
    for (const WindowSample& w :
         sample_windows(traj, window, stride, poses_per_window)) {
      const std::vector<DecomposedPose> decomposed = decompose_sequence(w);
      Scalar mean_disp = 0;
      for (std::size_t p = 0; p + 1 < decomposed.size(); ++p)
        mean_disp += normalized_displacement(decomposed[p], decomposed[p + 1]);
      mean_disp /= static_cast<Scalar>(decomposed.size() - 1);
      records.push_back({traj.track_id, w.covered_frames, mean_disp});
    }
    const VecX scores =
        frame_scores(records, static_cast<int>(traj.frame_indices.size()));
    const int label = static_cast<int>(i) < spec.n_normal ? 0 : 1;
    for (Eigen::Index f = 0; f < scores.size(); ++f) {
      all_scores.push_back(scores[f]);
      all_labels.push_back(label);
    }
  }
  const VecX scores = Eigen::Map<VecX>(all_scores.data(),
                                       static_cast<Eigen::Index>(all_scores.size()));
  return auc(scores, all_labels);
}

}  // namespace pak
