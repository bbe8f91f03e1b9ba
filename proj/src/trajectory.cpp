#include "pak/trajectory.hpp"

#include "pak/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pak {

using nlohmann::json;

namespace {

PoseTrajectory parse_record(const json& rec, std::size_t line_no,
                            const std::string& name) {
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << name << ":" << line_no << ": " << what;
    throw ParseError(os.str());
  };

  if (!rec.is_object()) fail("record is not a JSON object");
  for (const char* key : {"scene", "video", "track", "frames", "joints"}) {
    if (!rec.contains(key)) fail(std::string("missing key \"") + key + "\"");
  }

  PoseTrajectory traj;
  traj.scene_id = rec.at("scene").get<std::string>();
  traj.video_id = rec.at("video").get<std::string>();
  traj.track_id = rec.at("track").get<int>();
  traj.frame_indices = rec.at("frames").get<std::vector<int>>();

  const json& joints = rec.at("joints");
  if (!joints.is_array()) fail("\"joints\" is not an array");
  if (joints.size() != traj.frame_indices.size())
    fail("frames/joints length mismatch");
  if (traj.frame_indices.empty()) fail("trajectory has no frames");
  for (std::size_t i = 1; i < traj.frame_indices.size(); ++i) {
    if (traj.frame_indices[i] <= traj.frame_indices[i - 1])
      fail("frame indices not strictly increasing");
  }

  traj.poses.reserve(joints.size());
  for (const json& pose_json : joints) {
    if (!pose_json.is_array() || pose_json.empty())
      fail("pose is not a non-empty array");
    Pose pose;
    pose.reserve(pose_json.size());
    for (const json& j : pose_json) {
      if (!j.is_array() || j.size() != 3) fail("joint is not an [x,y,c] triple");
      Joint joint;
      joint.x = j[0].get<Scalar>();
      joint.y = j[1].get<Scalar>();
      joint.confidence = std::clamp(j[2].get<Scalar>(), 0.0, 1.0);
      if (!std::isfinite(joint.x) || !std::isfinite(joint.y))
        fail("non-finite joint coordinate");
      pose.push_back(joint);
    }
    traj.poses.push_back(std::move(pose));
  }
  return traj;
}

}  // namespace

std::vector<PoseTrajectory> load_trajectories(std::istream& in,
                                              const std::string& name) {
  std::vector<PoseTrajectory> out;
  std::string line;
  std::size_t line_no = 0;
  int joint_count = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      std::ostringstream os;
      os << name << ":" << line_no << ": " << e.what();
      throw ParseError(os.str());
    }
    PoseTrajectory traj = parse_record(rec, line_no, name);
    for (const Pose& pose : traj.poses) {
      int k = static_cast<int>(pose.size());
      if (joint_count < 0) joint_count = k;
      if (k != joint_count) {
        std::ostringstream os;
        os << name << ":" << line_no << ": pose has " << k
           << " joints, expected " << joint_count;
        throw SchemaError(os.str());
      }
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<PoseTrajectory> load_trajectories(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);
  return load_trajectories(in, path);
}

void write_trajectories(std::ostream& out,
                        const std::vector<PoseTrajectory>& trajectories) {
  for (const PoseTrajectory& traj : trajectories) {
    json rec;
    rec["scene"] = traj.scene_id;
    rec["video"] = traj.video_id;
    rec["track"] = traj.track_id;
    rec["frames"] = traj.frame_indices;
    json joints = json::array();
    for (const Pose& pose : traj.poses) {
      json pj = json::array();
      for (const Joint& j : pose) pj.push_back({j.x, j.y, j.confidence});
      joints.push_back(std::move(pj));
    }
    rec["joints"] = std::move(joints);
    out << rec.dump() << '\n';
  }
}

void write_trajectories(const std::string& path,
                        const std::vector<PoseTrajectory>& trajectories) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open output file: " + path);
  write_trajectories(out, trajectories);
}

std::vector<WindowSample> sample_windows(const PoseTrajectory& traj, int window,
                                         int stride, int poses_per_window) {
  if (stride < 1) throw ArgumentError("stride must be >= 1");
  if (poses_per_window < 2) throw ArgumentError("poses_per_window must be >= 2");
  if (window < poses_per_window)
    throw ArgumentError("window must be >= poses_per_window");
  if (window % poses_per_window != 0)
    throw ArgumentError("window must be divisible by poses_per_window");

  const int len = static_cast<int>(traj.poses.size());
  std::vector<WindowSample> out;
  if (len < window) return out;

  const int dilation = window / poses_per_window;
  const int last_offset = len - window;

  std::vector<int> offsets;
  for (int o = 0; o <= last_offset; o += stride) offsets.push_back(o);
  // A tail window keeps the trajectory's final frames covered when the
  // stride does not land exactly on the last admissible offset.
  if (offsets.back() != last_offset) offsets.push_back(last_offset);

  out.reserve(offsets.size());
  for (int o : offsets) {
    WindowSample w;
    w.scene_id = traj.scene_id;
    w.video_id = traj.video_id;
    w.track_id = traj.track_id;
    w.start_frame = traj.frame_indices[o];
    w.poses.reserve(poses_per_window);
    for (int k = 0; k < poses_per_window; ++k)
      w.poses.push_back(traj.poses[o + k * dilation]);
    w.covered_frames.assign(traj.frame_indices.begin() + o,
                            traj.frame_indices.begin() + o + window);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace pak
