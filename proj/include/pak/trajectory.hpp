#pragma once

#include "pak/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace pak {

/// Reads a trajectory file (JSON lines, one trajectory per line):
///   {"scene":"01","video":"01_0014","track":3,"frames":[305,...],
///    "joints":[[[x,y,c],...K],...]}
/// Confidences are clamped to [0, 1]; coordinates keep input precision.
/// Throws ParseError (with line number) on malformed records and
/// SchemaError when the joint count varies within the file.
std::vector<PoseTrajectory> load_trajectories(const std::string& path);
std::vector<PoseTrajectory> load_trajectories(std::istream& in,
                                              const std::string& name = "<stream>");

void write_trajectories(const std::string& path,
                        const std::vector<PoseTrajectory>& trajectories);
void write_trajectories(std::ostream& out,
                        const std::vector<PoseTrajectory>& trajectories);

/// Slides a window of `window` consecutive poses over the trajectory at the
/// given stride and keeps `poses_per_window` evenly sub-sampled poses per
/// window (dilation = window / poses_per_window). Offsets are multiples of
/// the stride plus, when needed for full coverage, one final window ending
/// at the trajectory's last pose. Trajectories shorter than `window` yield
/// no samples.
std::vector<WindowSample> sample_windows(const PoseTrajectory& traj, int window,
                                         int stride, int poses_per_window);

}  // namespace pak
