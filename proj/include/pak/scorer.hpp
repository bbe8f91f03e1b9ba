#pragma once

#include "pak/types.hpp"

#include <string>
#include <vector>

namespace pak {

/// Frame-level anomaly scores for one video, with optional 0/1 labels
/// (-1 where unknown). frame_scores[i] belongs to frame i.
struct ScoreSeries {
  std::string scene_id;
  std::string video_id;
  VecX frame_scores;
  std::vector<int> labels;  // empty or frame_scores.size() entries
  bool normalized = false;
};

/// L1 reconstruction error: sum of |dx| + |dy| over all joints.
Scalar window_score(const MatX& pred, const MatX& target);

/// One scored window of one tracked person.
struct WindowScoreRecord {
  int person = 0;
  std::vector<int> covered_frames;
  Scalar score = 0;
};

/// Per-frame scores for one video: a frame covered by several of a person's
/// windows takes their mean, each frame takes the max over persons, and
/// frames no window covers score 0.
VecX frame_scores(const std::vector<WindowScoreRecord>& windows,
                  int video_length);

/// Min-max normalization over all frames sharing a scene_id; a scene with
/// constant scores maps to all zeros.
void normalize_per_scene(std::vector<ScoreSeries>& series);

/// Frame-level ROC-AUC; ties count 1/2. Throws MetricError unless both
/// classes are present.
Scalar auc(const VecX& scores, const std::vector<int>& labels);

/// AUC over every labeled frame of the given series concatenated.
Scalar overall_auc(const std::vector<ScoreSeries>& series);

// --- score CSV: "scene,video,frame,score,label" (label -1 when unknown) ---

void write_score_csv(const std::string& path,
                     const std::vector<ScoreSeries>& series);
std::vector<ScoreSeries> read_score_csv(const std::string& path);

// --- labels CSV: "scene,video,frame,label" ---

struct FrameLabel {
  std::string scene_id;
  std::string video_id;
  int frame = 0;
  int label = 0;
};

void write_labels_csv(const std::string& path,
                      const std::vector<FrameLabel>& labels);
std::vector<FrameLabel> read_labels_csv(const std::string& path);

/// Applies labels to matching frames of the series.
void apply_labels_csv(const std::string& path, std::vector<ScoreSeries>& series);

}  // namespace pak
