#include "pak/scorer.hpp"

#include "pak/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace pak {

using Eigen::Index;

Scalar window_score(const MatX& pred, const MatX& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ArgumentError("window_score: shape mismatch");
  if (!pred.allFinite() || !target.allFinite())
    throw NumericError("window_score: non-finite input");
  return (pred - target).cwiseAbs().sum();
}

VecX frame_scores(const std::vector<WindowScoreRecord>& windows,
                  int video_length) {
  if (video_length < 0) throw ArgumentError("frame_scores: negative length");
  VecX out = VecX::Zero(video_length);

  // (person, frame) -> (score sum, window count)
  std::map<std::pair<int, int>, std::pair<Scalar, int>> acc;
  for (const WindowScoreRecord& w : windows) {
    for (int frame : w.covered_frames) {
      if (frame < 0 || frame >= video_length) continue;
      auto& slot = acc[{w.person, frame}];
      slot.first += w.score;
      slot.second += 1;
    }
  }
  for (const auto& [key, slot] : acc) {
    const Scalar person_score = slot.first / slot.second;
    out[key.second] = std::max(out[key.second], person_score);
  }
  return out;
}

void normalize_per_scene(std::vector<ScoreSeries>& series) {
  std::map<std::string, std::pair<Scalar, Scalar>> range;
  for (const ScoreSeries& s : series) {
    if (s.frame_scores.size() == 0) continue;
    auto [it, inserted] = range.try_emplace(
        s.scene_id, std::numeric_limits<Scalar>::infinity(),
        -std::numeric_limits<Scalar>::infinity());
    it->second.first = std::min(it->second.first, s.frame_scores.minCoeff());
    it->second.second = std::max(it->second.second, s.frame_scores.maxCoeff());
  }
  for (ScoreSeries& s : series) {
    if (s.frame_scores.size() > 0) {
      const auto [lo, hi] = range.at(s.scene_id);
      if (hi > lo)
        s.frame_scores = (s.frame_scores.array() - lo) / (hi - lo);
      else
        s.frame_scores.setZero();
    }
    s.normalized = true;
  }
}

Scalar auc(const VecX& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size())
    throw ArgumentError("auc: scores/labels length mismatch");
  const Index n = scores.size();
  std::int64_t positives = 0, negatives = 0;
  for (int l : labels) {
    if (l == 1)
      ++positives;
    else if (l == 0)
      ++negatives;
    else
      throw ArgumentError("auc: labels must be 0 or 1");
  }
  if (positives == 0 || negatives == 0)
    throw MetricError("auc: both classes must be present");

  // Rank statistic with average ranks for ties, equivalent to counting
  // positive-over-negative pairs with ties worth 1/2.
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](Index a, Index b) { return scores[a] < scores[b]; });

  Scalar positive_rank_sum = 0;
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j < n && scores[idx[static_cast<std::size_t>(j)]] ==
                        scores[idx[static_cast<std::size_t>(i)]])
      ++j;
    // Ranks are 1-based; tied entries share the average rank of their run.
    const Scalar avg_rank = 0.5 * static_cast<Scalar>(i + 1 + j);
    for (Index k = i; k < j; ++k)
      if (labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] == 1)
        positive_rank_sum += avg_rank;
    i = j;
  }
  const Scalar p = static_cast<Scalar>(positives);
  return (positive_rank_sum - p * (p + 1) / 2) /
         (p * static_cast<Scalar>(negatives));
}

Scalar overall_auc(const std::vector<ScoreSeries>& series) {
  std::vector<Scalar> scores;
  std::vector<int> labels;
  for (const ScoreSeries& s : series) {
    for (Index i = 0; i < s.frame_scores.size(); ++i) {
      if (i < static_cast<Index>(s.labels.size()) && s.labels[i] >= 0) {
        scores.push_back(s.frame_scores[i]);
        labels.push_back(s.labels[i]);
      }
    }
  }
  VecX v = Eigen::Map<VecX>(scores.data(), static_cast<Index>(scores.size()));
  return auc(v, labels);
}

void write_score_csv(const std::string& path,
                     const std::vector<ScoreSeries>& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open score CSV for writing: " + path);
  out << "scene,video,frame,score,label\n";
  out.precision(17);
  for (const ScoreSeries& s : series) {
    for (Index i = 0; i < s.frame_scores.size(); ++i) {
      const int label =
          i < static_cast<Index>(s.labels.size()) ? s.labels[i] : -1;
      out << s.scene_id << ',' << s.video_id << ',' << i << ','
          << s.frame_scores[i] << ',' << label << '\n';
    }
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<ScoreSeries> read_score_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score CSV: " + path);
  std::string line;
  std::size_t line_no = 0;

  struct Row {
    int frame;
    Scalar score;
    int label;
  };
  std::map<std::pair<std::string, std::string>, std::vector<Row>> videos;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("scene,", 0) == 0) continue;  // header
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected 5 CSV fields";
      throw ParseError(os.str());
    }
    try {
      videos[{fields[0], fields[1]}].push_back(
          {std::stoi(fields[2]), std::stod(fields[3]), std::stoi(fields[4])});
    } catch (const std::exception&) {
      std::ostringstream os;
      os << path << ":" << line_no << ": malformed numeric field";
      throw ParseError(os.str());
    }
  }

  std::vector<ScoreSeries> out;
  out.reserve(videos.size());
  for (auto& [key, rows] : videos) {
    int max_frame = 0;
    for (const Row& r : rows) max_frame = std::max(max_frame, r.frame);
    ScoreSeries s;
    s.scene_id = key.first;
    s.video_id = key.second;
    s.frame_scores = VecX::Zero(max_frame + 1);
    s.labels.assign(static_cast<std::size_t>(max_frame) + 1, -1);
    for (const Row& r : rows) {
      s.frame_scores[r.frame] = r.score;
      s.labels[static_cast<std::size_t>(r.frame)] = r.label;
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_labels_csv(const std::string& path,
                      const std::vector<FrameLabel>& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open labels CSV for writing: " + path);
  out << "scene,video,frame,label\n";
  for (const FrameLabel& l : labels)
    out << l.scene_id << ',' << l.video_id << ',' << l.frame << ',' << l.label
        << '\n';
}

std::vector<FrameLabel> read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels CSV: " + path);
  std::vector<FrameLabel> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.find("label") != std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      std::ostringstream os;
      os << path << ":" << line_no << ": expected 4 CSV fields";
      throw ParseError(os.str());
    }
    try {
      out.push_back(
          {fields[0], fields[1], std::stoi(fields[2]), std::stoi(fields[3])});
    } catch (const std::exception&) {
      std::ostringstream os;
      os << path << ":" << line_no << ": malformed numeric field";
      throw ParseError(os.str());
    }
  }
  return out;
}

void apply_labels_csv(const std::string& path,
                      std::vector<ScoreSeries>& series) {
  std::map<std::pair<std::string, std::string>, std::map<int, int>> labels;
  for (const FrameLabel& l : read_labels_csv(path))
    labels[{l.scene_id, l.video_id}][l.frame] = l.label;
  for (ScoreSeries& s : series) {
    auto it = labels.find({s.scene_id, s.video_id});
    if (it == labels.end()) continue;
    if (s.labels.size() < static_cast<std::size_t>(s.frame_scores.size()))
      s.labels.assign(static_cast<std::size_t>(s.frame_scores.size()), -1);
    for (const auto& [frame, label] : it->second) {
      if (frame >= 0 && frame < static_cast<int>(s.labels.size()))
        s.labels[static_cast<std::size_t>(frame)] = label;
    }
  }
}

}  // namespace pak
