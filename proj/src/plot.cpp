#include "pak/plot.hpp"

#include "pak/errors.hpp"

#include <algorithm>
#include <fstream>

namespace pak {

void write_score_svg(const std::string& path, const ScoreSeries& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open SVG for writing: " + path);

  const int width = 960, height = 240;
  const int margin = 40;
  const int plot_w = width - 2 * margin;
  const int plot_h = height - 2 * margin;
  const Eigen::Index n = series.frame_scores.size();

  Scalar lo = 0, hi = 1;
  if (n > 0) {
    lo = std::min(series.frame_scores.minCoeff(), 0.0);
    hi = std::max(series.frame_scores.maxCoeff(), lo + 1e-12);
  }
  auto x_of = [&](Scalar frame) {
    return margin + (n > 1 ? frame / static_cast<Scalar>(n - 1) : 0.5) * plot_w;
  };
  auto y_of = [&](Scalar score) {
    return margin + (1.0 - (score - lo) / (hi - lo)) * plot_h;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Label band: contiguous runs of label == 1.
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(series.labels.size());) {
    if (series.labels[static_cast<std::size_t>(i)] != 1) {
      ++i;
      continue;
    }
    Eigen::Index j = i;
    while (j < static_cast<Eigen::Index>(series.labels.size()) &&
           series.labels[static_cast<std::size_t>(j)] == 1)
      ++j;
    out << "<rect x=\"" << x_of(static_cast<Scalar>(i)) << "\" y=\"" << margin
        << "\" width=\""
        << std::max(1.0, x_of(static_cast<Scalar>(j - 1)) -
                             x_of(static_cast<Scalar>(i)))
        << "\" height=\"" << plot_h
        << "\" fill=\"#d62728\" fill-opacity=\"0.25\"/>\n";
    i = j;
  }

  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  if (n > 0) {
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
           "points=\"";
    for (Eigen::Index i = 0; i < n; ++i)
      out << x_of(static_cast<Scalar>(i)) << ',' << y_of(series.frame_scores[i])
          << ' ';
    out << "\"/>\n";
  }

  out << "<text x=\"" << margin << "\" y=\"" << margin - 12
      << "\" font-family=\"sans-serif\" font-size=\"14\">scene "
      << series.scene_id << " / video " << series.video_id
      << " (frame anomaly score)</text>\n";
  out << "</svg>\n";
}

}  // namespace pak
