#pragma once

#include "pak/scorer.hpp"

#include <string>

namespace pak {

/// Renders one video's score curve as an SVG image: the frame scores as a
/// line, with a shaded band over frames labeled anomalous.
void write_score_svg(const std::string& path, const ScoreSeries& series);

}  // namespace pak
