#pragma once

#include <string>
#include <vector>

#include "hough6d/inference/detect.hpp"

namespace hough6d {

/// Hypothesis text grammar: a `hyp_version 1` header, then one line per
/// hypothesis: score valid r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz.
std::string writeHypothesesText(const std::vector<Hypothesis>& hypotheses);
std::vector<Hypothesis> parseHypothesesText(const std::string& text);

void saveHypotheses(const std::vector<Hypothesis>& hypotheses, const std::string& path);
std::vector<Hypothesis> loadHypotheses(const std::string& path);

}  // namespace hough6d
