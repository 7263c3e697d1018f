#pragma once

#include <string>
#include <vector>

#include "hough6d/forest/forest.hpp"

namespace hough6d {

/// Forest model container: "H6DFORST" magic, u32 version, u32 CRC-32 of
/// the payload, u64 payload length, little-endian payload. Canonical
/// encoding: saving a loaded model reproduces the file byte for byte.
/// Full byte layout in docs/formats.md.
inline constexpr uint32_t kModelFormatVersion = 1;

std::vector<uint8_t> serializeModel(const ForestModel& model);
ForestModel deserializeModel(const std::vector<uint8_t>& bytes);

void saveModel(const ForestModel& model, const std::string& path);
ForestModel loadModel(const std::string& path);

}  // namespace hough6d
