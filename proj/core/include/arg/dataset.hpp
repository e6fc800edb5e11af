#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arg/synth.hpp"

namespace arg {

/// Dataset-level dimensions stored in the file header.
struct DatasetInfo {
  std::size_t feature_dim = 0;
  std::size_t frames = 0;            // T, frames per video
  std::size_t action_classes = 0;    // C_I
  std::size_t activity_classes = 0;  // C_G
  double image_width = 0.0;
  double image_height = 0.0;

  friend bool operator==(const DatasetInfo&, const DatasetInfo&) = default;
};

struct Dataset {
  DatasetInfo info;
  std::vector<SceneSample> samples;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

DatasetInfo dataset_info(const SynthConfig& config);
Dataset make_dataset(const SynthConfig& config, std::size_t count, std::uint64_t first_video_id = 0);

/// Keeps samples [begin, begin + count).
Dataset slice(const Dataset& data, std::size_t begin, std::size_t count);

/// Checks every sample against the header dimensions.
void validate_dataset(const Dataset& data);

// Binary container, all integers and floats little-endian:
//   "ARGDS01\0"
//   u64 header length, then that many bytes of JSON:
//     {"version":1,"count":…,"feature_dim":…,"frames":…,"action_classes":…,
//      "activity_classes":…,"image_width":…,"image_height":…}
//   per sample:
//     u32 actor count n
//     T·n positions as (f64 x, f64 y), frame-major
//     T·n u32 frame indices
//     T·n·d f64 features, frame-major, row-major within a frame
//     n u32 action labels, u32 group label, i32 key actor A, i32 key actor B
//     u64 video id
std::string encode_dataset(const Dataset& data);
Dataset decode_dataset(std::string_view bytes);

void write_dataset(const std::string& path, const Dataset& data);
Dataset read_dataset(const std::string& path);

}  // namespace arg
