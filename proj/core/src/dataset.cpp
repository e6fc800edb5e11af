#include "arg/dataset.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "arg/error.hpp"
#include "binary_io.hpp"

namespace arg {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic{"ARGDS01\0", 8};

}  // namespace

DatasetInfo dataset_info(const SynthConfig& config) {
  return {config.feature_dim,     config.frames,      config.action_classes,
          config.activity_classes, config.image_width, config.image_height};
}

Dataset make_dataset(const SynthConfig& config, std::size_t count, std::uint64_t first_video_id) {
  return {dataset_info(config), generate(config, count, first_video_id)};
}

Dataset slice(const Dataset& data, std::size_t begin, std::size_t count) {
  if (begin > data.size() || count > data.size() - begin) {
    throw PreconditionError("dataset slice out of range");
  }
  Dataset out{data.info, {}};
  out.samples.assign(data.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     data.samples.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

void validate_dataset(const Dataset& data) {
  const auto& info = data.info;
  for (std::size_t s = 0; s < data.size(); ++s) {
    const SceneSample& sample = data.samples[s];
    const std::string where = "sample " + std::to_string(s) + ": ";
    if (sample.frames.size() != info.frames) {
      throw ConfigError(where + std::to_string(sample.frames.size()) + " frames, header says " +
                        std::to_string(info.frames));
    }
    const std::size_t n = sample.actor_count();
    for (const ActorSet& f : sample.frames) {
      if (f.size() != n) throw ConfigError(where + "actor count differs across frames");
      if (f.feature_dim() != info.feature_dim) {
        throw ConfigError(where + "feature width " + std::to_string(f.feature_dim()) +
                          " but header says " + std::to_string(info.feature_dim));
      }
    }
    if (sample.group_label >= info.activity_classes) throw LabelError(where + "group label out of range");
    for (std::size_t y : sample.action_labels)
      if (y >= info.action_classes) throw LabelError(where + "action label out of range");
  }
}

std::string encode_dataset(const Dataset& data) {
  const auto& info = data.info;
  nlohmann::json header = {
      {"version", 1},
      {"count", data.size()},
      {"feature_dim", info.feature_dim},
      {"frames", info.frames},
      {"action_classes", info.action_classes},
      {"activity_classes", info.activity_classes},
      {"image_width", info.image_width},
      {"image_height", info.image_height},
  };
  const std::string header_text = header.dump();

  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u64(header_text.size());
  w.bytes(header_text);
  for (const SceneSample& s : data.samples) {
    const std::size_t n = s.actor_count();
    if (s.frames.size() != info.frames) throw ConfigError("encode_dataset: frame count mismatch");
    w.u32(static_cast<std::uint32_t>(n));
    for (const ActorSet& f : s.frames)
      for (const Point& p : f.positions) {
        w.f64(p.x);
        w.f64(p.y);
      }
    for (std::size_t t = 0; t < s.frames.size(); ++t)
      for (std::size_t i = 0; i < n; ++i) w.u32(static_cast<std::uint32_t>(t));
    for (const ActorSet& f : s.frames) {
      if (f.size() != n || f.feature_dim() != info.feature_dim) {
        throw ConfigError("encode_dataset: frame shape does not match header");
      }
      for (double v : f.features.data()) w.f64(v);
    }
    for (std::size_t y : s.action_labels) w.u32(static_cast<std::uint32_t>(y));
    w.u32(static_cast<std::uint32_t>(s.group_label));
    w.i32(s.key_actors[0]);
    w.i32(s.key_actors[1]);
    w.u64(s.video_id);
  }
  return w.take();
}

Dataset decode_dataset(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw FormatError(0, "bad dataset magic");
  const std::uint64_t header_len = r.u64("header length");
  const std::uint64_t header_at = r.offset();
  if (header_len > r.remaining()) throw FormatError(header_at, "header length exceeds file size");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(header_len), "header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_at, std::string("malformed dataset header: ") + e.what());
  }

  Dataset data;
  std::size_t count = 0;
  try {
    if (header.at("version").get<int>() != 1) throw FormatError(header_at, "unsupported dataset version");
    count = header.at("count").get<std::size_t>();
    data.info.feature_dim = header.at("feature_dim").get<std::size_t>();
    data.info.frames = header.at("frames").get<std::size_t>();
    data.info.action_classes = header.at("action_classes").get<std::size_t>();
    data.info.activity_classes = header.at("activity_classes").get<std::size_t>();
    data.info.image_width = header.at("image_width").get<double>();
    data.info.image_height = header.at("image_height").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_at, std::string("dataset header is missing fields: ") + e.what());
  }

  const std::size_t d = data.info.feature_dim;
  const std::size_t frames = data.info.frames;
  data.samples.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const std::uint64_t sample_at = r.offset();
    const std::size_t n = r.u32("actor count");
    // Reject absurd counts before allocating.
    const std::uint64_t min_bytes = static_cast<std::uint64_t>(frames) * n * (16 + 4 + 8 * d) + 4ull * n + 20;
    if (min_bytes > r.remaining()) throw FormatError(sample_at, "truncated sample record");

    SceneSample sample;
    sample.frames.resize(frames);
    for (ActorSet& f : sample.frames) {
      f.features = Tensor(n, d);
      f.frame_index.assign(n, 0);
      f.frame_count = 1;
      f.image_width = data.info.image_width;
      f.image_height = data.info.image_height;
      f.positions.resize(n);
      for (Point& p : f.positions) {
        p.x = r.f64("position");
        p.y = r.f64("position");
      }
    }
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t at = r.offset();
        if (r.u32("frame index") != t) throw FormatError(at, "frame index out of order");
      }
    }
    for (ActorSet& f : sample.frames)
      for (double& v : f.features.data()) v = r.f64("features");
    sample.action_labels.resize(n);
    for (auto& y : sample.action_labels) y = r.u32("action label");
    sample.group_label = r.u32("group label");
    sample.key_actors[0] = r.i32("key actor");
    sample.key_actors[1] = r.i32("key actor");
    sample.video_id = r.u64("video id");
    data.samples.push_back(std::move(sample));
  }
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after last sample");
  return data;
}

void write_dataset(const std::string& path, const Dataset& data) {
  detail::write_file(path, encode_dataset(data));
}

Dataset read_dataset(const std::string& path) { return decode_dataset(detail::read_file(path)); }

}  // namespace arg
