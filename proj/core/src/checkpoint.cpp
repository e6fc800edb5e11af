#include "arg/checkpoint.hpp"

#include "arg/error.hpp"
#include "binary_io.hpp"
#include "json_io.hpp"

namespace arg {

namespace {

constexpr std::string_view kMagic = "ARGMDL01";

}  // namespace

std::string encode_checkpoint(const Model& model) {
  const auto params = parameter_list(model.params);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name}, {"rows", p.tensor->rows()}, {"cols", p.tensor->cols()}});
  }
  const nlohmann::json header = {
      {"version", 1}, {"config", detail::model_json(model.config)}, {"tensors", tensors}};
  const std::string text = header.dump();

  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u64(text.size());
  w.bytes(text);
  for (const auto& p : params)
    for (double v : p.tensor->data()) w.f64(v);
  return w.take();
}

Model decode_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.bytes(kMagic.size(), "magic") != kMagic) throw FormatError(0, "bad checkpoint magic");
  const std::uint64_t len = r.u64("header length");
  const std::uint64_t header_at = r.offset();
  if (len > r.remaining()) throw FormatError(header_at, "header length exceeds file size");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(static_cast<std::size_t>(len), "header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(header_at, std::string("malformed checkpoint header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("config") || !header.contains("tensors") ||
      header.value("version", 0) != 1) {
    throw FormatError(header_at, "checkpoint header lacks version 1, config or tensors");
  }

  ModelConfig config;
  try {
    detail::apply_model_json(header.at("config"), config);
  } catch (const ConfigError& e) {
    throw FormatError(header_at, std::string("bad checkpoint config: ") + e.what());
  }
  Model model = init_model(config, 0);
  auto params = parameter_list(model.params);
  const auto& listed = header.at("tensors");
  if (!listed.is_array() || listed.size() != params.size()) {
    throw FormatError(header_at, "checkpoint lists " + std::to_string(listed.size()) +
                                     " tensors but the config needs " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = listed[i];
    const bool ok = t.is_object() && t.value("name", std::string{}) == params[i].name &&
                    t.value("rows", std::size_t{0}) == params[i].tensor->rows() &&
                    t.value("cols", std::size_t{0}) == params[i].tensor->cols();
    if (!ok) {
      throw FormatError(header_at, "tensor entry " + std::to_string(i) + " " + t.dump() + " does not match " +
                                       params[i].name + " " + params[i].tensor->shape_str());
    }
  }
  for (auto& p : params)
    for (double& v : p.tensor->data()) v = r.f64(p.name.c_str());
  if (r.remaining() != 0) throw FormatError(r.offset(), "trailing bytes after tensor data");
  return model;
}

void save_checkpoint(const std::string& path, const Model& model) {
  detail::write_file(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace arg
