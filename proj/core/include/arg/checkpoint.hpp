#pragma once

#include <string>
#include <string_view>

#include "arg/model.hpp"

namespace arg {

// Layout, little-endian:
//   "ARGMDL01"
//   u64 header length, then JSON {"version":1,"config":{...},
//                                 "tensors":[{"name":…,"rows":…,"cols":…},…]}
//   f64 tensor data, each tensor row-major, in header order
std::string encode_checkpoint(const Model& model);
Model decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace arg
