#pragma once

#include <filesystem>
#include <string>

#include "bitrans/ndcore/dense_net.hpp"

namespace bitrans::nd {

/// Network checkpoint document:
///   {"version":1,
///    "arch":{"layers":[{"in":..,"out":..,"activation":"relu"|"identity"}],"fourier":bool},
///    "params":{"layers":[{"w":[row-major],"b":[..]}],"fourier_w":[row-major],"fourier_b":[..]}}
/// Doubles are written with round-trip precision, so save/load is bit-exact.
std::string to_checkpoint_json(const DenseNet& net);
DenseNet from_checkpoint_json(const std::string& text);

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace bitrans::nd
