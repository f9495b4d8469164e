#pragma once

// Internal: JSON-level access to network checkpoints for modules that embed
// a network document inside a larger one.

#include <json.hpp>

#include "bitrans/ndcore/dense_net.hpp"

namespace bitrans::nd::detail {

nlohmann::json net_to_json(const DenseNet& net);
DenseNet net_from_json(const nlohmann::json& doc);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bitrans::nd::detail
