#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "bitrans/transduce/baselines.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/weighted.hpp"

namespace bitrans::transduce {

/// Bilinear document:
///   {"version":1,"role":"predictor"|"omega","K":..,"m":..,
///    "nets":[{"role":"f",<net>},{"role":"g",<net>}]}
/// where <net> are the fields of the ndcore network checkpoint.
std::string predictor_to_json(const BilinearPredictor& pred);
BilinearPredictor predictor_from_json(const std::string& text);

std::string weighting_to_json(const WeightingFunction& omega);
WeightingFunction weighting_from_json(const std::string& text);

/// Baseline document:
///   {"version":1,"role":"baseline","kind":"mlp"|...,"nets":[{"role":"net"|"obs"|"goal"|"head",<net>}],
///    "goal_slice":[begin,size]}   (goal_slice for deepsets only)
std::string baseline_to_json(const BaselineModel& model);
BaselineModel baseline_from_json(const std::string& text);

using AnyModel = std::variant<BilinearPredictor, WeightingFunction, BaselineModel>;

void save_model(const AnyModel& model, const std::filesystem::path& path);
/// Dispatches on the document's "role".
AnyModel load_model(const std::filesystem::path& path);

}  // namespace bitrans::transduce
