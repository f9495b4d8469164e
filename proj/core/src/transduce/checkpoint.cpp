#include "bitrans/transduce/checkpoint.hpp"

#include "bitrans/error.hpp"
#include "ndcore/checkpoint_json.hpp"

namespace bitrans::transduce {
namespace {

using nlohmann::json;

json tagged(const nd::DenseNet& net, const char* role) {
  json doc = nd::detail::net_to_json(net);
  doc["role"] = role;
  return doc;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint", std::string("malformed JSON: ") + e.what());
  }
}

void expect_version(const json& doc) {
  if (!doc.is_object() || !doc.contains("version") || doc["version"] != 1)
    throw ValidationError("checkpoint.version", "unsupported or missing version");
}

std::string role_of(const json& doc) {
  if (!doc.contains("role") || !doc["role"].is_string()) throw ValidationError("checkpoint.role", "missing role");
  return doc["role"].get<std::string>();
}

const json& net_with_role(const json& doc, const char* role) {
  if (!doc.contains("nets") || !doc["nets"].is_array()) throw ValidationError("checkpoint.nets", "missing nets");
  for (const auto& n : doc["nets"])
    if (n.is_object() && n.value("role", "") == role) return n;
  throw ValidationError("checkpoint.nets", std::string("no net with role '") + role + "'");
}

json bilinear_doc(const BilinearPredictor& pred, const char* role) {
  pred.validate();
  return json{{"version", 1},
              {"role", role},
              {"K", pred.outputs},
              {"m", pred.segment},
              {"nets", json::array({tagged(pred.f_net, "f"), tagged(pred.g_net, "g")})}};
}

BilinearPredictor bilinear_from_doc(const json& doc) {
  BilinearPredictor pred;
  try {
    pred.outputs = doc.at("K").get<std::size_t>();
    pred.segment = doc.at("m").get<std::size_t>();
  } catch (const json::exception&) {
    throw ValidationError("checkpoint.K", "missing or invalid K/m metadata");
  }
  pred.f_net = nd::detail::net_from_json(net_with_role(doc, "f"));
  pred.g_net = nd::detail::net_from_json(net_with_role(doc, "g"));
  try {
    pred.validate();
  } catch (const ContractViolation& e) {
    throw ValidationError("checkpoint.nets", e.what());
  }
  return pred;
}

json baseline_doc(const BaselineModel& m) {
  json nets = json::array();
  if (m.kind == BaselineKind::deepsets) {
    nets.push_back(tagged(m.obs_branch, "obs"));
    nets.push_back(tagged(m.goal_branch, "goal"));
    nets.push_back(tagged(m.head, "head"));
  } else {
    nets.push_back(tagged(m.net, "net"));
  }
  json doc{{"version", 1}, {"role", "baseline"}, {"kind", std::string(to_string(m.kind))}, {"nets", nets}};
  if (m.kind == BaselineKind::deepsets) doc["goal_slice"] = {m.goal.begin, m.goal.size};
  return doc;
}

BaselineModel baseline_from_doc(const json& doc) {
  BaselineModel m;
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw ValidationError("checkpoint.kind", "missing kind");
  m.kind = baseline_from_string(doc["kind"].get<std::string>());
  if (m.kind == BaselineKind::deepsets) {
    m.obs_branch = nd::detail::net_from_json(net_with_role(doc, "obs"));
    m.goal_branch = nd::detail::net_from_json(net_with_role(doc, "goal"));
    m.head = nd::detail::net_from_json(net_with_role(doc, "head"));
    const auto& gs = doc.value("goal_slice", json::array());
    if (!gs.is_array() || gs.size() != 2) throw ValidationError("checkpoint.goal_slice", "expected [begin, size]");
    m.goal = {gs[0].get<std::size_t>(), gs[1].get<std::size_t>()};
  } else {
    m.net = nd::detail::net_from_json(net_with_role(doc, "net"));
  }
  return m;
}

}  // namespace

std::string predictor_to_json(const BilinearPredictor& pred) { return bilinear_doc(pred, "predictor").dump(); }

BilinearPredictor predictor_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_version(doc);
  if (role_of(doc) != "predictor") throw ValidationError("checkpoint.role", "expected role 'predictor'");
  return bilinear_from_doc(doc);
}

std::string weighting_to_json(const WeightingFunction& omega) { return bilinear_doc(omega.net(), "omega").dump(); }

WeightingFunction weighting_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_version(doc);
  if (role_of(doc) != "omega") throw ValidationError("checkpoint.role", "expected role 'omega'");
  return WeightingFunction(bilinear_from_doc(doc));
}

std::string baseline_to_json(const BaselineModel& model) { return baseline_doc(model).dump(); }

BaselineModel baseline_from_json(const std::string& text) {
  const json doc = parse(text);
  expect_version(doc);
  if (role_of(doc) != "baseline") throw ValidationError("checkpoint.role", "expected role 'baseline'");
  return baseline_from_doc(doc);
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  const std::string text = std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, BilinearPredictor>) return predictor_to_json(m);
        else if constexpr (std::is_same_v<T, WeightingFunction>) return weighting_to_json(m);
        else return baseline_to_json(m);
      },
      model);
  nd::detail::write_text_file(path.string(), text);
}

AnyModel load_model(const std::filesystem::path& path) {
  const std::string text = nd::detail::read_text_file(path.string());
  const json doc = parse(text);
  expect_version(doc);
  const std::string role = role_of(doc);
  if (role == "predictor") return bilinear_from_doc(doc);
  if (role == "omega") return WeightingFunction(bilinear_from_doc(doc));
  if (role == "baseline") return baseline_from_doc(doc);
  throw ValidationError("checkpoint.role", "unknown role '" + role + "'");
}

}  // namespace bitrans::transduce
