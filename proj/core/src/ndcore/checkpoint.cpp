#include "bitrans/ndcore/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "bitrans/error.hpp"
#include "checkpoint_json.hpp"

namespace bitrans::nd {
namespace detail {
namespace {

using nlohmann::json;

json row_major(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

Matrix read_row_major(const json& values, Eigen::Index rows, Eigen::Index cols, const char* field) {
  if (!values.is_array() || static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw ValidationError(field, "expected " + std::to_string(rows * cols) + " values");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values.at(k++).get<double>();
  return m;
}

}  // namespace

json net_to_json(const DenseNet& net) {
  json arch_layers = json::array();
  json param_layers = json::array();
  for (const auto& layer : net.layers()) {
    arch_layers.push_back({{"in", layer.in_dim()},
                           {"out", layer.out_dim()},
                           {"activation", layer.activation == Activation::relu ? "relu" : "identity"}});
    json b = json::array();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) b.push_back(layer.bias(i));
    param_layers.push_back({{"w", row_major(layer.weight)}, {"b", std::move(b)}});
  }
  json params = {{"layers", std::move(param_layers)}};
  if (net.fourier()) {
    params["fourier_w"] = row_major(net.fourier()->weight);
    params["fourier_b"] = row_major(net.fourier()->bias);
  }
  return {{"version", 1},
          {"arch", {{"layers", std::move(arch_layers)}, {"fourier", net.fourier().has_value()}}},
          {"params", std::move(params)}};
}

DenseNet net_from_json(const json& doc) {
  try {
    if (doc.at("version").get<int>() != 1) throw ValidationError("version", "unsupported checkpoint version");
    const auto& arch = doc.at("arch");
    const auto& params = doc.at("params");
    const auto& arch_layers = arch.at("layers");
    const auto& param_layers = params.at("layers");
    if (arch_layers.size() != param_layers.size())
      throw ValidationError("params.layers", "layer count does not match arch.layers");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < arch_layers.size(); ++i) {
      const auto in = arch_layers[i].at("in").get<Eigen::Index>();
      const auto out = arch_layers[i].at("out").get<Eigen::Index>();
      const auto act = arch_layers[i].at("activation").get<std::string>();
      if (act != "relu" && act != "identity")
        throw ValidationError("arch.layers.activation", "unknown activation '" + act + "'");
      DenseLayer layer;
      layer.weight = read_row_major(param_layers[i].at("w"), out, in, "params.layers.w");
      layer.bias = read_row_major(param_layers[i].at("b"), out, 1, "params.layers.b");
      layer.activation = act == "relu" ? Activation::relu : Activation::identity;
      layers.push_back(std::move(layer));
    }
    std::optional<FourierLayer> fourier;
    if (arch.at("fourier").get<bool>()) {
      if (layers.empty()) throw ValidationError("arch.layers", "empty network");
      const Eigen::Index width = layers.front().weight.cols();
      if (width % static_cast<Eigen::Index>(FourierLayer::kExpansion) != 0)
        throw ValidationError("arch.fourier", "first layer width is not a multiple of 40");
      const Eigen::Index d_in = width / static_cast<Eigen::Index>(FourierLayer::kExpansion);
      FourierLayer layer;
      layer.weight = read_row_major(params.at("fourier_w"), width, d_in, "params.fourier_w");
      layer.bias = read_row_major(params.at("fourier_b"), width, 1, "params.fourier_b");
      fourier = std::move(layer);
    }
    return DenseNet(std::move(layers), std::move(fourier));
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint", e.what());
  } catch (const ContractViolation& e) {
    throw ValidationError("arch", e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw RuntimeFailure("write to '" + path + "' failed");
}

}  // namespace detail

std::string to_checkpoint_json(const DenseNet& net) { return detail::net_to_json(net).dump(); }

DenseNet from_checkpoint_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("checkpoint", e.what());
  }
  return detail::net_from_json(doc);
}

void save_checkpoint(const DenseNet& net, const std::filesystem::path& path) {
  detail::write_text_file(path.string(), to_checkpoint_json(net) + "\n");
}

DenseNet load_checkpoint(const std::filesystem::path& path) {
  return from_checkpoint_json(detail::read_text_file(path.string()));
}

}  // namespace bitrans::nd
