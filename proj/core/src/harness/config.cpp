#include "bitrans/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bitrans/error.hpp"
#include "bitrans/harness/seed.hpp"

namespace bitrans::harness {
namespace {

using nlohmann::json;

/// Reads fields of one JSON object and rejects any key it was not asked for.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ValidationError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) throw ValidationError(field(key), "required field missing");
    return *v;
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ValidationError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ValidationError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void count(const std::string& key, Int& out) {
    if (const json* v = find(key)) out = static_cast<Int>(as_uint(*v, field(key)));
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ValidationError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ValidationError(field(it.key()), "unknown field");
  }

  static std::uint64_t as_uint(const json& v, const std::string& where) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ValidationError(where, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

funcgen::Box parse_box(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ValidationError(where, "expected a box [[lo, hi], ...]");
  funcgen::Box box;
  for (std::size_t d = 0; d < v.size(); ++d) {
    const json& iv = v[d];
    const std::string w = where + "[" + std::to_string(d) + "]";
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
      throw ValidationError(w, "expected an interval [lo, hi]");
    funcgen::Interval i{iv[0].get<double>(), iv[1].get<double>()};
    if (!(i.lo < i.hi)) throw ValidationError(w, "interval needs lo < hi");
    box.push_back(i);
  }
  return box;
}

std::vector<funcgen::Box> parse_region(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ValidationError(where, "expected a nonempty list of boxes");
  std::vector<funcgen::Box> region;
  for (std::size_t b = 0; b < v.size(); ++b) region.push_back(parse_box(v[b], where + "[" + std::to_string(b) + "]"));
  for (const auto& box : region)
    if (box.size() != region.front().size()) throw ValidationError(where, "boxes have different dimensions");
  return region;
}

void parse_model(const json& v, const std::string& path, transduce::ArchConfig& arch) {
  Reader r(v, path);
  r.count("hidden_layers", arch.hidden_layers);
  r.count("units", arch.units);
  r.count("segment", arch.segment);
  r.boolean("fourier", arch.fourier);
  r.number("fourier_scale", arch.fourier_scale);
  r.finish();
  if (arch.units == 0) throw ValidationError(r.field("units"), "must be positive");
  if (arch.segment == 0) throw ValidationError(r.field("segment"), "must be positive");
  if (!(arch.fourier_scale > 0.0)) throw ValidationError(r.field("fourier_scale"), "must be positive");
}

void parse_optim(const json& v, const std::string& path, transduce::TrainConfig& train) {
  Reader r(v, path);
  r.number("lr", train.adam.lr);
  r.number("beta1", train.adam.beta1);
  r.number("beta2", train.adam.beta2);
  r.number("eps", train.adam.eps);
  r.count("batch", train.batch);
  r.count("steps", train.steps);
  std::string schedule = train.schedule == transduce::LrSchedule::cosine ? "cosine" : "constant";
  r.string("schedule", schedule);
  if (schedule == "constant") train.schedule = transduce::LrSchedule::constant;
  else if (schedule == "cosine") train.schedule = transduce::LrSchedule::cosine;
  else throw ValidationError(r.field("schedule"), "expected 'constant' or 'cosine'");
  r.number("lr_final_frac", train.lr_final_frac);
  r.number("l2", train.l2);
  r.finish();
  try {
    train.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + "." + e.field().substr(e.field().find('.') + 1), e.what());
  }
  if (!(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0 && train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0))
    throw ValidationError(path + ".beta1", "Adam betas must lie in [0, 1)");
  if (!(train.adam.eps > 0.0)) throw ValidationError(path + ".eps", "must be positive");
}

void parse_rho(const json& v, const std::string& path, transduce::RhoPolicy& rho) {
  Reader r(v, path);
  std::string policy = rho.kind == transduce::RhoPolicy::Kind::fixed        ? "fixed"
                       : rho.kind == transduce::RhoPolicy::Kind::percentile ? "percentile"
                                                                            : "nearest";
  r.string("policy", policy);
  if (policy == "fixed") rho.kind = transduce::RhoPolicy::Kind::fixed;
  else if (policy == "nearest") rho.kind = transduce::RhoPolicy::Kind::nearest;
  else if (policy == "percentile") rho.kind = transduce::RhoPolicy::Kind::percentile;
  else throw ValidationError(r.field("policy"), "expected 'fixed', 'nearest' or 'percentile'");
  r.number("rho", rho.rho);
  r.number("q", rho.q);
  r.boolean("fallback_to_nearest", rho.fallback_to_nearest);
  r.finish();
  try {
    rho.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path, e.what());
  }
}

/// "model", "optim" and "rho" sections of an object, applied on top of the
/// given values.
void parse_training_sections(Reader& r, const std::string& path, transduce::TrainConfig& train,
                             transduce::RhoPolicy* rho) {
  const std::string prefix = path.empty() ? "" : path + ".";
  if (const json* v = r.find("model")) parse_model(*v, prefix + "model", train.arch);
  if (const json* v = r.find("optim")) parse_optim(*v, prefix + "optim", train);
  if (rho)
    if (const json* v = r.find("rho")) parse_rho(*v, prefix + "rho", *rho);
}

void parse_data(const json& v, DataConfig& data) {
  Reader r(v, "data");
  std::string fn = std::string(funcgen::to_string(data.function.kind));
  r.string("function", fn);
  try {
    data.function.kind = funcgen::function_kind_from_string(fn);
  } catch (const std::exception&) {
    throw ValidationError("data.function", "unknown function '" + fn + "'");
  }
  r.number("amplitude", data.function.amplitude);
  r.number("period", data.function.period);
  r.count("tile_seed", data.function.tile_seed);
  if (!(data.function.period > 0.0)) throw ValidationError("data.period", "must be positive");
  if (const json* t = r.find("train")) data.ranges.train = parse_region(*t, "data.train");
  if (const json* t = r.find("test")) data.ranges.test = parse_region(*t, "data.test");
  if (const json* b = r.find("bands")) {
    if (!b->is_array()) throw ValidationError("data.bands", "expected a list of regions");
    for (std::size_t k = 0; k < b->size(); ++k)
      data.bands.push_back(parse_region((*b)[k], "data.bands[" + std::to_string(k) + "]"));
  }
  r.count("n_train", data.n_train);
  r.count("n_test", data.n_test);
  r.number("noise", data.noise);
  r.count("bank_cap", data.bank_cap);
  if (const json* g = r.find("goal_slice")) {
    if (!g->is_array() || g->size() != 2) throw ValidationError("data.goal_slice", "expected [begin, size]");
    data.goal_slice = transduce::GoalSlice{Reader::as_uint((*g)[0], "data.goal_slice"),
                                           Reader::as_uint((*g)[1], "data.goal_slice")};
  }
  r.finish();
  if (!(data.noise >= 0.0)) throw ValidationError("data.noise", "must be nonnegative");
  if (data.n_train == 0) throw ValidationError("data.n_train", "must be positive");
  if (data.bank_cap == 0) throw ValidationError("data.bank_cap", "must be positive");
}

void parse_weighting(const json& v, WeightingConfig& w) {
  Reader r(v, "weighting");
  r.count("n_positive", w.n_positive);
  r.count("n_negative", w.n_negative);
  parse_training_sections(r, "weighting", w.train, nullptr);
  std::string sampling = w.sampling == transduce::WeightedSampling::proportional ? "proportional" : "weight_loss";
  r.string("sampling", sampling);
  if (sampling == "proportional") w.sampling = transduce::WeightedSampling::proportional;
  else if (sampling == "weight_loss") w.sampling = transduce::WeightedSampling::weight_loss;
  else throw ValidationError("weighting.sampling", "expected 'weight_loss' or 'proportional'");
  r.count("pool_cap", w.pool_cap);
  r.boolean("joint", w.joint);
  std::string anchor = w.anchor == transduce::WeightedAnchor::sample ? "sample" : "argmax";
  r.string("anchor", anchor);
  if (anchor == "argmax") w.anchor = transduce::WeightedAnchor::argmax;
  else if (anchor == "sample") w.anchor = transduce::WeightedAnchor::sample;
  else throw ValidationError("weighting.anchor", "expected 'argmax' or 'sample'");
  r.finish();
  if (w.n_positive + w.n_negative == 0) throw ValidationError("weighting.n_positive", "need labelled pairs");
}

void parse_imitation(const json& v, ImitationConfig& im) {
  Reader r(v, "imitation");
  r.count("n_demos", im.n_demos);
  r.count("n_eval", im.n_eval);
  r.number("workspace", im.env.workspace);
  r.number("a_max", im.env.a_max);
  r.count("horizon", im.env.horizon);
  if (const json* s = r.find("start")) {
    if (!s->is_array() || s->size() != 2 || !(*s)[0].is_number() || !(*s)[1].is_number())
      throw ValidationError("imitation.start", "expected [x, y]");
    im.env.start = (nd::Vector(2) << (*s)[0].get<double>(), (*s)[1].get<double>()).finished();
  }
  if (const json* b = r.find("train_goals")) im.env.train_goals = parse_box(*b, "imitation.train_goals");
  if (const json* b = r.find("oos_goals")) im.env.oos_goals = parse_box(*b, "imitation.oos_goals");
  r.finish();
  if (im.n_demos < 2) throw ValidationError("imitation.n_demos", "need at least 2 demos");
  if (im.n_eval == 0) throw ValidationError("imitation.n_eval", "must be positive");
  try {
    im.env.validate();
  } catch (const ValidationError& e) {
    throw ValidationError("imitation." + e.field().substr(e.field().find('.') + 1), e.what());
  }
}

void parse_matcomp(const json& v, MatcompConfig& m) {
  Reader r(v, "matcomp");
  if (const json* ranks = r.find("ranks")) {
    if (!ranks->is_array() || ranks->empty()) throw ValidationError("matcomp.ranks", "expected a list of ranks");
    m.ranks.clear();
    for (const auto& k : *ranks) m.ranks.push_back(Reader::as_uint(k, "matcomp.ranks"));
  }
  r.count("rows", m.rows);
  r.count("cols", m.cols);
  r.count("n1", m.n1);
  r.count("m1", m.m1);
  r.count("trials", m.trials);
  r.number("eps_frac", m.eps_frac);
  r.finish();
  if (m.n1 == 0 || m.m1 == 0 || m.n1 >= m.rows || m.m1 >= m.cols)
    throw ValidationError("matcomp.n1", "split must leave four nonempty blocks");
  for (std::size_t k : m.ranks)
    if (k == 0 || k > std::min(m.n1, m.m1)) throw ValidationError("matcomp.ranks", "rank must be in [1, min(n1, m1)]");
  if (!(m.eps_frac >= 0.0)) throw ValidationError("matcomp.eps_frac", "must be nonnegative");
}

void parse_planted(const json& v, PlantedSection& p) {
  Reader r(v, "planted");
  r.count("rank", p.problem.rank);
  r.count("atoms_per_block", p.problem.atoms_per_block);
  r.number("freq_lo", p.problem.freq_lo);
  r.number("freq_hi", p.problem.freq_hi);
  r.count("runs", p.runs);
  r.finish();
  if (p.runs == 0) throw ValidationError("planted.runs", "must be positive");
}

ExperimentKind kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::regress_1d, ExperimentKind::regress_2d, ExperimentKind::matcomp_bound,
                 ExperimentKind::coverage, ExperimentKind::imitation, ExperimentKind::sweep})
    if (to_string(k) == s) return k;
  throw ValidationError("kind", "unknown experiment kind '" + s + "'");
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::regress_1d: return "regress_1d";
    case ExperimentKind::regress_2d: return "regress_2d";
    case ExperimentKind::matcomp_bound: return "matcomp_bound";
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::imitation: return "imitation";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

std::string to_string(Method method) {
  switch (method) {
    case Method::linear: return "linear";
    case Method::mlp: return "mlp";
    case Method::deepsets: return "deepsets";
    case Method::concat_transduction: return "concat_transduction";
    case Method::bilinear_transduction: return "bilinear_transduction";
    case Method::weighted_transduction: return "weighted_transduction";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  for (auto m : {Method::linear, Method::mlp, Method::deepsets, Method::concat_transduction,
                 Method::bilinear_transduction, Method::weighted_transduction})
    if (to_string(m) == name) return m;
  throw ValidationError("methods", "unknown method '" + name + "'");
}

MethodSettings ExperimentConfig::settings_for(Method method) const {
  const auto it = overrides.find(method);
  if (it != overrides.end()) return it->second;
  return {train, rho};
}

std::string config_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : doc.dump()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig c;
  Reader r(doc, "");
  const json& id = r.require("id");
  if (!id.is_string() || id.get<std::string>().empty()) throw ValidationError("id", "expected a nonempty string");
  c.id = id.get<std::string>();
  const json& kind = r.require("kind");
  if (!kind.is_string()) throw ValidationError("kind", "expected a string");
  c.kind = kind_from_string(kind.get<std::string>());
  c.document = doc;
  c.hash = config_hash(doc);

  if (c.kind == ExperimentKind::sweep) {
    c.sweep_base = r.require("base");
    if (!c.sweep_base.is_object()) throw ValidationError("base", "expected an object");
    const json& grid = r.require("grid");
    if (!grid.is_object() || grid.empty()) throw ValidationError("grid", "expected an object of value lists");
    for (auto it = grid.begin(); it != grid.end(); ++it) {
      if (!it->is_array() || it->empty()) throw ValidationError("grid." + it.key(), "expected a nonempty list");
      c.sweep_grid.emplace_back(it.key(), std::vector<json>(it->begin(), it->end()));
    }
    r.finish();
    return c;
  }

  r.count("seed", c.seed);
  r.count("replicates", c.replicates);
  if (c.replicates == 0) throw ValidationError("replicates", "must be positive");
  if (const json* ms = r.find("methods")) {
    if (!ms->is_array()) throw ValidationError("methods", "expected a list of method names");
    for (const auto& m : *ms) {
      if (!m.is_string()) throw ValidationError("methods", "expected method names");
      c.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }
  if (const json* v = r.find("data")) parse_data(*v, c.data);
  parse_training_sections(r, "", c.train, &c.rho);
  if (const json* ov = r.find("overrides")) {
    if (!ov->is_object()) throw ValidationError("overrides", "expected an object keyed by method");
    for (auto it = ov->begin(); it != ov->end(); ++it) {
      const Method m = method_from_string(it.key());
      MethodSettings s{c.train, c.rho};
      Reader mr(*it, "overrides." + it.key());
      parse_training_sections(mr, "overrides." + it.key(), s.train, &s.rho);
      mr.finish();
      c.overrides[m] = s;
    }
  }
  if (const json* v = r.find("weighting")) parse_weighting(*v, c.weighting);
  if (const json* v = r.find("imitation")) parse_imitation(*v, c.imitation);
  if (const json* v = r.find("matcomp")) parse_matcomp(*v, c.matcomp);
  if (const json* v = r.find("planted")) parse_planted(*v, c.planted);
  r.finish();

  const bool regress = c.kind == ExperimentKind::regress_1d || c.kind == ExperimentKind::regress_2d;
  if (regress || c.kind == ExperimentKind::imitation) {
    if (c.methods.empty()) throw ValidationError("methods", "at least one method is required");
  }
  if (regress) {
    const std::size_t dim = c.kind == ExperimentKind::regress_1d ? 1 : 2;
    if (c.data.ranges.train.empty()) throw ValidationError("data.train", "required for regression");
    if (c.data.ranges.test.empty()) throw ValidationError("data.test", "required for regression");
    const funcgen::TargetFunction fn(c.data.function);
    if (fn.input_dim() != dim)
      throw ValidationError("data.function", "function dimension does not match kind " + to_string(c.kind));
    for (const auto* region : {&c.data.ranges.train, &c.data.ranges.test})
      if (region->front().size() != dim) throw ValidationError("data.train", "box dimension does not match kind");
    for (const auto& band : c.data.bands)
      if (band.front().size() != dim) throw ValidationError("data.bands", "box dimension does not match kind");
    for (Method m : c.methods) {
      if (m == Method::weighted_transduction && c.data.function.kind != funcgen::FunctionKind::tiled2d)
        throw ValidationError("methods", "weighted_transduction labels pairs by tile cell; needs tiled2d");
      if (m == Method::deepsets && !c.data.goal_slice)
        throw ValidationError("data.goal_slice", "deepsets needs a declared goal slice");
    }
  }
  if (c.kind == ExperimentKind::imitation) {
    for (Method m : c.methods)
      if (m == Method::weighted_transduction || m == Method::concat_transduction)
        throw ValidationError("methods", to_string(m) + " is not supported for imitation");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::uint64_t replicate_seed(const ExperimentConfig& config, std::size_t r) {
  return split_seed(config.seed, "replicate/" + std::to_string(r));
}

}  // namespace bitrans::harness
