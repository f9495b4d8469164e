#include "bitrans/matcomp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bitrans/error.hpp"
#include "bitrans/ndcore/linalg.hpp"
#include "bitrans/ndcore/rng.hpp"

namespace bitrans::matcomp {
namespace {

double sigma_p_of_moment(const nd::Matrix& samples, std::size_t p) {
  const nd::Matrix moment = samples * samples.transpose() / static_cast<double>(samples.cols());
  const nd::Svd svd = nd::svd_small(moment);
  return svd.s(static_cast<Eigen::Index>(p - 1));
}

nd::Matrix cos_features(const nd::Vector& freq, const nd::Vector& phase, const nd::Matrix& t) {
  BITRANS_EXPECT(t.rows() == 1, "planted model: inputs are scalar");
  nd::Matrix out(freq.size(), t.cols());
  for (Eigen::Index c = 0; c < t.cols(); ++c)
    for (Eigen::Index k = 0; k < freq.size(); ++k) out(k, c) = std::cos(freq(k) * t(0, c) + phase(k));
  return out;
}

nd::Matrix block_atoms(std::size_t block, std::size_t n) {
  nd::Matrix atoms(1, static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < n; ++a)
    atoms(0, static_cast<Eigen::Index>(a)) =
        static_cast<double>(block) + (static_cast<double>(a) + 0.5) / static_cast<double>(n);
  return atoms;
}

/// All (delta atom, anchor atom) pairs for one block.
void append_block(transduce::PairBatch& out, const PlantedModel& model, const nd::Matrix& deltas,
                  const nd::Matrix& anchors) {
  const Eigen::Index n = deltas.cols() * anchors.cols();
  const Eigen::Index start = out.deltas.cols();
  out.deltas.conservativeResize(1, start + n);
  out.anchors.conservativeResize(1, start + n);
  Eigen::Index c = start;
  for (Eigen::Index a = 0; a < deltas.cols(); ++a)
    for (Eigen::Index b = 0; b < anchors.cols(); ++b, ++c) {
      out.deltas(0, c) = deltas(0, a);
      out.anchors(0, c) = anchors(0, b);
    }
  out.targets = model.h(out.deltas, out.anchors);
}

}  // namespace

double empirical_sigma_p(const nd::Matrix& f_samples, const nd::Matrix& g_samples, std::size_t p, SigmaForm form) {
  if (p == 0) throw ValidationError("sigma.p", "p must be positive");
  if (static_cast<std::size_t>(f_samples.cols()) < p || static_cast<std::size_t>(g_samples.cols()) < p)
    throw ValidationError("sigma.samples", "need at least p samples of each embedding");
  if (static_cast<std::size_t>(f_samples.rows()) < p || static_cast<std::size_t>(g_samples.rows()) < p)
    throw ValidationError("sigma.p", "p exceeds the embedding dimension");
  const double sf = sigma_p_of_moment(f_samples, p);
  const double sg = sigma_p_of_moment(g_samples, p);
  return form == SigmaForm::min ? std::min(sf, sg) : sf * sg;
}

RiskReport risk_ratio_check(double r_train, double r_test, const Kappa& kappa, double m_bound, double sigma_sq) {
  BITRANS_EXPECT(r_train >= 0.0 && r_test >= 0.0 && m_bound >= 0.0 && sigma_sq >= 0.0,
                 "risk_ratio_check: inputs must be nonnegative");
  RiskReport r;
  r.r_train = r_train;
  r.r_test = r_test;
  r.kappa = kappa;
  r.m_bound = m_bound;
  r.sigma_sq = sigma_sq;
  if (kappa.is_infinite() || sigma_sq == 0.0) {
    r.bound = std::numeric_limits<double>::infinity();
    r.precondition_met = false;
    r.holds = true;
    return r;
  }
  const double k = kappa.value();
  const double ratio4 = std::pow(m_bound, 4) / (sigma_sq * sigma_sq);
  r.bound = r_train * k * k * (1.0 + 64.0 * ratio4);
  r.precondition_met = r_train <= sigma_sq / (4.0 * k);
  r.holds = r_test <= r.bound;
  return r;
}

double pair_risk(const transduce::BilinearPredictor& pred, const transduce::PairBatch& pairs,
                 const nd::Vector* weights) {
  BITRANS_EXPECT(pairs.deltas.cols() > 0, "pair_risk: no pairs");
  const nd::Matrix diff = pred.predict(pairs.deltas, pairs.anchors) - pairs.targets;
  const nd::Vector per = diff.colwise().squaredNorm().transpose() / static_cast<double>(diff.rows());
  if (!weights) return per.mean();
  BITRANS_EXPECT(weights->size() == per.size(), "pair_risk: weight count mismatch");
  return per.dot(*weights) / weights->sum();
}

RiskReport risk_ratio_check(const transduce::BilinearPredictor& pred, const transduce::PairBatch& train,
                            const transduce::PairBatch& test, const Kappa& kappa, double m_bound, double sigma_sq) {
  return risk_ratio_check(pair_risk(pred, train), pair_risk(pred, test), kappa, m_bound, sigma_sq);
}

nd::Matrix PlantedModel::f(const nd::Matrix& deltas) const { return cos_features(f_freq, f_phase, deltas); }
nd::Matrix PlantedModel::g(const nd::Matrix& anchors) const { return cos_features(g_freq, g_phase, anchors); }

nd::Matrix PlantedModel::h(const nd::Matrix& deltas, const nd::Matrix& anchors) const {
  return f(deltas).cwiseProduct(g(anchors)).colwise().sum();
}

PlantedProblem make_planted(const PlantedConfig& config) {
  if (config.rank == 0) throw ValidationError("planted.rank", "must be positive");
  if (config.atoms_per_block < config.rank)
    throw ValidationError("planted.atoms_per_block", "need at least `rank` atoms per block");
  if (!(config.freq_lo > 0.0 && config.freq_hi > config.freq_lo))
    throw ValidationError("planted.freq", "need 0 < freq_lo < freq_hi");

  nd::Rng rng(config.seed);
  const auto p = static_cast<Eigen::Index>(config.rank);
  PlantedProblem prob;
  auto draw = [&](nd::Vector& freq, nd::Vector& phase) {
    freq.resize(p);
    phase.resize(p);
    // One frequency per equal-width stratum, so no two factors nearly
    // coincide and sigma_p stays away from zero.
    const double width = (config.freq_hi - config.freq_lo) / static_cast<double>(p);
    for (Eigen::Index k = 0; k < p; ++k) {
      freq(k) = config.freq_lo + width * (static_cast<double>(k) + rng.uniform());
      phase(k) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  };
  draw(prob.model.f_freq, prob.model.f_phase);
  draw(prob.model.g_freq, prob.model.g_phase);

  const std::size_t n = config.atoms_per_block;
  const nd::Matrix d1 = block_atoms(0, n), d2 = block_atoms(1, n);
  const nd::Matrix a1 = block_atoms(0, n), a2 = block_atoms(1, n);

  prob.train = {nd::Matrix(1, 0), nd::Matrix(1, 0), nd::Matrix(1, 0)};
  append_block(prob.train, prob.model, d1, a1);
  append_block(prob.train, prob.model, d1, a2);
  append_block(prob.train, prob.model, d2, a1);
  prob.test = {nd::Matrix(1, 0), nd::Matrix(1, 0), nd::Matrix(1, 0)};
  append_block(prob.test, prob.model, d2, a2);

  prob.grid.delta_axes = {Axis{0.0, 2.0, 2 * n}};
  prob.grid.anchor_axes = {Axis{0.0, 2.0, 2 * n}};
  CoverageFactors factors;
  factors.delta1 = delta_histogram(prob.grid, d1);
  factors.delta2 = delta_histogram(prob.grid, d2);
  factors.anchor1 = anchor_histogram(prob.grid, a1);
  factors.anchor2 = anchor_histogram(prob.grid, a2);
  prob.coverage = combinatorial_coverage(prob.grid, pair_histogram(prob.grid, prob.train.deltas, prob.train.anchors),
                                         pair_histogram(prob.grid, prob.test.deltas, prob.test.anchors), factors);

  prob.sigma_sq = empirical_sigma_p(prob.model.f(d1), prob.model.g(a1), config.rank);
  prob.m_bound = std::max(prob.train.targets.cwiseAbs().maxCoeff(), prob.test.targets.cwiseAbs().maxCoeff());
  return prob;
}

PlantedRun planted_risk_check(const PlantedProblem& problem, transduce::TrainConfig config) {
  config.arch.segment = problem.model.rank();
  config.validate();
  nd::Rng rng(config.seed);
  transduce::BilinearTrainer trainer(transduce::make_bilinear(1, 1, config.arch, rng), config.adam, config.l2);
  PlantedRun run;
  run.stats.step_losses.reserve(config.steps);
  const auto B = static_cast<Eigen::Index>(config.batch);
  const auto n = static_cast<std::size_t>(problem.train.deltas.cols());
  nd::Matrix deltas(1, B), anchors(1, B), targets(1, B);
  for (std::size_t s = 0; s < config.steps; ++s) {
    trainer.set_lr(config.lr_at(s));
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto i = static_cast<Eigen::Index>(rng.index(n));
      deltas(0, b) = problem.train.deltas(0, i);
      anchors(0, b) = problem.train.anchors(0, i);
      targets(0, b) = problem.train.targets(0, i);
    }
    run.stats.step_losses.push_back(trainer.step(deltas, anchors, targets));
  }
  run.stats.finish();
  run.predictor = trainer.release();
  run.report = risk_ratio_check(run.predictor, problem.train, problem.test, problem.coverage.kappa, problem.m_bound,
                                problem.sigma_sq);
  return run;
}

}  // namespace bitrans::matcomp
