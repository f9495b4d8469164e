#pragma once

#include <cstddef>
#include <cstdint>

#include "bitrans/matcomp/density.hpp"
#include "bitrans/ndcore/matrix.hpp"
#include "bitrans/transduce/bilinear.hpp"
#include "bitrans/transduce/training.hpp"

namespace bitrans::matcomp {

enum class SigmaForm {
  min,      // min{sigma_p(E f f^T), sigma_p(E g g^T)}
  product,  // sigma_p(E f f^T) * sigma_p(E g g^T)
};

/// sigma^2 estimate from embedding samples (one column per sample) drawn
/// under the top-left block. Throws ValidationError with fewer than p
/// samples of either factor.
double empirical_sigma_p(const nd::Matrix& f_samples, const nd::Matrix& g_samples, std::size_t p,
                         SigmaForm form = SigmaForm::min);

struct RiskReport {
  double r_train = 0.0;
  double r_test = 0.0;
  Kappa kappa = Kappa::finite(0.0);
  double m_bound = 0.0;
  double sigma_sq = 0.0;
  double bound = 0.0;              // r_train * kappa^2 * (1 + 64 M^4 / sigma^4)
  bool precondition_met = false;   // r_train <= sigma^2 / (4 kappa)
  bool holds = false;              // r_test <= bound
};

/// Diagnostic unless the caller constructed the assumptions to hold.
RiskReport risk_ratio_check(double r_train, double r_test, const Kappa& kappa, double m_bound, double sigma_sq);

/// Mean squared error of pred on (deltas, anchors) -> targets, optionally
/// weighted per column (weights need not be normalised).
double pair_risk(const transduce::BilinearPredictor& pred, const transduce::PairBatch& pairs,
                 const nd::Vector* weights = nullptr);

RiskReport risk_ratio_check(const transduce::BilinearPredictor& pred, const transduce::PairBatch& train,
                            const transduce::PairBatch& test, const Kappa& kappa, double m_bound, double sigma_sq);

/// Ground truth h*(dx, x') = <f*(dx), g*(x')> on scalar inputs with
/// f*_k(t) = cos(w_k t + phi_k) and likewise for g*. Frequency w_k is drawn
/// uniformly from the k-th of `rank` equal strata of [freq_lo, freq_hi).
struct PlantedModel {
  nd::Vector f_freq, f_phase;
  nd::Vector g_freq, g_phase;

  std::size_t rank() const { return static_cast<std::size_t>(f_freq.size()); }
  nd::Matrix f(const nd::Matrix& deltas) const;   // p x B
  nd::Matrix g(const nd::Matrix& anchors) const;  // p x B
  nd::Matrix h(const nd::Matrix& deltas, const nd::Matrix& anchors) const;  // 1 x B
};

struct PlantedConfig {
  std::size_t rank = 4;
  std::size_t atoms_per_block = 8;
  double freq_lo = 1.0;
  double freq_hi = 6.0;
  std::uint64_t seed = 0;
};

/// Block layout on scalar inputs: delta factor i and anchor factor j are
/// uniform over `atoms_per_block` evenly spaced atoms in [i - 1, i) and
/// [j - 1, j). Training is uniform over the three blocks other than (2, 2);
/// testing is the (2, 2) block. All expectations below are exact sums.
struct PlantedProblem {
  PlantedModel model;
  PairGrid grid;
  transduce::PairBatch train;
  transduce::PairBatch test;
  CoverageReport coverage;
  double sigma_sq = 0.0;  // min form over the (1, 1) block
  double m_bound = 0.0;   // max |h*| over all four blocks
};

PlantedProblem make_planted(const PlantedConfig& config);

struct PlantedRun {
  transduce::BilinearPredictor predictor;
  RiskReport report;
  transduce::TrainStats stats;
};

/// Fits a bilinear predictor with segment size equal to the planted rank on
/// uniform draws from the training atoms, then checks the risk bound.
PlantedRun planted_risk_check(const PlantedProblem& problem, transduce::TrainConfig config);

}  // namespace bitrans::matcomp
