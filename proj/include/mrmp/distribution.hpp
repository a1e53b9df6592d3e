#pragma once

#include <string>
#include <vector>

#include "mrmp/rng.hpp"
#include "mrmp/tensor.hpp"

namespace mrmp {

enum class PriorKind { Uniform, Gaussian, Laplace };

/// Closed-form target prior for the latent weights.
///
/// Default parameters (spread roughly matching a fan-in scaled uniform
/// initializer): uniform(-1,1), gaussian(0,0.5), laplace(0,0.35).
struct TargetPrior {
  PriorKind kind = PriorKind::Gaussian;
  // uniform: p1=lo, p2=hi; gaussian: p1=mean, p2=std; laplace: p1=mean, p2=scale.
  real p1 = 0.0;
  real p2 = 0.5;

  static TargetPrior uniform(real lo = -1.0, real hi = 1.0);
  static TargetPrior gaussian(real mean = 0.0, real std = 0.5);
  static TargetPrior laplace(real mean = 0.0, real scale = 0.35);
  // Parses "uniform", "gaussian", "laplace"; throws std::invalid_argument
  // listing the valid names otherwise.
  static TargetPrior parse(const std::string& name);

  std::string name() const;
  void validate() const;

  real pdf(real x) const;
  real cdf(real x) const;
  // P(|W| <= a) for a >= 0.
  real magnitude_cdf(real a) const;
  // Support used for histogram grids: [lo,hi], mean+-4std, mean+-8scale.
  void support(real& lo, real& hi) const;

  real sample(Rng& rng) const;
};

/// K bin centers spanning the prior support, with widths
/// beta_k = (q_{k+1} - q_k)/2 and beta_K = beta_{K-1}.
struct BinGrid {
  std::vector<real> centers;
  std::vector<real> widths;

  int bins() const { return static_cast<int>(centers.size()); }
};

BinGrid make_grid(const TargetPrior& prior, int bins);

/// Differentiable histogram of all latent weights.
struct SoftHistogram {
  BinGrid grid;
  Tensor probs;               // K normalized bin masses, on the tape
  real partition_per_weight;  // unnormalized sum over bins / weight count
};

// probs_k ∝ sum over every entry of every tensor of exp(-(w-q_k)^2/beta_k^2),
// normalized by the raw total so the masses sum to one exactly.
SoftHistogram soft_histogram(Tape& tape, const std::vector<Tensor>& latents,
                             const BinGrid& grid);

// Per-bin prior mass (CDF difference over bin edges), renormalized to sum 1.
std::vector<real> discretize_prior(const TargetPrior& prior, const BinGrid& grid);

// D_KL(P||Q) = sum_k P_k ln(P_k / (Q_k + eps)), eps = 1e-8.
Tensor kld(Tape& tape, const std::vector<real>& prior_probs, const Tensor& probs);

constexpr real kKldEpsilon = 1e-8;

// Magnitude quantile a(r): the threshold whose prior mass P(|W| <= a) is r.
real quantile_threshold(const TargetPrior& prior, real rate);

// Fraction of entries with |w| <= threshold across all tensors.
real observed_rate(const std::vector<Tensor>& latents, real threshold);

}  // namespace mrmp
