#include "mrmp/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrmp {

TargetPrior TargetPrior::uniform(real lo, real hi) {
  TargetPrior p{PriorKind::Uniform, lo, hi};
  p.validate();
  return p;
}

TargetPrior TargetPrior::gaussian(real mean, real std) {
  TargetPrior p{PriorKind::Gaussian, mean, std};
  p.validate();
  return p;
}

TargetPrior TargetPrior::laplace(real mean, real scale) {
  TargetPrior p{PriorKind::Laplace, mean, scale};
  p.validate();
  return p;
}

TargetPrior TargetPrior::parse(const std::string& name) {
  if (name == "uniform") return uniform();
  if (name == "gaussian") return gaussian();
  if (name == "laplace") return laplace();
  throw std::invalid_argument("unknown prior '" + name +
                              "'; expected one of {uniform, gaussian, laplace}");
}

std::string TargetPrior::name() const {
  switch (kind) {
    case PriorKind::Uniform: return "uniform";
    case PriorKind::Gaussian: return "gaussian";
    case PriorKind::Laplace: return "laplace";
  }
  return "?";
}

void TargetPrior::validate() const {
  switch (kind) {
    case PriorKind::Uniform:
      if (!(p2 > p1)) throw std::domain_error("uniform prior needs hi > lo");
      break;
    case PriorKind::Gaussian:
      if (!(p2 > 0)) throw std::domain_error("gaussian prior needs std > 0");
      break;
    case PriorKind::Laplace:
      if (!(p2 > 0)) throw std::domain_error("laplace prior needs scale > 0");
      break;
  }
}

real TargetPrior::pdf(real x) const {
  switch (kind) {
    case PriorKind::Uniform:
      return (x >= p1 && x <= p2) ? real(1) / (p2 - p1) : real(0);
    case PriorKind::Gaussian: {
      const real z = (x - p1) / p2;
      return std::exp(-0.5 * z * z) / (p2 * std::sqrt(2.0 * M_PI));
    }
    case PriorKind::Laplace:
      return std::exp(-std::abs(x - p1) / p2) / (2 * p2);
  }
  return 0;
}

real TargetPrior::cdf(real x) const {
  switch (kind) {
    case PriorKind::Uniform:
      if (x <= p1) return 0;
      if (x >= p2) return 1;
      return (x - p1) / (p2 - p1);
    case PriorKind::Gaussian:
      return 0.5 * (1.0 + std::erf((x - p1) / (p2 * std::sqrt(2.0))));
    case PriorKind::Laplace: {
      const real z = (x - p1) / p2;
      return z < 0 ? 0.5 * std::exp(z) : 1.0 - 0.5 * std::exp(-z);
    }
  }
  return 0;
}

real TargetPrior::magnitude_cdf(real a) const {
  if (a < 0) return 0;
  return cdf(a) - cdf(-a);
}

void TargetPrior::support(real& lo, real& hi) const {
  switch (kind) {
    case PriorKind::Uniform:
      lo = p1;
      hi = p2;
      return;
    case PriorKind::Gaussian:
      lo = p1 - 4 * p2;
      hi = p1 + 4 * p2;
      return;
    case PriorKind::Laplace:
      lo = p1 - 8 * p2;
      hi = p1 + 8 * p2;
      return;
  }
}

real TargetPrior::sample(Rng& rng) const {
  switch (kind) {
    case PriorKind::Uniform: return rng.uniform(p1, p2);
    case PriorKind::Gaussian: return rng.gaussian(p1, p2);
    case PriorKind::Laplace: return rng.laplace(p1, p2);
  }
  return 0;
}

BinGrid make_grid(const TargetPrior& prior, int bins) {
  if (bins < 2) throw std::domain_error("make_grid: need at least 2 bins");
  prior.validate();
  real lo, hi;
  prior.support(lo, hi);
  BinGrid grid;
  grid.centers.resize(bins);
  grid.widths.resize(bins);
  const real step = (hi - lo) / (bins - 1);
  for (int k = 0; k < bins; ++k) grid.centers[k] = lo + step * k;
  for (int k = 0; k + 1 < bins; ++k)
    grid.widths[k] = (grid.centers[k + 1] - grid.centers[k]) / 2;
  grid.widths[bins - 1] = grid.widths[bins - 2];
  return grid;
}

SoftHistogram soft_histogram(Tape& tape, const std::vector<Tensor>& latents,
                             const BinGrid& grid) {
  const int k = grid.bins();
  std::int64_t count = 0;
  for (const Tensor& t : latents) count += t.size();
  if (count == 0)
    throw std::domain_error("soft_histogram: empty parameter set");

  // Cache the kernel matrix per tensor for the backward sweep.
  auto kernels = std::make_shared<std::vector<std::vector<real>>>();
  kernels->reserve(latents.size());
  std::vector<real> raw(k, real(0));
  for (const Tensor& t : latents) {
    const auto& w = t.values();
    std::vector<real> kern(w.size() * k);
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (int j = 0; j < k; ++j) {
        const real d = (w[i] - grid.centers[j]) / grid.widths[j];
        const real e = std::exp(-d * d);
        kern[i * k + j] = e;
        raw[j] += e;
      }
    }
    kernels->push_back(std::move(kern));
  }
  real total = 0;
  for (real v : raw) total += v;
  if (!(total > 0))
    throw std::domain_error("soft_histogram: degenerate kernel mass");

  std::vector<real> probs(k);
  for (int j = 0; j < k; ++j) probs[j] = raw[j] / total;
  Tensor q = Tensor::from({k}, std::move(probs));

  // d probs_j / d w_i = (d raw_j/d w_i - probs_j * sum_m d raw_m/d w_i) / total
  // with d raw_j/d w_i = kern_ij * (-2 (w_i - q_j) / beta_j^2).
  auto centers = grid.centers;
  auto widths = grid.widths;
  tape.record("soft_histogram", latents, q,
              [latents, q, kernels, centers, widths, total, k]() mutable {
                const auto& g = q.grad();
                const auto& probs = q.values();
                real g_dot_q = 0;
                for (int j = 0; j < k; ++j) g_dot_q += g[j] * probs[j];
                for (std::size_t ti = 0; ti < latents.size(); ++ti) {
                  const auto& w = latents[ti].values();
                  const auto& kern = (*kernels)[ti];
                  auto& gw = latents[ti].grad();
                  for (std::size_t i = 0; i < w.size(); ++i) {
                    real acc = 0;
                    for (int j = 0; j < k; ++j) {
                      const real dr = kern[i * k + j] * (-2 * (w[i] - centers[j]) /
                                                         (widths[j] * widths[j]));
                      acc += (g[j] - g_dot_q) * dr;
                    }
                    gw[i] += acc / total;
                  }
                }
              });

  SoftHistogram h;
  h.grid = grid;
  h.probs = q;
  h.partition_per_weight = total / static_cast<real>(count);
  return h;
}

std::vector<real> discretize_prior(const TargetPrior& prior, const BinGrid& grid) {
  prior.validate();
  const int k = grid.bins();
  std::vector<real> mass(k);
  real total = 0;
  for (int j = 0; j < k; ++j) {
    const real lo_edge = grid.centers[j] - (j > 0
                             ? (grid.centers[j] - grid.centers[j - 1]) / 2
                             : grid.widths[j]);
    const real hi_edge = grid.centers[j] + (j + 1 < k
                             ? (grid.centers[j + 1] - grid.centers[j]) / 2
                             : grid.widths[j]);
    mass[j] = prior.cdf(hi_edge) - prior.cdf(lo_edge);
    total += mass[j];
  }
  for (real& m : mass) m /= total;
  return mass;
}

Tensor kld(Tape& tape, const std::vector<real>& prior_probs, const Tensor& probs) {
  const int k = static_cast<int>(prior_probs.size());
  if (probs.size() != k)
    throw std::invalid_argument("kld: " + std::to_string(k) +
                                " prior bins vs histogram of shape " +
                                shape_str(probs.shape()));
  real d = 0;
  for (int j = 0; j < k; ++j) {
    if (prior_probs[j] > 0)
      d += prior_probs[j] *
           std::log(prior_probs[j] / (probs.values()[j] + kKldEpsilon));
  }
  Tensor y = Tensor::scalar(d);
  auto p = prior_probs;
  tape.record("kld", {probs}, y, [probs, y, p, k]() mutable {
    const real g = y.grad()[0];
    auto& gq = probs.grad();
    for (int j = 0; j < k; ++j)
      gq[j] += g * (-p[j] / (probs.values()[j] + kKldEpsilon));
  });
  return y;
}

real quantile_threshold(const TargetPrior& prior, real rate) {
  prior.validate();
  if (!(rate >= 0 && rate < 1))
    throw std::domain_error("quantile_threshold: rate " + std::to_string(rate) +
                            " outside [0, 1)");
  if (rate == 0) return 0;
  // Bracket then bisect the monotone magnitude CDF.
  real lo = 0, hi = std::abs(prior.p1) + std::abs(prior.p2);
  while (prior.magnitude_cdf(hi) < rate) hi *= 2;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * (1 + hi); ++it) {
    const real mid = 0.5 * (lo + hi);
    if (prior.magnitude_cdf(mid) < rate)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

real observed_rate(const std::vector<Tensor>& latents, real threshold) {
  if (!(threshold >= 0))
    throw std::domain_error("observed_rate: threshold must be >= 0");
  std::int64_t total = 0, below = 0;
  for (const Tensor& t : latents) {
    for (real w : t.values())
      if (std::abs(w) <= threshold) ++below;
    total += t.size();
  }
  if (total == 0) throw std::domain_error("observed_rate: empty parameter set");
  return static_cast<real>(below) / static_cast<real>(total);
}

}  // namespace mrmp
