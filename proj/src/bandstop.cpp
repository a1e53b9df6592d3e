#include "mrmp/bandstop.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mrmp {

real SigmaSchedule::growth() const {
  if (epochs <= 0) return 1.0;
  return std::pow(sigma_max / sigma0, 1.0 / epochs);
}

real sigma_at(int epoch, const SigmaSchedule& schedule) {
  if (epoch < 0)
    throw std::domain_error("sigma_at: negative epoch " + std::to_string(epoch));
  if (schedule.sigma0 <= 0 || schedule.sigma_max < schedule.sigma0)
    throw std::domain_error("sigma_at: invalid schedule");
  const real s = schedule.sigma0 * std::pow(schedule.growth(), epoch);
  return std::min(s, schedule.sigma_max);
}

void BandStopConfig::validate() const {
  if (!(threshold >= 0))
    throw std::domain_error("band-stop threshold must be >= 0");
  if (!(sigma > 0)) throw std::domain_error("band-stop sigma must be > 0");
}

namespace {

// exp argument beyond which 1/(1+sigma*e^x) is 0 or 1 to machine precision.
constexpr real kExpClamp = 745.0;

inline real gate(real w, real a, real sigma) {
  const real e = sigma * (a * a - w * w);
  if (e > kExpClamp) return real(0);
  return real(1) / (real(1) + sigma * std::exp(e));
}

}  // namespace

real band_stop(real w, const BandStopConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(w))
    throw std::domain_error("band_stop: non-finite weight");
  return gate(w, cfg.threshold, cfg.sigma);
}

Tensor reparametrize(Tape& tape, const Tensor& latent, const BandStopConfig& cfg) {
  cfg.validate();
  const real a = cfg.threshold;
  const real sigma = cfg.sigma;
  const auto& w = latent.values();
  auto psi = std::make_shared<std::vector<real>>(w.size());
  std::vector<real> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    (*psi)[i] = gate(w[i], a, sigma);
    out[i] = w[i] * (*psi)[i];
  }
  Tensor y = Tensor::from(latent.shape(), std::move(out));
  // d/dw [w * psi(w)] = psi * (1 + 2*sigma*w^2*(1 - psi)); written in terms
  // of psi so it stays finite where the exp saturates.
  tape.record("band_stop_reparam", {latent}, y, [latent, y, psi, sigma]() mutable {
    const auto& g = y.grad();
    const auto& w = latent.values();
    auto& gl = latent.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const real p = (*psi)[i];
      gl[i] += g[i] * p * (real(1) + 2 * sigma * w[i] * w[i] * (real(1) - p));
    }
  });
  return y;
}

Tensor extract_mask(const Tensor& latent, real threshold) {
  if (!(threshold >= 0))
    throw std::domain_error("extract_mask: threshold must be >= 0");
  std::vector<real> out(latent.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::abs(latent.values()[i]) > threshold ? real(1) : real(0);
  return Tensor::from(latent.shape(), std::move(out));
}

}  // namespace mrmp
