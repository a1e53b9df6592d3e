#pragma once

#include "mrmp/tensor.hpp"

namespace mrmp {

/// Geometric annealing of the band-stop sharpness: sigma(t) = sigma0 * g^t,
/// capped at sigma_max, with g chosen so the cap is reached at epoch `epochs`.
struct SigmaSchedule {
  real sigma0 = 1.0;
  real sigma_max = 1e6;
  int epochs = 2700;

  real growth() const;
};

real sigma_at(int epoch, const SigmaSchedule& schedule);

/// Threshold / sharpness pair of the band-stop gate, plus its schedule.
struct BandStopConfig {
  real threshold = 0.0;  // a, in weight units
  real sigma = 1.0;
  SigmaSchedule schedule;

  void validate() const;
};

// The band-stop gate: 1 / (1 + sigma * exp(sigma * (a^2 - w^2))).
// Smoothly suppresses |w| <= a and passes larger magnitudes; as sigma grows
// it approaches the hard mask 1[|w| > a], with psi(+-a) = 1/(1+sigma).
real band_stop(real w, const BandStopConfig& cfg);

// W = latent ⊙ psi(latent), recorded so gradients flow through both factors.
Tensor reparametrize(Tape& tape, const Tensor& latent, const BandStopConfig& cfg);

// Hard 0/1 mask, the sigma -> infinity limit of the gate. Entries with
// |w| == a exactly are removed.
Tensor extract_mask(const Tensor& latent, real threshold);

}  // namespace mrmp
