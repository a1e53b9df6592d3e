#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mrmp/bandstop.hpp"
#include "mrmp/rng.hpp"

using namespace mrmp;

namespace {

BandStopConfig make_cfg(real a, real sigma) {
  BandStopConfig cfg;
  cfg.threshold = a;
  cfg.sigma = sigma;
  return cfg;
}

}  // namespace

TEST_SUITE("bandstop") {

TEST_CASE("gate value at the threshold is 1/(1+sigma)") {
  for (real sigma : {0.5, 1.0, 100.0, 1e6}) {
    for (real a : {0.2, 1.0, 2.5}) {
      const auto cfg = make_cfg(a, sigma);
      CHECK(band_stop(a, cfg) == doctest::Approx(1 / (1 + sigma)).epsilon(1e-12));
      CHECK(band_stop(-a, cfg) == doctest::Approx(1 / (1 + sigma)).epsilon(1e-12));
    }
  }
}

TEST_CASE("gate is even and tends to 1 for large magnitudes") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto cfg = make_cfg(rng.uniform(0, 2), std::exp(rng.uniform(0, 10)));
    const real w = rng.uniform(-3, 3);
    CHECK(band_stop(w, cfg) == band_stop(-w, cfg));
  }
  const auto cfg = make_cfg(1.0, 50.0);
  CHECK(band_stop(50.0, cfg) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gate approaches the hard mask as sigma grows") {
  const real a = 1.0;
  const auto cfg = make_cfg(a, 1e8);
  for (real w = 0.0; w < 3.0; w += 0.0037) {
    if (std::abs(std::abs(w) - a) <= 0.01) continue;
    const real expected = std::abs(w) > a ? 1.0 : 0.0;
    CHECK(std::abs(band_stop(w, cfg) - expected) < 1e-3);
  }
}

TEST_CASE("gate is increasing in |w| and decreasing in sigma inside the band") {
  const real a = 1.0;
  for (real sigma : {1.0, 10.0, 1e3}) {
    const auto cfg = make_cfg(a, sigma);
    real prev = -1;
    for (real w = 0.0; w <= 3.0; w += 0.05) {
      const real v = band_stop(w, cfg);
      CHECK(v >= prev);
      prev = v;
    }
  }
  for (real w : {0.1, 0.5, 0.9}) {
    CHECK(band_stop(w, make_cfg(a, 10.0)) < band_stop(w, make_cfg(a, 1.0)));
  }
}

TEST_CASE("non-finite weight is a domain error") {
  const auto cfg = make_cfg(1.0, 2.0);
  CHECK_THROWS_AS(band_stop(std::nan(""), cfg), std::domain_error);
  CHECK_THROWS_AS(band_stop(INFINITY, cfg), std::domain_error);
}

TEST_CASE("reparametrize gates both entries of the worked example") {
  Tape tape;
  Tensor latent = Tensor::from({2}, {0.1, 2.0}, true);
  Tensor w = reparametrize(tape, latent, make_cfg(1.0, 1e4));
  // psi(0.1) underflows to zero at this sharpness; psi(2.0) saturates to one.
  CHECK(std::abs(w.values()[0]) < 1e-100);
  CHECK(w.values()[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("reparametrize of zeros is zeros") {
  Tape tape;
  Tensor latent = Tensor::zeros({3, 2});
  Tensor w = reparametrize(tape, latent, make_cfg(0.7, 3.0));
  for (real v : w.values()) CHECK(v == 0);
}

TEST_CASE("zero threshold with tiny sigma leaves weights untouched") {
  Tape tape;
  Tensor latent = Tensor::from({4}, {0.3, -0.8, 1.5, -2.2}, true);
  Tensor w = reparametrize(tape, latent, make_cfg(0.0, 1e-8));
  for (int i = 0; i < 4; ++i)
    CHECK(w.values()[i] ==
          doctest::Approx(latent.values()[i]).epsilon(1e-6));
}

TEST_CASE("reparametrize backward stays finite at extreme sharpness") {
  Tape tape;
  Tensor latent = Tensor::from({3}, {0.1, 1.0, 2.0}, true);
  Tensor loss = reduce_sum(tape, reparametrize(tape, latent, make_cfg(1.0, 1e8)));
  tape.backward(loss);
  for (real g : latent.grad()) CHECK(std::isfinite(g));
}

TEST_CASE("sigma schedule: start, growth factor, cap, domain") {
  SigmaSchedule s;
  s.sigma0 = 1.0;
  s.sigma_max = 1e6;
  s.epochs = 2700;
  CHECK(sigma_at(0, s) == doctest::Approx(1.0));
  CHECK(s.growth() == doctest::Approx(1.0051301).epsilon(1e-6));
  CHECK(sigma_at(2700, s) == doctest::Approx(1e6).epsilon(1e-9));
  CHECK(sigma_at(5000, s) == doctest::Approx(1e6));  // saturation
  CHECK_THROWS_AS(sigma_at(-1, s), std::domain_error);
  real prev = 0;
  for (int e = 0; e <= 2700; e += 90) {
    const real v = sigma_at(e, s);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("extract_mask thresholding and monotone nesting") {
  Tensor latent = Tensor::from({4}, {0.1, 0.9, 0.0, -0.5});
  Tensor m0 = extract_mask(latent, 0.0);
  CHECK(m0.values() == std::vector<real>{1, 1, 0, 1});  // exact zeros removed
  Tensor m = extract_mask(latent, 0.5);
  CHECK(m.values() == std::vector<real>{0, 1, 0, 0});

  Rng rng(11);
  std::vector<real> w(64);
  for (auto& v : w) v = rng.uniform(-2, 2);
  Tensor t = Tensor::from({64}, w);
  real prev_threshold = 0;
  Tensor prev = extract_mask(t, prev_threshold);
  for (real a : {0.2, 0.5, 1.1, 1.9}) {
    Tensor cur = extract_mask(t, a);
    for (int i = 0; i < 64; ++i) CHECK(cur.values()[i] <= prev.values()[i]);
    prev = cur;
  }
  CHECK_THROWS_AS(extract_mask(t, -0.1), std::domain_error);
}

TEST_CASE("mask entry at |w| == a exactly is removed") {
  Tensor latent = Tensor::from({2}, {0.5, -0.5});
  Tensor m = extract_mask(latent, 0.5);
  CHECK(m.values()[0] == 0);
  CHECK(m.values()[1] == 0);
}

}  // TEST_SUITE
