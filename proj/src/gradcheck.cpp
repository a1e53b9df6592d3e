#include "mrmp/gradcheck.hpp"

#include <cmath>

#include "mrmp/bandstop.hpp"
#include "mrmp/data.hpp"
#include "mrmp/distribution.hpp"
#include "mrmp/gcn.hpp"
#include "mrmp/rng.hpp"
#include "mrmp/training.hpp"

namespace mrmp {

namespace {

Tensor random_tensor(Rng& rng, Shape shape, real lo = -2, real hi = 2) {
  std::vector<real> v(static_cast<std::size_t>(shape_size(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), /*requires_grad=*/true);
}

real rel_err(real a, real b) {
  const real denom = std::max({std::abs(a), std::abs(b), real(1e-3)});
  return std::abs(a - b) / denom;
}

}  // namespace

real max_rel_grad_err(const BuildFn& build, const std::vector<Tensor>& inputs,
                      std::uint64_t seed, real step) {
  // Project the output onto a fixed random direction so one scalar probes
  // every output entry.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<real> projection;

  auto scalar_loss = [&](const std::vector<Tensor>& xs) -> real {
    Tape tape;
    Tensor out = build(tape, xs);
    if (projection.empty()) {
      projection.resize(out.values().size());
      for (auto& p : projection) p = rng.uniform(-1, 1);
    }
    real s = 0;
    for (std::size_t i = 0; i < projection.size(); ++i)
      s += projection[i] * out.values()[i];
    return s;
  };

  // Analytic pass.
  real max_err = 0;
  {
    Tape tape;
    Tensor out = build(tape, inputs);
    if (projection.empty()) {
      projection.resize(out.values().size());
      for (auto& p : projection) p = rng.uniform(-1, 1);
    }
    Tensor proj = Tensor::from(out.shape(), projection);
    Tensor loss = reduce_sum(tape, hadamard(tape, out, proj));
    for (const Tensor& in : inputs) in.zero_grad();
    tape.backward(loss);
  }

  for (const Tensor& in : inputs) {
    auto& x = in.values();
    const auto& analytic = in.grad();
    for (std::size_t j = 0; j < x.size(); ++j) {
      const real keep = x[j];
      x[j] = keep + step;
      const real up = scalar_loss(inputs);
      x[j] = keep - step;
      const real down = scalar_loss(inputs);
      x[j] = keep;
      const real fd = (up - down) / (2 * step);
      max_err = std::max(max_err, rel_err(analytic[j], fd));
    }
  }
  return max_err;
}

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed, bool inject_fault,
                                           real tolerance) {
  std::vector<GradCheckResult> results;
  Rng rng(seed);

  auto check = [&](const std::string& name, const BuildFn& build,
                   std::vector<Tensor> inputs) {
    real err = max_rel_grad_err(build, inputs, seed + results.size());
    if (inject_fault && results.empty()) err += 1.0;  // negative-control hook
    results.push_back({name, err, err < tolerance});
  };

  check("matmul",
        [](Tape& t, const std::vector<Tensor>& x) { return matmul(t, x[0], x[1]); },
        {random_tensor(rng, {3, 4}), random_tensor(rng, {4, 2})});
  check("block_matmul",
        [](Tape& t, const std::vector<Tensor>& x) {
          return block_matmul(t, x[0], x[1]);
        },
        {random_tensor(rng, {3, 3}), random_tensor(rng, {6, 4})});
  check("hadamard",
        [](Tape& t, const std::vector<Tensor>& x) { return hadamard(t, x[0], x[1]); },
        {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});
  check("add",
        [](Tape& t, const std::vector<Tensor>& x) { return add(t, x[0], x[1]); },
        {random_tensor(rng, {3, 4}), random_tensor(rng, {3, 4})});
  check("add_rows",
        [](Tape& t, const std::vector<Tensor>& x) { return add_rows(t, x[0], x[1]); },
        {random_tensor(rng, {3, 4}), random_tensor(rng, {4})});
  check("scalar_mul",
        [](Tape& t, const std::vector<Tensor>& x) {
          return scalar_mul(t, x[0], 1.7);
        },
        {random_tensor(rng, {3, 4})});
  check("add_scalar",
        [](Tape& t, const std::vector<Tensor>& x) {
          return add_scalar(t, x[0], -0.3);
        },
        {random_tensor(rng, {3, 4})});
  check("exp",
        [](Tape& t, const std::vector<Tensor>& x) { return exp(t, x[0]); },
        {random_tensor(rng, {3, 4})});
  check("square",
        [](Tape& t, const std::vector<Tensor>& x) { return square(t, x[0]); },
        {random_tensor(rng, {3, 4})});
  check("negate",
        [](Tape& t, const std::vector<Tensor>& x) { return negate(t, x[0]); },
        {random_tensor(rng, {3, 4})});
  {
    // Away from the pole at zero.
    Tensor x = random_tensor(rng, {3, 4}, 0.5, 2.5);
    for (auto& v : x.values())
      if (rng.uniform() < 0.5) v = -v;
    check("reciprocal",
          [](Tape& t, const std::vector<Tensor>& xs) { return reciprocal(t, xs[0]); },
          {x});
  }
  {
    // Away from the kink at zero.
    Tensor x = random_tensor(rng, {3, 4});
    for (auto& v : x.values())
      if (std::abs(v) < 1e-3) v += 0.5;
    check("relu",
          [](Tape& t, const std::vector<Tensor>& xs) { return relu(t, xs[0]); },
          {x});
  }
  check("reduce_sum",
        [](Tape& t, const std::vector<Tensor>& x) { return reduce_sum(t, x[0]); },
        {random_tensor(rng, {3, 4})});
  {
    Tensor x = random_tensor(rng, {3, 4});
    for (auto& v : x.values())
      if (std::abs(v) < 1e-3) v += 0.5;
    check("reduce_abs_sum",
          [](Tape& t, const std::vector<Tensor>& xs) {
            return reduce_abs_sum(t, xs[0]);
          },
          {x});
  }
  check("segment_mean",
        [](Tape& t, const std::vector<Tensor>& x) {
          return segment_mean(t, x[0], 3);
        },
        {random_tensor(rng, {6, 4})});
  check("concat_cols",
        [](Tape& t, const std::vector<Tensor>& x) {
          return concat_cols(t, {x[0], x[1], x[2]});
        },
        {random_tensor(rng, {3, 2}), random_tensor(rng, {3, 4}),
         random_tensor(rng, {3, 1})});
  check("softmax_cross_entropy",
        [](Tape& t, const std::vector<Tensor>& x) {
          return softmax_cross_entropy(t, x[0], {2, 0, 1});
        },
        {random_tensor(rng, {3, 4})});

  // Band-stop reparametrization, both the smooth and near-saturated regimes.
  for (const auto& [name, a, sigma] :
       {std::tuple<const char*, real, real>{"band_stop_reparam(sigma=3)", 0.7, 3.0},
        std::tuple<const char*, real, real>{"band_stop_reparam(sigma=50)", 0.7,
                                            50.0}}) {
    BandStopConfig cfg;
    cfg.threshold = a;
    cfg.sigma = sigma;
    check(name,
          [cfg](Tape& t, const std::vector<Tensor>& x) {
            return reparametrize(t, x[0], cfg);
          },
          {random_tensor(rng, {3, 4})});
  }

  // Soft histogram and KLD, separately and composed.
  {
    const TargetPrior prior = TargetPrior::gaussian(0, 1);
    const BinGrid grid = make_grid(prior, 9);
    const auto prior_mass = discretize_prior(prior, grid);
    check("soft_histogram",
          [grid](Tape& t, const std::vector<Tensor>& x) {
            return soft_histogram(t, {x[0], x[1]}, grid).probs;
          },
          {random_tensor(rng, {3, 4}), random_tensor(rng, {2, 2})});
    check("kld",
          [prior_mass](Tape& t, const std::vector<Tensor>& x) {
            // Any positive vector works as the histogram argument here.
            return kld(t, prior_mass, x[0]);
          },
          {random_tensor(rng, {9}, 0.05, 1.0)});
    check("soft_histogram+kld",
          [grid, prior_mass](Tape& t, const std::vector<Tensor>& x) {
            return kld(t, prior_mass, soft_histogram(t, {x[0]}, grid).probs);
          },
          {random_tensor(rng, {4, 4})});
  }

  // Full toy GCN forward + cross-entropy against every parameter.
  {
    GcnConfig cfg;
    cfg.heads = 2;
    cfg.in_channels = 3;
    cfg.filters = 4;
    cfg.nodes = 4;
    cfg.classes = 2;
    cfg.input_dim = 6;
    cfg.dense_hidden = 5;
    GcnModel model = build_model(cfg, seed + 17);
    model.bandstop.threshold = 0.3;
    model.bandstop.sigma = 4.0;
    // Keep parameters away from the ReLU kinks seen by this fixed input.
    Tensor signals = random_tensor(rng, {2 * cfg.nodes, cfg.input_dim}, -1, 1);
    signals.set_requires_grad(false);
    const std::vector<int> labels = {0, 1};
    const auto params = model.parameters();
    check("gcn_forward",
          [model, signals, labels](Tape& t, const std::vector<Tensor>&) {
            return softmax_cross_entropy(t, forward(t, model, signals, 2),
                                         labels);
          },
          params);
  }

  return results;
}

}  // namespace mrmp
