#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrmp/tensor.hpp"

namespace mrmp {

struct GradCheckResult {
  std::string op;
  real max_rel_err = 0;
  bool pass = false;
};

// Builds the checked computation from scratch on every call; must be pure.
using BuildFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

// Compares analytic gradients of a random projection of the output against
// central differences (h = 1e-5) for every entry of every input.
real max_rel_grad_err(const BuildFn& build, const std::vector<Tensor>& inputs,
                      std::uint64_t seed, real step = 1e-5);

// The full finite-difference suite: every primitive, the band-stop
// reparametrization, the soft histogram, KLD, and a toy GCN forward pass.
// `inject_fault` deliberately corrupts one analytic gradient (negative
// control for the harness itself).
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed,
                                           bool inject_fault = false,
                                           real tolerance = 1e-4);

}  // namespace mrmp
