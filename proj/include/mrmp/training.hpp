#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrmp/data.hpp"
#include "mrmp/distribution.hpp"
#include "mrmp/gcn.hpp"

namespace mrmp {

struct TrainConfig {
  std::vector<real> rates{0.5};  // strictly increasing, in [0, 1)
  TargetPrior prior = TargetPrior::gaussian();
  real lambda = 10.0;
  int epochs = 2700;
  int batch_size = 200;
  real lr0 = 1e-2;
  std::uint64_t seed = 0;
  int bins = 100;
  SigmaSchedule sigma;
  // Eq. 3 sums layers 1..L-1; whether the classifier belongs in the
  // histogram is ambiguous, so it is a switch (default: included).
  bool histogram_includes_classifier = true;
  int threads = 0;  // per-rate workers; 0 = hardware concurrency

  void validate() const;
};

struct EpochRow {
  int epoch;
  real rate, ce, kld, observed, lr, sigma;
};

struct RateSummary {
  real rate;
  real accuracy;
  std::int64_t params_active;
  real observed;
};

struct TrainReport {
  std::vector<EpochRow> rows;        // epochs x rates
  std::vector<RateSummary> summary;  // one per rate
  real initial_loss = 0;
  real final_loss = 0;
  double wall_seconds = 0;
};

// nu(t): speed of loss change increased -> lr*0.99, decreased -> lr/0.99,
// clamped to [lr0/100, lr0*100]. Fewer than two losses -> lr0.
real adaptive_lr(real prev_lr, const std::vector<real>& loss_history, real lr0);

// Single-rate run (Eq. 4): one tape per step holding CE + lambda*KLD.
TrainReport srmp_train(GcnModel& model, const GraphDataset& train,
                       const GraphDataset& eval, const TrainConfig& cfg);

// Multi-rate run (Eq. 5): shared latents, per-rate passes into disjoint
// gradient buffers (optionally threaded), KLD evaluated once per step,
// buffers reduced in fixed order before the Adam update.
TrainReport mrmp_train(GcnModel& model, const GraphDataset& train,
                       const GraphDataset& eval, const TrainConfig& cfg);

// Classic magnitude pruning: hard-prune the smallest fraction `rate` of a
// dense-trained model globally, freeze the mask, fine-tune the survivors.
TrainReport mp_baseline(GcnModel& model, const GraphDataset& train,
                        const GraphDataset& eval, real rate,
                        int finetune_epochs, const TrainConfig& cfg);

// Band-stop training with the KLD replaced by lambda1 * sum |w|. No budget
// guarantee: the achieved rate is only observed a posteriori.
TrainReport l1_train(GcnModel& model, const GraphDataset& train,
                     const GraphDataset& eval, real rate_target, real lambda1,
                     const TrainConfig& cfg);

// Accuracy averaged over classes (macro), with hard masks at a(rate).
real evaluate(const GcnModel& model, const GraphDataset& data,
              const TargetPrior& prior, real rate);
real evaluate_masked(const GcnModel& model, const GraphDataset& data,
                     const std::vector<Tensor>& masks);

std::vector<int> predict_masked(const GcnModel& model, const GraphDataset& data,
                                const std::vector<Tensor>& masks);

struct Extrapolation {
  real rate = 0;
  real threshold = 0;
  real observed = 0;
  std::int64_t params_active = 0;       // surviving prunable weights
  std::vector<Tensor> masks;
  bool below_trained_range = false;
  bool above_trained_range = false;
};

// Instantaneous pruning at any rate: threshold from the prior quantile,
// hard masks over the shared latents, no gradient steps.
Extrapolation extrapolate(const GcnModel& model, const TargetPrior& prior,
                          real rate, const std::vector<real>& trained_rates = {});

// Stacks descriptor rows of the selected graphs; returns labels alongside.
std::pair<Tensor, std::vector<int>> batch_signals(const GraphDataset& data,
                                                  const std::vector<int>& indices);

// CSV emission (RFC-4180, header row, 9 significant digits).
void write_epoch_csv(const std::string& path, const TrainReport& report);
void write_summary_csv(const std::string& path, const TrainReport& report);

}  // namespace mrmp
