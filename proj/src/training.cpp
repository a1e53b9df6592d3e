#include "mrmp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>

#include "mrmp/rng.hpp"

namespace mrmp {

void TrainConfig::validate() const {
  if (rates.empty()) throw std::invalid_argument("no pruning rates given");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0 && rates[i] < 1))
      throw std::invalid_argument("pruning rate " + std::to_string(rates[i]) +
                                  " outside [0, 1)");
    if (i > 0 && !(rates[i] > rates[i - 1]))
      throw std::invalid_argument("pruning rates must be strictly increasing");
  }
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (bins < 2) throw std::invalid_argument("need at least 2 histogram bins");
  if (!(lr0 > 0)) throw std::invalid_argument("lr0 must be > 0");
  prior.validate();
}

real adaptive_lr(real prev_lr, const std::vector<real>& loss_history, real lr0) {
  const std::size_t n = loss_history.size();
  if (n < 2) return lr0;
  if (n == 2) return prev_lr;
  const real speed_new = std::abs(loss_history[n - 1] - loss_history[n - 2]);
  const real speed_old = std::abs(loss_history[n - 2] - loss_history[n - 3]);
  real lr = prev_lr;
  if (speed_new > speed_old)
    lr = prev_lr * real(0.99);
  else if (speed_new < speed_old)
    lr = prev_lr / real(0.99);
  return std::clamp(lr, lr0 / 100, lr0 * 100);
}

std::pair<Tensor, std::vector<int>> batch_signals(const GraphDataset& data,
                                                  const std::vector<int>& indices) {
  if (indices.empty()) throw std::domain_error("batch_signals: empty batch");
  const int n = data.nodes, dim = data.input_dim;
  std::vector<real> rows;
  rows.reserve(indices.size() * static_cast<std::size_t>(n) * dim);
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (int i : indices) {
    const TrajectoryGraph& g = data.graphs[i];
    rows.insert(rows.end(), g.descriptors.begin(), g.descriptors.end());
    labels.push_back(g.label);
  }
  return {Tensor::from({static_cast<int>(indices.size()) * n, dim}, std::move(rows)),
          std::move(labels)};
}

namespace {

// Persistent workers for the per-rate passes; spawning threads per step
// costs more than the passes themselves on small models.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) : worker_count_(workers) {
    seen_.assign(workers, 0);
    threads_.reserve(workers);
    for (int w = 0; w < workers; ++w)
      threads_.emplace_back([this, w]() {
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
          cv_.wait(lock, [&] { return stop_ || generation_ > seen_[w]; });
          if (stop_) return;
          seen_[w] = generation_;
          auto job = job_;
          const int jobs = jobs_;
          lock.unlock();
          for (int j = w; j < jobs; j += worker_count_) job(j);
          lock.lock();
          if (++done_ == worker_count_) done_cv_.notify_one();
        }
      });
  }

  ~WorkerPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(int jobs, const std::function<void(int)>& fn) {
    std::unique_lock<std::mutex> lock(mutex_);
    job_ = fn;
    jobs_ = jobs;
    done_ = 0;
    ++generation_;
    cv_.notify_all();
    done_cv_.wait(lock, [&] { return done_ == worker_count_; });
  }

 private:
  int worker_count_ = 0;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable cv_, done_cv_;
  std::function<void(int)> job_;
  std::vector<long> seen_;
  long generation_ = 0;
  int jobs_ = 0;
  int done_ = 0;
  bool stop_ = false;
};

struct Adam {
  real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<std::vector<real>> m, v;
  long step_count = 0;

  void init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
      m.emplace_back(p.values().size(), real(0));
      v.emplace_back(p.values().size(), real(0));
    }
    step_count = 0;
  }

  void step(const std::vector<Tensor>& params, real lr) {
    ++step_count;
    const real bc1 = 1 - std::pow(beta1, static_cast<real>(step_count));
    const real bc2 = 1 - std::pow(beta2, static_cast<real>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor p = params[i];
      auto& w = p.values();
      const auto& g = p.grad();
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[i][j] = beta1 * m[i][j] + (1 - beta1) * g[j];
        v[i][j] = beta2 * v[i][j] + (1 - beta2) * g[j] * g[j];
        w[j] -= lr * (m[i][j] / bc1) / (std::sqrt(v[i][j] / bc2) + eps);
      }
      p.zero_grad();
    }
  }
};

std::vector<std::vector<int>> make_batches(std::vector<int>& order, Rng& rng,
                                           int batch_size) {
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    batches.emplace_back(order.begin() + i, order.begin() + end);
  }
  return batches;
}

std::vector<Tensor> histogram_latents(const GcnModel& model, bool with_classifier) {
  auto latents = model.prunable();
  if (!with_classifier) latents.pop_back();  // classifier is last
  return latents;
}

void check_finite(real loss, int epoch) {
  if (!std::isfinite(loss))
    throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                             std::to_string(epoch));
}

// Forward-only total loss over the whole set: sum_r CE_r + lambda * KLD.
real total_loss(const GcnModel& model, const GraphDataset& data,
                const TrainConfig& cfg, const std::vector<real>& thresholds,
                real sigma) {
  std::vector<int> all(data.size());
  for (int i = 0; i < data.size(); ++i) all[i] = i;
  auto [signals, labels] = batch_signals(data, all);
  real total = 0;
  for (real a : thresholds) {
    Tape tape;
    GcnModel m = model;
    m.bandstop.threshold = a;
    m.bandstop.sigma = sigma;
    total += softmax_cross_entropy(tape, forward(tape, m, signals, data.size()),
                                   labels)
                 .item();
  }
  if (cfg.lambda > 0) {
    Tape tape;
    const BinGrid grid = make_grid(cfg.prior, cfg.bins);
    const auto hist = soft_histogram(
        tape, histogram_latents(model, cfg.histogram_includes_classifier), grid);
    total += cfg.lambda * kld(tape, discretize_prior(cfg.prior, grid), hist.probs)
                              .item();
  }
  return total;
}

void finalize_report(TrainReport& report, const GcnModel& model,
                     const GraphDataset& eval, const TrainConfig& cfg,
                     const std::vector<real>& thresholds) {
  for (std::size_t ri = 0; ri < cfg.rates.size(); ++ri) {
    RateSummary s;
    s.rate = cfg.rates[ri];
    std::vector<Tensor> masks;
    std::int64_t active = 0;
    for (const Tensor& w : model.prunable()) {
      Tensor mask = extract_mask(w, thresholds[ri]);
      for (real v : mask.values()) active += v > 0 ? 1 : 0;
      masks.push_back(std::move(mask));
    }
    s.params_active = active;
    s.observed = observed_rate(model.prunable(), thresholds[ri]);
    s.accuracy = eval.empty() ? 0 : evaluate_masked(model, eval, masks);
    report.summary.push_back(s);
  }
}

}  // namespace

TrainReport srmp_train(GcnModel& model, const GraphDataset& train,
                       const GraphDataset& eval, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.rates.size() != 1)
    throw std::invalid_argument("srmp_train expects exactly one rate");
  if (train.empty()) throw std::domain_error("srmp_train: empty training set");

  const auto t0 = std::chrono::steady_clock::now();
  const real rate = cfg.rates[0];
  const real threshold = quantile_threshold(cfg.prior, rate);
  model.bandstop.schedule = cfg.sigma;
  model.bandstop.threshold = threshold;

  const BinGrid grid = make_grid(cfg.prior, cfg.bins);
  const std::vector<real> prior_mass = discretize_prior(cfg.prior, grid);

  const auto params = model.parameters();
  Adam adam;
  adam.init(params);
  Rng rng(cfg.seed);
  std::vector<int> order(train.size());
  for (int i = 0; i < train.size(); ++i) order[i] = i;

  TrainReport report;
  report.initial_loss =
      total_loss(model, train, cfg, {threshold}, sigma_at(0, cfg.sigma));

  std::vector<real> loss_history;
  real lr = cfg.lr0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const real sigma = sigma_at(epoch, cfg.sigma);
    model.bandstop.sigma = sigma;
    lr = adaptive_lr(lr, loss_history, cfg.lr0);

    real epoch_ce = 0, epoch_kld = 0;
    int batches = 0;
    for (const auto& batch : make_batches(order, rng, cfg.batch_size)) {
      auto [signals, labels] = batch_signals(train, batch);
      Tape tape;
      Tensor ce = softmax_cross_entropy(
          tape, forward(tape, model, signals, static_cast<int>(batch.size())),
          labels);
      Tensor objective = ce;
      real kld_value = 0;
      if (cfg.lambda > 0) {
        const auto hist = soft_histogram(
            tape, histogram_latents(model, cfg.histogram_includes_classifier),
            grid);
        Tensor kl = kld(tape, prior_mass, hist.probs);
        kld_value = kl.item();
        objective = add(tape, ce, scalar_mul(tape, kl, cfg.lambda));
      }
      check_finite(objective.item(), epoch);
      tape.backward(objective);
      adam.step(params, lr);
      epoch_ce += ce.item();
      epoch_kld += kld_value;
      ++batches;
    }
    epoch_ce /= batches;
    epoch_kld /= batches;
    loss_history.push_back(epoch_ce + cfg.lambda * epoch_kld);
    report.rows.push_back({epoch, rate, epoch_ce, epoch_kld,
                           observed_rate(model.prunable(), threshold), lr, sigma});
  }

  const real sigma_end =
      sigma_at(cfg.epochs > 0 ? cfg.epochs - 1 : 0, cfg.sigma);
  report.final_loss = total_loss(model, train, cfg, {threshold}, sigma_end);
  finalize_report(report, model, eval, cfg, {threshold});
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport mrmp_train(GcnModel& model, const GraphDataset& train,
                       const GraphDataset& eval, const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) throw std::domain_error("mrmp_train: empty training set");

  const auto t0 = std::chrono::steady_clock::now();
  const int n_rates = static_cast<int>(cfg.rates.size());
  std::vector<real> thresholds(n_rates);
  for (int r = 0; r < n_rates; ++r)
    thresholds[r] = quantile_threshold(cfg.prior, cfg.rates[r]);
  model.bandstop.schedule = cfg.sigma;
  model.bandstop.threshold = thresholds[0];

  const BinGrid grid = make_grid(cfg.prior, cfg.bins);
  const std::vector<real> prior_mass = discretize_prior(cfg.prior, grid);

  const auto params = model.parameters();
  const std::size_t n_params = params.size();
  Adam adam;
  adam.init(params);
  Rng rng(cfg.seed);
  std::vector<int> order(train.size());
  for (int i = 0; i < train.size(); ++i) order[i] = i;

  int workers = cfg.threads > 0
                    ? cfg.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n_rates));
  std::unique_ptr<WorkerPool> pool;
  if (workers > 1) pool = std::make_unique<WorkerPool>(workers);

  TrainReport report;
  report.initial_loss =
      total_loss(model, train, cfg, thresholds, sigma_at(0, cfg.sigma));

  std::vector<real> loss_history;
  real lr = cfg.lr0;

  // The shadows share the latent data and persist across steps; only their
  // gradient buffers are per-rate.
  std::vector<GcnModel> shadows;
  std::vector<std::vector<Tensor>> rate_params;
  for (int r = 0; r < n_rates; ++r) {
    shadows.push_back(leaf_view_model(model));
    shadows[r].bandstop.threshold = thresholds[r];
    rate_params.push_back(shadows[r].parameters());
  }
  GcnModel hist_shadow = leaf_view_model(model);
  const auto hist_params = hist_shadow.parameters();
  const auto hist_inputs =
      histogram_latents(hist_shadow, cfg.histogram_includes_classifier);
  std::vector<real> rate_ce(n_rates);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const real sigma = sigma_at(epoch, cfg.sigma);
    lr = adaptive_lr(lr, loss_history, cfg.lr0);
    for (int r = 0; r < n_rates; ++r) shadows[r].bandstop.sigma = sigma;

    std::vector<real> epoch_ce(n_rates, 0);
    real epoch_kld = 0;
    int batches = 0;
    for (const auto& batch : make_batches(order, rng, cfg.batch_size)) {
      auto [signals, labels] = batch_signals(train, batch);
      const int bsize = static_cast<int>(batch.size());

      // KLD pass: evaluated once per step, gradients into its own shadow.
      real kld_value = 0;
      if (cfg.lambda > 0) {
        Tape tape;
        const auto hist = soft_histogram(tape, hist_inputs, grid);
        Tensor scaled =
            scalar_mul(tape, kld(tape, prior_mass, hist.probs), cfg.lambda);
        kld_value = scaled.item() / cfg.lambda;
        tape.backward(scaled);
      }

      // Per-rate passes read the frozen latents and write disjoint buffers.
      auto run_rate = [&](int r) {
        Tape tape;
        Tensor ce = softmax_cross_entropy(
            tape, forward(tape, shadows[r], signals, bsize), labels);
        rate_ce[r] = ce.item();
        tape.backward(ce);
      };
      if (pool) {
        pool->run(n_rates, run_rate);
      } else {
        for (int r = 0; r < n_rates; ++r) run_rate(r);
      }

      // Fixed reduction order: KLD buffer first, then rates ascending.
      for (std::size_t i = 0; i < n_params; ++i) {
        auto& g = params[i].grad();
        if (cfg.lambda > 0) {
          auto& gh = hist_params[i].grad();
          for (std::size_t j = 0; j < g.size(); ++j) g[j] += gh[j];
          std::fill(gh.begin(), gh.end(), real(0));
        }
        for (int r = 0; r < n_rates; ++r) {
          auto& gr = rate_params[r][i].grad();
          for (std::size_t j = 0; j < g.size(); ++j) g[j] += gr[j];
          std::fill(gr.begin(), gr.end(), real(0));
        }
      }

      real step_loss = cfg.lambda * kld_value;
      for (int r = 0; r < n_rates; ++r) step_loss += rate_ce[r];
      check_finite(step_loss, epoch);
      adam.step(params, lr);

      for (int r = 0; r < n_rates; ++r) epoch_ce[r] += rate_ce[r];
      epoch_kld += kld_value;
      ++batches;
    }

    epoch_kld /= batches;
    real epoch_total = cfg.lambda * epoch_kld;
    for (int r = 0; r < n_rates; ++r) {
      epoch_ce[r] /= batches;
      epoch_total += epoch_ce[r];
      report.rows.push_back({epoch, cfg.rates[r], epoch_ce[r], epoch_kld,
                             observed_rate(model.prunable(), thresholds[r]), lr,
                             sigma});
    }
    loss_history.push_back(epoch_total);
  }

  const real sigma_end =
      sigma_at(cfg.epochs > 0 ? cfg.epochs - 1 : 0, cfg.sigma);
  report.final_loss = total_loss(model, train, cfg, thresholds, sigma_end);
  finalize_report(report, model, eval, cfg, thresholds);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport mp_baseline(GcnModel& model, const GraphDataset& train,
                        const GraphDataset& eval, real rate, int finetune_epochs,
                        const TrainConfig& cfg) {
  if (!(rate >= 0 && rate < 1))
    throw std::domain_error("mp_baseline: rate " + std::to_string(rate) +
                            " outside [0, 1)");
  if (train.empty()) throw std::domain_error("mp_baseline: empty training set");

  const auto t0 = std::chrono::steady_clock::now();
  // Global magnitude ranking, ties broken by position for determinism.
  const auto latents = model.prunable();
  std::vector<std::pair<real, std::int64_t>> ranked;
  std::int64_t total = 0;
  for (const Tensor& t : latents) total += t.size();
  ranked.reserve(total);
  std::int64_t offset = 0;
  for (const Tensor& t : latents) {
    for (std::int64_t j = 0; j < t.size(); ++j)
      ranked.emplace_back(std::abs(t.values()[j]), offset + j);
    offset += t.size();
  }
  std::sort(ranked.begin(), ranked.end());
  const std::int64_t n_remove = std::llround(rate * static_cast<real>(total));
  std::vector<std::uint8_t> keep(total, 1);
  for (std::int64_t i = 0; i < n_remove; ++i) keep[ranked[i].second] = 0;

  std::vector<Tensor> masks;
  offset = 0;
  for (const Tensor& t : latents) {
    std::vector<real> m(t.values().size());
    for (std::int64_t j = 0; j < t.size(); ++j) m[j] = keep[offset + j];
    masks.push_back(Tensor::from(t.shape(), std::move(m)));
    offset += t.size();
  }

  // Fine-tune the survivors; masked entries receive zero gradient.
  const auto params = model.parameters();
  Adam adam;
  adam.init(params);
  Rng rng(cfg.seed);
  std::vector<int> order(train.size());
  for (int i = 0; i < train.size(); ++i) order[i] = i;

  TrainReport report;
  std::vector<real> loss_history;
  real lr = cfg.lr0;
  const real removed_fraction = static_cast<real>(n_remove) / total;
  for (int epoch = 0; epoch < finetune_epochs; ++epoch) {
    lr = adaptive_lr(lr, loss_history, cfg.lr0);
    real epoch_ce = 0;
    int batches = 0;
    for (const auto& batch : make_batches(order, rng, cfg.batch_size)) {
      auto [signals, labels] = batch_signals(train, batch);
      Tape tape;
      Tensor ce = softmax_cross_entropy(
          tape,
          forward_gated(tape, model, gate_masks(tape, model, masks), signals,
                        static_cast<int>(batch.size())),
          labels);
      check_finite(ce.item(), epoch);
      tape.backward(ce);
      adam.step(params, lr);
      epoch_ce += ce.item();
      ++batches;
    }
    epoch_ce /= batches;
    loss_history.push_back(epoch_ce);
    report.rows.push_back({epoch, rate, epoch_ce, 0, removed_fraction, lr, 0});
  }

  RateSummary s;
  s.rate = rate;
  s.observed = removed_fraction;
  s.params_active = total - n_remove;
  s.accuracy = eval.empty() ? 0 : evaluate_masked(model, eval, masks);
  report.summary.push_back(s);
  report.initial_loss = loss_history.empty() ? 0 : loss_history.front();
  report.final_loss = loss_history.empty() ? 0 : loss_history.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

TrainReport l1_train(GcnModel& model, const GraphDataset& train,
                     const GraphDataset& eval, real rate_target, real lambda1,
                     const TrainConfig& cfg) {
  if (lambda1 < 0) throw std::invalid_argument("l1_train: lambda1 must be >= 0");
  TrainConfig local = cfg;
  local.rates = {rate_target};
  local.lambda = 0;  // KLD replaced by the l1 penalty
  local.validate();
  if (train.empty()) throw std::domain_error("l1_train: empty training set");

  const auto t0 = std::chrono::steady_clock::now();
  const real threshold = quantile_threshold(local.prior, rate_target);
  model.bandstop.schedule = local.sigma;
  model.bandstop.threshold = threshold;

  const auto params = model.parameters();
  Adam adam;
  adam.init(params);
  Rng rng(local.seed);
  std::vector<int> order(train.size());
  for (int i = 0; i < train.size(); ++i) order[i] = i;

  TrainReport report;
  std::vector<real> loss_history;
  real lr = local.lr0;
  for (int epoch = 0; epoch < local.epochs; ++epoch) {
    const real sigma = sigma_at(epoch, local.sigma);
    model.bandstop.sigma = sigma;
    lr = adaptive_lr(lr, loss_history, local.lr0);

    real epoch_ce = 0, epoch_reg = 0;
    int batches = 0;
    for (const auto& batch : make_batches(order, rng, local.batch_size)) {
      auto [signals, labels] = batch_signals(train, batch);
      Tape tape;
      Tensor ce = softmax_cross_entropy(
          tape, forward(tape, model, signals, static_cast<int>(batch.size())),
          labels);
      Tensor objective = ce;
      real reg_value = 0;
      if (lambda1 > 0) {
        Tensor reg = reduce_abs_sum(tape, model.prunable()[0]);
        const auto latents = model.prunable();
        for (std::size_t i = 1; i < latents.size(); ++i)
          reg = add(tape, reg, reduce_abs_sum(tape, latents[i]));
        reg_value = reg.item();
        objective = add(tape, ce, scalar_mul(tape, reg, lambda1));
      }
      check_finite(objective.item(), epoch);
      tape.backward(objective);
      adam.step(params, lr);
      epoch_ce += ce.item();
      epoch_reg += reg_value;
      ++batches;
    }
    epoch_ce /= batches;
    epoch_reg /= batches;
    loss_history.push_back(epoch_ce + lambda1 * epoch_reg);
    // The regularizer column carries the l1 penalty for these runs.
    report.rows.push_back({epoch, rate_target, epoch_ce, epoch_reg,
                           observed_rate(model.prunable(), threshold), lr, sigma});
  }

  report.initial_loss = loss_history.empty() ? 0 : loss_history.front();
  report.final_loss = loss_history.empty() ? 0 : loss_history.back();
  finalize_report(report, model, eval, local, {threshold});
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<int> predict_masked(const GcnModel& model, const GraphDataset& data,
                                const std::vector<Tensor>& masks) {
  std::vector<int> predictions;
  predictions.reserve(data.size());
  constexpr int kChunk = 512;
  for (int start = 0; start < data.size(); start += kChunk) {
    std::vector<int> idx;
    for (int i = start; i < std::min(data.size(), start + kChunk); ++i)
      idx.push_back(i);
    auto [signals, labels] = batch_signals(data, idx);
    Tape tape;
    Tensor logits = forward_gated(tape, model, gate_masks(tape, model, masks),
                                  signals, static_cast<int>(idx.size()));
    const int classes = logits.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      int best = 0;
      for (int c = 1; c < classes; ++c)
        if (logits.values()[i * classes + c] > logits.values()[i * classes + best])
          best = c;
      predictions.push_back(best);
    }
  }
  return predictions;
}

real evaluate_masked(const GcnModel& model, const GraphDataset& data,
                     const std::vector<Tensor>& masks) {
  if (data.empty()) throw std::domain_error("evaluate: empty dataset");
  const auto predictions = predict_masked(model, data, masks);
  std::vector<std::int64_t> correct(data.classes, 0), total(data.classes, 0);
  for (int i = 0; i < data.size(); ++i) {
    const int label = data.graphs[i].label;
    ++total[label];
    if (predictions[i] == label) ++correct[label];
  }
  real acc = 0;
  int present = 0;
  for (int c = 0; c < data.classes; ++c) {
    if (total[c] == 0) continue;
    acc += static_cast<real>(correct[c]) / total[c];
    ++present;
  }
  if (present == 0) throw std::domain_error("evaluate: no labeled classes");
  return acc / present;
}

real evaluate(const GcnModel& model, const GraphDataset& data,
              const TargetPrior& prior, real rate) {
  const real threshold = quantile_threshold(prior, rate);
  std::vector<Tensor> masks;
  for (const Tensor& w : model.prunable())
    masks.push_back(extract_mask(w, threshold));
  return evaluate_masked(model, data, masks);
}

Extrapolation extrapolate(const GcnModel& model, const TargetPrior& prior,
                          real rate, const std::vector<real>& trained_rates) {
  Extrapolation out;
  out.rate = rate;
  out.threshold = quantile_threshold(prior, rate);
  std::int64_t active = 0;
  for (const Tensor& w : model.prunable()) {
    Tensor mask = extract_mask(w, out.threshold);
    for (real v : mask.values()) active += v > 0 ? 1 : 0;
    out.masks.push_back(std::move(mask));
  }
  out.params_active = active;
  out.observed = observed_rate(model.prunable(), out.threshold);
  if (!trained_rates.empty()) {
    const auto [lo, hi] =
        std::minmax_element(trained_rates.begin(), trained_rates.end());
    out.below_trained_range = rate < *lo;
    out.above_trained_range = rate > *hi;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

namespace {

std::string num(real v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_epoch_csv(const std::string& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "epoch,rate,ce_loss,kld,observed_rate,lr,sigma\r\n";
  for (const EpochRow& r : report.rows)
    out << r.epoch << ',' << num(r.rate) << ',' << num(r.ce) << ','
        << num(r.kld) << ',' << num(r.observed) << ',' << num(r.lr) << ','
        << num(r.sigma) << "\r\n";
}

void write_summary_csv(const std::string& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out << "rate,accuracy,params_active\r\n";
  for (const RateSummary& s : report.summary)
    out << num(s.rate) << ',' << num(s.accuracy) << ',' << s.params_active
        << "\r\n";
}

}  // namespace mrmp
