#include "mrmp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "mrmp/checkpoint.hpp"
#include "mrmp/data.hpp"
#include "mrmp/gradcheck.hpp"
#include "mrmp/manifest.hpp"
#include "mrmp/training.hpp"

namespace fs = std::filesystem;

namespace mrmp {

std::vector<real> parse_rates(const std::string& spec) {
  std::vector<real> rates;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string token =
        spec.substr(pos, comma == std::string::npos ? std::string::npos
                                                    : comma - pos);
    if (token.empty())
      throw std::invalid_argument("empty entry in rate list '" + spec + "'");
    const std::size_t c1 = token.find(':');
    try {
      if (c1 == std::string::npos) {
        rates.push_back(std::stod(token));
      } else {
        const std::size_t c2 = token.find(':', c1 + 1);
        if (c2 == std::string::npos)
          throw std::invalid_argument("range needs start:stop:step");
        const real start = std::stod(token.substr(0, c1));
        const real stop = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
        const real step = std::stod(token.substr(c2 + 1));
        if (!(step > 0)) throw std::invalid_argument("step must be positive");
        for (int i = 0;; ++i) {
          const real v = std::round((start + i * step) * 1e9) / 1e9;
          if (v > stop + 1e-9) break;
          rates.push_back(v);
        }
      }
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("malformed rate entry '" + token + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0 && rates[i] < 1))
      throw std::invalid_argument("rate " + std::to_string(rates[i]) +
                                  " outside [0, 1)");
    if (i > 0 && !(rates[i] > rates[i - 1]))
      throw std::invalid_argument("rates must be strictly increasing: '" + spec +
                                  "'");
  }
  if (rates.empty()) throw std::invalid_argument("empty rate list");
  return rates;
}

namespace {

struct PreparedData {
  GraphDataset all, train, test;
};

PreparedData prepare_data(const RunManifest& m) {
  std::vector<SkeletonSequence> seqs;
  if (m.data == "synth") {
    seqs = synth_dataset(m.synth);
  } else {
    seqs = load_jsonl(m.data);
  }
  PreparedData out;
  out.all = make_graph_dataset(seqs, m.chunks, m.knn);
  auto [tr, te] = stratified_split(out.all, m.test_fraction, m.seed + 1);
  out.train = subset(out.all, tr);
  out.test = subset(out.all, te);
  return out;
}

TrainConfig dense_config(TrainConfig cfg) {
  cfg.rates = {0.0};
  cfg.lambda = 0;
  // sigma pinned tiny: psi ~= 1, no pruning pressure.
  cfg.sigma.sigma0 = cfg.sigma.sigma_max = 1e-8;
  return cfg;
}

std::string checkpoint_precision() {
  const char* env = std::getenv("MRMP_PRECISION");
  if (env == nullptr || env[0] == '\0') return "f64";
  const std::string p = env;
  if (p != "f32" && p != "f64")
    throw std::invalid_argument("MRMP_PRECISION must be f32 or f64, got '" + p +
                                "'");
  return p;
}

struct CheckpointPaths {
  std::string model, manifest, dir;
};

CheckpointPaths resolve_checkpoint(const std::string& arg) {
  CheckpointPaths p;
  if (fs::is_directory(arg)) {
    p.dir = arg;
    p.model = (fs::path(arg) / "model.mrmp").string();
    p.manifest = (fs::path(arg) / "manifest.json").string();
  } else {
    p.model = arg;
    p.dir = fs::path(arg).parent_path().string();
    p.manifest = (fs::path(arg).parent_path() / "manifest.json").string();
  }
  if (!fs::exists(p.model))
    throw std::runtime_error("checkpoint not found: " + p.model);
  if (!fs::exists(p.manifest))
    throw std::runtime_error("manifest not found next to checkpoint: " +
                             p.manifest);
  return p;
}

GcnModel load_checkpoint_model(const CheckpointPaths& paths,
                               const RunManifest& manifest) {
  GcnModel model = build_model(manifest.model, manifest.seed);
  load_model(paths.model, model);
  return model;
}

GraphDataset evaluation_data(const RunManifest& manifest,
                             const std::string& data_arg) {
  if (data_arg.empty() || data_arg == "manifest" ||
      (data_arg == "synth" && manifest.data == "synth")) {
    PreparedData d = prepare_data(manifest);
    return d.test;
  }
  RunManifest m = manifest;
  m.data = data_arg;
  PreparedData d = prepare_data(m);
  // User-supplied file: evaluate on all of it.
  return d.all;
}

struct TrainOpts {
  std::string mode = "mrmp";
  std::string data = "synth";
  std::string rates_spec;
  std::string prior = "gaussian";
  std::string prior_params;
  real lambda = 10.0;
  real lambda1 = 1e-3;
  int epochs = 300;
  int batch = 64;
  real lr0 = 1e-2;
  int bins = 100;
  real sigma0 = 1.0;
  real sigma_max = 1e6;
  int sigma_epochs = 0;
  std::uint64_t seed = 0;
  std::string out = "runs/run";
  int heads = 1;
  int channels = 12;
  int filters = 32;
  int hidden = 48;
  real test_fraction = 0.3;
  int chunks = 4;
  int knn = 3;
  int threads = 0;
  int finetune_epochs = 0;
  int synth_classes = 3;
  int synth_per_class = 167;
  int synth_joints = 10;
  int synth_frames = 24;
  real synth_noise = 0.05;
};

int run_train(const TrainOpts& o) {
  RunManifest m;
  m.mode = o.mode;
  m.data = o.data;
  m.out = o.out;
  m.precision = checkpoint_precision();
  m.prior = TargetPrior::parse(o.prior);
  if (!o.prior_params.empty()) {
    const std::size_t comma = o.prior_params.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("--prior-params expects 'p1,p2'");
    m.prior.p1 = std::stod(o.prior_params.substr(0, comma));
    m.prior.p2 = std::stod(o.prior_params.substr(comma + 1));
    m.prior.validate();
  }
  if (!o.rates_spec.empty())
    m.rates = parse_rates(o.rates_spec);
  else if (o.mode == "mrmp")
    m.rates = parse_rates("0.5:0.95:0.05,0.98");
  else
    m.rates = {0.5};
  m.lambda = o.lambda;
  m.lambda1 = o.lambda1;
  m.epochs = o.epochs;
  m.batch = o.batch;
  m.bins = o.bins;
  m.lr0 = o.lr0;
  m.sigma0 = o.sigma0;
  m.sigma_max = o.sigma_max;
  m.sigma_epochs = o.sigma_epochs;
  m.seed = o.seed;
  m.threads = o.threads;
  m.finetune_epochs = o.finetune_epochs > 0 ? o.finetune_epochs : o.epochs;
  m.chunks = o.chunks;
  m.knn = o.knn;
  m.test_fraction = o.test_fraction;
  m.synth.seed = o.seed;
  m.synth.classes = o.synth_classes;
  m.synth.sequences_per_class = o.synth_per_class;
  m.synth.joints = o.synth_joints;
  m.synth.frames = o.synth_frames;
  m.synth.noise = o.synth_noise;

  if ((o.mode == "srmp" || o.mode == "mp" || o.mode == "l1") &&
      m.rates.size() != 1)
    throw std::invalid_argument("--mode " + o.mode + " expects exactly one rate");

  PreparedData data = prepare_data(m);
  m.model.heads = o.heads;
  m.model.in_channels = o.channels;
  m.model.filters = o.filters;
  m.model.dense_hidden = o.hidden;
  m.model.nodes = data.all.nodes;
  m.model.classes = data.all.classes;
  m.model.input_dim = data.all.input_dim;
  m.model.validate();

  GcnModel model = build_model(m.model, m.seed);
  std::printf("model: heads=%d channels=%d filters=%d hidden=%d nodes=%d classes=%d\n",
              m.model.heads, m.model.in_channels, m.model.filters,
              m.model.dense_hidden, m.model.nodes, m.model.classes);
  std::printf("parameters: prunable=%lld total=%lld\n",
              static_cast<long long>(model.prunable_count()),
              static_cast<long long>(model.parameter_count()));

  TrainConfig cfg = m.train_config();
  TrainReport report;
  if (o.mode == "srmp") {
    report = srmp_train(model, data.train, data.test, cfg);
  } else if (o.mode == "mrmp") {
    report = mrmp_train(model, data.train, data.test, cfg);
  } else if (o.mode == "dense") {
    TrainConfig d = dense_config(cfg);
    report = srmp_train(model, data.train, data.test, d);
  } else if (o.mode == "mp") {
    TrainConfig d = dense_config(cfg);
    srmp_train(model, data.train, data.test, d);
    report = mp_baseline(model, data.train, data.test, m.rates[0],
                         m.finetune_epochs, cfg);
  } else if (o.mode == "l1") {
    report = l1_train(model, data.train, data.test, m.rates[0], m.lambda1, cfg);
  } else {
    throw std::invalid_argument("unknown mode '" + o.mode +
                                "'; expected one of {srmp,mrmp,mp,l1,dense}");
  }

  fs::create_directories(m.out);
  m.save((fs::path(m.out) / "manifest.json").string());
  save_model((fs::path(m.out) / "model.mrmp").string(), model,
             m.precision == "f32" ? CheckpointDtype::F32 : CheckpointDtype::F64);
  write_epoch_csv((fs::path(m.out) / "epochs.csv").string(), report);
  write_summary_csv((fs::path(m.out) / "summary.csv").string(), report);

  for (const RateSummary& s : report.summary)
    std::printf("rate %.4f accuracy %.4f params_active %lld observed %.4f\n",
                s.rate, s.accuracy, static_cast<long long>(s.params_active),
                s.observed);
  std::printf("wall_seconds %.2f  outputs in %s\n", report.wall_seconds,
              m.out.c_str());
  return 0;
}

struct ExtrapolateOpts {
  std::string checkpoint;
  real rate = 0.5;
  std::string data;
};

int run_extrapolate(const ExtrapolateOpts& o) {
  const CheckpointPaths paths = resolve_checkpoint(o.checkpoint);
  const RunManifest manifest = RunManifest::load(paths.manifest);
  GcnModel model = load_checkpoint_model(paths, manifest);

  const Extrapolation ex =
      extrapolate(model, manifest.prior, o.rate, manifest.rates);
  if (ex.below_trained_range || ex.above_trained_range)
    std::fprintf(stderr,
                 "warning: rate %.4f is outside the trained range "
                 "[%.4f, %.4f]; extrapolating beyond the continuum\n",
                 o.rate, manifest.rates.front(), manifest.rates.back());
  std::printf("rate %.6f threshold %.9g observed_rate %.6f params_active %lld\n",
              ex.rate, ex.threshold, ex.observed,
              static_cast<long long>(ex.params_active));
  if (!o.data.empty()) {
    const GraphDataset eval = evaluation_data(manifest, o.data);
    std::printf("accuracy %.6f\n", evaluate_masked(model, eval, ex.masks));
  }
  return 0;
}

struct SweepOpts {
  std::string checkpoint;
  std::string grid = "0.5:0.99:0.01";
  std::string data;
  std::string out;
};

int run_sweep(const SweepOpts& o) {
  const CheckpointPaths paths = resolve_checkpoint(o.checkpoint);
  const RunManifest manifest = RunManifest::load(paths.manifest);
  GcnModel model = load_checkpoint_model(paths, manifest);
  const GraphDataset eval = evaluation_data(manifest, o.data);
  const std::vector<real> grid = parse_rates(o.grid);

  const std::string out_path =
      o.out.empty() ? (fs::path(paths.dir) / "sweep.csv").string() : o.out;
  std::ofstream csv(out_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write csv: " + out_path);
  csv << "rate,observed_rate,accuracy\r\n";
  char buf[128];
  for (real r : grid) {
    const Extrapolation ex = extrapolate(model, manifest.prior, r, manifest.rates);
    const real acc = evaluate_masked(model, eval, ex.masks);
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\r\n", r, ex.observed, acc);
    csv << buf;
  }
  std::printf("sweep of %zu rates written to %s\n", grid.size(), out_path.c_str());
  return 0;
}

struct GradcheckOpts {
  std::uint64_t seed = 0;
  bool inject_fault = false;
};

int run_gradcheck_cmd(const GradcheckOpts& o) {
  const auto results = run_gradcheck(o.seed, o.inject_fault);
  bool all_pass = true;
  real worst = 0;
  for (const auto& r : results) {
    std::printf("%-28s max_rel_err %.3e  %s\n", r.op.c_str(), r.max_rel_err,
                r.pass ? "ok" : "FAIL");
    all_pass = all_pass && r.pass;
    worst = std::max(worst, r.max_rel_err);
  }
  std::printf("gradcheck %s (worst %.3e over %zu suites)\n",
              all_pass ? "passed" : "FAILED", worst, results.size());
  return all_pass ? 0 : 1;
}

struct SynthOpts {
  std::uint64_t seed = 0;
  int classes = 3;
  int per_class = 167;
  int joints = 10;
  int frames = 24;
  real noise = 0.05;
  std::string out = "synth.jsonl";
};

int run_synth(const SynthOpts& o) {
  SynthSpec spec;
  spec.seed = o.seed;
  spec.classes = o.classes;
  spec.sequences_per_class = o.per_class;
  spec.joints = o.joints;
  spec.frames = o.frames;
  spec.noise = o.noise;
  const auto seqs = synth_dataset(spec);
  save_jsonl(o.out, seqs);
  std::printf("wrote %zu sequences to %s\n", seqs.size(), o.out.c_str());
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Multi-rate magnitude pruning laboratory for small GCNs"};
  app.require_subcommand(1);

  TrainOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "Train and prune a model");
  train->add_option("--mode", train_opts.mode, "srmp|mrmp|mp|l1|dense");
  train->add_option("--data", train_opts.data, "'synth' or a JSONL path");
  train->add_option("--rates", train_opts.rates_spec,
                    "rate list, e.g. 0.5:0.95:0.05,0.98");
  train->add_option("--prior", train_opts.prior, "uniform|gaussian|laplace");
  train->add_option("--prior-params", train_opts.prior_params, "p1,p2");
  train->add_option("--lambda", train_opts.lambda, "KLD weight");
  train->add_option("--lambda1", train_opts.lambda1, "l1 weight (mode l1)");
  train->add_option("--epochs", train_opts.epochs);
  train->add_option("--batch", train_opts.batch);
  train->add_option("--lr0", train_opts.lr0);
  train->add_option("--bins", train_opts.bins);
  train->add_option("--sigma0", train_opts.sigma0);
  train->add_option("--sigma-max", train_opts.sigma_max);
  train->add_option("--sigma-epochs", train_opts.sigma_epochs,
                    "epochs to reach sigma-max (default: all)");
  train->add_option("--seed", train_opts.seed);
  train->add_option("--out", train_opts.out);
  train->add_option("--heads", train_opts.heads);
  train->add_option("--channels", train_opts.channels);
  train->add_option("--filters", train_opts.filters);
  train->add_option("--hidden", train_opts.hidden);
  train->add_option("--test-fraction", train_opts.test_fraction);
  train->add_option("--chunks", train_opts.chunks);
  train->add_option("--knn", train_opts.knn);
  train->add_option("--threads", train_opts.threads);
  train->add_option("--finetune-epochs", train_opts.finetune_epochs);
  train->add_option("--classes", train_opts.synth_classes);
  train->add_option("--per-class", train_opts.synth_per_class);
  train->add_option("--joints", train_opts.synth_joints);
  train->add_option("--frames", train_opts.synth_frames);
  train->add_option("--noise", train_opts.synth_noise);

  ExtrapolateOpts ex_opts;
  CLI::App* ex = app.add_subcommand(
      "extrapolate", "Prune a trained checkpoint at an arbitrary rate");
  ex->add_option("--checkpoint", ex_opts.checkpoint)->required();
  ex->add_option("--rate", ex_opts.rate)->required();
  ex->add_option("--data", ex_opts.data, "evaluate accuracy on this data");

  SweepOpts sweep_opts;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Evaluate a rate grid via extrapolation, emit CSV");
  sweep->add_option("--checkpoint", sweep_opts.checkpoint)->required();
  sweep->add_option("--grid", sweep_opts.grid, "rate list grammar");
  sweep->add_option("--data", sweep_opts.data);
  sweep->add_option("--out", sweep_opts.out, "CSV path");

  GradcheckOpts gc_opts;
  CLI::App* gc = app.add_subcommand(
      "gradcheck", "Finite-difference checks of every operator");
  gc->add_option("--seed", gc_opts.seed);
  gc->add_flag("--inject-fault", gc_opts.inject_fault)->group("");

  SynthOpts synth_opts;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a synthetic skeleton dataset (JSONL)");
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("--classes", synth_opts.classes);
  synth->add_option("--per-class", synth_opts.per_class);
  synth->add_option("--joints", synth_opts.joints);
  synth->add_option("--frames", synth_opts.frames);
  synth->add_option("--noise", synth_opts.noise);
  synth->add_option("--out", synth_opts.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(train)) return run_train(train_opts);
    if (app.got_subcommand(ex)) return run_extrapolate(ex_opts);
    if (app.got_subcommand(sweep)) return run_sweep(sweep_opts);
    if (app.got_subcommand(gc)) return run_gradcheck_cmd(gc_opts);
    if (app.got_subcommand(synth)) return run_synth(synth_opts);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace mrmp
