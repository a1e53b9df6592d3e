#include "mrmp/manifest.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mrmp {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

nlohmann::json manifest_json(const RunManifest& m) {
  nlohmann::json j;
  j["mode"] = m.mode;
  j["data"] = m.data;
  j["out"] = m.out;
  j["precision"] = m.precision;
  j["prior"] = {{"kind", m.prior.name()}, {"p1", m.prior.p1}, {"p2", m.prior.p2}};
  j["rates"] = m.rates;
  j["lambda"] = m.lambda;
  j["lambda1"] = m.lambda1;
  j["epochs"] = m.epochs;
  j["batch"] = m.batch;
  j["bins"] = m.bins;
  j["lr0"] = m.lr0;
  j["sigma0"] = m.sigma0;
  j["sigma_max"] = m.sigma_max;
  j["sigma_epochs"] = m.sigma_epochs;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["finetune_epochs"] = m.finetune_epochs;
  j["model"] = {{"heads", m.model.heads},
                {"in_channels", m.model.in_channels},
                {"filters", m.model.filters},
                {"nodes", m.model.nodes},
                {"classes", m.model.classes},
                {"input_dim", m.model.input_dim},
                {"dense_hidden", m.model.dense_hidden}};
  j["chunks"] = m.chunks;
  j["knn"] = m.knn;
  j["test_fraction"] = m.test_fraction;
  j["synth"] = {{"seed", m.synth.seed},
                {"classes", m.synth.classes},
                {"sequences_per_class", m.synth.sequences_per_class},
                {"joints", m.synth.joints},
                {"frames", m.synth.frames},
                {"noise", m.synth.noise}};
  return j;
}

}  // namespace

std::string RunManifest::config_hash() const {
  std::ostringstream hex;
  hex << std::hex << fnv1a64(manifest_json(*this).dump());
  return hex.str();
}

std::string RunManifest::to_json() const {
  nlohmann::json j = manifest_json(*this);
  j["config_hash"] = config_hash();
  return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunManifest m;
  m.mode = j.at("mode").get<std::string>();
  m.data = j.at("data").get<std::string>();
  m.out = j.value("out", "");
  m.precision = j.value("precision", "f64");
  const auto& p = j.at("prior");
  m.prior = TargetPrior::parse(p.at("kind").get<std::string>());
  m.prior.p1 = p.at("p1").get<real>();
  m.prior.p2 = p.at("p2").get<real>();
  m.prior.validate();
  m.rates = j.at("rates").get<std::vector<real>>();
  m.lambda = j.at("lambda").get<real>();
  m.lambda1 = j.value("lambda1", 0.0);
  m.epochs = j.at("epochs").get<int>();
  m.batch = j.at("batch").get<int>();
  m.bins = j.at("bins").get<int>();
  m.lr0 = j.at("lr0").get<real>();
  m.sigma0 = j.at("sigma0").get<real>();
  m.sigma_max = j.at("sigma_max").get<real>();
  m.sigma_epochs = j.value("sigma_epochs", 0);
  m.seed = j.at("seed").get<std::uint64_t>();
  m.threads = j.value("threads", 0);
  m.finetune_epochs = j.value("finetune_epochs", 0);
  const auto& mm = j.at("model");
  m.model.heads = mm.at("heads").get<int>();
  m.model.in_channels = mm.at("in_channels").get<int>();
  m.model.filters = mm.at("filters").get<int>();
  m.model.nodes = mm.at("nodes").get<int>();
  m.model.classes = mm.at("classes").get<int>();
  m.model.input_dim = mm.at("input_dim").get<int>();
  m.model.dense_hidden = mm.at("dense_hidden").get<int>();
  m.chunks = j.at("chunks").get<int>();
  m.knn = j.at("knn").get<int>();
  m.test_fraction = j.at("test_fraction").get<real>();
  const auto& s = j.at("synth");
  m.synth.seed = s.at("seed").get<std::uint64_t>();
  m.synth.classes = s.at("classes").get<int>();
  m.synth.sequences_per_class = s.at("sequences_per_class").get<int>();
  m.synth.joints = s.at("joints").get<int>();
  m.synth.frames = s.at("frames").get<int>();
  m.synth.noise = s.at("noise").get<real>();
  return m;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << to_json() << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + path + ": " + e.what());
  }
}

SigmaSchedule RunManifest::sigma_schedule() const {
  SigmaSchedule s;
  s.sigma0 = sigma0;
  s.sigma_max = sigma_max;
  s.epochs = sigma_epochs > 0 ? sigma_epochs : epochs;
  return s;
}

TrainConfig RunManifest::train_config() const {
  TrainConfig cfg;
  cfg.rates = rates;
  cfg.prior = prior;
  cfg.lambda = lambda;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.lr0 = lr0;
  cfg.seed = seed;
  cfg.bins = bins;
  cfg.sigma = sigma_schedule();
  cfg.threads = threads;
  return cfg;
}

}  // namespace mrmp
