#include "mrmp/gcn.hpp"

#include <cmath>
#include <stdexcept>

#include "mrmp/rng.hpp"

namespace mrmp {

void GcnConfig::validate() const {
  if (heads < 1 || in_channels < 1 || filters < 1 || nodes < 1 || classes < 1 ||
      input_dim < 1 || dense_hidden < 1)
    throw std::invalid_argument("GcnConfig: all dimensions must be positive");
}

std::vector<Tensor> GcnModel::prunable() const {
  std::vector<Tensor> out;
  out.push_back(input_proj);
  for (const Tensor& a : attention) out.push_back(a);
  out.push_back(conv);
  out.push_back(dense);
  out.push_back(classifier);
  return out;
}

std::vector<Tensor> GcnModel::bias_tensors() const {
  return {proj_bias, conv_bias, dense_bias, classifier_bias};
}

std::vector<Tensor> GcnModel::parameters() const {
  auto out = prunable();
  for (const Tensor& b : bias_tensors()) out.push_back(b);
  return out;
}

std::vector<std::pair<std::string, Tensor>> GcnModel::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("input_proj", input_proj);
  for (std::size_t h = 0; h < attention.size(); ++h)
    out.emplace_back("attention." + std::to_string(h), attention[h]);
  out.emplace_back("conv", conv);
  out.emplace_back("dense", dense);
  out.emplace_back("classifier", classifier);
  out.emplace_back("input_proj.bias", proj_bias);
  out.emplace_back("conv.bias", conv_bias);
  out.emplace_back("dense.bias", dense_bias);
  out.emplace_back("classifier.bias", classifier_bias);
  return out;
}

std::int64_t GcnModel::prunable_count() const {
  std::int64_t n = 0;
  for (const Tensor& t : prunable()) n += t.size();
  return n;
}

std::int64_t GcnModel::parameter_count() const {
  std::int64_t n = prunable_count();
  for (const Tensor& t : bias_tensors()) n += t.size();
  return n;
}

namespace {

Tensor glorot_uniform(Rng& rng, int fan_in, int fan_out, Shape shape) {
  const real limit = std::sqrt(real(6) / (fan_in + fan_out));
  std::vector<real> v(static_cast<std::size_t>(shape_size(shape)));
  for (auto& x : v) x = rng.uniform(-limit, limit);
  return Tensor::from(std::move(shape), std::move(v), /*requires_grad=*/true);
}

}  // namespace

GcnModel build_model(const GcnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  GcnModel m;
  m.config = cfg;
  m.input_proj =
      glorot_uniform(rng, cfg.input_dim, cfg.in_channels,
                     {cfg.input_dim, cfg.in_channels});
  m.attention.reserve(cfg.heads);
  for (int h = 0; h < cfg.heads; ++h)
    m.attention.push_back(
        glorot_uniform(rng, cfg.nodes, cfg.nodes, {cfg.nodes, cfg.nodes}));
  const int agg = cfg.heads * cfg.in_channels;
  m.conv = glorot_uniform(rng, agg, cfg.filters, {agg, cfg.filters});
  m.dense = glorot_uniform(rng, cfg.filters, cfg.dense_hidden,
                           {cfg.filters, cfg.dense_hidden});
  m.classifier = glorot_uniform(rng, cfg.dense_hidden, cfg.classes,
                                {cfg.dense_hidden, cfg.classes});
  m.proj_bias = Tensor::zeros({cfg.in_channels}, true);
  m.conv_bias = Tensor::zeros({cfg.filters}, true);
  m.dense_bias = Tensor::zeros({cfg.dense_hidden}, true);
  m.classifier_bias = Tensor::zeros({cfg.classes}, true);
  return m;
}

GcnModel leaf_view_model(const GcnModel& model) {
  GcnModel m;
  m.config = model.config;
  m.bandstop = model.bandstop;
  m.input_proj = Tensor::leaf_view(model.input_proj);
  m.attention.reserve(model.attention.size());
  for (const Tensor& a : model.attention)
    m.attention.push_back(Tensor::leaf_view(a));
  m.conv = Tensor::leaf_view(model.conv);
  m.dense = Tensor::leaf_view(model.dense);
  m.classifier = Tensor::leaf_view(model.classifier);
  m.proj_bias = Tensor::leaf_view(model.proj_bias);
  m.conv_bias = Tensor::leaf_view(model.conv_bias);
  m.dense_bias = Tensor::leaf_view(model.dense_bias);
  m.classifier_bias = Tensor::leaf_view(model.classifier_bias);
  return m;
}

std::vector<Tensor> gate_bandstop(Tape& tape, const GcnModel& model) {
  std::vector<Tensor> gated;
  for (const Tensor& w : model.prunable())
    gated.push_back(reparametrize(tape, w, model.bandstop));
  return gated;
}

std::vector<Tensor> gate_masks(Tape& tape, const GcnModel& model,
                               const std::vector<Tensor>& masks) {
  const auto latents = model.prunable();
  if (masks.size() != latents.size())
    throw std::invalid_argument("gate_masks: expected " +
                                std::to_string(latents.size()) + " masks, got " +
                                std::to_string(masks.size()));
  std::vector<Tensor> gated;
  for (std::size_t i = 0; i < latents.size(); ++i)
    gated.push_back(hadamard(tape, latents[i], masks[i]));
  return gated;
}

Tensor attention_aggregate(Tape& tape, const std::vector<Tensor>& attention,
                           const Tensor& signals, int batch) {
  if (attention.empty())
    throw std::invalid_argument("attention_aggregate: no attention heads");
  if (batch < 1 || signals.rows() % batch != 0)
    throw std::invalid_argument("attention_aggregate: signal rows " +
                                std::to_string(signals.rows()) +
                                " not divisible by batch " +
                                std::to_string(batch));
  std::vector<Tensor> heads;
  heads.reserve(attention.size());
  for (const Tensor& a : attention) heads.push_back(block_matmul(tape, a, signals));
  if (heads.size() == 1) return heads[0];
  return concat_cols(tape, heads);
}

Tensor forward_gated(Tape& tape, const GcnModel& model,
                     const std::vector<Tensor>& gated, const Tensor& signals,
                     int batch) {
  const GcnConfig& cfg = model.config;
  if (signals.cols() != cfg.input_dim)
    throw std::invalid_argument("forward: signals of shape " +
                                shape_str(signals.shape()) + " but input_dim " +
                                std::to_string(cfg.input_dim));
  if (signals.rows() != batch * cfg.nodes)
    throw std::invalid_argument("forward: expected " +
                                std::to_string(batch * cfg.nodes) +
                                " signal rows, got " +
                                std::to_string(signals.rows()));
  if (gated.size() != 1 + static_cast<std::size_t>(cfg.heads) + 3)
    throw std::invalid_argument("forward: wrong gated tensor count");

  const Tensor& w_proj = gated[0];
  std::vector<Tensor> heads(gated.begin() + 1, gated.begin() + 1 + cfg.heads);
  const Tensor& w_conv = gated[1 + cfg.heads];
  const Tensor& w_dense = gated[2 + cfg.heads];
  const Tensor& w_cls = gated[3 + cfg.heads];

  Tensor u = add_rows(tape, matmul(tape, signals, w_proj), model.proj_bias);
  Tensor agg = attention_aggregate(tape, heads, u, batch);
  Tensor z = relu(tape, add_rows(tape, matmul(tape, agg, w_conv), model.conv_bias));
  Tensor pooled = segment_mean(tape, z, cfg.nodes);
  Tensor hidden =
      relu(tape, add_rows(tape, matmul(tape, pooled, w_dense), model.dense_bias));
  return add_rows(tape, matmul(tape, hidden, w_cls), model.classifier_bias);
}

Tensor forward(Tape& tape, const GcnModel& model, const Tensor& signals,
               int batch) {
  return forward_gated(tape, model, gate_bandstop(tape, model), signals, batch);
}

int max_hidden_for_budget(GcnConfig cfg, std::int64_t budget) {
  auto count = [&cfg](int hidden) -> std::int64_t {
    const std::int64_t agg =
        static_cast<std::int64_t>(cfg.heads) * cfg.in_channels;
    return static_cast<std::int64_t>(cfg.input_dim) * cfg.in_channels +
           static_cast<std::int64_t>(cfg.heads) * cfg.nodes * cfg.nodes +
           agg * cfg.filters + static_cast<std::int64_t>(cfg.filters) * hidden +
           static_cast<std::int64_t>(hidden) * cfg.classes + cfg.in_channels +
           cfg.filters + hidden + cfg.classes;
  };
  int hidden = 1;
  while (count(hidden + 1) <= budget) ++hidden;
  return hidden;
}

GcnConfig sbu_config() {
  GcnConfig cfg;
  cfg.heads = 1;
  cfg.in_channels = 8;
  cfg.filters = 32;
  cfg.nodes = 30;  // two interacting 15-joint skeletons
  cfg.classes = 8;
  cfg.input_dim = 12;
  cfg.dense_hidden = max_hidden_for_budget(cfg, 15320);
  return cfg;
}

GcnConfig fpha_config() {
  GcnConfig cfg;
  cfg.heads = 16;
  cfg.in_channels = 32;
  cfg.filters = 128;
  cfg.nodes = 21;
  cfg.classes = 45;
  cfg.input_dim = 12;
  cfg.dense_hidden = 64;
  return cfg;
}

}  // namespace mrmp
