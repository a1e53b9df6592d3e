#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrmp/bandstop.hpp"
#include "mrmp/tensor.hpp"

namespace mrmp {

struct GcnConfig {
  int heads = 1;
  int in_channels = 8;   // node signal width after the input projection
  int filters = 32;
  int nodes = 0;
  int classes = 0;
  int input_dim = 12;    // raw chunk-descriptor width, 3*M
  int dense_hidden = 16;

  void validate() const;
};

/// Attention + convolution GCN over latent tensors.
///
/// Pipeline: input projection -> per-head aggregation with learned n x n
/// attention matrices -> convolution filters with ReLU -> mean pooling over
/// nodes -> dense hidden layer -> classifier logits. Every weight matrix is
/// prunable and is used through the band-stop gate (or a hard mask), never
/// raw; biases are left unpruned.
struct GcnModel {
  GcnConfig config;
  BandStopConfig bandstop;

  Tensor input_proj;              // input_dim x in_channels
  std::vector<Tensor> attention;  // heads of nodes x nodes
  Tensor conv;                    // (heads*in_channels) x filters
  Tensor dense;                   // filters x dense_hidden
  Tensor classifier;              // dense_hidden x classes
  Tensor proj_bias, conv_bias, dense_bias, classifier_bias;

  std::vector<Tensor> prunable() const;
  std::vector<Tensor> bias_tensors() const;
  std::vector<Tensor> parameters() const;
  // (name, tensor) pairs in checkpoint order.
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;

  std::int64_t prunable_count() const;
  std::int64_t parameter_count() const;  // prunable + biases
};

GcnModel build_model(const GcnConfig& cfg, std::uint64_t seed);

// Shadow model whose tensors share the source's data but own fresh zero
// gradients (the per-rate buffers of a multi-rate step).
GcnModel leaf_view_model(const GcnModel& model);

// Gated copies of the prunable tensors, in prunable() order.
std::vector<Tensor> gate_bandstop(Tape& tape, const GcnModel& model);
std::vector<Tensor> gate_masks(Tape& tape, const GcnModel& model,
                               const std::vector<Tensor>& masks);

// Per-head aggregation: head h left-multiplies each sample block of
// `signals` by its attention matrix; heads are concatenated channel-wise.
Tensor attention_aggregate(Tape& tape, const std::vector<Tensor>& attention,
                           const Tensor& signals, int batch);

// Full forward pass with explicitly gated weights (order as prunable()).
Tensor forward_gated(Tape& tape, const GcnModel& model,
                     const std::vector<Tensor>& gated, const Tensor& signals,
                     int batch);

// Band-stop forward: gates every prunable tensor with model.bandstop.
Tensor forward(Tape& tape, const GcnModel& model, const Tensor& signals,
               int batch);

// Largest dense hidden width whose total parameter count stays within
// `budget`; at least 1.
int max_hidden_for_budget(GcnConfig cfg, std::int64_t budget);

// The paper pairing for SBU: 1 head, 8 channels, 32 filters over the
// 30-node two-person graphs, sized against the 15,320 parameter budget.
GcnConfig sbu_config();
// 16 heads, 32 channels, 128 filters (FPHA pairing).
GcnConfig fpha_config();

}  // namespace mrmp
