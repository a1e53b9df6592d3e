#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mrmp/tensor.hpp"

namespace mrmp {

/// A labeled 3D joint sequence (T frames x J joints).
struct SkeletonSequence {
  int label = 0;
  int joints = 0;
  std::array<int, 3> ref{0, 1, 2};  // reference triplet for normalization
  std::vector<std::array<real, 3>> frames;  // frame-major, size T*J

  int frame_count() const {
    return joints == 0 ? 0 : static_cast<int>(frames.size()) / joints;
  }
  std::array<real, 3>& at(int t, int j) { return frames[t * joints + j]; }
  const std::array<real, 3>& at(int t, int j) const {
    return frames[t * joints + j];
  }

  // T >= 1, J >= 3, finite coordinates, distinct reference indices.
  void validate() const;
};

/// One node per joint trajectory; descriptors are the 3M temporal-chunk
/// means, the adjacency hint is a symmetrized kNN graph with self loops.
struct TrajectoryGraph {
  int label = 0;
  int nodes = 0;
  int descriptor_dim = 0;
  std::vector<real> descriptors;        // nodes x descriptor_dim, row-major
  std::vector<std::uint8_t> adjacency;  // nodes x nodes
};

// Similarity-transform normalization computed from frame 0: the midpoint of
// reference joints 2 and 3 becomes the origin, the triplet plane becomes the
// x-y plane with p2-p3 along x, and ||p2-p3|| is scaled to `scale`.
// Cancels any rigid motion + uniform scaling of the input.
SkeletonSequence normalize(const SkeletonSequence& seq, real scale = 1.0);

// Splits a trajectory into `chunks` equal time spans and concatenates the
// per-chunk coordinate means. A frame covers the time interval
// [t/T, (t+1)/T) and contributes to each chunk in proportion to overlap,
// which makes the descriptor exactly invariant to uniform resampling.
std::vector<real> temporal_chunk(const std::vector<std::array<real, 3>>& trajectory,
                                 int chunks);

TrajectoryGraph build_graph(const SkeletonSequence& seq, int chunks = 4,
                            int neighbors = 3);

// JSON Lines: {"label": int, "ref": [i1,i2,i3], "frames": [[[x,y,z] x J] x T]}.
std::vector<SkeletonSequence> load_jsonl(const std::string& path);
void save_jsonl(const std::string& path, const std::vector<SkeletonSequence>& seqs);

struct SynthSpec {
  std::uint64_t seed = 0;
  int classes = 3;
  int sequences_per_class = 20;
  int joints = 10;
  int frames = 24;
  real noise = 0.02;
};

// Class-dependent sinusoid joint motions under random per-sequence
// similarity transforms; deterministic given the seed.
std::vector<SkeletonSequence> synth_dataset(const SynthSpec& spec);

/// Preprocessed graphs ready for batching.
struct GraphDataset {
  int nodes = 0;
  int input_dim = 0;
  int classes = 0;
  std::vector<TrajectoryGraph> graphs;

  bool empty() const { return graphs.empty(); }
  int size() const { return static_cast<int>(graphs.size()); }
};

GraphDataset make_graph_dataset(const std::vector<SkeletonSequence>& seqs,
                                int chunks = 4, int neighbors = 3);

// Per-class proportional split; returns (train indices, test indices).
std::pair<std::vector<int>, std::vector<int>> stratified_split(
    const GraphDataset& data, real test_fraction, std::uint64_t seed);

GraphDataset subset(const GraphDataset& data, const std::vector<int>& indices);

}  // namespace mrmp
