#include "mrmp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mrmp/rng.hpp"

namespace mrmp {

namespace {

using Vec3 = std::array<real, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

real dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

real norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 scaled(const Vec3& a, real s) { return {a[0] * s, a[1] * s, a[2] * s}; }

}  // namespace

void SkeletonSequence::validate() const {
  if (joints < 3)
    throw std::invalid_argument("sequence needs at least 3 joints, got " +
                                std::to_string(joints));
  if (frames.empty() || static_cast<int>(frames.size()) % joints != 0)
    throw std::invalid_argument("frame buffer size " +
                                std::to_string(frames.size()) +
                                " is not a multiple of joint count " +
                                std::to_string(joints));
  for (int i : ref)
    if (i < 0 || i >= joints)
      throw std::invalid_argument("reference joint " + std::to_string(i) +
                                  " outside [0, " + std::to_string(joints) + ")");
  if (ref[0] == ref[1] || ref[0] == ref[2] || ref[1] == ref[2])
    throw std::invalid_argument("reference joints must be distinct");
  for (const auto& p : frames)
    for (real v : p)
      if (!std::isfinite(v))
        throw std::invalid_argument("non-finite joint coordinate");
}

SkeletonSequence normalize(const SkeletonSequence& seq, real scale) {
  seq.validate();
  const Vec3 p1 = seq.at(0, seq.ref[0]);
  const Vec3 p2 = seq.at(0, seq.ref[1]);
  const Vec3 p3 = seq.at(0, seq.ref[2]);

  const Vec3 origin = scaled({p2[0] + p3[0], p2[1] + p3[1], p2[2] + p3[2]}, 0.5);
  const Vec3 axis = sub(p2, p3);
  const real len = norm(axis);
  if (len < 1e-12)
    throw std::invalid_argument("normalize: reference joints 2 and 3 coincide");
  const Vec3 ex = scaled(axis, real(1) / len);

  const Vec3 u = sub(p1, origin);
  const Vec3 n = cross(ex, u);
  const real nlen = norm(n);
  if (nlen < 1e-9 * std::max(real(1), norm(u)))
    throw std::invalid_argument("normalize: reference triplet is collinear");
  const Vec3 ez = scaled(n, real(1) / nlen);
  const Vec3 ey = cross(ez, ex);

  const real gamma = scale / len;
  SkeletonSequence out = seq;
  for (auto& p : out.frames) {
    const Vec3 d = sub(p, origin);
    p = {gamma * dot(ex, d), gamma * dot(ey, d), gamma * dot(ez, d)};
  }
  return out;
}

std::vector<real> temporal_chunk(const std::vector<std::array<real, 3>>& trajectory,
                                 int chunks) {
  const int t_count = static_cast<int>(trajectory.size());
  if (t_count == 0) throw std::domain_error("temporal_chunk: empty trajectory");
  if (chunks < 1) throw std::domain_error("temporal_chunk: need chunks >= 1");

  std::vector<real> descriptor(3 * chunks, real(0));
  // Integer overlap of frame interval [t*M, (t+1)*M) with chunk [j*T, (j+1)*T)
  // on the common grid of length M*T.
  for (int j = 0; j < chunks; ++j) {
    real weight_sum = 0;
    real acc[3] = {0, 0, 0};
    for (int t = 0; t < t_count; ++t) {
      const long lo = std::max<long>(static_cast<long>(t) * chunks,
                                     static_cast<long>(j) * t_count);
      const long hi = std::min<long>(static_cast<long>(t + 1) * chunks,
                                     static_cast<long>(j + 1) * t_count);
      if (hi <= lo) continue;
      const real w = static_cast<real>(hi - lo);
      weight_sum += w;
      for (int c = 0; c < 3; ++c) acc[c] += w * trajectory[t][c];
    }
    for (int c = 0; c < 3; ++c) descriptor[3 * j + c] = acc[c] / weight_sum;
  }
  return descriptor;
}

TrajectoryGraph build_graph(const SkeletonSequence& seq, int chunks, int neighbors) {
  seq.validate();
  const int n = seq.joints;
  const int t_count = seq.frame_count();

  TrajectoryGraph g;
  g.label = seq.label;
  g.nodes = n;
  g.descriptor_dim = 3 * chunks;
  g.descriptors.resize(static_cast<std::size_t>(n) * g.descriptor_dim);

  std::vector<Vec3> mean_pos(n, Vec3{0, 0, 0});
  std::vector<std::array<real, 3>> traj(t_count);
  for (int j = 0; j < n; ++j) {
    for (int t = 0; t < t_count; ++t) {
      traj[t] = seq.at(t, j);
      for (int c = 0; c < 3; ++c) mean_pos[j][c] += traj[t][c];
    }
    for (int c = 0; c < 3; ++c) mean_pos[j][c] /= t_count;
    const auto d = temporal_chunk(traj, chunks);
    std::copy(d.begin(), d.end(), g.descriptors.begin() + j * g.descriptor_dim);
  }

  // Directed kNN on time-averaged positions (ties by index), symmetrized,
  // unit diagonal.
  g.adjacency.assign(static_cast<std::size_t>(n) * n, 0);
  const int k = std::min(neighbors, n - 1);
  std::vector<std::pair<real, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      dist[j] = {j == i ? std::numeric_limits<real>::infinity()
                        : norm(sub(mean_pos[i], mean_pos[j])),
                 j};
    std::sort(dist.begin(), dist.end());
    for (int m = 0; m < k; ++m) {
      const int j = dist[m].second;
      g.adjacency[i * n + j] = 1;
      g.adjacency[j * n + i] = 1;
    }
    g.adjacency[i * n + i] = 1;
  }
  return g;
}

std::vector<SkeletonSequence> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<SkeletonSequence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() ||
        line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    }
    SkeletonSequence seq;
    try {
      seq.label = j.at("label").get<int>();
      const auto& ref = j.at("ref");
      if (ref.size() != 3)
        throw std::invalid_argument("field 'ref' must have 3 indices");
      for (int i = 0; i < 3; ++i) seq.ref[i] = ref[i].get<int>();
      const auto& frames = j.at("frames");
      const int t_count = static_cast<int>(frames.size());
      if (t_count == 0)
        throw std::invalid_argument("field 'frames' must be non-empty");
      seq.joints = static_cast<int>(frames[0].size());
      seq.frames.reserve(static_cast<std::size_t>(t_count) * seq.joints);
      for (const auto& frame : frames) {
        if (static_cast<int>(frame.size()) != seq.joints)
          throw std::invalid_argument("field 'frames' has ragged joint counts");
        for (const auto& p : frame) {
          if (p.size() != 3)
            throw std::invalid_argument("joint coordinates must be [x,y,z]");
          seq.frames.push_back({p[0].get<real>(), p[1].get<real>(),
                                p[2].get<real>()});
        }
      }
      seq.validate();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": malformed record: " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": invalid sequence: " + e.what());
    }
    out.push_back(std::move(seq));
  }
  return out;
}

void save_jsonl(const std::string& path, const std::vector<SkeletonSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (const auto& seq : seqs) {
    nlohmann::json j;
    j["label"] = seq.label;
    j["ref"] = {seq.ref[0], seq.ref[1], seq.ref[2]};
    nlohmann::json frames = nlohmann::json::array();
    const int t_count = seq.frame_count();
    for (int t = 0; t < t_count; ++t) {
      nlohmann::json frame = nlohmann::json::array();
      for (int jt = 0; jt < seq.joints; ++jt) {
        const auto& p = seq.at(t, jt);
        frame.push_back({p[0], p[1], p[2]});
      }
      frames.push_back(std::move(frame));
    }
    j["frames"] = std::move(frames);
    out << j.dump() << "\n";
  }
}

std::vector<SkeletonSequence> synth_dataset(const SynthSpec& spec) {
  if (spec.classes < 1 || spec.sequences_per_class < 1 || spec.frames < 1)
    throw std::invalid_argument("synth_dataset: counts must be positive");
  if (spec.joints < 3)
    throw std::invalid_argument("synth_dataset: need at least 3 joints");

  Rng rng(spec.seed);

  // Shared static base posture; joints 0..2 form the reference triangle.
  std::vector<Vec3> base(spec.joints);
  base[0] = {0.0, 0.6, 0.0};
  base[1] = {-0.5, 0.0, 0.0};
  base[2] = {0.5, 0.0, 0.0};
  for (int j = 3; j < spec.joints; ++j)
    base[j] = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};

  // Class prototypes: per joint/axis sinusoid mixtures.
  struct Motion {
    real amp[2], freq[2], phase[2];
  };
  std::vector<std::vector<std::array<Motion, 3>>> proto(spec.classes);
  for (int c = 0; c < spec.classes; ++c) {
    proto[c].resize(spec.joints);
    for (int j = 0; j < spec.joints; ++j)
      for (int axis = 0; axis < 3; ++axis) {
        Motion& m = proto[c][j][axis];
        for (int h = 0; h < 2; ++h) {
          // Reference joints stay still so the normalization frame is clean.
          m.amp[h] = j < 3 ? 0.0 : rng.uniform(0.1, 0.45);
          m.freq[h] = 1 + rng.index(3);
          m.phase[h] = rng.uniform(0, 2 * M_PI);
        }
      }
  }

  std::vector<SkeletonSequence> out;
  out.reserve(static_cast<std::size_t>(spec.classes) * spec.sequences_per_class);
  for (int c = 0; c < spec.classes; ++c) {
    for (int s = 0; s < spec.sequences_per_class; ++s) {
      // Random similarity transform so normalization has work to do.
      Vec3 axis = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
      const real alen = std::max(norm(axis), real(1e-9));
      axis = scaled(axis, 1 / alen);
      const real angle = rng.uniform(0, 2 * M_PI);
      const real ca = std::cos(angle), sa = std::sin(angle);
      const real scale = std::exp(rng.uniform(-0.4, 0.4));
      const Vec3 shift = {rng.uniform(-2, 2), rng.uniform(-2, 2),
                          rng.uniform(-2, 2)};

      auto transform = [&](const Vec3& p) -> Vec3 {
        // Rodrigues rotation, then scale and shift.
        const Vec3 axp = cross(axis, p);
        const real ad = dot(axis, p);
        Vec3 r;
        for (int i = 0; i < 3; ++i)
          r[i] = p[i] * ca + axp[i] * sa + axis[i] * ad * (1 - ca);
        return {scale * r[0] + shift[0], scale * r[1] + shift[1],
                scale * r[2] + shift[2]};
      };

      SkeletonSequence seq;
      seq.label = c;
      seq.joints = spec.joints;
      seq.ref = {0, 1, 2};
      seq.frames.resize(static_cast<std::size_t>(spec.frames) * spec.joints);
      for (int t = 0; t < spec.frames; ++t) {
        const real tau = static_cast<real>(t) / spec.frames;
        for (int j = 0; j < spec.joints; ++j) {
          Vec3 p = base[j];
          for (int ax = 0; ax < 3; ++ax) {
            const Motion& m = proto[c][j][ax];
            for (int h = 0; h < 2; ++h)
              p[ax] += m.amp[h] * std::sin(2 * M_PI * m.freq[h] * tau + m.phase[h]);
            p[ax] += spec.noise * rng.gaussian();
          }
          seq.at(t, j) = transform(p);
        }
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

GraphDataset make_graph_dataset(const std::vector<SkeletonSequence>& seqs,
                                int chunks, int neighbors) {
  GraphDataset data;
  for (const auto& seq : seqs) {
    TrajectoryGraph g = build_graph(normalize(seq), chunks, neighbors);
    if (data.graphs.empty()) {
      data.nodes = g.nodes;
      data.input_dim = g.descriptor_dim;
    } else if (g.nodes != data.nodes) {
      throw std::invalid_argument("dataset mixes graphs of " +
                                  std::to_string(data.nodes) + " and " +
                                  std::to_string(g.nodes) + " nodes");
    }
    data.classes = std::max(data.classes, g.label + 1);
    data.graphs.push_back(std::move(g));
  }
  return data;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split(
    const GraphDataset& data, real test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0 && test_fraction < 1))
    throw std::invalid_argument("test fraction must be in [0, 1)");
  Rng rng(seed);
  std::vector<std::vector<int>> by_class(std::max(data.classes, 1));
  for (int i = 0; i < data.size(); ++i)
    by_class[data.graphs[i].label].push_back(i);
  std::vector<int> train, test;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const int n_test = static_cast<int>(members.size() * test_fraction);
    for (std::size_t i = 0; i < members.size(); ++i)
      (static_cast<int>(i) < n_test ? test : train).push_back(members[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

GraphDataset subset(const GraphDataset& data, const std::vector<int>& indices) {
  GraphDataset out;
  out.nodes = data.nodes;
  out.input_dim = data.input_dim;
  out.classes = data.classes;
  out.graphs.reserve(indices.size());
  for (int i : indices) out.graphs.push_back(data.graphs[i]);
  return out;
}

}  // namespace mrmp
