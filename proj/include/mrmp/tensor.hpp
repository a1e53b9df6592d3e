#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mrmp {

// Test/acceptance precision is 64-bit; see README for how MRMP_PRECISION
// affects checkpoint storage.
using real = double;

using Shape = std::vector<int>;

std::int64_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major tensor with an attached gradient buffer.
///
/// Value-semantic handle: copies share the underlying storage. The data
/// buffer may additionally be shared between several Tensor handles that
/// keep independent gradient buffers (see leaf_view), which is how
/// concurrent multi-rate passes read frozen latents while accumulating
/// into disjoint per-rate gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, real value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<real> values,
                     bool requires_grad = false);
  static Tensor scalar(real value, bool requires_grad = false);
  // Shares the data buffer of `src` but owns a fresh zero gradient.
  static Tensor leaf_view(const Tensor& src);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t size() const;
  int rows() const;  // rank-2 only
  int cols() const;  // rank-2 only
  bool is_scalar() const;

  // Handle semantics (like shared_ptr): a const Tensor is a const handle to
  // shared mutable storage.
  std::vector<real>& values() const;
  std::vector<real>& grad() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  void zero_grad() const;

  real item() const;  // scalar tensors only

  bool all_finite() const;

  // Identity of the underlying node (used by the tape and optimizers).
  const void* id() const { return impl_.get(); }
  bool same_storage(const Tensor& other) const;

 private:
  struct Impl {
    Shape shape;
    std::shared_ptr<std::vector<real>> data;
    std::vector<real> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  static Tensor make(Shape shape, std::vector<real> values, bool requires_grad);
};

/// Ordered record of the primitive operations of one forward pass.
///
/// Nodes are appended in execution order, so the record is topologically
/// sorted by construction; backward() replays it once in reverse. A tape is
/// confined to one thread while a pass is in flight.
class Tape {
 public:
  struct Node {
    const char* op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(const char* op, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and accumulates adjoints into every input
  // gradient buffer. Intermediate (node output) gradients are reset first,
  // so leaf gradients accumulate across repeated calls.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitive operations. All record onto the given tape.
// ---------------------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// Applies the same left matrix to every consecutive n-row block of x:
// one attention matrix acting on a whole batch of per-sample node signals.
Tensor block_matmul(Tape& tape, const Tensor& a, const Tensor& x);
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
// m[r x c] + bias[c] broadcast over rows (the only broadcast we allow
// besides scalars, and it is spelled explicitly).
Tensor add_rows(Tape& tape, const Tensor& m, const Tensor& bias);
Tensor scalar_mul(Tape& tape, const Tensor& a, real s);
Tensor add_scalar(Tape& tape, const Tensor& a, real s);
Tensor exp(Tape& tape, const Tensor& a);
Tensor square(Tape& tape, const Tensor& a);
Tensor negate(Tape& tape, const Tensor& a);
Tensor reciprocal(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
Tensor reduce_sum(Tape& tape, const Tensor& a);
// sum |a_i|; subgradient 0 at exact zeros.
Tensor reduce_abs_sum(Tape& tape, const Tensor& a);
// Mean over each consecutive group of `group_rows` rows.
Tensor segment_mean(Tape& tape, const Tensor& m, int group_rows);
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);
// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const std::vector<int>& labels);

// Plain (non-recorded) softmax over rows, for inference paths.
std::vector<real> softmax_rows(const Tensor& logits);

}  // namespace mrmp
