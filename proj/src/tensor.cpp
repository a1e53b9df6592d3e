#include "mrmp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mrmp {

std::int64_t shape_size(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("non-positive tensor dimension");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::make(Shape shape, std::vector<real> values, bool requires_grad) {
  const auto n = shape_size(shape);
  if (static_cast<std::int64_t>(values.size()) != n) {
    throw std::invalid_argument("tensor data length " +
                                std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->data = std::make_shared<std::vector<real>>(std::move(values));
  t.impl_->grad.assign(static_cast<std::size_t>(n), real(0));
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_size(shape);
  return make(std::move(shape), std::vector<real>(static_cast<std::size_t>(n)),
              requires_grad);
}

Tensor Tensor::full(Shape shape, real value, bool requires_grad) {
  const auto n = shape_size(shape);
  return make(std::move(shape),
              std::vector<real>(static_cast<std::size_t>(n), value),
              requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<real> values, bool requires_grad) {
  return make(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(real value, bool requires_grad) {
  return make({1}, {value}, requires_grad);
}

Tensor Tensor::leaf_view(const Tensor& src) {
  if (!src.defined()) throw std::invalid_argument("leaf_view of empty tensor");
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = src.impl_->shape;
  t.impl_->data = src.impl_->data;
  t.impl_->grad.assign(src.impl_->data->size(), real(0));
  t.impl_->requires_grad = src.impl_->requires_grad;
  return t;
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::int64_t Tensor::size() const {
  return static_cast<std::int64_t>(impl_->data->size());
}

int Tensor::rows() const {
  if (impl_->shape.size() != 2)
    throw std::invalid_argument("rows(): tensor is not rank-2, shape " +
                                shape_str(impl_->shape));
  return impl_->shape[0];
}

int Tensor::cols() const {
  if (impl_->shape.size() != 2)
    throw std::invalid_argument("cols(): tensor is not rank-2, shape " +
                                shape_str(impl_->shape));
  return impl_->shape[1];
}

bool Tensor::is_scalar() const { return defined() && size() == 1; }

std::vector<real>& Tensor::values() const { return *impl_->data; }
std::vector<real>& Tensor::grad() const { return impl_->grad; }

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool on) { impl_->requires_grad = on; }

void Tensor::zero_grad() const {
  std::fill(impl_->grad.begin(), impl_->grad.end(), real(0));
}

real Tensor::item() const {
  if (!is_scalar())
    throw std::invalid_argument("item(): tensor of shape " +
                                shape_str(impl_->shape) + " is not scalar");
  return (*impl_->data)[0];
}

bool Tensor::all_finite() const {
  for (real v : *impl_->data)
    if (!std::isfinite(v)) return false;
  return true;
}

bool Tensor::same_storage(const Tensor& other) const {
  return defined() && other.defined() && impl_->data == other.impl_->data;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(const char* op, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  nodes_.push_back(
      Node{op, std::move(inputs), std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || !loss.is_scalar())
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  bool found = false;
  for (const Node& n : nodes_) {
    if (n.output.id() == loss.id()) {
      found = true;
      break;
    }
  }
  if (!found)
    throw std::invalid_argument(
        "backward: loss was not produced by this recorded forward pass");

  // Node outputs are intermediates; reset them so repeated backward calls
  // accumulate only into leaves.
  for (Node& n : nodes_) n.output.zero_grad();
  Tensor seed = loss;
  seed.grad()[0] = real(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backward) it->backward();
  }
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

Tensor unary_elementwise(Tape& tape, const char* op, const Tensor& a,
                         const std::function<real(real)>& f,
                         const std::function<real(real, real)>& df_dx) {
  std::vector<real> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.values()[i]);
  Tensor y = Tensor::from(a.shape(), std::move(out));
  tape.record(op, {a}, y, [a, y, df_dx]() mutable {
    const auto& g = y.grad();
    const auto& x = a.values();
    const auto& yv = y.values();
    auto& ga = a.grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      ga[i] += g[i] * df_dx(x[i], yv[i]);
  });
  return y;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  const int m = a.rows(), k = a.cols();
  if (b.rows() != k)
    throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  const int n = b.cols();
  Tensor y = Tensor::zeros({m, n});
  {
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& yv = y.values();
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        const real aip = av[i * k + p];
        for (int j = 0; j < n; ++j) yv[i * n + j] += aip * bv[p * n + j];
      }
  }
  tape.record("matmul", {a, b}, y, [a, b, y, m, k, n]() mutable {
    const auto& g = y.grad();
    const auto& av = a.values();
    const auto& bv = b.values();
    auto& ga = a.grad();
    auto& gb = b.grad();
    // a.grad += g . b^T
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const real gij = g[i * n + j];
        for (int p = 0; p < k; ++p) ga[i * k + p] += gij * bv[p * n + j];
      }
    // b.grad += a^T . g
    for (int i = 0; i < m; ++i)
      for (int p = 0; p < k; ++p) {
        const real aip = av[i * k + p];
        for (int j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
      }
  });
  return y;
}

Tensor block_matmul(Tape& tape, const Tensor& a, const Tensor& x) {
  const int n = a.rows();
  if (a.cols() != n)
    throw std::invalid_argument("block_matmul: matrix must be square, got " +
                                shape_str(a.shape()));
  const int rows = x.rows(), c = x.cols();
  if (rows % n != 0)
    throw std::invalid_argument("block_matmul: " + shape_str(x.shape()) +
                                " rows not divisible by block size " +
                                std::to_string(n));
  const int blocks = rows / n;
  Tensor y = Tensor::zeros(x.shape());
  {
    const auto& av = a.values();
    const auto& xv = x.values();
    auto& yv = y.values();
    for (int b = 0; b < blocks; ++b) {
      const std::size_t off = static_cast<std::size_t>(b) * n * c;
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p) {
          const real aip = av[i * n + p];
          for (int j = 0; j < c; ++j)
            yv[off + i * c + j] += aip * xv[off + p * c + j];
        }
    }
  }
  tape.record("block_matmul", {a, x}, y, [a, x, y, n, c, blocks]() mutable {
    const auto& g = y.grad();
    const auto& av = a.values();
    const auto& xv = x.values();
    auto& ga = a.grad();
    auto& gx = x.grad();
    for (int b = 0; b < blocks; ++b) {
      const std::size_t off = static_cast<std::size_t>(b) * n * c;
      // a.grad += g_b . x_b^T, x_b.grad += a^T . g_b
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p) {
          real s = 0;
          for (int j = 0; j < c; ++j)
            s += g[off + i * c + j] * xv[off + p * c + j];
          ga[i * n + p] += s;
        }
      for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i) {
          const real aip = av[i * n + p];
          for (int j = 0; j < c; ++j)
            gx[off + p * c + j] += aip * g[off + i * c + j];
        }
    }
  });
  return y;
}

Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape("hadamard", a, b);
  std::vector<real> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] * b.values()[i];
  Tensor y = Tensor::from(a.shape(), std::move(out));
  tape.record("hadamard", {a, b}, y, [a, b, y]() mutable {
    const auto& g = y.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * bv[i];
      gb[i] += g[i] * av[i];
    }
  });
  return y;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  std::vector<real> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.values()[i] + b.values()[i];
  Tensor y = Tensor::from(a.shape(), std::move(out));
  tape.record("add", {a, b}, y, [a, b, y]() mutable {
    const auto& g = y.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
  return y;
}

Tensor add_rows(Tape& tape, const Tensor& m, const Tensor& bias) {
  const int r = m.rows(), c = m.cols();
  if (static_cast<std::int64_t>(c) != bias.size())
    throw std::invalid_argument("add_rows: bias length " +
                                shape_str(bias.shape()) +
                                " does not match columns of " +
                                shape_str(m.shape()));
  std::vector<real> out(m.values().size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j)
      out[i * c + j] = m.values()[i * c + j] + bias.values()[j];
  Tensor y = Tensor::from(m.shape(), std::move(out));
  tape.record("add_rows", {m, bias}, y, [m, bias, y, r, c]() mutable {
    const auto& g = y.grad();
    auto& gm = m.grad();
    auto& gb = bias.grad();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        gm[i * c + j] += g[i * c + j];
        gb[j] += g[i * c + j];
      }
  });
  return y;
}

Tensor scalar_mul(Tape& tape, const Tensor& a, real s) {
  return unary_elementwise(
      tape, "scalar_mul", a, [s](real x) { return s * x; },
      [s](real, real) { return s; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, real s) {
  return unary_elementwise(
      tape, "add_scalar", a, [s](real x) { return x + s; },
      [](real, real) { return real(1); });
}

Tensor exp(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, "exp", a, [](real x) { return std::exp(x); },
      [](real, real y) { return y; });
}

Tensor square(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, "square", a, [](real x) { return x * x; },
      [](real x, real) { return 2 * x; });
}

Tensor negate(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, "negate", a, [](real x) { return -x; },
      [](real, real) { return real(-1); });
}

Tensor reciprocal(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, "reciprocal", a, [](real x) { return real(1) / x; },
      [](real, real y) { return -y * y; });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary_elementwise(
      tape, "relu", a, [](real x) { return x > 0 ? x : real(0); },
      [](real x, real) { return x > 0 ? real(1) : real(0); });
}

Tensor reduce_sum(Tape& tape, const Tensor& a) {
  real s = std::accumulate(a.values().begin(), a.values().end(), real(0));
  Tensor y = Tensor::scalar(s);
  tape.record("reduce_sum", {a}, y, [a, y]() mutable {
    const real g = y.grad()[0];
    auto& ga = a.grad();
    for (auto& v : ga) v += g;
  });
  return y;
}

Tensor reduce_abs_sum(Tape& tape, const Tensor& a) {
  real s = 0;
  for (real v : a.values()) s += std::abs(v);
  Tensor y = Tensor::scalar(s);
  tape.record("reduce_abs_sum", {a}, y, [a, y]() mutable {
    const real g = y.grad()[0];
    const auto& x = a.values();
    auto& ga = a.grad();
    for (std::size_t i = 0; i < x.size(); ++i)
      ga[i] += g * (x[i] > 0 ? real(1) : (x[i] < 0 ? real(-1) : real(0)));
  });
  return y;
}

Tensor segment_mean(Tape& tape, const Tensor& m, int group_rows) {
  const int r = m.rows(), c = m.cols();
  if (group_rows <= 0 || r % group_rows != 0)
    throw std::invalid_argument("segment_mean: rows of " +
                                shape_str(m.shape()) +
                                " not divisible by group size " +
                                std::to_string(group_rows));
  const int groups = r / group_rows;
  Tensor y = Tensor::zeros({groups, c});
  {
    const auto& mv = m.values();
    auto& yv = y.values();
    for (int g = 0; g < groups; ++g)
      for (int i = 0; i < group_rows; ++i)
        for (int j = 0; j < c; ++j)
          yv[g * c + j] += mv[(g * group_rows + i) * c + j];
    for (auto& v : yv) v /= group_rows;
  }
  tape.record("segment_mean", {m}, y, [m, y, groups, group_rows, c]() mutable {
    const auto& g = y.grad();
    auto& gm = m.grad();
    const real inv = real(1) / group_rows;
    for (int b = 0; b < groups; ++b)
      for (int i = 0; i < group_rows; ++i)
        for (int j = 0; j < c; ++j)
          gm[(b * group_rows + i) * c + j] += g[b * c + j] * inv;
  });
  return y;
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_cols: no tensors given");
  const int r = parts[0].rows();
  int total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != r)
      throw std::invalid_argument("concat_cols: row mismatch " +
                                  shape_str(parts[0].shape()) + " vs " +
                                  shape_str(p.shape()));
    total += p.cols();
  }
  Tensor y = Tensor::zeros({r, total});
  {
    auto& yv = y.values();
    int col0 = 0;
    for (const Tensor& p : parts) {
      const int c = p.cols();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          yv[i * total + col0 + j] = p.values()[i * c + j];
      col0 += c;
    }
  }
  tape.record("concat_cols", parts, y, [parts, y, r, total]() mutable {
    const auto& g = y.grad();
    int col0 = 0;
    for (const Tensor& p : parts) {
      const int c = p.cols();
      auto& gp = p.grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          gp[i * c + j] += g[i * total + col0 + j];
      col0 += c;
    }
  });
  return y;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             const std::vector<int>& labels) {
  const int b = logits.rows(), c = logits.cols();
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("softmax_cross_entropy: " +
                                std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(b));
  for (int i = 0; i < b; ++i)
    if (labels[i] < 0 || labels[i] >= c)
      throw std::out_of_range("softmax_cross_entropy: label " +
                              std::to_string(labels[i]) + " at row " +
                              std::to_string(i) + " outside [0, " +
                              std::to_string(c) + ")");
  auto probs = std::make_shared<std::vector<real>>(logits.values().size());
  real loss = 0;
  {
    const auto& x = logits.values();
    for (int i = 0; i < b; ++i) {
      real mx = x[i * c];
      for (int j = 1; j < c; ++j) mx = std::max(mx, x[i * c + j]);
      real z = 0;
      for (int j = 0; j < c; ++j) {
        (*probs)[i * c + j] = std::exp(x[i * c + j] - mx);
        z += (*probs)[i * c + j];
      }
      for (int j = 0; j < c; ++j) (*probs)[i * c + j] /= z;
      loss += mx + std::log(z) - x[i * c + labels[i]];
    }
    loss /= b;
  }
  Tensor y = Tensor::scalar(loss);
  tape.record("softmax_cross_entropy", {logits}, y,
              [logits, y, probs, labels, b, c]() mutable {
                const real g = y.grad()[0] / b;
                auto& gl = logits.grad();
                for (int i = 0; i < b; ++i)
                  for (int j = 0; j < c; ++j) {
                    const real onehot = labels[i] == j ? real(1) : real(0);
                    gl[i * c + j] += g * ((*probs)[i * c + j] - onehot);
                  }
              });
  return y;
}

std::vector<real> softmax_rows(const Tensor& logits) {
  const int b = logits.rows(), c = logits.cols();
  std::vector<real> out(logits.values().size());
  const auto& x = logits.values();
  for (int i = 0; i < b; ++i) {
    real mx = x[i * c];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[i * c + j]);
    real z = 0;
    for (int j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(x[i * c + j] - mx);
      z += out[i * c + j];
    }
    for (int j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  return out;
}

}  // namespace mrmp
