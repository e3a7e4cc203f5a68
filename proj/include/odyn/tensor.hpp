#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

// Dense row-major tensors with reverse-mode automatic differentiation over a
// recorded tape. Ops execute eagerly; when a tape is active they also append
// a node so that backward() can later replay adjoints in reverse order. With
// no active tape the same ops run as plain eager arithmetic, which is what
// reference integrations and Newton inner loops use.

namespace odyn {

class TapeError : public std::runtime_error {
 public:
  explicit TapeError(const std::string& what) : std::runtime_error(what) {}
};

class Tape;

class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols, std::shared_ptr<std::vector<double>> data, int node = -1)
      : rows_(rows), cols_(cols), data_(std::move(data)), node_(node) {}

  static Tensor zeros(int rows, int cols) {
    return Tensor(rows, cols,
                  std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows) * cols, 0.0));
  }
  static Tensor from(int rows, int cols, std::vector<double> values) {
    if (static_cast<std::size_t>(rows) * cols != values.size())
      throw TapeError("Tensor::from: data length does not match shape");
    return Tensor(rows, cols, std::make_shared<std::vector<double>>(std::move(values)));
  }
  static Tensor row(std::vector<double> values) {
    const int n = static_cast<int>(values.size());
    return from(1, n, std::move(values));
  }
  static Tensor scalar(double value) { return from(1, 1, {value}); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  bool is_scalar() const { return size() == 1; }
  int node() const { return node_; }

  const std::vector<double>& values() const { return *data_; }
  double value() const { return (*data_)[0]; }
  double at(int r, int c) const { return (*data_)[static_cast<std::size_t>(r) * cols_ + c]; }
  const std::shared_ptr<std::vector<double>>& storage() const { return data_; }

 private:
  friend class Tape;
  int rows_ = 0;
  int cols_ = 0;
  std::shared_ptr<std::vector<double>> data_;
  int node_ = -1;
};

enum class OpKind {
  Leaf,
  Add,
  Sub,
  Mul,       // elementwise; either operand may be a 1x1 scalar broadcast
  ScalarMul, // multiply by a compile-time constant factor
  MatMul,
  Tanh,
  Square,
  PowInt,
  Reciprocal,
  Relu,
  Sum,
  Mean,
  ConcatRows,
  ConcatCols,
  Slice,     // contiguous segment of the flat parent buffer, reshaped
};

inline const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::ScalarMul: return "scalar-mul";
    case OpKind::MatMul: return "matmul";
    case OpKind::Tanh: return "tanh";
    case OpKind::Square: return "square";
    case OpKind::PowInt: return "pow-int";
    case OpKind::Reciprocal: return "reciprocal";
    case OpKind::Relu: return "relu";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::ConcatRows: return "concat-rows";
    case OpKind::ConcatCols: return "concat-cols";
    case OpKind::Slice: return "slice";
  }
  return "?";
}

// Gradients of one backward pass, keyed by leaf node id.
class GradientMap {
 public:
  const std::vector<double>& at(const Tensor& leaf) const {
    auto it = grads_.find(leaf.node());
    if (it == grads_.end())
      throw TapeError("GradientMap: tensor is not a trainable leaf of this tape");
    return it->second;
  }
  bool contains(const Tensor& leaf) const { return grads_.count(leaf.node()) > 0; }

 private:
  friend class Tape;
  std::unordered_map<int, std::vector<double>> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Scoped activation. Ops record onto the innermost active tape.
  class Scope {
   public:
    explicit Scope(Tape& tape) : previous_(active_) { active_ = &tape; }
    ~Scope() { active_ = previous_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  // Temporarily stop recording (e.g. Newton inner iterations).
  class Suspend {
   public:
    Suspend() : previous_(active_) { active_ = nullptr; }
    ~Suspend() { active_ = previous_; }
    Suspend(const Suspend&) = delete;
    Suspend& operator=(const Suspend&) = delete;

   private:
    Tape* previous_;
  };

  static Tape* active() { return active_; }

  Tensor leaf(const Tensor& values, bool trainable) {
    Node node;
    node.kind = OpKind::Leaf;
    node.rows = values.rows();
    node.cols = values.cols();
    node.value = values.storage();
    node.trainable = trainable;
    nodes_.push_back(std::move(node));
    if (trainable) trainable_leaves_.push_back(static_cast<int>(nodes_.size()) - 1);
    return Tensor(values.rows(), values.cols(), values.storage(),
                  static_cast<int>(nodes_.size()) - 1);
  }

  std::size_t node_count() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  GradientMap backward(const Tensor& root) {
    if (consumed_) throw TapeError("backward: tape already consumed by a previous backward pass");
    if (!root.is_scalar())
      throw TapeError("backward: root must be scalar, got shape " + shape_string(root.rows(), root.cols()));
    if (root.node() < 0 || root.node() >= static_cast<int>(nodes_.size()))
      throw TapeError("backward: root tensor is not on this tape");
    consumed_ = true;

    for (auto& node : nodes_) node.adjoint.assign(node.value->size(), 0.0);
    nodes_[root.node()].adjoint[0] = 1.0;

    for (int id = root.node(); id >= 0; --id) propagate(id);

    GradientMap map;
    for (int leaf_id : trainable_leaves_)
      map.grads_.emplace(leaf_id, nodes_[leaf_id].adjoint);
    return map;
  }

  // Adjoint of any node after backward; used by tests.
  const std::vector<double>& adjoint(const Tensor& t) const {
    return nodes_.at(t.node()).adjoint;
  }

 private:
  friend Tensor record_op(OpKind, const std::vector<Tensor>&, Tensor, double, int);

  struct Node {
    OpKind kind = OpKind::Leaf;
    int a = -1;
    int b = -1;
    std::vector<int> many;  // concat inputs
    int rows = 0;
    int cols = 0;
    double scalar = 0.0;  // ScalarMul factor / PowInt exponent
    int offset = 0;       // Slice start in parent flat buffer
    bool trainable = false;
    std::shared_ptr<std::vector<double>> value;
    std::vector<double> adjoint;
  };

  static std::string shape_string(int r, int c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

  void propagate(int id);

  static thread_local Tape* active_;
  std::vector<Node> nodes_;
  std::vector<int> trainable_leaves_;
  bool consumed_ = false;
};

inline thread_local Tape* Tape::active_ = nullptr;

namespace detail {

inline void check_finite(const std::vector<double>& data, OpKind kind) {
  for (double v : data) {
    if (!std::isfinite(v))
      throw TapeError(std::string("non-finite value produced by op '") + op_name(kind) + "'");
  }
}

inline std::string shape_of(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace detail

// Registers `result` on the active tape (if any), wrapping constant inputs as
// non-trainable leaves so every node input references an earlier node.
inline Tensor record_op(OpKind kind, const std::vector<Tensor>& inputs, Tensor result,
                        double scalar = 0.0, int offset = 0) {
  detail::check_finite(result.values(), kind);
  Tape* tape = Tape::active();
  if (tape == nullptr) return result;

  std::vector<int> ids;
  ids.reserve(inputs.size());
  for (const Tensor& in : inputs) {
    if (in.node() >= 0) {
      ids.push_back(in.node());
    } else {
      ids.push_back(tape->leaf(in, false).node());
    }
  }

  Tape::Node node;
  node.kind = kind;
  node.rows = result.rows();
  node.cols = result.cols();
  node.scalar = scalar;
  node.offset = offset;
  node.value = result.storage();
  if (kind == OpKind::ConcatRows || kind == OpKind::ConcatCols) {
    node.many = std::move(ids);
  } else {
    node.a = ids.size() > 0 ? ids[0] : -1;
    node.b = ids.size() > 1 ? ids[1] : -1;
  }
  tape->nodes_.push_back(std::move(node));
  return Tensor(result.rows(), result.cols(), result.storage(),
                static_cast<int>(tape->nodes_.size()) - 1);
}

namespace detail {

enum class Broadcast { None, LeftScalar, RightScalar };

inline Broadcast broadcast_mode(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::None;
  if (a.is_scalar()) return Broadcast::LeftScalar;
  if (b.is_scalar()) return Broadcast::RightScalar;
  throw TapeError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "add");
  const Tensor& big = (mode == detail::Broadcast::LeftScalar) ? b : a;
  Tensor out = Tensor::zeros(big.rows(), big.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  const auto& bv = b.values();
  const int n = big.size();
  switch (mode) {
    case detail::Broadcast::None:
      for (int i = 0; i < n; ++i) o[i] = av[i] + bv[i];
      break;
    case detail::Broadcast::LeftScalar:
      for (int i = 0; i < n; ++i) o[i] = av[0] + bv[i];
      break;
    case detail::Broadcast::RightScalar:
      for (int i = 0; i < n; ++i) o[i] = av[i] + bv[0];
      break;
  }
  return record_op(OpKind::Add, {a, b}, std::move(out));
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "sub");
  const Tensor& big = (mode == detail::Broadcast::LeftScalar) ? b : a;
  Tensor out = Tensor::zeros(big.rows(), big.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  const auto& bv = b.values();
  const int n = big.size();
  switch (mode) {
    case detail::Broadcast::None:
      for (int i = 0; i < n; ++i) o[i] = av[i] - bv[i];
      break;
    case detail::Broadcast::LeftScalar:
      for (int i = 0; i < n; ++i) o[i] = av[0] - bv[i];
      break;
    case detail::Broadcast::RightScalar:
      for (int i = 0; i < n; ++i) o[i] = av[i] - bv[0];
      break;
  }
  return record_op(OpKind::Sub, {a, b}, std::move(out));
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  const auto mode = detail::broadcast_mode(a, b, "mul");
  const Tensor& big = (mode == detail::Broadcast::LeftScalar) ? b : a;
  Tensor out = Tensor::zeros(big.rows(), big.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  const auto& bv = b.values();
  const int n = big.size();
  switch (mode) {
    case detail::Broadcast::None:
      for (int i = 0; i < n; ++i) o[i] = av[i] * bv[i];
      break;
    case detail::Broadcast::LeftScalar:
      for (int i = 0; i < n; ++i) o[i] = av[0] * bv[i];
      break;
    case detail::Broadcast::RightScalar:
      for (int i = 0; i < n; ++i) o[i] = av[i] * bv[0];
      break;
  }
  return record_op(OpKind::Mul, {a, b}, std::move(out));
}

inline Tensor smul(const Tensor& a, double factor) {
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = factor * av[i];
  return record_op(OpKind::ScalarMul, {a}, std::move(out), factor);
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw TapeError("matmul: shape mismatch " + detail::shape_of(a) + " vs " + detail::shape_of(b));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros(m, n);
  auto& o = *out.storage();
  const auto& av = a.values();
  const auto& bv = b.values();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[static_cast<std::size_t>(i) * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + static_cast<std::size_t>(p) * n;
      double* orow = o.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return record_op(OpKind::MatMul, {a, b}, std::move(out));
}

inline Tensor tanh(const Tensor& a) {
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = std::tanh(av[i]);
  return record_op(OpKind::Tanh, {a}, std::move(out));
}

inline Tensor square(const Tensor& a) {
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = av[i] * av[i];
  return record_op(OpKind::Square, {a}, std::move(out));
}

inline Tensor pow_int(const Tensor& a, int exponent) {
  if (exponent < 2) throw TapeError("pow-int: exponent must be >= 2");
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = std::pow(av[i], exponent);
  return record_op(OpKind::PowInt, {a}, std::move(out), static_cast<double>(exponent));
}

inline Tensor reciprocal(const Tensor& a) {
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = 1.0 / av[i];
  return record_op(OpKind::Reciprocal, {a}, std::move(out));
}

inline Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.rows(), a.cols());
  auto& o = *out.storage();
  const auto& av = a.values();
  for (int i = 0; i < a.size(); ++i) o[i] = av[i] > 0.0 ? av[i] : 0.0;
  return record_op(OpKind::Relu, {a}, std::move(out));
}

inline Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return record_op(OpKind::Sum, {a}, Tensor::scalar(acc));
}

inline Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw TapeError("mean: empty tensor");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return record_op(OpKind::Mean, {a}, Tensor::scalar(acc / a.size()));
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw TapeError("concat-rows: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) throw TapeError("concat-rows: column mismatch");
    rows += p.rows();
  }
  Tensor out = Tensor::zeros(rows, cols);
  auto& o = *out.storage();
  std::size_t pos = 0;
  for (const Tensor& p : parts) {
    const auto& pv = p.values();
    std::copy(pv.begin(), pv.end(), o.begin() + pos);
    pos += pv.size();
  }
  return record_op(OpKind::ConcatRows, parts, std::move(out));
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw TapeError("concat-cols: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) throw TapeError("concat-cols: row mismatch");
    cols += p.cols();
  }
  Tensor out = Tensor::zeros(rows, cols);
  auto& o = *out.storage();
  for (int r = 0; r < rows; ++r) {
    int c0 = 0;
    for (const Tensor& p : parts) {
      const auto& pv = p.values();
      for (int c = 0; c < p.cols(); ++c)
        o[static_cast<std::size_t>(r) * cols + c0 + c] = pv[static_cast<std::size_t>(r) * p.cols() + c];
      c0 += p.cols();
    }
  }
  return record_op(OpKind::ConcatCols, parts, std::move(out));
}

// Contiguous flat segment [offset, offset + rows*cols) of the parent buffer,
// reinterpreted with the given shape. Layer views into a flat parameter
// vector are exactly this.
inline Tensor slice(const Tensor& a, int offset, int rows, int cols) {
  const int len = rows * cols;
  if (offset < 0 || len < 0 || offset + len > a.size())
    throw TapeError("slice: range [" + std::to_string(offset) + ", " +
                    std::to_string(offset + len) + ") out of bounds for " +
                    std::to_string(a.size()) + " elements");
  Tensor out = Tensor::zeros(rows, cols);
  auto& o = *out.storage();
  const auto& av = a.values();
  std::copy(av.begin() + offset, av.begin() + offset + len, o.begin());
  return record_op(OpKind::Slice, {a}, std::move(out), 0.0, offset);
}

inline void Tape::propagate(int id) {
  Node& node = nodes_[id];
  const std::vector<double>& adj = node.adjoint;
  bool all_zero = true;
  for (double v : adj) {
    if (v != 0.0) { all_zero = false; break; }
  }
  if (all_zero) return;

  auto value_of = [&](int i) -> const std::vector<double>& { return *nodes_[i].value; };
  auto adj_of = [&](int i) -> std::vector<double>& { return nodes_[i].adjoint; };

  switch (node.kind) {
    case OpKind::Leaf:
      break;
    case OpKind::Add: {
      auto& aa = adj_of(node.a);
      auto& ab = adj_of(node.b);
      const int n = static_cast<int>(adj.size());
      if (aa.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) aa[0] += adj[i];
      } else {
        for (int i = 0; i < n; ++i) aa[i] += adj[i];
      }
      if (ab.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) ab[0] += adj[i];
      } else {
        for (int i = 0; i < n; ++i) ab[i] += adj[i];
      }
      break;
    }
    case OpKind::Sub: {
      auto& aa = adj_of(node.a);
      auto& ab = adj_of(node.b);
      const int n = static_cast<int>(adj.size());
      if (aa.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) aa[0] += adj[i];
      } else {
        for (int i = 0; i < n; ++i) aa[i] += adj[i];
      }
      if (ab.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) ab[0] -= adj[i];
      } else {
        for (int i = 0; i < n; ++i) ab[i] -= adj[i];
      }
      break;
    }
    case OpKind::Mul: {
      auto& aa = adj_of(node.a);
      auto& ab = adj_of(node.b);
      const auto& va = value_of(node.a);
      const auto& vb = value_of(node.b);
      const int n = static_cast<int>(adj.size());
      if (va.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) aa[0] += adj[i] * vb[i];
        for (int i = 0; i < n; ++i) ab[i] += adj[i] * va[0];
      } else if (vb.size() == 1 && adj.size() > 1) {
        for (int i = 0; i < n; ++i) aa[i] += adj[i] * vb[0];
        for (int i = 0; i < n; ++i) ab[0] += adj[i] * va[i];
      } else {
        for (int i = 0; i < n; ++i) aa[i] += adj[i] * vb[i];
        for (int i = 0; i < n; ++i) ab[i] += adj[i] * va[i];
      }
      break;
    }
    case OpKind::ScalarMul: {
      auto& aa = adj_of(node.a);
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] += node.scalar * adj[i];
      break;
    }
    case OpKind::MatMul: {
      const Node& na = nodes_[node.a];
      const Node& nb = nodes_[node.b];
      auto& aa = adj_of(node.a);
      auto& ab = adj_of(node.b);
      const auto& va = value_of(node.a);
      const auto& vb = value_of(node.b);
      const int m = na.rows, k = na.cols, n = nb.cols;
      // dA = dC * B^T
      for (int i = 0; i < m; ++i) {
        const double* crow = adj.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double* brow = vb.data() + static_cast<std::size_t>(p) * n;
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += crow[j] * brow[j];
          aa[static_cast<std::size_t>(i) * k + p] += acc;
        }
      }
      // dB = A^T * dC
      for (int i = 0; i < m; ++i) {
        const double* crow = adj.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
          const double aip = va[static_cast<std::size_t>(i) * k + p];
          if (aip == 0.0) continue;
          double* brow = ab.data() + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) brow[j] += aip * crow[j];
        }
      }
      break;
    }
    case OpKind::Tanh: {
      auto& aa = adj_of(node.a);
      const auto& y = *node.value;
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] += adj[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case OpKind::Square: {
      auto& aa = adj_of(node.a);
      const auto& x = value_of(node.a);
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] += adj[i] * 2.0 * x[i];
      break;
    }
    case OpKind::PowInt: {
      auto& aa = adj_of(node.a);
      const auto& x = value_of(node.a);
      const int p = static_cast<int>(node.scalar);
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] += adj[i] * p * std::pow(x[i], p - 1);
      break;
    }
    case OpKind::Reciprocal: {
      auto& aa = adj_of(node.a);
      const auto& x = value_of(node.a);
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] -= adj[i] / (x[i] * x[i]);
      break;
    }
    case OpKind::Relu: {
      auto& aa = adj_of(node.a);
      const auto& x = value_of(node.a);
      const int n = static_cast<int>(adj.size());
      for (int i = 0; i < n; ++i) aa[i] += x[i] > 0.0 ? adj[i] : 0.0;
      break;
    }
    case OpKind::Sum: {
      auto& aa = adj_of(node.a);
      const double g = adj[0];
      for (double& v : aa) v += g;
      break;
    }
    case OpKind::Mean: {
      auto& aa = adj_of(node.a);
      const double g = adj[0] / static_cast<double>(aa.size());
      for (double& v : aa) v += g;
      break;
    }
    case OpKind::ConcatRows: {
      std::size_t pos = 0;
      for (int in_id : node.many) {
        auto& ain = adj_of(in_id);
        for (double& v : ain) v += adj[pos++];
      }
      break;
    }
    case OpKind::ConcatCols: {
      const int cols = node.cols;
      for (int r = 0; r < node.rows; ++r) {
        int c0 = 0;
        for (int in_id : node.many) {
          auto& ain = adj_of(in_id);
          const int pc = nodes_[in_id].cols;
          for (int c = 0; c < pc; ++c)
            ain[static_cast<std::size_t>(r) * pc + c] += adj[static_cast<std::size_t>(r) * cols + c0 + c];
          c0 += pc;
        }
      }
      break;
    }
    case OpKind::Slice: {
      auto& aa = adj_of(node.a);
      const int len = static_cast<int>(adj.size());
      for (int i = 0; i < len; ++i) aa[node.offset + i] += adj[i];
      break;
    }
  }
}

// Central-difference gradient, the independent oracle for gradient checks.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h) {
  if (!(h > 0.0)) throw TapeError("finite_diff_gradient: h must be positive");
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw TapeError("finite_diff_gradient: non-finite function value");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace odyn
