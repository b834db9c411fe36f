#include "clickbait/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "clickbait/errors.hpp"

namespace clickbait {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  bool released = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> adjoint;

  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

using detail::Node;

namespace {

thread_local bool g_grad_enabled = true;
std::atomic<debug::Fault> g_fault{debug::Fault::kNone};

void check_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  }
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("shape " + to_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(data.size()));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return node;
}

// Builds the result of an op, wiring history only when some input needs it.
Tensor make_result(Shape shape, std::vector<double> data, std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> adjoint) {
  auto node = make_node(std::move(shape), std::move(data), false);
  if (g_grad_enabled) {
    bool any = std::any_of(parents.begin(), parents.end(),
                           [](const std::shared_ptr<Node>& p) { return p->requires_grad; });
    if (any) {
      node->requires_grad = true;
      node->leaf = false;
      node->parents = std::move(parents);
      node->adjoint = std::move(adjoint);
    }
  }
  return Tensor(std::move(node));
}

const Node& node_of(const Tensor& t) {
  if (!t.defined()) throw InvalidArgument("operation on an undefined tensor");
  return *t.node();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got shape " +
                         to_string(t.shape()));
  }
}

// Grad buffer of a parent, or nullptr when it does not take gradients.
double* grad_of(Node& n) {
  if (!n.requires_grad) return nullptr;
  n.ensure_grad();
  return n.grad.data();
}

enum class Broadcast { kNone, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (a.numel() == 1 && b.numel() >= 1 && (b.numel() > 1 || a.rank() <= b.rank())) return Broadcast::kLeftScalar;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <typename F, typename GA, typename GB>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, F f, GA da, GB db) {
  const Node& na = node_of(a);
  const Node& nb = node_of(b);
  Broadcast kind = broadcast_kind(a, b, name);
  Shape shape = kind == Broadcast::kLeftScalar ? nb.shape : na.shape;
  std::size_t n = shape_numel(shape);
  std::size_t sa = kind == Broadcast::kLeftScalar ? 0 : 1;
  std::size_t sb = kind == Broadcast::kRightScalar ? 0 : 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(na.data[i * sa], nb.data[i * sb]);
  return make_result(std::move(shape), std::move(out), {a.node(), b.node()}, [n, sa, sb, da, db](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    double* ga = grad_of(pa);
    double* gb = grad_of(pb);
    for (std::size_t i = 0; i < n; ++i) {
      double x = pa.data[i * sa];
      double y = pb.data[i * sb];
      if (ga) ga[i * sa] += self.grad[i] * da(x, y);
      if (gb) gb[i * sb] += self.grad[i] * db(x, y);
    }
  });
}

// `dfdx(x, y)` receives the input and the forward output.
template <typename F, typename D>
Tensor unary_op(const Tensor& x, F f, D dfdx) {
  const Node& nx = node_of(x);
  std::vector<double> out(nx.data.size());
  std::transform(nx.data.begin(), nx.data.end(), out.begin(), f);
  return make_result(nx.shape, std::move(out), {x.node()}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    double* g = grad_of(p);
    if (!g) return;
    for (std::size_t i = 0; i < self.data.size(); ++i) g[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  Shape shape{data.size()};
  return Tensor(make_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(make_node({}, {value}, requires_grad));
}

const Shape& Tensor::shape() const { return node_of(*this).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return node_of(*this).data.size(); }

std::span<const double> Tensor::data() const { return node_of(*this).data; }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const {
  const Node& n = node_of(*this);
  if (i >= n.data.size()) throw InvalidArgument("index out of range");
  return n.data[i];
}

double Tensor::at(std::size_t i, std::size_t j) const {
  const Node& n = node_of(*this);
  if (n.shape.size() != 2 || i >= n.shape[0] || j >= n.shape[1]) throw InvalidArgument("index out of range");
  return n.data[i * n.shape[1] + j];
}

bool Tensor::requires_grad() const { return node_of(*this).requires_grad; }
bool Tensor::is_leaf() const { return node_of(*this).leaf; }
std::span<const double> Tensor::grad() const { return node_of(*this).grad; }
bool Tensor::has_grad() const { return !node_of(*this).grad.empty(); }
void Tensor::zero_grad() {
  node_of(*this);
  node_->grad.clear();
}

std::span<double> Tensor::mutable_data() {
  node_of(*this);
  if (!node_->leaf) throw InvalidArgument("mutable_data() on a non-leaf tensor");
  return node_->data;
}

Tensor Tensor::detach() const {
  const Node& n = node_of(*this);
  return Tensor(make_node(n.shape, n.data, false));
}

// ---------------------------------------------------------------------------

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tape Tape::record(const Tensor& loss) {
  Tape tape;
  const Node& root = node_of(loss);
  if (root.released) throw InvalidArgument("backward through a released graph");
  // Iterative post-order DFS; each op node is appended once, after its inputs.
  std::unordered_set<const Node*> visited;
  std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack;
  if (!root.leaf) stack.emplace_back(loss.node(), 0);
  visited.insert(&root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      std::shared_ptr<Node> parent = node->parents[next++];
      if (parent->leaf || !parent->requires_grad) continue;
      if (parent->released) throw InvalidArgument("backward through a released graph");
      if (visited.insert(parent.get()).second) stack.emplace_back(std::move(parent), 0);
    } else {
      tape.ops_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

std::size_t Tape::replay() const {
  std::size_t ran = 0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.adjoint) continue;
    n.adjoint(n);
    ++ran;
  }
  return ran;
}

void Tape::reset_intermediate_grads() const {
  for (auto& n : ops_)
    if (!n->leaf) std::fill(n->grad.begin(), n->grad.end(), 0.0);
}

void Tape::release() {
  for (auto& n : ops_) {
    n->parents.clear();
    n->adjoint = nullptr;
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->released = true;
  }
  ops_.clear();
}

void backward(const Tensor& loss, GraphRetention retention) {
  const Node& root = node_of(loss);
  if (root.data.size() != 1) throw InvalidArgument("backward() needs a scalar loss, got " + to_string(root.shape));
  if (!root.requires_grad) throw InvalidArgument("backward(): loss does not depend on any tensor requiring grad");
  Tape tape = Tape::record(loss);
  tape.reset_intermediate_grads();
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  tape.replay();
  if (retention == GraphRetention::kRelease) tape.release();
}

// ---------------------------------------------------------------------------
// Linear algebra.

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const auto& A = node_of(a).data;
  const auto& B = node_of(b).data;
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return make_result({m, n}, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const auto& G = self.grad;
    if (double* ga = grad_of(pa)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * pb.data[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (double* gb = grad_of(pb)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa.data[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  require_rank(w, 2, "matvec");
  require_rank(x, 1, "matvec");
  const std::size_t m = w.dim(0), k = w.dim(1);
  if (x.dim(0) != k) {
    throw DimensionError("matvec: " + to_string(w.shape()) + " cannot multiply " + to_string(x.shape()));
  }
  const auto& W = node_of(w).data;
  const auto& X = node_of(x).data;
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* wr = W.data() + i * k;
    double acc = 0.0;
    for (std::size_t p = 0; p < k; ++p) acc += wr[p] * X[p];
    out[i] = acc;
  }
  return make_result({m}, std::move(out), {w.node(), x.node()}, [m, k](Node& self) {
    Node& pw = *self.parents[0];
    Node& px = *self.parents[1];
    const auto& G = self.grad;
    if (double* gw = grad_of(pw)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = G[i];
        if (gi == 0.0) continue;
        double* row = gw + i * k;
        for (std::size_t p = 0; p < k; ++p) row[p] += gi * px.data[p];
      }
    }
    if (double* gx = grad_of(px)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = G[i];
        if (gi == 0.0) continue;
        const double* wr = pw.data.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) gx[p] += gi * wr[p];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise.

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_op(
      x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor sigmoid(const Tensor& x) {
  const double sign = debug::active_fault() == debug::Fault::kSigmoidGradSign ? -1.0 : 1.0;
  return unary_op(x, stable_sigmoid, [sign](double, double y) { return sign * y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor abs(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

// ---------------------------------------------------------------------------
// Reductions.

Tensor sum(const Tensor& x) {
  const Node& nx = node_of(x);
  double total = 0.0;
  for (double v : nx.data) total += v;
  return make_result({}, {total}, {x.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    if (double* g = grad_of(p)) {
      for (std::size_t i = 0; i < p.data.size(); ++i) g[i] += self.grad[0];
    }
  });
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank(a, 1, "dot");
  require_rank(b, 1, "dot");
  if (a.dim(0) != b.dim(0)) {
    throw DimensionError("dot: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  const auto& A = node_of(a).data;
  const auto& B = node_of(b).data;
  double total = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) total += A[i] * B[i];
  return make_result({}, {total}, {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const double g = self.grad[0];
    double* ga = grad_of(pa);
    double* gb = grad_of(pb);
    for (std::size_t i = 0; i < pa.data.size(); ++i) {
      if (ga) ga[i] += g * pb.data[i];
      if (gb) gb[i] += g * pa.data[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Structural.

Tensor concat(std::span<const Tensor> tensors, std::size_t axis) {
  if (tensors.empty()) throw InvalidArgument("concat: no tensors");
  const Shape& first = tensors[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for " + to_string(first));
  }
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Tensor& t : tensors) {
    const Shape& s = t.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    if (!ok) throw DimensionError("concat: incompatible shapes " + to_string(first) + " and " + to_string(s));
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];

  // Chunk width of each input along the flattened (outer, axis*inner) view.
  std::vector<std::size_t> widths;
  std::vector<std::shared_ptr<Node>> parents;
  std::size_t out_width = out_shape[axis] * inner;
  for (const Tensor& t : tensors) {
    widths.push_back(t.dim(axis) * inner);
    parents.push_back(t.node());
  }
  std::vector<double> out(outer * out_width);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& src = parents[k]->data;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src.begin() + o * widths[k], widths[k], out.begin() + o * out_width + offset);
    }
    offset += widths[k];
  }
  return make_result(std::move(out_shape), std::move(out), std::move(parents),
                     [outer, out_width, widths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (double* g = grad_of(*self.parents[k])) {
                           for (std::size_t o = 0; o < outer; ++o)
                             for (std::size_t i = 0; i < widths[k]; ++i)
                               g[o * widths[k] + i] += self.grad[o * out_width + off + i];
                         }
                         off += widths[k];
                       }
                     });
}

Tensor concat(std::initializer_list<Tensor> tensors, std::size_t axis) {
  return concat(std::span<const Tensor>(tensors.begin(), tensors.size()), axis);
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t length) {
  require_rank(x, 1, "slice");
  if (length == 0 || offset + length > x.dim(0)) {
    throw DimensionError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                         ") out of range for " + to_string(x.shape()));
  }
  const auto& src = node_of(x).data;
  std::vector<double> out(src.begin() + offset, src.begin() + offset + length);
  return make_result({length}, std::move(out), {x.node()}, [offset, length](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < length; ++i) g[offset + i] += self.grad[i];
    }
  });
}

Tensor row(const Tensor& x, std::size_t i) {
  require_rank(x, 2, "row");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (i >= rows) throw DimensionError("row " + std::to_string(i) + " out of range for " + to_string(x.shape()));
  const auto& src = node_of(x).data;
  std::vector<double> out(src.begin() + i * cols, src.begin() + (i + 1) * cols);
  return make_result({cols}, std::move(out), {x.node()}, [i, cols](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t j = 0; j < cols; ++j) g[i * cols + j] += self.grad[j];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  check_shape(shape);
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + to_string(x.shape()) + " cannot become " + to_string(shape));
  }
  std::vector<double> out(node_of(x).data);
  return make_result(std::move(shape), std::move(out), {x.node()}, [](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows: no rows");
  std::vector<Tensor> reshaped;
  reshaped.reserve(rows.size());
  for (const Tensor& r : rows) {
    require_rank(r, 1, "stack_rows");
    reshaped.push_back(reshape(r, {1, r.dim(0)}));
  }
  return concat(reshaped, 0);
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices) {
  require_rank(table, 2, "gather_rows");
  if (indices.empty()) throw InvalidArgument("gather_rows: no indices");
  const std::size_t n = table.dim(0), d = table.dim(1);
  const auto& src = node_of(table).data;
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= n) throw InvalidArgument("gather_rows: index " + std::to_string(idx[r]) + " out of range");
    std::copy_n(src.begin() + idx[r] * d, d, out.begin() + r * d);
  }
  std::size_t count = idx.size();
  return make_result({count, d}, std::move(out), {table.node()}, [idx = std::move(idx), d](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) g[idx[r] * d + j] += self.grad[r * d + j];
    }
  });
}

// ---------------------------------------------------------------------------
// Sequence ops.

Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require_rank(input, 2, "conv1d input");
  require_rank(kernels, 3, "conv1d kernels");
  require_rank(bias, 1, "conv1d bias");
  const std::size_t steps = input.dim(0), cin = input.dim(1);
  const std::size_t width = kernels.dim(0), cout = kernels.dim(2);
  if (kernels.dim(1) != cin || bias.dim(0) != cout) {
    throw DimensionError("conv1d: input " + to_string(input.shape()) + ", kernels " + to_string(kernels.shape()) +
                         ", bias " + to_string(bias.shape()));
  }
  if (steps < width) {
    throw SequenceTooShortError("conv1d: sequence of " + std::to_string(steps) + " steps is shorter than kernel width " +
                                std::to_string(width));
  }
  const std::size_t out_steps = steps - width + 1;
  const auto& X = node_of(input).data;
  const auto& K = node_of(kernels).data;
  const auto& B = node_of(bias).data;
  std::vector<double> out(out_steps * cout);
  for (std::size_t t = 0; t < out_steps; ++t) {
    double* o = out.data() + t * cout;
    std::copy(B.begin(), B.end(), o);
    for (std::size_t k = 0; k < width; ++k)
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double xv = X[(t + k) * cin + ci];
        const double* kr = K.data() + (k * cin + ci) * cout;
        for (std::size_t co = 0; co < cout; ++co) o[co] += xv * kr[co];
      }
  }
  return make_result({out_steps, cout}, std::move(out), {input.node(), kernels.node(), bias.node()},
                     [out_steps, width, cin, cout](Node& self) {
                       Node& px = *self.parents[0];
                       Node& pk = *self.parents[1];
                       double* gx = grad_of(px);
                       double* gk = grad_of(pk);
                       double* gb = grad_of(*self.parents[2]);
                       for (std::size_t t = 0; t < out_steps; ++t) {
                         const double* g = self.grad.data() + t * cout;
                         if (gb)
                           for (std::size_t co = 0; co < cout; ++co) gb[co] += g[co];
                         for (std::size_t k = 0; k < width; ++k)
                           for (std::size_t ci = 0; ci < cin; ++ci) {
                             const std::size_t xi = (t + k) * cin + ci;
                             const std::size_t ki = (k * cin + ci) * cout;
                             double acc = 0.0;
                             for (std::size_t co = 0; co < cout; ++co) {
                               acc += g[co] * pk.data[ki + co];
                               if (gk) gk[ki + co] += g[co] * px.data[xi];
                             }
                             if (gx) gx[xi] += acc;
                           }
                       }
                     });
}

Tensor maxpool_over_time(const Tensor& input) {
  require_rank(input, 2, "maxpool_over_time");
  const std::size_t steps = input.dim(0), channels = input.dim(1);
  const auto& X = node_of(input).data;
  std::vector<double> out(X.begin(), X.begin() + channels);
  std::vector<std::size_t> argmax(channels, 0);
  for (std::size_t t = 1; t < steps; ++t)
    for (std::size_t c = 0; c < channels; ++c) {
      if (X[t * channels + c] > out[c]) {
        out[c] = X[t * channels + c];
        argmax[c] = t;
      }
    }
  return make_result({channels}, std::move(out), {input.node()}, [argmax = std::move(argmax), channels](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      for (std::size_t c = 0; c < channels; ++c) g[argmax[c] * channels + c] += self.grad[c];
    }
  });
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 1, "softmax");
  const auto& X = node_of(x).data;
  const double peak = *std::max_element(X.begin(), X.end());
  std::vector<double> out(X.size());
  double total = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    out[i] = std::exp(X[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return make_result({X.size()}, std::move(out), {x.node()}, [](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      double weighted = 0.0;
      for (std::size_t i = 0; i < self.data.size(); ++i) weighted += self.grad[i] * self.data[i];
      for (std::size_t i = 0; i < self.data.size(); ++i) g[i] += self.data[i] * (self.grad[i] - weighted);
    }
  });
}

Tensor binary_cross_entropy(const Tensor& p, double label) {
  if (label != 0.0 && label != 1.0) {
    throw InvalidArgument("binary_cross_entropy: label must be 0 or 1, got " + std::to_string(label));
  }
  if (p.numel() != 1) throw DimensionError("binary_cross_entropy: expected a scalar, got " + to_string(p.shape()));
  const double raw = p.item();
  const double pc = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
  const double loss = -(label * std::log(pc) + (1.0 - label) * std::log(1.0 - pc));
  const bool clamped = raw != pc;
  return make_result({}, {loss}, {p.node()}, [pc, label, clamped](Node& self) {
    if (double* g = grad_of(*self.parents[0])) {
      if (!clamped) g[0] += self.grad[0] * (pc - label) / (pc * (1.0 - pc));
    }
  });
}

// ---------------------------------------------------------------------------

namespace debug {

void set_fault(Fault fault) noexcept { g_fault.store(fault); }
Fault active_fault() noexcept { return g_fault.load(); }

}  // namespace debug

}  // namespace clickbait
