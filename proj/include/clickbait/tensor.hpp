#pragma once

// Dense tensors with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle to an immutable node. Operations on tensors that
// require gradients record their inputs and an adjoint rule in the result;
// `backward()` orders the reachable operations into a Tape and replays their
// adjoints in reverse. Leaf gradients accumulate across calls until
// `zero_grad()`.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace clickbait {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  bool is_scalar() const { return numel() == 1; }

  std::span<const double> data() const;
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  bool is_leaf() const;

  /// Accumulated adjoint; empty span until a backward pass reached this tensor.
  std::span<const double> grad() const;
  bool has_grad() const;
  void zero_grad();

  /// Writable storage of a leaf tensor (parameter updates, initialisation).
  /// Throws InvalidArgument on non-leaf tensors.
  std::span<double> mutable_data();

  /// Copy of the values with no history.
  Tensor detach() const;

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Used by the op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---------------------------------------------------------------------------
// Gradient recording control.

bool grad_enabled() noexcept;

/// Disables recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse topological record of the operations reachable from a loss.
class Tape {
 public:
  static Tape record(const Tensor& loss);

  std::size_t size() const noexcept { return ops_.size(); }

  /// Propagates adjoints from outputs to inputs, each op exactly once.
  /// Returns the number of ops whose adjoint rule ran.
  std::size_t replay() const;

  /// Zeroes the adjoints left on intermediate nodes by an earlier pass over a
  /// retained graph.
  void reset_intermediate_grads() const;

  /// Drops the recorded history so intermediate buffers can be freed.
  void release();

 private:
  std::vector<std::shared_ptr<detail::Node>> ops_;  // inputs before outputs
};

enum class GraphRetention { kRelease, kRetain };

/// Seeds d(loss)/d(loss) = 1 and replays the tape. `loss` must be a scalar
/// that depends on at least one tensor requiring gradients. With kRelease
/// (the default) the graph is discarded afterwards and a second backward
/// through it throws; kRetain keeps it and leaves intermediate gradients
/// readable.
void backward(const Tensor& loss, GraphRetention retention = GraphRetention::kRelease);

// ---------------------------------------------------------------------------
// Operations. Binary elementwise ops require equal shapes, except that a
// single-element operand broadcasts.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& w, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Subgradient at 0 is 0.
Tensor relu(const Tensor& x);
/// Subgradient at 0 is 0.
Tensor abs(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor dot(const Tensor& a, const Tensor& b);

Tensor concat(std::span<const Tensor> tensors, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> tensors, std::size_t axis);
/// Contiguous range [offset, offset + length) of a rank-1 tensor.
Tensor slice(const Tensor& x, std::size_t offset, std::size_t length);
/// Row `i` of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& x, std::size_t i);
Tensor reshape(const Tensor& x, Shape shape);
/// Stacks equal-length rank-1 tensors into an [n x len] matrix.
Tensor stack_rows(std::span<const Tensor> rows);
/// Rows of `table` selected by `indices`; adjoints scatter-add back.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> indices);

/// Valid cross-correlation: input [T x Cin], kernels [w x Cin x Cout],
/// bias [Cout] -> [(T - w + 1) x Cout].
Tensor conv1d(const Tensor& input, const Tensor& kernels, const Tensor& bias);
/// Per-channel maximum over rows; ties route the adjoint to the first row.
Tensor maxpool_over_time(const Tensor& input);
Tensor softmax(const Tensor& x);

inline constexpr double kProbabilityClamp = 1e-7;

/// -[y log p + (1 - y) log(1 - p)] with p clamped to [1e-7, 1 - 1e-7].
/// The adjoint is zero while p sits outside the clamp range.
Tensor binary_cross_entropy(const Tensor& p, double label);

// ---------------------------------------------------------------------------

namespace debug {

/// Deliberate defects for mutation-testing the gradient checker.
enum class Fault { kNone, kSigmoidGradSign };

void set_fault(Fault fault) noexcept;
Fault active_fault() noexcept;

}  // namespace debug

}  // namespace clickbait
