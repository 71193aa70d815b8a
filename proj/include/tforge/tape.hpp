#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tforge {

/// Dense row-major tensor of doubles. Feature maps are [C, H, W], vectors
/// are [n], affine weights are [out, in], conv weights [out, in, k, k].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_, double fill = 0.0);

  std::size_t size() const { return data.size(); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(const std::vector<int>& shape);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;
};

/// Single owner of every trainable tensor. Views share the encoder because
/// they read the same Parameter entries.
class ParamStore {
 public:
  int add(std::string name, Tensor value);
  int index(const std::string& name) const;  // -1 when absent
  Parameter& operator[](int i) { return params_.at(static_cast<std::size_t>(i)); }
  const Parameter& operator[](int i) const { return params_.at(static_cast<std::size_t>(i)); }
  int count() const { return static_cast<int>(params_.size()); }
  std::size_t scalar_count() const;
  void zero_grad();
  /// Freezes every parameter whose name starts with `prefix`.
  void set_frozen(const std::string& prefix, bool frozen);
  bool all_finite() const;

  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }

 private:
  std::vector<Parameter> params_;
};

/// Reverse-mode tape. Every op records its output and a closure that
/// pushes the output gradient to its inputs; backward() runs the closures
/// in reverse order.
class Tape {
 public:
  using Id = int;

  Id constant(Tensor t);
  /// Leaf bound to a stored parameter; its gradient is added to the store.
  Id param(ParamStore& store, int index);

  /// x [C, H, W], w [Co, C, k, k], b [Co]; zero padding.
  Id conv2d(Id x, Id w, Id b, int stride, int pad);
  Id swish(Id x);
  /// [C, H, W] -> [C]
  Id global_avg_pool(Id x);
  /// x [n], w [m, n], b [m] -> [m]
  Id affine(Id x, Id w, Id b);
  /// Elementwise max over equally shaped inputs. The gradient goes to the
  /// lowest-index input attaining the max.
  Id max_over(const std::vector<Id>& xs);
  /// Concatenation along the leading axis.
  Id concat(const std::vector<Id>& xs);
  /// Mean squared error against a constant target.
  Id mse(Id pred, std::span<const double> target);
  /// Mean absolute error against a constant target.
  Id l1(Id pred, std::span<const double> target);

  const Tensor& value(Id id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const Tensor& grad(Id id) const { return nodes_.at(static_cast<std::size_t>(id)).grad; }
  /// Seeds d(out)/d(out) = 1; `out` must hold a single scalar.
  void backward(Id out);
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> back;
  };
  Id push(Tensor value);
  Tensor& g(Id id);
  std::vector<Node> nodes_;
};

}  // namespace tforge
