#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace surrogate::ad {

using Vector = Eigen::VectorXd;

/// Handle to a node of a Graph.
struct Node {
  std::size_t index = 0;
};

enum class Op {
  Input,        // the input vector p
  Param,        // contiguous slice of the parameter vector theta
  Constant,
  Affine,       // W x + b with W (row-major) and b read from theta
  Tanh,
  Add,
  Mul,          // elementwise; a size-1 operand broadcasts
  Scale,        // multiply by a fixed constant
  Sum,
  SquaredNorm,  // x^T x
  Concat,
  Slice,
};

/// Second-order-capable differentiable function f(p, theta) -> scalar.
///
/// The graph is a DAG of vector-valued nodes appended in topological order.
/// Evaluation state lives on the stack of each call, so one graph may be
/// evaluated from several threads at once.
class Graph {
 public:
  /// Value and gradient of an outer function g with respect to its argument.
  using Outer = std::function<std::pair<double, Vector>(const Vector&)>;

  Graph(std::size_t input_dim, std::size_t param_dim);

  Node input();
  Node param(std::size_t offset, std::size_t size);
  Node constant(Vector value);
  /// Consumes out_dim * size(x) weights starting at weight_offset; if
  /// has_bias, the next out_dim values are the bias.
  Node affine(Node x, std::size_t out_dim, std::size_t weight_offset, bool has_bias = true);
  Node tanh(Node x);
  Node add(Node a, Node b);
  Node mul(Node a, Node b);
  Node scale(Node x, double factor);
  Node sum(Node x);
  Node squared_norm(Node x);
  Node concat(Node a, Node b);
  Node slice(Node x, std::size_t offset, std::size_t size);
  void set_output(Node n);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t param_dim() const { return param_dim_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t node_size(Node n) const { return nodes_.at(n.index).size; }

  double value(const Vector& p, const Vector& theta) const;
  /// Reverse-mode gradient with respect to p.
  Vector input_gradient(const Vector& p, const Vector& theta) const;
  /// Reverse-mode gradient with respect to theta.
  Vector param_gradient(const Vector& p, const Vector& theta) const;

  struct Gradients {
    double value = 0.0;
    Vector input;  // d f / d p
    Vector param;  // d f / d theta
  };
  Gradients gradients(const Vector& p, const Vector& theta) const;

  struct Mixed {
    double value = 0.0;        // f(p, theta)
    Vector input_gradient;     // v = d f / d p
    double outer_value = 0.0;  // g(v)
    Vector param_gradient;     // d g(v) / d theta
  };
  /// d/dtheta g(grad_p f(p, theta)) by forward-over-reverse: the reverse sweep
  /// for d f/d theta is run on dual numbers seeded with the direction
  /// u = grad g(v) on p, so its tangent is H_{theta p} u.
  Mixed mixed(const Vector& p, const Vector& theta, const Outer& g) const;
  Vector mixed_gradient(const Vector& p, const Vector& theta, const Outer& g) const;

  /// Read-only view of the node list, for external analysis and testing.
  struct NodeDef {
    Op op = Op::Input;
    std::size_t size = 0;
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t offset = 0;  // theta offset (Param, Affine) or slice offset
    bool has_bias = false;
    double factor = 1.0;
    Vector constant;
  };
  const std::vector<NodeDef>& nodes() const { return nodes_; }
  std::size_t output() const { return output_; }

 private:
  struct Sweep;
  Node push(NodeDef def);
  void check_node(Node n) const;
  void check_call(const Vector& p, const Vector& theta) const;
  void forward(Sweep& s, const Vector& p, const Vector& theta) const;
  void forward_tangent(Sweep& s, const Vector& direction, const Vector& theta) const;
  void backward(Sweep& s, const Vector& theta, Vector& input_adj, Vector& param_adj) const;
  void backward_tangent(Sweep& s, const Vector& theta, Vector& input_adj_dot,
                        Vector& param_adj_dot) const;

  std::size_t input_dim_;
  std::size_t param_dim_;
  std::vector<NodeDef> nodes_;
  std::size_t output_ = 0;
  bool has_output_ = false;
};

}  // namespace surrogate::ad
