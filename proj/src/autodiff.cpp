#include "surrogate/autodiff.hpp"

#include <cmath>
#include <string>

#include "surrogate/errors.hpp"

namespace surrogate::ad {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMajorMatrix>;
using Weights = Eigen::Map<RowMajorMatrix>;

// Expands a size-1 operand of an elementwise product to size n.
Vector broadcast(const Vector& v, Eigen::Index n) {
  if (v.size() == n) return v;
  return Vector::Constant(n, v[0]);
}

// Accumulates `contribution` into `target`, summing when the target was broadcast.
void accumulate(Vector& target, const Vector& contribution) {
  if (target.size() == contribution.size()) {
    target += contribution;
  } else {
    target[0] += contribution.sum();
  }
}

}  // namespace

struct Graph::Sweep {
  std::vector<Vector> values;
  std::vector<Vector> tangents;
  std::vector<Vector> adjoints;
  std::vector<Vector> adjoint_tangents;
};

Graph::Graph(std::size_t input_dim, std::size_t param_dim)
    : input_dim_(input_dim), param_dim_(param_dim) {}

Node Graph::push(NodeDef def) {
  nodes_.push_back(std::move(def));
  return Node{nodes_.size() - 1};
}

void Graph::check_node(Node n) const {
  require(n.index < nodes_.size(), "autodiff: node does not belong to this graph");
}

Node Graph::input() {
  require(input_dim_ > 0, "autodiff: graph declared without inputs");
  NodeDef d;
  d.op = Op::Input;
  d.size = input_dim_;
  return push(std::move(d));
}

Node Graph::param(std::size_t offset, std::size_t size) {
  require(size > 0 && offset + size <= param_dim_, "autodiff: parameter slice out of range");
  NodeDef d;
  d.op = Op::Param;
  d.size = size;
  d.offset = offset;
  return push(std::move(d));
}

Node Graph::constant(Vector value) {
  require(value.size() > 0, "autodiff: empty constant");
  NodeDef d;
  d.op = Op::Constant;
  d.size = static_cast<std::size_t>(value.size());
  d.constant = std::move(value);
  return push(std::move(d));
}

Node Graph::affine(Node x, std::size_t out_dim, std::size_t weight_offset, bool has_bias) {
  check_node(x);
  const std::size_t in_dim = nodes_[x.index].size;
  const std::size_t needed = out_dim * in_dim + (has_bias ? out_dim : 0);
  require(out_dim > 0 && weight_offset + needed <= param_dim_,
          "autodiff: affine parameters out of range");
  NodeDef d;
  d.op = Op::Affine;
  d.size = out_dim;
  d.a = x.index;
  d.offset = weight_offset;
  d.has_bias = has_bias;
  return push(std::move(d));
}

Node Graph::tanh(Node x) {
  check_node(x);
  NodeDef d;
  d.op = Op::Tanh;
  d.size = nodes_[x.index].size;
  d.a = x.index;
  return push(std::move(d));
}

Node Graph::add(Node a, Node b) {
  check_node(a);
  check_node(b);
  require(nodes_[a.index].size == nodes_[b.index].size, "autodiff: add size mismatch");
  NodeDef d;
  d.op = Op::Add;
  d.size = nodes_[a.index].size;
  d.a = a.index;
  d.b = b.index;
  return push(std::move(d));
}

Node Graph::mul(Node a, Node b) {
  check_node(a);
  check_node(b);
  const std::size_t sa = nodes_[a.index].size;
  const std::size_t sb = nodes_[b.index].size;
  require(sa == sb || sa == 1 || sb == 1, "autodiff: mul size mismatch");
  NodeDef d;
  d.op = Op::Mul;
  d.size = std::max(sa, sb);
  d.a = a.index;
  d.b = b.index;
  return push(std::move(d));
}

Node Graph::scale(Node x, double factor) {
  check_node(x);
  require(std::isfinite(factor), "autodiff: non-finite scale factor");
  NodeDef d;
  d.op = Op::Scale;
  d.size = nodes_[x.index].size;
  d.a = x.index;
  d.factor = factor;
  return push(std::move(d));
}

Node Graph::sum(Node x) {
  check_node(x);
  NodeDef d;
  d.op = Op::Sum;
  d.size = 1;
  d.a = x.index;
  return push(std::move(d));
}

Node Graph::squared_norm(Node x) {
  check_node(x);
  NodeDef d;
  d.op = Op::SquaredNorm;
  d.size = 1;
  d.a = x.index;
  return push(std::move(d));
}

Node Graph::concat(Node a, Node b) {
  check_node(a);
  check_node(b);
  NodeDef d;
  d.op = Op::Concat;
  d.size = nodes_[a.index].size + nodes_[b.index].size;
  d.a = a.index;
  d.b = b.index;
  return push(std::move(d));
}

Node Graph::slice(Node x, std::size_t offset, std::size_t size) {
  check_node(x);
  require(size > 0 && offset + size <= nodes_[x.index].size, "autodiff: slice out of range");
  NodeDef d;
  d.op = Op::Slice;
  d.size = size;
  d.a = x.index;
  d.offset = offset;
  return push(std::move(d));
}

void Graph::set_output(Node n) {
  check_node(n);
  require(nodes_[n.index].size == 1, "autodiff: output node must be scalar");
  output_ = n.index;
  has_output_ = true;
}

void Graph::check_call(const Vector& p, const Vector& theta) const {
  require(has_output_, "autodiff: graph has no output");
  require(static_cast<std::size_t>(p.size()) == input_dim_,
          "autodiff: input has dimension " + std::to_string(p.size()) + ", expected " +
              std::to_string(input_dim_));
  require(static_cast<std::size_t>(theta.size()) == param_dim_,
          "autodiff: parameters have dimension " + std::to_string(theta.size()) +
              ", expected " + std::to_string(param_dim_));
}

void Graph::forward(Sweep& s, const Vector& p, const Vector& theta) const {
  const std::size_t count = output_ + 1;
  s.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const NodeDef& d = nodes_[i];
    Vector& y = s.values[i];
    switch (d.op) {
      case Op::Input:
        y = p;
        break;
      case Op::Param:
        y = theta.segment(static_cast<Eigen::Index>(d.offset), static_cast<Eigen::Index>(d.size));
        break;
      case Op::Constant:
        y = d.constant;
        break;
      case Op::Affine: {
        const Vector& x = s.values[d.a];
        const auto out = static_cast<Eigen::Index>(d.size);
        const ConstWeights w(theta.data() + d.offset, out, x.size());
        y = w * x;
        if (d.has_bias) y += theta.segment(static_cast<Eigen::Index>(d.offset) + out * x.size(), out);
        break;
      }
      case Op::Tanh:
        y = s.values[d.a].array().tanh().matrix();
        break;
      case Op::Add:
        y = s.values[d.a] + s.values[d.b];
        break;
      case Op::Mul: {
        const auto n = static_cast<Eigen::Index>(d.size);
        y = broadcast(s.values[d.a], n).cwiseProduct(broadcast(s.values[d.b], n));
        break;
      }
      case Op::Scale:
        y = d.factor * s.values[d.a];
        break;
      case Op::Sum:
        y = Vector::Constant(1, s.values[d.a].sum());
        break;
      case Op::SquaredNorm:
        y = Vector::Constant(1, s.values[d.a].squaredNorm());
        break;
      case Op::Concat:
        y.resize(static_cast<Eigen::Index>(d.size));
        y << s.values[d.a], s.values[d.b];
        break;
      case Op::Slice:
        y = s.values[d.a].segment(static_cast<Eigen::Index>(d.offset),
                                  static_cast<Eigen::Index>(d.size));
        break;
    }
  }
}

void Graph::forward_tangent(Sweep& s, const Vector& direction, const Vector& theta) const {
  const std::size_t count = output_ + 1;
  s.tangents.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const NodeDef& d = nodes_[i];
    const auto n = static_cast<Eigen::Index>(d.size);
    Vector& t = s.tangents[i];
    switch (d.op) {
      case Op::Input:
        t = direction;
        break;
      case Op::Param:
      case Op::Constant:
        t = Vector::Zero(n);
        break;
      case Op::Affine: {
        const Vector& xt = s.tangents[d.a];
        const ConstWeights w(theta.data() + d.offset, n, xt.size());
        t = w * xt;
        break;
      }
      case Op::Tanh:
        t = (1.0 - s.values[i].array().square()).matrix().cwiseProduct(s.tangents[d.a]);
        break;
      case Op::Add:
        t = s.tangents[d.a] + s.tangents[d.b];
        break;
      case Op::Mul:
        t = broadcast(s.tangents[d.a], n).cwiseProduct(broadcast(s.values[d.b], n)) +
            broadcast(s.values[d.a], n).cwiseProduct(broadcast(s.tangents[d.b], n));
        break;
      case Op::Scale:
        t = d.factor * s.tangents[d.a];
        break;
      case Op::Sum:
        t = Vector::Constant(1, s.tangents[d.a].sum());
        break;
      case Op::SquaredNorm:
        t = Vector::Constant(1, 2.0 * s.values[d.a].dot(s.tangents[d.a]));
        break;
      case Op::Concat:
        t.resize(n);
        t << s.tangents[d.a], s.tangents[d.b];
        break;
      case Op::Slice:
        t = s.tangents[d.a].segment(static_cast<Eigen::Index>(d.offset), n);
        break;
    }
  }
}

void Graph::backward(Sweep& s, const Vector& theta, Vector& input_adj, Vector& param_adj) const {
  const std::size_t count = output_ + 1;
  s.adjoints.assign(count, Vector());
  for (std::size_t i = 0; i < count; ++i) {
    s.adjoints[i] = Vector::Zero(static_cast<Eigen::Index>(nodes_[i].size));
  }
  s.adjoints[output_][0] = 1.0;
  input_adj = Vector::Zero(static_cast<Eigen::Index>(input_dim_));
  param_adj = Vector::Zero(static_cast<Eigen::Index>(param_dim_));

  for (std::size_t k = count; k-- > 0;) {
    const NodeDef& d = nodes_[k];
    const Vector& ybar = s.adjoints[k];
    const auto n = static_cast<Eigen::Index>(d.size);
    switch (d.op) {
      case Op::Input:
        input_adj += ybar;
        break;
      case Op::Param:
        param_adj.segment(static_cast<Eigen::Index>(d.offset), n) += ybar;
        break;
      case Op::Constant:
        break;
      case Op::Affine: {
        const Vector& x = s.values[d.a];
        const ConstWeights w(theta.data() + d.offset, n, x.size());
        s.adjoints[d.a] += w.transpose() * ybar;
        Weights wbar(param_adj.data() + d.offset, n, x.size());
        wbar.noalias() += ybar * x.transpose();
        if (d.has_bias) param_adj.segment(static_cast<Eigen::Index>(d.offset) + n * x.size(), n) += ybar;
        break;
      }
      case Op::Tanh:
        s.adjoints[d.a] += (1.0 - s.values[k].array().square()).matrix().cwiseProduct(ybar);
        break;
      case Op::Add:
        s.adjoints[d.a] += ybar;
        s.adjoints[d.b] += ybar;
        break;
      case Op::Mul:
        accumulate(s.adjoints[d.a], ybar.cwiseProduct(broadcast(s.values[d.b], n)));
        accumulate(s.adjoints[d.b], ybar.cwiseProduct(broadcast(s.values[d.a], n)));
        break;
      case Op::Scale:
        s.adjoints[d.a] += d.factor * ybar;
        break;
      case Op::Sum:
        s.adjoints[d.a].array() += ybar[0];
        break;
      case Op::SquaredNorm:
        s.adjoints[d.a] += (2.0 * ybar[0]) * s.values[d.a];
        break;
      case Op::Concat: {
        const auto na = s.adjoints[d.a].size();
        s.adjoints[d.a] += ybar.head(na);
        s.adjoints[d.b] += ybar.tail(n - na);
        break;
      }
      case Op::Slice:
        s.adjoints[d.a].segment(static_cast<Eigen::Index>(d.offset), n) += ybar;
        break;
    }
  }
}

// Tangent of the reverse sweep. Primal adjoints from backward() must be in
// place; theta carries no tangent, so weight tangents vanish.
void Graph::backward_tangent(Sweep& s, const Vector& theta, Vector& input_adj_dot,
                             Vector& param_adj_dot) const {
  const std::size_t count = output_ + 1;
  s.adjoint_tangents.assign(count, Vector());
  for (std::size_t i = 0; i < count; ++i) {
    s.adjoint_tangents[i] = Vector::Zero(static_cast<Eigen::Index>(nodes_[i].size));
  }
  input_adj_dot = Vector::Zero(static_cast<Eigen::Index>(input_dim_));
  param_adj_dot = Vector::Zero(static_cast<Eigen::Index>(param_dim_));

  for (std::size_t k = count; k-- > 0;) {
    const NodeDef& d = nodes_[k];
    const Vector& ybar = s.adjoints[k];
    const Vector& ybar_dot = s.adjoint_tangents[k];
    const auto n = static_cast<Eigen::Index>(d.size);
    switch (d.op) {
      case Op::Input:
        input_adj_dot += ybar_dot;
        break;
      case Op::Param:
        param_adj_dot.segment(static_cast<Eigen::Index>(d.offset), n) += ybar_dot;
        break;
      case Op::Constant:
        break;
      case Op::Affine: {
        const Vector& x = s.values[d.a];
        const Vector& x_dot = s.tangents[d.a];
        const ConstWeights w(theta.data() + d.offset, n, x.size());
        s.adjoint_tangents[d.a] += w.transpose() * ybar_dot;
        Weights wbar_dot(param_adj_dot.data() + d.offset, n, x.size());
        wbar_dot.noalias() += ybar_dot * x.transpose();
        wbar_dot.noalias() += ybar * x_dot.transpose();
        if (d.has_bias) {
          param_adj_dot.segment(static_cast<Eigen::Index>(d.offset) + n * x.size(), n) += ybar_dot;
        }
        break;
      }
      case Op::Tanh: {
        const auto y = s.values[k].array();
        const Vector deriv = (1.0 - y.square()).matrix();
        const Vector deriv_dot = (-2.0 * y * s.tangents[k].array()).matrix();
        s.adjoint_tangents[d.a] += deriv_dot.cwiseProduct(ybar) + deriv.cwiseProduct(ybar_dot);
        break;
      }
      case Op::Add:
        s.adjoint_tangents[d.a] += ybar_dot;
        s.adjoint_tangents[d.b] += ybar_dot;
        break;
      case Op::Mul: {
        const Vector a = broadcast(s.values[d.a], n);
        const Vector b = broadcast(s.values[d.b], n);
        const Vector a_dot = broadcast(s.tangents[d.a], n);
        const Vector b_dot = broadcast(s.tangents[d.b], n);
        accumulate(s.adjoint_tangents[d.a], ybar_dot.cwiseProduct(b) + ybar.cwiseProduct(b_dot));
        accumulate(s.adjoint_tangents[d.b], ybar_dot.cwiseProduct(a) + ybar.cwiseProduct(a_dot));
        break;
      }
      case Op::Scale:
        s.adjoint_tangents[d.a] += d.factor * ybar_dot;
        break;
      case Op::Sum:
        s.adjoint_tangents[d.a].array() += ybar_dot[0];
        break;
      case Op::SquaredNorm:
        s.adjoint_tangents[d.a] +=
            (2.0 * ybar_dot[0]) * s.values[d.a] + (2.0 * ybar[0]) * s.tangents[d.a];
        break;
      case Op::Concat: {
        const auto na = s.adjoint_tangents[d.a].size();
        s.adjoint_tangents[d.a] += ybar_dot.head(na);
        s.adjoint_tangents[d.b] += ybar_dot.tail(n - na);
        break;
      }
      case Op::Slice:
        s.adjoint_tangents[d.a].segment(static_cast<Eigen::Index>(d.offset), n) += ybar_dot;
        break;
    }
  }
}

double Graph::value(const Vector& p, const Vector& theta) const {
  check_call(p, theta);
  Sweep s;
  forward(s, p, theta);
  return s.values[output_][0];
}

Graph::Gradients Graph::gradients(const Vector& p, const Vector& theta) const {
  check_call(p, theta);
  Sweep s;
  forward(s, p, theta);
  Gradients g;
  g.value = s.values[output_][0];
  backward(s, theta, g.input, g.param);
  return g;
}

Vector Graph::input_gradient(const Vector& p, const Vector& theta) const {
  return gradients(p, theta).input;
}

Vector Graph::param_gradient(const Vector& p, const Vector& theta) const {
  return gradients(p, theta).param;
}

Graph::Mixed Graph::mixed(const Vector& p, const Vector& theta, const Outer& g) const {
  check_call(p, theta);
  Sweep s;
  forward(s, p, theta);
  Mixed out;
  out.value = s.values[output_][0];
  Vector param_adj;
  backward(s, theta, out.input_gradient, param_adj);

  auto [outer_value, direction] = g(out.input_gradient);
  require(static_cast<std::size_t>(direction.size()) == input_dim_,
          "autodiff: outer gradient has the wrong dimension");
  out.outer_value = outer_value;
  if (direction.isZero(0.0)) {
    out.param_gradient = Vector::Zero(static_cast<Eigen::Index>(param_dim_));
    return out;
  }
  forward_tangent(s, direction, theta);
  Vector input_adj_dot;
  backward_tangent(s, theta, input_adj_dot, out.param_gradient);
  return out;
}

Vector Graph::mixed_gradient(const Vector& p, const Vector& theta, const Outer& g) const {
  return mixed(p, theta, g).param_gradient;
}

}  // namespace surrogate::ad
