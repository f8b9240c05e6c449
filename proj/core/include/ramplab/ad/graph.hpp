#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramplab::ad {

using NodeId = std::int32_t;

enum class Op : std::uint8_t {
  constant,
  variable,
  parameter,
  add,
  sub,
  mul,
  div,
  neg,
  exp_fn,
  log_fn,
  pow_const,  // base node, constant exponent in c
  pow_expr,   // base node a, exponent node b
};

struct Node {
  Op op;
  NodeId a = -1;
  NodeId b = -1;
  double c = 0.0;  // constant value, exponent, or leaf slot (as integer)
};

class DomainError : public std::runtime_error {
 public:
  DomainError(NodeId node, const std::string& what)
      : std::runtime_error("expression node " + std::to_string(node) + ": " + what), node(node) {}
  NodeId node;
};

/// Append-only tape of elementary operations. Leaves are constants, numbered
/// variable slots, and numbered parameter slots; evaluation and all derivative
/// passes walk the tape in order, so results are deterministic.
class ExpressionGraph {
 public:
  std::vector<Node> nodes;
  std::vector<NodeId> outputs;
  int num_variables = 0;
  int num_parameters = 0;

  NodeId constant(double v);
  NodeId variable();   // appends a new variable slot
  NodeId parameter();  // appends a new parameter slot

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId pow(NodeId a, double exponent);
  NodeId pow(NodeId a, NodeId b);

  int size() const { return static_cast<int>(nodes.size()); }
  int slot_of(NodeId id) const { return static_cast<int>(nodes[id].c); }

  /// Forward pass over the whole tape. `values` is resized to the tape length.
  /// Throws DomainError on invalid elementary operations.
  void evaluate_all(const std::vector<double>& vars, const std::vector<double>& params,
                    std::vector<double>& values) const;

  /// Like evaluate_all but reports domain errors through the return value
  /// (node id, or -1 on success) instead of throwing.
  NodeId try_evaluate_all(const std::vector<double>& vars, const std::vector<double>& params,
                          std::vector<double>& values) const;

  /// Reverse pass seeded with weights on output nodes; returns the adjoint of
  /// every node. d(sum_i w_i out_i)/d(leaf) is the adjoint at the leaf node.
  void reverse(const std::vector<double>& values, const std::vector<std::pair<NodeId, double>>& seeds,
               std::vector<double>& adjoints) const;

  /// Symbolic reverse-mode differentiation: appends adjoint nodes for the
  /// given scalar output and returns, for each requested leaf, a node that
  /// evaluates to d(output)/d(leaf) at any point.
  std::vector<NodeId> differentiate(NodeId output, const std::vector<NodeId>& wrt_leaves);

  /// Symbolic forward-mode directional derivative d(node)/d(seed_leaf) for a
  /// set of nodes; used to build second-derivative graphs on top of
  /// differentiate() (forward-over-reverse).
  std::vector<NodeId> forward_tangent(const std::vector<NodeId>& of, NodeId seed_leaf);

  /// Second derivatives of a scalar output: Hessian entry graphs, row-major
  /// over wrt_leaves (forward-over-reverse).
  std::vector<std::vector<NodeId>> differentiate_twice(NodeId output,
                                                       const std::vector<NodeId>& wrt_leaves);
};

/// Convenience evaluation of the graph's designated outputs.
std::vector<double> evaluate(const ExpressionGraph& g, const std::vector<double>& vars,
                             const std::vector<double>& params);

/// Topologically sliced view of one scalar node: the ancestor nodes it
/// depends on, remapped into a compact local tape. The solver uses these for
/// per-constraint gradients and Hessians.
struct SubTape {
  std::vector<Node> nodes;              // local tape, operands remapped
  std::vector<NodeId> original_ids;     // local index -> original node id
  std::vector<std::pair<int, int>> variables;   // (local index, variable slot)
  std::vector<std::pair<int, int>> parameters;  // (local index, parameter slot)

  int size() const { return static_cast<int>(nodes.size()); }
  int num_vars() const { return static_cast<int>(variables.size()); }

  /// Gradient of the subtape's root with respect to its variable slots,
  /// using node values from a full-tape evaluation. Output is indexed like
  /// `variables`.
  void gradient(const std::vector<double>& full_values, std::vector<double>& grad,
                std::vector<double>& local_adjoint_scratch) const;

  /// Dense local Hessian (num_vars x num_vars, row-major) via one
  /// forward-over-reverse sweep per variable.
  void hessian(const std::vector<double>& full_values, std::vector<double>& hess,
               std::vector<double>& scratch) const;
};

SubTape extract_subtape(const ExpressionGraph& g, NodeId root);

/// Small expression-building helper so model code reads like arithmetic.
struct Expr {
  ExpressionGraph* g = nullptr;
  NodeId id = -1;
};

inline Expr wrap(ExpressionGraph& g, NodeId id) { return Expr{&g, id}; }
inline Expr lit(ExpressionGraph& g, double v) { return Expr{&g, g.constant(v)}; }

inline Expr operator+(Expr a, Expr b) { return {a.g, a.g->add(a.id, b.id)}; }
inline Expr operator-(Expr a, Expr b) { return {a.g, a.g->sub(a.id, b.id)}; }
inline Expr operator*(Expr a, Expr b) { return {a.g, a.g->mul(a.id, b.id)}; }
inline Expr operator/(Expr a, Expr b) { return {a.g, a.g->div(a.id, b.id)}; }
inline Expr operator-(Expr a) { return {a.g, a.g->neg(a.id)}; }
inline Expr operator+(Expr a, double b) { return a + lit(*a.g, b); }
inline Expr operator+(double a, Expr b) { return lit(*b.g, a) + b; }
inline Expr operator-(Expr a, double b) { return a - lit(*a.g, b); }
inline Expr operator-(double a, Expr b) { return lit(*b.g, a) - b; }
inline Expr operator*(Expr a, double b) { return a * lit(*a.g, b); }
inline Expr operator*(double a, Expr b) { return lit(*b.g, a) * b; }
inline Expr operator/(Expr a, double b) { return a / lit(*a.g, b); }
inline Expr operator/(double a, Expr b) { return lit(*b.g, a) / b; }
inline Expr exp(Expr a) { return {a.g, a.g->exp(a.id)}; }
inline Expr log(Expr a) { return {a.g, a.g->log(a.id)}; }
inline Expr pow(Expr a, double c) { return {a.g, a.g->pow(a.id, c)}; }
inline Expr pow(Expr a, Expr b) { return {a.g, a.g->pow(a.id, b.id)}; }
inline Expr square(Expr a) { return {a.g, a.g->pow(a.id, 2.0)}; }

}  // namespace ramplab::ad
