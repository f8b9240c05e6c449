#include "ramplab/ad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ramplab::ad {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NodeId ExpressionGraph::constant(double v) {
  nodes.push_back(Node{Op::constant, -1, -1, v});
  return static_cast<NodeId>(nodes.size() - 1);
}

NodeId ExpressionGraph::variable() {
  nodes.push_back(Node{Op::variable, -1, -1, static_cast<double>(num_variables++)});
  return static_cast<NodeId>(nodes.size() - 1);
}

NodeId ExpressionGraph::parameter() {
  nodes.push_back(Node{Op::parameter, -1, -1, static_cast<double>(num_parameters++)});
  return static_cast<NodeId>(nodes.size() - 1);
}

#define RAMPLAB_BINOP(name, opcode)                          \
  NodeId ExpressionGraph::name(NodeId a, NodeId b) {         \
    nodes.push_back(Node{opcode, a, b, 0.0});                \
    return static_cast<NodeId>(nodes.size() - 1);            \
  }

RAMPLAB_BINOP(add, Op::add)
RAMPLAB_BINOP(sub, Op::sub)
RAMPLAB_BINOP(mul, Op::mul)
RAMPLAB_BINOP(div, Op::div)
#undef RAMPLAB_BINOP

NodeId ExpressionGraph::neg(NodeId a) {
  nodes.push_back(Node{Op::neg, a, -1, 0.0});
  return static_cast<NodeId>(nodes.size() - 1);
}
NodeId ExpressionGraph::exp(NodeId a) {
  nodes.push_back(Node{Op::exp_fn, a, -1, 0.0});
  return static_cast<NodeId>(nodes.size() - 1);
}
NodeId ExpressionGraph::log(NodeId a) {
  nodes.push_back(Node{Op::log_fn, a, -1, 0.0});
  return static_cast<NodeId>(nodes.size() - 1);
}
NodeId ExpressionGraph::pow(NodeId a, double exponent) {
  nodes.push_back(Node{Op::pow_const, a, -1, exponent});
  return static_cast<NodeId>(nodes.size() - 1);
}
NodeId ExpressionGraph::pow(NodeId a, NodeId b) {
  nodes.push_back(Node{Op::pow_expr, a, b, 0.0});
  return static_cast<NodeId>(nodes.size() - 1);
}

namespace {

inline double eval_node(const Node& n, const double* values, const std::vector<double>& vars,
                        const std::vector<double>& params) {
  switch (n.op) {
    case Op::constant: return n.c;
    case Op::variable: return vars[static_cast<int>(n.c)];
    case Op::parameter: return params[static_cast<int>(n.c)];
    case Op::add: return values[n.a] + values[n.b];
    case Op::sub: return values[n.a] - values[n.b];
    case Op::mul: return values[n.a] * values[n.b];
    case Op::div: return values[n.a] / values[n.b];
    case Op::neg: return -values[n.a];
    case Op::exp_fn: return std::exp(values[n.a]);
    case Op::log_fn: return std::log(values[n.a]);
    case Op::pow_const: return std::pow(values[n.a], n.c);
    case Op::pow_expr: return std::pow(values[n.a], values[n.b]);
  }
  return 0.0;
}

inline bool operands_finite(const Node& n, const double* values) {
  if (n.a >= 0 && !std::isfinite(values[n.a])) return false;
  if (n.b >= 0 && !std::isfinite(values[n.b])) return false;
  return true;
}

struct Partials {
  double pa = 0.0, pb = 0.0;
};

// Local partial derivatives of a node w.r.t. its operands.
inline Partials partials(const Node& n, const double* values) {
  Partials p;
  switch (n.op) {
    case Op::constant:
    case Op::variable:
    case Op::parameter: break;
    case Op::add: p.pa = 1.0; p.pb = 1.0; break;
    case Op::sub: p.pa = 1.0; p.pb = -1.0; break;
    case Op::mul: p.pa = values[n.b]; p.pb = values[n.a]; break;
    case Op::div: {
      const double vb = values[n.b];
      p.pa = 1.0 / vb;
      p.pb = -values[n.a] / (vb * vb);
      break;
    }
    case Op::neg: p.pa = -1.0; break;
    case Op::exp_fn: p.pa = std::exp(values[n.a]); break;
    case Op::log_fn: p.pa = 1.0 / values[n.a]; break;
    case Op::pow_const: p.pa = n.c * std::pow(values[n.a], n.c - 1.0); break;
    case Op::pow_expr: {
      const double va = values[n.a], vb = values[n.b];
      if (va == 0.0) {
        // Limits for a nonnegative base: d/da a^b -> 0 for b > 1, and
        // a^b ln(a) -> 0 for b > 0.
        p.pa = vb > 1.0 ? 0.0 : (vb == 1.0 ? 1.0 : kInf);
        p.pb = 0.0;
      } else {
        p.pa = vb * std::pow(va, vb - 1.0);
        p.pb = std::pow(va, vb) * std::log(va);
      }
      break;
    }
  }
  return p;
}

// Tangents of the local partials along a direction with operand tangents
// (ta, tb); needed by forward-over-reverse second derivatives.
inline Partials partial_tangents(const Node& n, const double* values, double ta, double tb) {
  Partials dp;
  switch (n.op) {
    case Op::constant:
    case Op::variable:
    case Op::parameter:
    case Op::add:
    case Op::sub:
    case Op::neg: break;
    case Op::mul: dp.pa = tb; dp.pb = ta; break;
    case Op::div: {
      const double va = values[n.a], vb = values[n.b];
      dp.pa = -tb / (vb * vb);
      dp.pb = (-ta + 2.0 * (va / vb) * tb) / (vb * vb);
      break;
    }
    case Op::exp_fn: dp.pa = std::exp(values[n.a]) * ta; break;
    case Op::log_fn: {
      const double va = values[n.a];
      dp.pa = -ta / (va * va);
      break;
    }
    case Op::pow_const: {
      const double va = values[n.a];
      dp.pa = n.c * (n.c - 1.0) * std::pow(va, n.c - 2.0) * ta;
      break;
    }
    case Op::pow_expr: {
      const double va = values[n.a], vb = values[n.b];
      if (va == 0.0) {
        dp.pa = vb > 2.0 ? 0.0 : (vb == 2.0 ? 2.0 * ta : (ta == 0.0 ? 0.0 : kInf));
        dp.pb = 0.0;
      } else {
        const double lg = std::log(va);
        const double pam1 = std::pow(va, vb - 1.0);
        dp.pa = tb * pam1 + vb * pam1 * ((vb - 1.0) * ta / va + lg * tb);
        const double vn = std::pow(va, vb);
        const double tn = vn * (tb * lg + vb * ta / va);
        dp.pb = tn * lg + vn * ta / va;
      }
      break;
    }
  }
  return dp;
}

// Forward tangent of a node's value given operand tangents.
inline double value_tangent(const Node& n, const double* values, double ta, double tb) {
  switch (n.op) {
    case Op::constant:
    case Op::variable:
    case Op::parameter: return 0.0;
    case Op::add: return ta + tb;
    case Op::sub: return ta - tb;
    case Op::mul: return ta * values[n.b] + values[n.a] * tb;
    case Op::div: return (ta - (values[n.a] / values[n.b]) * tb) / values[n.b];
    case Op::neg: return -ta;
    case Op::exp_fn: return std::exp(values[n.a]) * ta;
    case Op::log_fn: return ta / values[n.a];
    case Op::pow_const: return n.c * std::pow(values[n.a], n.c - 1.0) * ta;
    case Op::pow_expr: {
      const double va = values[n.a], vb = values[n.b];
      if (va == 0.0) return vb > 1.0 ? 0.0 : (vb == 1.0 ? ta : (ta == 0.0 ? 0.0 : kInf));
      return std::pow(va, vb) * (tb * std::log(va) + vb * ta / va);
    }
  }
  return 0.0;
}

}  // namespace

NodeId ExpressionGraph::try_evaluate_all(const std::vector<double>& vars,
                                         const std::vector<double>& params,
                                         std::vector<double>& values) const {
  values.resize(nodes.size());
  NodeId bad = -1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    const double v = eval_node(n, values.data(), vars, params);
    values[i] = v;
    if (bad < 0 && !std::isfinite(v) && operands_finite(n, values.data()))
      bad = static_cast<NodeId>(i);
  }
  return bad;
}

void ExpressionGraph::evaluate_all(const std::vector<double>& vars,
                                   const std::vector<double>& params,
                                   std::vector<double>& values) const {
  const NodeId bad = try_evaluate_all(vars, params, values);
  if (bad >= 0) throw DomainError(bad, "non-finite result");
}

std::vector<double> evaluate(const ExpressionGraph& g, const std::vector<double>& vars,
                             const std::vector<double>& params) {
  std::vector<double> values;
  g.evaluate_all(vars, params, values);
  std::vector<double> out;
  out.reserve(g.outputs.size());
  for (NodeId id : g.outputs) out.push_back(values[id]);
  return out;
}

void ExpressionGraph::reverse(const std::vector<double>& values,
                              const std::vector<std::pair<NodeId, double>>& seeds,
                              std::vector<double>& adjoints) const {
  adjoints.assign(nodes.size(), 0.0);
  for (const auto& [id, w] : seeds) adjoints[id] += w;
  for (int i = static_cast<int>(nodes.size()) - 1; i >= 0; --i) {
    const double adj = adjoints[i];
    if (adj == 0.0) continue;
    const Node& n = nodes[i];
    if (n.a < 0) continue;
    const Partials p = partials(n, values.data());
    adjoints[n.a] += adj * p.pa;
    if (n.b >= 0) adjoints[n.b] += adj * p.pb;
  }
}

std::vector<NodeId> ExpressionGraph::differentiate(NodeId output,
                                                   const std::vector<NodeId>& wrt_leaves) {
  for (NodeId w : wrt_leaves) {
    const Op op = nodes[w].op;
    if (op != Op::variable && op != Op::parameter)
      throw std::invalid_argument("differentiate: wrt node is not a variable or parameter leaf");
  }

  // adjoint node per tape node; -1 means structurally zero
  std::vector<NodeId> adj(nodes.size(), -1);
  adj[output] = constant(1.0);

  auto accumulate = [&](NodeId target, NodeId term) {
    if (term < 0) return;
    adj[target] = adj[target] < 0 ? term : add(adj[target], term);
  };

  for (NodeId i = output; i >= 0; --i) {
    const NodeId a_id = adj[i];
    if (a_id < 0) continue;
    const Node n = nodes[i];  // copy: `nodes` may reallocate below
    switch (n.op) {
      case Op::constant:
      case Op::variable:
      case Op::parameter: break;
      case Op::add:
        accumulate(n.a, a_id);
        accumulate(n.b, a_id);
        break;
      case Op::sub:
        accumulate(n.a, a_id);
        accumulate(n.b, neg(a_id));
        break;
      case Op::mul:
        accumulate(n.a, mul(a_id, n.b));
        accumulate(n.b, mul(a_id, n.a));
        break;
      case Op::div:
        accumulate(n.a, div(a_id, n.b));
        accumulate(n.b, neg(div(mul(a_id, i), n.b)));
        break;
      case Op::neg: accumulate(n.a, neg(a_id)); break;
      case Op::exp_fn: accumulate(n.a, mul(a_id, i)); break;
      case Op::log_fn: accumulate(n.a, div(a_id, n.a)); break;
      case Op::pow_const:
        accumulate(n.a, mul(a_id, mul(constant(n.c), pow(n.a, n.c - 1.0))));
        break;
      case Op::pow_expr:
        accumulate(n.a, mul(a_id, mul(n.b, pow(n.a, sub(n.b, constant(1.0))))));
        accumulate(n.b, mul(a_id, mul(i, log(n.a))));
        break;
    }
  }

  std::vector<NodeId> grads;
  grads.reserve(wrt_leaves.size());
  for (NodeId w : wrt_leaves) grads.push_back(adj[w] < 0 ? constant(0.0) : adj[w]);
  return grads;
}

std::vector<NodeId> ExpressionGraph::forward_tangent(const std::vector<NodeId>& of,
                                                     NodeId seed_leaf) {
  const std::size_t tape_len = nodes.size();
  std::vector<NodeId> tan(tape_len, -1);
  tan[seed_leaf] = constant(1.0);

  auto tadd = [&](NodeId x, NodeId y) { return x < 0 ? y : (y < 0 ? x : add(x, y)); };

  for (std::size_t i = 0; i < tape_len; ++i) {
    if (tan[i] >= 0) continue;  // seed
    const Node n = nodes[i];
    if (n.a < 0) continue;
    const NodeId ta = tan[n.a];
    const NodeId tb = n.b >= 0 ? tan[n.b] : -1;
    if (ta < 0 && tb < 0) continue;
    NodeId t = -1;
    const NodeId id = static_cast<NodeId>(i);
    switch (n.op) {
      case Op::add: t = tadd(ta, tb); break;
      case Op::sub:
        t = ta;
        if (tb >= 0) t = t < 0 ? neg(tb) : sub(t, tb);
        break;
      case Op::mul: {
        const NodeId t1 = ta >= 0 ? mul(ta, n.b) : -1;
        const NodeId t2 = tb >= 0 ? mul(n.a, tb) : -1;
        t = tadd(t1, t2);
        break;
      }
      case Op::div: {
        // (ta - n*tb)/b
        NodeId num = ta;
        if (tb >= 0) {
          const NodeId nt = mul(id, tb);
          num = num < 0 ? neg(nt) : sub(num, nt);
        }
        t = div(num, n.b);
        break;
      }
      case Op::neg: t = neg(ta); break;
      case Op::exp_fn: t = mul(id, ta); break;
      case Op::log_fn: t = div(ta, n.a); break;
      case Op::pow_const: t = mul(mul(constant(n.c), pow(n.a, n.c - 1.0)), ta); break;
      case Op::pow_expr: {
        // n * (tb*log(a) + b*ta/a)
        const NodeId t1 = tb >= 0 ? mul(tb, log(n.a)) : -1;
        const NodeId t2 = ta >= 0 ? div(mul(n.b, ta), n.a) : -1;
        t = mul(id, tadd(t1, t2));
        break;
      }
      default: break;
    }
    tan[i] = t;
  }

  std::vector<NodeId> out;
  out.reserve(of.size());
  for (NodeId id : of) out.push_back(tan[id] < 0 ? constant(0.0) : tan[id]);
  return out;
}

std::vector<std::vector<NodeId>> ExpressionGraph::differentiate_twice(
    NodeId output, const std::vector<NodeId>& wrt_leaves) {
  const std::vector<NodeId> grads = differentiate(output, wrt_leaves);
  std::vector<std::vector<NodeId>> hess;
  hess.reserve(wrt_leaves.size());
  for (NodeId seed : wrt_leaves) hess.push_back(forward_tangent(grads, seed));
  return hess;
}

SubTape extract_subtape(const ExpressionGraph& g, NodeId root) {
  std::vector<NodeId> stack{root};
  std::vector<char> seen(g.nodes.size(), 0);
  seen[root] = 1;
  std::vector<NodeId> ids{root};
  while (!stack.empty()) {
    const Node& n = g.nodes[stack.back()];
    stack.pop_back();
    for (NodeId op : {n.a, n.b}) {
      if (op >= 0 && !seen[op]) {
        seen[op] = 1;
        ids.push_back(op);
        stack.push_back(op);
      }
    }
  }
  std::sort(ids.begin(), ids.end());

  SubTape st;
  st.original_ids = ids;
  st.nodes.reserve(ids.size());
  std::vector<int> local_of(g.nodes.size(), -1);
  for (std::size_t i = 0; i < ids.size(); ++i) local_of[ids[i]] = static_cast<int>(i);
  for (NodeId id : ids) {
    Node n = g.nodes[id];
    if (n.a >= 0) n.a = local_of[n.a];
    if (n.b >= 0) n.b = local_of[n.b];
    if (n.op == Op::variable)
      st.variables.emplace_back(static_cast<int>(st.nodes.size()), static_cast<int>(n.c));
    else if (n.op == Op::parameter)
      st.parameters.emplace_back(static_cast<int>(st.nodes.size()), static_cast<int>(n.c));
    st.nodes.push_back(n);
  }
  return st;
}

void SubTape::gradient(const std::vector<double>& full_values, std::vector<double>& grad,
                       std::vector<double>& scratch) const {
  const int n = size();
  scratch.assign(static_cast<std::size_t>(n) * 2, 0.0);
  double* adj = scratch.data();
  double* local_values = scratch.data() + n;
  for (int i = 0; i < n; ++i) local_values[i] = full_values[original_ids[i]];
  adj[n - 1] = 1.0;  // root is last in topological order

  for (int i = n - 1; i >= 0; --i) {
    const double a = adj[i];
    if (a == 0.0) continue;
    const Node& nd = nodes[i];
    if (nd.a < 0) continue;
    const Partials p = partials(nd, local_values);
    adj[nd.a] += a * p.pa;
    if (nd.b >= 0) adj[nd.b] += a * p.pb;
  }

  grad.resize(variables.size());
  for (std::size_t k = 0; k < variables.size(); ++k) grad[k] = adj[variables[k].first];
}

void SubTape::hessian(const std::vector<double>& full_values, std::vector<double>& hess,
                      std::vector<double>& scratch) const {
  const int n = size();
  const int nv = num_vars();
  hess.assign(static_cast<std::size_t>(nv) * nv, 0.0);
  scratch.assign(static_cast<std::size_t>(n) * 4, 0.0);
  double* tdot = scratch.data();
  double* adj = scratch.data() + n;
  double* adjdot = scratch.data() + 2 * n;
  double* local_values = scratch.data() + 3 * n;
  for (int i = 0; i < n; ++i) local_values[i] = full_values[original_ids[i]];

  for (int s = 0; s < nv; ++s) {
    // forward sweep: tangent of every node along e_s
    for (int i = 0; i < n; ++i) {
      const Node& nd = nodes[i];
      if (nd.op == Op::variable) {
        tdot[i] = i == variables[s].first ? 1.0 : 0.0;
      } else if (nd.a < 0) {
        tdot[i] = 0.0;
      } else {
        const double ta = tdot[nd.a];
        const double tb = nd.b >= 0 ? tdot[nd.b] : 0.0;
        tdot[i] = value_tangent(nd, local_values, ta, tb);
      }
    }
    // reverse sweep carrying (adjoint, adjoint-tangent)
    for (int i = 0; i < n; ++i) adj[i] = adjdot[i] = 0.0;
    adj[n - 1] = 1.0;
    for (int i = n - 1; i >= 0; --i) {
      const double a = adj[i], ad = adjdot[i];
      if (a == 0.0 && ad == 0.0) continue;
      const Node& nd = nodes[i];
      if (nd.a < 0) continue;
      const double ta = tdot[nd.a];
      const double tb = nd.b >= 0 ? tdot[nd.b] : 0.0;
      const Partials p = partials(nd, local_values);
      const Partials dp = partial_tangents(nd, local_values, ta, tb);
      adj[nd.a] += a * p.pa;
      adjdot[nd.a] += ad * p.pa + a * dp.pa;
      if (nd.b >= 0) {
        adj[nd.b] += a * p.pb;
        adjdot[nd.b] += ad * p.pb + a * dp.pb;
      }
    }
    for (int k = 0; k < nv; ++k) hess[static_cast<std::size_t>(s) * nv + k] = adjdot[variables[k].first];
  }
}

}  // namespace ramplab::ad
