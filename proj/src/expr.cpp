#include "dstat/expr.hpp"

#include <algorithm>
#include <cmath>

namespace dstat {

namespace {

Expr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

void need(const Expr& e) {
  if (!e) throw ExprError("null expression argument");
}

}  // namespace

namespace ex {

Expr constant(double v) {
  Node n;
  n.op = Op::Const;
  n.value = v;
  return make(std::move(n));
}

Expr param(int i) {
  if (i < 0) throw ExprError("negative parameter index");
  Node n;
  n.op = Op::Param;
  n.ref = i;
  return make(std::move(n));
}

Expr input(int layer, int comp) {
  if (layer < 1 || comp < 0) throw ExprError("bad input reference");
  Node n;
  n.op = Op::Input;
  n.layer = layer;
  n.ref = comp;
  return make(std::move(n));
}

Expr sum(std::vector<Expr> terms) {
  for (auto& t : terms) need(t);
  Node n;
  n.op = Op::Sum;
  n.args = std::move(terms);
  return make(std::move(n));
}

Expr diff(Expr a, Expr b) {
  need(a);
  need(b);
  Node n;
  n.op = Op::Diff;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr scale(double c, Expr a) {
  need(a);
  Node n;
  n.op = Op::Scale;
  n.value = c;
  n.args = {std::move(a)};
  return make(std::move(n));
}

Expr prod(Expr a, Expr b) {
  need(a);
  need(b);
  Node n;
  n.op = Op::Prod;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

Expr inner(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) throw ExprError("inner: length mismatch");
  Node n;
  n.op = Op::Inner;
  n.args = a;
  n.args.insert(n.args.end(), b.begin(), b.end());
  for (auto& t : n.args) need(t);
  return make(std::move(n));
}

Expr sqnorm(std::vector<Expr> terms) {
  for (auto& t : terms) need(t);
  Node n;
  n.op = Op::SqNorm;
  n.args = std::move(terms);
  return make(std::move(n));
}

Expr affine(std::vector<double> weights, double bias, std::vector<Expr> terms) {
  if (weights.size() != terms.size()) throw ExprError("affine: weight count mismatch");
  for (auto& t : terms) need(t);
  Node n;
  n.op = Op::Affine;
  n.coeffs = std::move(weights);
  n.value = bias;
  n.args = std::move(terms);
  return make(std::move(n));
}

Expr max(Expr a, Expr b) {
  need(a);
  need(b);
  Node n;
  n.op = Op::Max;
  n.args = {std::move(a), std::move(b)};
  return make(std::move(n));
}

namespace {
Expr unary(Op op, Expr a) {
  need(a);
  Node n;
  n.op = op;
  n.args = {std::move(a)};
  return make(std::move(n));
}
}  // namespace

Expr abs(Expr a) { return unary(Op::Abs, std::move(a)); }
Expr plus(Expr a) { return unary(Op::Plus, std::move(a)); }
Expr square(Expr a) { return unary(Op::Square, std::move(a)); }

Expr leaky(Expr a, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ExprError("leaky: alpha must lie in [0,1)");
  need(a);
  Node n;
  n.op = Op::Leaky;
  n.alpha = alpha;
  n.args = {std::move(a)};
  return make(std::move(n));
}

}  // namespace ex

Expr operator+(const Expr& a, const Expr& b) { return ex::sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return ex::diff(a, b); }
Expr operator*(const Expr& a, const Expr& b) { return ex::prod(a, b); }
Expr operator*(double c, const Expr& a) { return ex::scale(c, a); }

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Param: return "param";
    case Op::Input: return "input";
    case Op::Sum: return "sum";
    case Op::Diff: return "diff";
    case Op::Scale: return "scale";
    case Op::Prod: return "prod";
    case Op::Inner: return "inner";
    case Op::SqNorm: return "sqnorm";
    case Op::Affine: return "affine";
    case Op::Max: return "max";
    case Op::Abs: return "abs";
    case Op::Plus: return "plus";
    case Op::Leaky: return "leaky";
    case Op::Square: return "square";
  }
  return "?";
}

Op op_from_name(const std::string& name) {
  static const Op all[] = {Op::Const, Op::Param, Op::Input, Op::Sum,    Op::Diff,
                           Op::Scale, Op::Prod,  Op::Inner, Op::SqNorm, Op::Affine,
                           Op::Max,   Op::Abs,   Op::Plus,  Op::Leaky,  Op::Square};
  for (Op op : all)
    if (name == op_name(op)) return op;
  throw ExprError("unknown op '" + name + "'");
}

void validate(const Expr& e, int n, int max_layer, const std::vector<int>& dims) {
  if (!e) throw ExprError("null expression");
  const Node& nd = *e;
  switch (nd.op) {
    case Op::Param:
      if (nd.ref < 0 || nd.ref >= n)
        throw ExprError("param index " + std::to_string(nd.ref) + " out of range");
      return;
    case Op::Input:
      if (nd.layer < 1 || nd.layer > max_layer)
        throw ExprError("input references layer " + std::to_string(nd.layer) +
                        " (allowed 1.." + std::to_string(max_layer) + ")");
      if (nd.ref < 0 || nd.ref >= dims[nd.layer - 1])
        throw ExprError("input component " + std::to_string(nd.ref) + " out of range in layer " +
                        std::to_string(nd.layer));
      return;
    case Op::Leaky:
      if (!(nd.alpha >= 0.0 && nd.alpha < 1.0)) throw ExprError("leaky: alpha outside [0,1)");
      break;
    case Op::Affine:
      if (nd.coeffs.size() != nd.args.size()) throw ExprError("affine: weight count mismatch");
      break;
    case Op::Inner:
      if (nd.args.size() % 2 != 0) throw ExprError("inner: odd argument count");
      break;
    case Op::Diff:
    case Op::Prod:
    case Op::Max:
      if (nd.args.size() != 2) throw ExprError(std::string(op_name(nd.op)) + ": needs 2 arguments");
      break;
    case Op::Scale:
    case Op::Abs:
    case Op::Plus:
    case Op::Square:
      if (nd.args.size() != 1) throw ExprError(std::string(op_name(nd.op)) + ": needs 1 argument");
      break;
    default:
      break;
  }
  for (const auto& a : nd.args) validate(a, n, max_layer, dims);
}

int ray_degree(const Expr& e) {
  const Node& n = *e;
  switch (n.op) {
    case Op::Const:
      return 0;
    case Op::Param:
    case Op::Input:
      return 1;
    case Op::Prod:
      return ray_degree(n.args[0]) + ray_degree(n.args[1]);
    case Op::Square:
      return 2 * ray_degree(n.args[0]);
    case Op::SqNorm: {
      int d = 0;
      for (const auto& a : n.args) d = std::max(d, 2 * ray_degree(a));
      return d;
    }
    case Op::Inner: {
      std::size_t k = n.args.size() / 2;
      int d = 0;
      for (std::size_t i = 0; i < k; ++i)
        d = std::max(d, ray_degree(n.args[i]) + ray_degree(n.args[k + i]));
      return d;
    }
    default: {
      int d = 0;
      for (const auto& a : n.args) d = std::max(d, ray_degree(a));
      return d;
    }
  }
}

bool is_smooth_structure(const Expr& e) {
  const Node& n = *e;
  if (n.op == Op::Max || n.op == Op::Abs || n.op == Op::Plus || n.op == Op::Leaky) return false;
  for (const auto& a : n.args)
    if (!is_smooth_structure(a)) return false;
  return true;
}

}  // namespace dstat
