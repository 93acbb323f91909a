#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dstat {

enum class Op {
  Const,
  Param,
  Input,
  Sum,
  Diff,
  Scale,
  Prod,
  Inner,
  SqNorm,
  Affine,
  Max,
  Abs,
  Plus,
  Leaky,
  Square
};

struct Node;
using Expr = std::shared_ptr<const Node>;

// Immutable expression node. Leaves: Const(value), Param(ref), Input(layer, ref).
// Inner stores a1..ak, b1..bk in args. Affine stores weights in coeffs and the
// bias in value.
struct Node {
  Op op = Op::Const;
  double value = 0.0;
  double alpha = 0.0;
  int ref = 0;
  int layer = 0;
  std::vector<double> coeffs;
  std::vector<Expr> args;
};

class ExprError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace ex {

Expr constant(double v);
Expr param(int i);
Expr input(int layer, int comp);
Expr sum(std::vector<Expr> terms);
Expr diff(Expr a, Expr b);
Expr scale(double c, Expr a);
Expr prod(Expr a, Expr b);
Expr inner(const std::vector<Expr>& a, const std::vector<Expr>& b);
Expr sqnorm(std::vector<Expr> terms);
Expr affine(std::vector<double> weights, double bias, std::vector<Expr> terms);
Expr max(Expr a, Expr b);
Expr abs(Expr a);
Expr plus(Expr a);
Expr leaky(Expr a, double alpha);
Expr square(Expr a);

}  // namespace ex

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator*(double c, const Expr& a);

const char* op_name(Op op);
Op op_from_name(const std::string& name);

// Checks leaf indices: params < n, inputs reference layers 1..max_layer with
// comp < dims[layer-1]. Throws ExprError with a description.
void validate(const Expr& e, int n, int max_layer, const std::vector<int>& dims);

// Polynomial degree of the expression restricted to a ray in its leaves.
// Piecewise-linear nodes keep the degree of their arguments.
int ray_degree(const Expr& e);

// True when no max-type node occurs.
bool is_smooth_structure(const Expr& e);

// Generic evaluation over an algebra A providing
//   T constant(double), T param(int), T input(int layer, int comp),
//   T add(T,T), T sub(T,T), T scale(double,T), T mul(T,T), T max2(T,T).
template <class A>
typename A::T eval(const Node& n, A& alg) {
  using T = typename A::T;
  switch (n.op) {
    case Op::Const:
      return alg.constant(n.value);
    case Op::Param:
      return alg.param(n.ref);
    case Op::Input:
      return alg.input(n.layer, n.ref);
    case Op::Sum: {
      if (n.args.empty()) return alg.constant(0.0);
      T acc = eval(*n.args[0], alg);
      for (std::size_t i = 1; i < n.args.size(); ++i) acc = alg.add(acc, eval(*n.args[i], alg));
      return acc;
    }
    case Op::Diff:
      return alg.sub(eval(*n.args[0], alg), eval(*n.args[1], alg));
    case Op::Scale:
      return alg.scale(n.value, eval(*n.args[0], alg));
    case Op::Prod:
      return alg.mul(eval(*n.args[0], alg), eval(*n.args[1], alg));
    case Op::Inner: {
      std::size_t k = n.args.size() / 2;
      if (k == 0) return alg.constant(0.0);
      T acc = alg.mul(eval(*n.args[0], alg), eval(*n.args[k], alg));
      for (std::size_t i = 1; i < k; ++i)
        acc = alg.add(acc, alg.mul(eval(*n.args[i], alg), eval(*n.args[k + i], alg)));
      return acc;
    }
    case Op::SqNorm: {
      if (n.args.empty()) return alg.constant(0.0);
      T a0 = eval(*n.args[0], alg);
      T acc = alg.mul(a0, a0);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        T ai = eval(*n.args[i], alg);
        acc = alg.add(acc, alg.mul(ai, ai));
      }
      return acc;
    }
    case Op::Affine: {
      T acc = alg.constant(n.value);
      for (std::size_t i = 0; i < n.args.size(); ++i)
        acc = alg.add(acc, alg.scale(n.coeffs[i], eval(*n.args[i], alg)));
      return acc;
    }
    case Op::Max:
      return alg.max2(eval(*n.args[0], alg), eval(*n.args[1], alg));
    case Op::Abs: {
      T a = eval(*n.args[0], alg);
      return alg.max2(a, alg.scale(-1.0, a));
    }
    case Op::Plus: {
      T a = eval(*n.args[0], alg);
      return alg.max2(a, alg.constant(0.0));
    }
    case Op::Leaky: {
      T a = eval(*n.args[0], alg);
      return alg.max2(a, alg.scale(n.alpha, a));
    }
    case Op::Square: {
      T a = eval(*n.args[0], alg);
      return alg.mul(a, a);
    }
  }
  throw ExprError("unknown node kind");
}

}  // namespace dstat
