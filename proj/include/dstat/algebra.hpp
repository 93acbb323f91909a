#pragma once

// Evaluation algebras for dstat::eval. Leaves are supplied as per-parameter and
// per-layer arrays of the algebra's element type.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace dstat {

// Gap below which two branches of a max count as tied.
inline constexpr double kKinkTol = 1e-12;

inline bool near_tie(double x, double y) {
  return std::abs(x - y) <= kKinkTol * std::max({1.0, std::abs(x), std::abs(y)});
}

template <class T>
struct Leaves {
  const std::vector<T>* theta = nullptr;
  const std::vector<std::vector<T>>* u = nullptr;
  T param(int i) const { return (*theta)[i]; }
  T input(int layer, int comp) const { return (*u)[layer - 1][comp]; }
};

struct ValueAlg : Leaves<double> {
  using T = double;
  int ties = 0;
  T constant(double c) const { return c; }
  T add(T a, T b) const { return a + b; }
  T sub(T a, T b) const { return a - b; }
  T scale(double c, T a) const { return c * a; }
  T mul(T a, T b) const { return a * b; }
  T max2(T a, T b) {
    if (near_tie(a, b)) ++ties;
    return std::max(a, b);
  }
};

// Second-order one-sided Taylor jet along a ray:
//   f(x + t d) = v + t a + t^2/2 b + o(t^2),  t >= 0.
struct Jet2 {
  double v = 0.0;
  double a = 0.0;
  double b = 0.0;
};

struct JetAlg : Leaves<Jet2> {
  using T = Jet2;
  int ties = 0;
  T constant(double c) const { return {c, 0.0, 0.0}; }
  T add(const T& x, const T& y) const { return {x.v + y.v, x.a + y.a, x.b + y.b}; }
  T sub(const T& x, const T& y) const { return {x.v - y.v, x.a - y.a, x.b - y.b}; }
  T scale(double c, const T& x) const { return {c * x.v, c * x.a, c * x.b}; }
  T mul(const T& x, const T& y) const {
    return {x.v * y.v, x.v * y.a + x.a * y.v, x.v * y.b + 2.0 * x.a * y.a + x.b * y.v};
  }
  T max2(const T& x, const T& y) {
    if (!near_tie(x.v, y.v)) return x.v > y.v ? x : y;
    ++ties;
    double v = std::max(x.v, y.v);
    if (!near_tie(x.a, y.a)) {
      T r = x.a > y.a ? x : y;
      r.v = v;
      return r;
    }
    return {v, std::max(x.a, y.a), std::max(x.b, y.b)};
  }
};

// Value plus the linear functional of one active piece of the first-order
// directional derivative. At a value tie the choice is taken from `prefix`
// (default 0 = first branch) and the defining cone row is recorded, unless
// `resolve` is set, in which case the branch active along *resolve is taken.
struct Lin {
  double v = 0.0;
  Eigen::VectorXd c;
};

struct LinAlg : Leaves<Lin> {
  using T = Lin;
  int m = 0;
  std::vector<int> prefix;
  std::vector<int> choices;
  std::vector<Eigen::VectorXd> rows;  // cone rows: row . d >= 0
  const Eigen::VectorXd* resolve = nullptr;
  int ties = 0;

  T constant(double c) const { return {c, Eigen::VectorXd::Zero(m)}; }
  T add(const T& x, const T& y) const { return {x.v + y.v, x.c + y.c}; }
  T sub(const T& x, const T& y) const { return {x.v - y.v, x.c - y.c}; }
  T scale(double k, const T& x) const { return {k * x.v, k * x.c}; }
  T mul(const T& x, const T& y) const { return {x.v * y.v, x.v * y.c + y.v * x.c}; }
  T max2(const T& x, const T& y) {
    if (!near_tie(x.v, y.v)) return x.v > y.v ? x : y;
    ++ties;
    double v = std::max(x.v, y.v);
    Eigen::VectorXd g = x.c - y.c;
    double scale = std::max({1.0, x.c.lpNorm<Eigen::Infinity>(), y.c.lpNorm<Eigen::Infinity>()});
    if (g.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) return {v, x.c};
    int bit;
    if (resolve) {
      bit = g.dot(*resolve) >= 0.0 ? 0 : 1;
    } else {
      std::size_t k = choices.size();
      bit = k < prefix.size() ? prefix[k] : 0;
      choices.push_back(bit);
      rows.push_back(bit == 0 ? Eigen::VectorXd(g) : Eigen::VectorXd(-g));
    }
    return {v, bit == 0 ? x.c : y.c};
  }
};

}  // namespace dstat
