#pragma once

// Reference computations that share no code with the library: plain loops and
// quotient limits in long double.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using Fn = std::function<long double(const std::vector<long double>&)>;

inline std::vector<long double> along(const std::vector<double>& x, const std::vector<double>& d, long double t) {
  std::vector<long double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + t * d[i];
  return y;
}

// lim (f(x + t d) - f(x)) / t, three-level Richardson on t = 1e-3 2^-k.
inline double first_quotient(const Fn& f, const std::vector<double>& x, const std::vector<double>& d) {
  long double f0 = f(along(x, d, 0.0L));
  auto q = [&](long double t) { return (f(along(x, d, t)) - f0) / t; };
  long double t = 1e-4L;
  long double a = q(t), b = q(t / 2), c = q(t / 4);
  long double r1 = 2 * b - a, r2 = 2 * c - b;
  return static_cast<double>((4 * r2 - r1) / 3);
}

// lim (f(x + t d) - f(x) - t f'(x; d)) / (t^2 / 2) with f' supplied.
inline double second_quotient(const Fn& f, const std::vector<double>& x, const std::vector<double>& d,
                              double fprime) {
  long double f0 = f(along(x, d, 0.0L));
  auto q = [&](long double t) { return (f(along(x, d, t)) - f0 - t * fprime) / (t * t / 2); };
  long double t = 1e-3L;
  long double a = q(t), b = q(t / 2), c = q(t / 4);
  long double r1 = 2 * b - a, r2 = 2 * c - b;
  return static_cast<double>((4 * r2 - r1) / 3);
}

inline long double leaky(long double v, double alpha) { return v >= 0 ? v : alpha * v; }

// Forward pass of the recurrent network for one sequence.
//   w_t = A x_t + W s_{t-1} + b,  s_t = leaky(w_t),  v_t = V s_t + c,  r_t = leaky(v_t).
// theta = (vec A, vec V, vec W, b, c), column-major. Returns 0.5 sum |r_t - y_t|^2 / T
// summed over sequences and divided by N.
struct Rnn {
  int n0, n1, n2, T, N;
  double alpha;
  std::vector<std::vector<std::vector<double>>> x, y;

  long double loss(const std::vector<long double>& th) const {
    int oA = 0, oV = n0 * n1, oW = oV + n1 * n2, ob = oW + n1 * n1, oc = ob + n1;
    long double total = 0;
    for (int k = 0; k < N; ++k) {
      std::vector<long double> s(n1, 0.0L);
      for (int t = 0; t < T; ++t) {
        std::vector<long double> w(n1);
        for (int i = 0; i < n1; ++i) {
          long double acc = th[ob + i];
          for (int j = 0; j < n0; ++j) acc += th[oA + j * n1 + i] * x[k][t][j];
          for (int j = 0; j < n1; ++j) acc += th[oW + j * n1 + i] * s[j];
          w[i] = acc;
        }
        for (int i = 0; i < n1; ++i) s[i] = leaky(w[i], alpha);
        for (int i = 0; i < n2; ++i) {
          long double v = th[oc + i];
          for (int j = 0; j < n1; ++j) v += th[oV + j * n2 + i] * s[j];
          long double e = leaky(v, alpha) - y[k][t][i];
          total += e * e;
        }
      }
    }
    return total / (2.0L * N * T);
  }
};

// Grouped penalty thresholds of the recurrent network for N sequences of length T.
struct RnnThresholdOracle {
  double t1, t2;
};
inline RnnThresholdOracle rnn_thresholds(double sum_y2, double lambda, int N, int T) {
  long double gy = sum_y2 / (2.0L * N * T);
  long double q = std::sqrt(gy / lambda);
  long double g1 = 0, p = 1;
  for (int i = 0; i < T; ++i, p *= q) g1 += p;
  return {static_cast<double>(g1 * gy * std::sqrt(2.0L / (lambda * N * T))),
          static_cast<double>(std::sqrt(2.0L * gy / (N * T)))};
}

}  // namespace oracle
