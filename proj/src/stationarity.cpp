#include "dstat/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>

#include "dstat/cones.hpp"
#include "dstat/dcalc.hpp"
#include "dstat/lp.hpp"

namespace dstat {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
constexpr double kInf = std::numeric_limits<double>::infinity();

// One linear piece of a first-order directional derivative:
//   c.d + sum_i w_i |A_i d|   on   {rows . d >= 0}.
struct PieceData {
  Vec c;
  Mat A;
  Vec w;
  std::vector<Vec> rows;
};

struct ReducedModel {
  int m = 0;
  std::function<void(LinAlg&, PieceData&)> piece;
  std::function<double(const Vec&)> first;
  std::vector<Vec> cone;  // fixed rows . d >= 0
};

PieceData eval_piece(const ReducedModel& md, const std::vector<int>& prefix, std::vector<int>* choices,
                     const Vec* resolve, int* ties = nullptr) {
  LinAlg alg;
  alg.m = md.m;
  alg.prefix = prefix;
  alg.resolve = resolve;
  PieceData pd;
  pd.c = Vec::Zero(md.m);
  pd.A.resize(0, md.m);
  pd.w.resize(0);
  md.piece(alg, pd);
  pd.rows = alg.rows;
  if (choices) *choices = alg.choices;
  if (ties) *ties = alg.ties;
  return pd;
}

// DFS over branch prefixes; nullopt when more than `cap` pieces exist.
std::optional<std::vector<PieceData>> enumerate_pieces(const ReducedModel& md, long cap) {
  std::vector<PieceData> out;
  std::vector<std::vector<int>> stack{{}};
  while (!stack.empty()) {
    auto prefix = std::move(stack.back());
    stack.pop_back();
    std::vector<int> choices;
    out.push_back(eval_piece(md, prefix, &choices, nullptr));
    if (static_cast<long>(out.size()) > cap) return std::nullopt;
    for (std::size_t j = prefix.size(); j < choices.size(); ++j) {
      std::vector<int> next(choices.begin(), choices.begin() + static_cast<long>(j));
      next.push_back(1);
      stack.push_back(std::move(next));
    }
  }
  return out;
}

Vec unit(int m, int i) {
  Vec e = Vec::Zero(m);
  e[i] = 1.0;
  return e;
}

// min over the unit box of c.d + sum w_i |A_i d| subject to the piece and cone rows.
std::optional<std::pair<double, Vec>> piece_lp(const PieceData& pd, const std::vector<Vec>& cone, int m) {
  const int k = static_cast<int>(pd.A.rows());
  std::vector<const Vec*> rows;
  for (const auto& r : pd.rows) rows.push_back(&r);
  for (const auto& r : cone) rows.push_back(&r);
  const int R = static_cast<int>(rows.size());
  const int nv = m + k;
  Mat A = Mat::Zero(R + 2 * k + m, nv);
  Vec b = Vec::Zero(R + 2 * k + m);
  int i = 0;
  for (const Vec* r : rows) {
    A.block(i, 0, 1, m) = -r->transpose();
    b[i] = -r->sum();
    ++i;
  }
  for (int j = 0; j < k; ++j) {
    A.block(i, 0, 1, m) = pd.A.row(j);
    A(i, m + j) = -1.0;
    b[i] = pd.A.row(j).sum();
    ++i;
    A.block(i, 0, 1, m) = -pd.A.row(j);
    A(i, m + j) = -1.0;
    b[i] = -pd.A.row(j).sum();
    ++i;
  }
  for (int j = 0; j < m; ++j) {
    A(i, j) = 1.0;
    b[i] = 2.0;
    ++i;
  }
  Vec cost(nv);
  cost.head(m) = pd.c;
  if (k > 0) cost.tail(k) = pd.w;
  auto res = lp_minimize(cost, A, b);
  if (res.status != LpResult::Status::Optimal) return std::nullopt;
  Vec d = res.x.head(m).array() - 1.0;
  double val = pd.c.dot(d);
  for (int j = 0; j < k; ++j) val += pd.w[j] * std::abs(pd.A.row(j).dot(d));
  return std::make_pair(val, d);
}

Vec piece_gradient(const PieceData& pd, const Vec& d) {
  Vec g = pd.c;
  for (int j = 0; j < pd.A.rows(); ++j) {
    double s = pd.A.row(j).dot(d);
    if (s > 0.0)
      g += pd.w[j] * pd.A.row(j).transpose();
    else if (s < 0.0)
      g -= pd.w[j] * pd.A.row(j).transpose();
  }
  return g;
}

Vec normalized(const Vec& d) {
  double s = d.lpNorm<Eigen::Infinity>();
  return s > 0.0 ? Vec(d / s) : d;
}

struct FirstResult {
  Verdict verdict = Verdict::Inconclusive;
  Vec witness;
  double witness_value = 0.0;
  double min_value = 0.0;
  std::string mode;
  long pieces = 0;
  long samples = 0;
  std::string note;
};

// Multistart projected descent of the first-order derivative over the unit box.
FirstResult sample_first(const ReducedModel& md, const CheckOptions& opt) {
  FirstResult fr;
  fr.mode = "sampled";
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<Vec> starts;
  if (2 * md.m <= opt.starts / 2)
    for (int i = 0; i < md.m; ++i) {
      starts.push_back(unit(md.m, i));
      starts.push_back(-unit(md.m, i));
    }
  while (static_cast<int>(starts.size()) < std::max(opt.starts, 1)) {
    Vec d(md.m);
    for (int i = 0; i < md.m; ++i) d[i] = uni(rng);
    starts.push_back(d);
  }
  double best = kInf;
  Vec best_d = Vec::Zero(md.m);
  for (const auto& s : starts) {
    Vec d = s;
    double f = md.first(d);
    ++fr.samples;
    for (int it = 0; it < opt.iters; ++it) {
      auto pd = eval_piece(md, {}, nullptr, &d);
      Vec g = piece_gradient(pd, d);
      if (g.lpNorm<Eigen::Infinity>() == 0.0) break;
      bool moved = false;
      double eta = 1.0;
      for (int h = 0; h < 40; ++h, eta *= 0.5) {
        Vec dn = (d - eta * g).cwiseMax(-1.0).cwiseMin(1.0);
        double fn = md.first(dn);
        ++fr.samples;
        if (fn < f - 1e-14 * std::max(1.0, std::abs(f))) {
          d = dn;
          f = fn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    if (f < best) {
      best = f;
      best_d = d;
    }
  }
  fr.min_value = best;
  if (best < -opt.tol && best_d.lpNorm<Eigen::Infinity>() > 0.0) {
    fr.witness = normalized(best_d);
    fr.witness_value = md.first(fr.witness);
    fr.verdict = Verdict::NotStationary;
  } else {
    fr.verdict = Verdict::Stationary;
  }
  return fr;
}

FirstResult run_first(const ReducedModel& md, const CheckOptions& opt) {
  int ties = 0;
  eval_piece(md, {}, nullptr, nullptr, &ties);
  bool enumerate = opt.mode == SearchMode::Enumerate ||
                   (opt.mode == SearchMode::Auto && ties <= opt.auto_tie_limit);
  if (enumerate) {
    auto pieces = enumerate_pieces(md, opt.enumerate_cap);
    if (pieces) {
      FirstResult fr;
      fr.mode = "exhaustive";
      fr.pieces = static_cast<long>(pieces->size());
      double best = kInf;
      Vec best_d = Vec::Zero(md.m);
      bool lp_failed = false;
      for (const auto& pd : *pieces) {
        auto r = piece_lp(pd, md.cone, md.m);
        if (!r) {
          lp_failed = true;
          continue;
        }
        if (r->first < best) {
          best = r->first;
          best_d = r->second;
        }
      }
      fr.min_value = best == kInf ? 0.0 : best;
      if (best < -opt.tol && best_d.lpNorm<Eigen::Infinity>() > 0.0) {
        fr.witness = normalized(best_d);
        fr.witness_value = md.first(fr.witness);
        if (fr.witness_value < -opt.tol / 2) {
          fr.verdict = Verdict::NotStationary;
        } else {
          fr.verdict = Verdict::Inconclusive;
          fr.note = "piece minimum not reproduced by the jet evaluation";
        }
      } else if (lp_failed) {
        fr.verdict = Verdict::Inconclusive;
        fr.note = "direction-finding LP did not terminate on some piece";
      } else {
        fr.verdict = Verdict::Stationary;
      }
      return fr;
    }
    if (!md.cone.empty()) {
      FirstResult fr;
      fr.note = "too many pieces to enumerate";
      return fr;
    }
    auto fr = sample_first(md, opt);
    fr.note = "piece count above cap; fell back to sampling";
    return fr;
  }
  if (!md.cone.empty()) {
    FirstResult fr;
    fr.note = "sampling does not support cone constraints";
    return fr;
  }
  return sample_first(md, opt);
}

// theta-space model of (Psi + lambda|.|^2)' through the nested forward pass.
ReducedModel nested_model(const CompositeProblem& p, const std::vector<double>& theta) {
  ReducedModel md;
  md.m = p.n;
  md.piece = [&p, theta](LinAlg& alg, PieceData& pd) {
    std::vector<Lin> th;
    for (int i = 0; i < p.n; ++i) th.push_back({theta[i], unit(p.n, i)});
    std::vector<std::vector<Lin>> u;
    alg.theta = &th;
    alg.u = &u;
    for (int l = 1; l <= p.L(); ++l) {
      std::vector<Lin> comps;
      for (const auto& e : p.layers[l - 1]) comps.push_back(eval(*e, alg));
      u.push_back(std::move(comps));
    }
    Lin g = eval(*p.outer, alg);
    pd.c = g.c;
    for (int i = 0; i < p.n; ++i) pd.c[i] += 2.0 * p.lambda * theta[i];
  };
  md.first = [&p, theta](const Vec& d) {
    std::vector<double> dv(d.data(), d.data() + d.size());
    return dd_Psi(p, theta, dv, 1).first;
  };
  return md;
}

// z-space model of Theta'(z; .); feasible-component residuals become abs terms.
ReducedModel penalty_model(const CompositeProblem& p, const Point& z, const std::vector<double>& beta) {
  ReducedModel md;
  md.m = p.total();
  md.piece = [&p, z, beta](LinAlg& alg, PieceData& pd) {
    const int m = p.total();
    std::vector<Lin> th;
    for (int i = 0; i < p.n; ++i) th.push_back({z.theta[i], unit(m, i)});
    std::vector<std::vector<Lin>> u;
    for (int l = 1; l <= p.L(); ++l) {
      std::vector<Lin> comps;
      for (int i = 0; i < p.dims[l - 1]; ++i) comps.push_back({z.u[l - 1][i], unit(m, p.offset(l) + i)});
      u.push_back(std::move(comps));
    }
    alg.theta = &th;
    alg.u = &u;
    Vec c = Vec::Zero(m);
    std::vector<Vec> abs_rows;
    std::vector<double> abs_w;
    for (int l = 1; l <= p.L(); ++l) {
      for (int i = 0; i < p.dims[l - 1]; ++i) {
        Lin psi = eval(*p.layers[l - 1][i], alg);
        double rho = z.u[l - 1][i] - psi.v;
        Vec row = unit(m, p.offset(l) + i) - psi.c;
        if (rho > kFeasTol) {
          c += beta[l - 1] * row;
        } else if (rho < -kFeasTol) {
          c -= beta[l - 1] * row;
        } else {
          abs_rows.push_back(row);
          abs_w.push_back(beta[l - 1]);
        }
      }
    }
    Lin g = eval(*p.outer, alg);
    c += g.c;
    for (int i = 0; i < p.n; ++i) c[i] += 2.0 * p.lambda * z.theta[i];
    pd.c = c;
    pd.A.resize(static_cast<long>(abs_rows.size()), m);
    pd.w.resize(static_cast<long>(abs_w.size()));
    for (std::size_t j = 0; j < abs_rows.size(); ++j) {
      pd.A.row(static_cast<long>(j)) = abs_rows[j].transpose();
      pd.w[static_cast<long>(j)] = abs_w[j];
    }
  };
  md.first = [&p, z, beta](const Vec& d) { return dd_Theta(p, z, unflatten(p, d), beta, 1).first; };
  return md;
}

ReducedModel box_model(const BoxProblem& bp, const std::vector<double>& x) {
  ReducedModel md;
  const int m = static_cast<int>(x.size());
  md.m = m;
  md.piece = [&bp, x, m](LinAlg& alg, PieceData& pd) {
    std::vector<Lin> th;
    for (int i = 0; i < m; ++i) th.push_back({x[i], unit(m, i)});
    std::vector<std::vector<Lin>> u;
    alg.theta = &th;
    alg.u = &u;
    pd.c = eval(*bp.f, alg).c;
  };
  md.first = [&bp, x](const Vec& d) {
    std::vector<double> dv(d.data(), d.data() + d.size());
    return dd_expr(bp.f, x, dv, 1).first;
  };
  for (int i = 0; i < m; ++i) {
    double scale = std::max(1.0, std::abs(x[i]));
    if (x[i] <= bp.lo[i] + 1e-12 * scale) md.cone.push_back(unit(m, i));
    if (x[i] >= bp.hi[i] - 1e-12 * scale) md.cone.push_back(-unit(m, i));
  }
  return md;
}

std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void fill_first(StationarityReport& rep, const FirstResult& fr) {
  rep.verdict = fr.verdict;
  rep.min_value = fr.min_value;
  rep.mode = fr.mode;
  rep.pieces = fr.pieces;
  rep.samples = fr.samples;
  rep.note = fr.note;
}

// ---- second order -------------------------------------------------------

// Critical face of one piece: {rows . d >= 0, c.d = 0}, parametrized d = N y.
struct Face {
  Mat N;
  std::vector<Vec> cons;
  Vec c;
  bool eq = false;
};

std::optional<std::vector<Face>> critical_faces(const ReducedModel& md, const CheckOptions& opt) {
  auto pieces = enumerate_pieces(md, opt.enumerate_cap);
  if (!pieces) return std::nullopt;
  std::vector<Face> faces;
  for (auto& pd : *pieces) {
    Face f;
    f.cons = pd.rows;
    for (const auto& r : md.cone) f.cons.push_back(r);
    f.c = pd.c;
    if (pd.c.lpNorm<1>() <= opt.tol) {
      f.N = Mat::Identity(md.m, md.m);
    } else {
      f.eq = true;
      Eigen::JacobiSVD<Mat> svd(pd.c.transpose(), Eigen::ComputeFullV);
      f.N = svd.matrixV().rightCols(md.m - 1);
    }
    faces.push_back(std::move(f));
  }
  return faces;
}

bool in_face(const Face& f, const Vec& d) {
  double s = std::max(1.0, d.lpNorm<Eigen::Infinity>());
  for (const auto& r : f.cons)
    if (r.dot(d) < -1e-10 * s * std::max(1.0, r.lpNorm<Eigen::Infinity>())) return false;
  return true;
}

// q(d) = h_0(d) + sum_i w_i |h_i(d)|, each h_j a quadratic form at smooth points.
struct SecondQuantity {
  std::function<double(const Vec&)> q;
  std::function<std::optional<bool>(const Vec&)> admissible;  // empty: always admissible
  std::function<std::vector<double>(const Vec&)> h;           // empty: no exact decomposition
  std::vector<double> w;                                       // weights of h_1..
};

struct FaceOutcome {
  bool exact = false;
  double lower = kInf;  // valid lower bound over unit max-norm directions when exact
  double best = kInf;   // smallest admissible value found
  Vec best_d;
  bool undecided = false;  // an undecidable candidate fell below the threshold
  long samples = 0;
};

struct Polarized {
  Mat Q;
  std::vector<Mat> P;
};

Polarized polarize(const SecondQuantity& sq, int m) {
  std::vector<std::vector<double>> diag(m);
  for (int i = 0; i < m; ++i) diag[i] = sq.h(unit(m, i));
  const std::size_t k = diag.empty() ? 0 : diag[0].size();
  std::vector<Mat> H(k, Mat::Zero(m, m));
  for (int i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) H[j](i, i) = diag[i][j];
  for (int i = 0; i < m; ++i)
    for (int l = i + 1; l < m; ++l) {
      auto v = sq.h(unit(m, i) + unit(m, l));
      for (std::size_t j = 0; j < k; ++j) {
        double off = 0.5 * (v[j] - diag[i][j] - diag[l][j]);
        H[j](i, l) = off;
        H[j](l, i) = off;
      }
    }
  Polarized out;
  out.Q = H.empty() ? Mat::Zero(m, m) : H[0];
  for (std::size_t j = 1; j < k; ++j) out.P.push_back(H[j]);
  return out;
}

Vec sign_fixed(const Vec& d) {
  for (int i = 0; i < d.size(); ++i) {
    if (std::abs(d[i]) > 1e-12) return d[i] < 0.0 ? Vec(-d) : d;
  }
  return d;
}

class FaceSearch {
 public:
  FaceSearch(const SecondQuantity& sq, const CheckOptions& opt, std::mt19937_64& rng, const Polarized* pol,
             double threshold)
      : sq_(sq), opt_(opt), rng_(rng), pol_(pol), threshold_(threshold) {}

  FaceOutcome run(const Face& f) {
    FaceOutcome out;
    const int m = static_cast<int>(f.N.rows());
    const int k = static_cast<int>(f.N.cols());
    if (k == 0) {
      out.exact = true;
      return out;
    }
    if (k == 1) {
      out.exact = true;
      for (double s : {1.0, -1.0}) {
        Vec d = normalized(s * f.N.col(0));
        if (!in_face(f, d)) continue;
        consider(d, out);
        if (out.undecided) out.exact = false;
      }
      out.lower = out.best;
      return out;
    }
    std::vector<Vec> seeds;
    if (pol_ && f.cons.empty()) {
      if (exact_bound(f, out, seeds)) return out;
    }
    sample(f, m, k, seeds, out);
    return out;
  }

 private:
  void consider(const Vec& d, FaceOutcome& out) {
    ++out.samples;
    double v = sq_.q(d);
    if (!std::isfinite(v)) return;
    if (sq_.admissible) {
      if (v >= out.best) return;
      auto a = sq_.admissible(d);
      if (!a) {
        if (v < threshold_) out.undecided = true;
        return;
      }
      if (!*a) return;
    }
    if (v < out.best) {
      out.best = v;
      out.best_d = d;
    }
  }

  // Sign patterns of the weighted terms; lower bound from the smallest eigenvalue.
  bool exact_bound(const Face& f, FaceOutcome& out, std::vector<Vec>& seeds) {
    const int m = static_cast<int>(f.N.rows());
    Mat Qn = f.N.transpose() * pol_->Q * f.N;
    std::vector<Mat> Pn;
    std::vector<double> wn;
    for (std::size_t i = 0; i < pol_->P.size(); ++i) {
      Mat Pi = f.N.transpose() * pol_->P[i] * f.N;
      if (sq_.w[i] != 0.0 && Pi.lpNorm<Eigen::Infinity>() > 1e-14) {
        Pn.push_back(Pi);
        wn.push_back(sq_.w[i]);
      }
    }
    bool any_negative_weight = std::any_of(wn.begin(), wn.end(), [](double w) { return w < 0.0; });
    std::vector<Mat> forms;
    if (!any_negative_weight) {
      forms.push_back(Qn);  // nonnegative weights only raise q
    } else {
      if (Pn.size() > 12) return false;
      for (unsigned long s = 0; s < (1UL << Pn.size()); ++s) {
        Mat S = Qn;
        for (std::size_t i = 0; i < Pn.size(); ++i) S += wn[i] * (((s >> i) & 1UL) ? -1.0 : 1.0) * Pn[i];
        forms.push_back(S);
      }
    }
    double lo = kInf;
    for (const auto& S : forms) {
      Eigen::SelfAdjointEigenSolver<Mat> es(S);
      double e = es.eigenvalues()[0];
      lo = std::min(lo, e >= 0.0 ? e : e * m);
      for (int j = 0; j < S.rows(); ++j)
        if (es.eigenvalues()[j] < 0.0 || j == 0) seeds.push_back(f.N * es.eigenvectors().col(j));
    }
    if (lo >= threshold_) {
      out.exact = true;
      out.lower = lo;
      for (const auto& s : seeds) consider(normalized(sign_fixed(s)), out);
      out.lower = std::min(out.lower, out.best);
      return true;
    }
    // Pure quadratic with no weighted terms: the eigenvector is exact.
    if (Pn.empty() && !sq_.admissible) {
      Vec d = normalized(sign_fixed(seeds.front()));
      consider(d, out);
      if (out.best < threshold_) {
        out.exact = true;
        out.lower = lo;
        return true;
      }
    }
    return false;
  }

  void sample(const Face& f, int m, int k, const std::vector<Vec>& seeds, FaceOutcome& out) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> cands;
    for (const auto& s : seeds) cands.push_back(normalized(sign_fixed(s)));
    if (f.cons.empty()) {
      int count = std::max(2000, 100 * k);
      for (int s = 0; s < count; ++s) {
        Vec y(k);
        for (int i = 0; i < k; ++i) y[i] = gauss(rng_);
        cands.push_back(normalized(f.N * y));
      }
    } else {
      auto verts = face_vertices(f, m, std::max(20, 4 * m));
      std::uniform_int_distribution<std::size_t> pick(0, verts.empty() ? 0 : verts.size() - 1);
      std::uniform_real_distribution<double> uni(0.0, 1.0);
      for (const auto& v : verts) cands.push_back(v);
      for (int s = 0; s < 400 && verts.size() > 1; ++s) {
        Vec a = verts[pick(rng_)], b = verts[pick(rng_)];
        double t = uni(rng_);
        Vec d = t * a + (1.0 - t) * b;
        if (d.lpNorm<Eigen::Infinity>() > 1e-9) cands.push_back(normalized(d));
      }
    }
    for (const auto& d : cands)
      if (in_face(f, d)) consider(d, out);
    if (f.cons.empty() && out.best < kInf) refine(f, k, out);
  }

  void refine(const Face& f, int k, FaceOutcome& out) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat Nt = f.N.transpose();
    Vec y = Nt * out.best_d;
    double sigma = 0.5;
    double fy = out.best;
    for (int it = 0; it < 400 && sigma > 1e-6; ++it) {
      Vec step(k);
      for (int i = 0; i < k; ++i) step[i] = gauss(rng_);
      Vec d = normalized(f.N * (y + sigma * step));
      double before = out.best;
      consider(d, out);
      if (out.best < before) {
        y = Nt * d;
        fy = out.best;
        sigma *= 1.2;
      } else {
        sigma *= 0.9;
      }
    }
    (void)fy;
  }

  std::vector<Vec> face_vertices(const Face& f, int m, int count) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> out;
    const int R = static_cast<int>(f.cons.size()) + (f.eq ? 2 : 0);
    Mat A = Mat::Zero(R + m, m);
    Vec b = Vec::Zero(R + m);
    int i = 0;
    for (const auto& r : f.cons) {
      A.row(i) = -r.transpose();
      b[i] = -r.sum();
      ++i;
    }
    if (f.eq) {
      A.row(i) = f.c.transpose();
      b[i] = f.c.sum();
      ++i;
      A.row(i) = -f.c.transpose();
      b[i] = -f.c.sum();
      ++i;
    }
    for (int j = 0; j < m; ++j) {
      A(i, j) = 1.0;
      b[i] = 2.0;
      ++i;
    }
    for (int s = 0; s < count; ++s) {
      Vec g(m);
      for (int j = 0; j < m; ++j) g[j] = gauss(rng_);
      auto res = lp_minimize(g, A, b);
      if (res.status != LpResult::Status::Optimal) continue;
      Vec d = res.x.array() - 1.0;
      if (d.lpNorm<Eigen::Infinity>() > 1e-9) out.push_back(normalized(d));
    }
    return out;
  }

  const SecondQuantity& sq_;
  const CheckOptions& opt_;
  std::mt19937_64& rng_;
  const Polarized* pol_;
  double threshold_;
};

struct SecondResult {
  bool exhaustive = true;
  bool undecided = false;
  double lower = kInf;
  double best = kInf;
  Vec best_d;
  long faces = 0;
  long samples = 0;
  bool capped = false;
};

SecondResult second_search(const ReducedModel& phi, const SecondQuantity& sq, bool smooth,
                           const CheckOptions& opt, double threshold) {
  SecondResult sr;
  auto faces = critical_faces(phi, opt);
  if (!faces) {
    sr.capped = true;
    sr.exhaustive = false;
    return sr;
  }
  std::mt19937_64 rng(opt.seed);
  std::optional<Polarized> pol;
  if (smooth && sq.h) pol = polarize(sq, phi.m);
  FaceSearch fs(sq, opt, rng, pol ? &*pol : nullptr, threshold);
  for (const auto& f : *faces) {
    auto fo = fs.run(f);
    ++sr.faces;
    sr.samples += fo.samples;
    if (!fo.exact) sr.exhaustive = false;
    sr.undecided = sr.undecided || fo.undecided;
    sr.lower = std::min(sr.lower, fo.lower);
    if (fo.best < sr.best) {
      sr.best = fo.best;
      sr.best_d = fo.best_d;
    }
  }
  return sr;
}

std::vector<double> lifted_second_parts(const CompositeProblem& p, const Point& z, const Direction& D) {
  auto sj = straight_jets(p, z, D);
  double reg = 0.0;
  for (double v : D.theta) reg += v * v;
  std::vector<double> h{sj.g.b + 2.0 * p.lambda * reg};
  for (const auto& layer : sj.psi)
    for (const auto& j : layer) h.push_back(j.b);
  return h;
}

std::vector<double> layer_weights(const CompositeProblem& p, const std::vector<double>& beta, double sign) {
  std::vector<double> w;
  for (int l = 1; l <= p.L(); ++l)
    for (int i = 0; i < p.dims[l - 1]; ++i) w.push_back(sign * beta[l - 1]);
  return w;
}

Direction lift(const CompositeProblem& p, const Point& z, const Vec& d) { return lift_direction(p, z, to_std(d)); }

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Stationary:
      return "stationary";
    case Verdict::NotStationary:
      return "not-stationary";
    case Verdict::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

const char* target_name(Target t) {
  switch (t) {
    case Target::P:
      return "P";
    case Target::P0:
      return "P0";
    case Target::P1:
      return "P1";
  }
  return "P1";
}

Target target_from_name(const std::string& s) {
  if (s == "P" || s == "p") return Target::P;
  if (s == "P0" || s == "p0") return Target::P0;
  if (s == "P1" || s == "p1") return Target::P1;
  throw std::invalid_argument("unknown target '" + s + "' (expected P, P0 or P1)");
}

SearchMode mode_from_name(const std::string& s) {
  if (s == "auto") return SearchMode::Auto;
  if (s == "enumerate") return SearchMode::Enumerate;
  if (s == "sample") return SearchMode::Sample;
  throw std::invalid_argument("unknown mode '" + s + "' (expected auto, enumerate or sample)");
}

StationarityReport check_d_stationary_P1(const CompositeProblem& p, const Point& z, const std::vector<double>& beta,
                                         const CheckOptions& opt) {
  check_point(p, z);
  check_beta(p, beta);
  StationarityReport rep;
  rep.target = Target::P1;
  rep.tol = opt.tol;
  auto md = penalty_model(p, z, beta);
  auto fr = run_first(md, opt);
  fill_first(rep, fr);
  if (fr.verdict == Verdict::NotStationary) {
    rep.witness = unflatten(p, fr.witness);
    rep.witness_reduced = to_std(fr.witness);
    rep.witness_value = fr.witness_value;
  }
  return rep;
}

namespace {

StationarityReport theta_space_first(const CompositeProblem& p, const Point& z, Target target,
                                     const CheckOptions& opt) {
  StationarityReport rep;
  rep.target = target;
  rep.tol = opt.tol;
  auto md = nested_model(p, z.theta);
  auto fr = run_first(md, opt);
  fill_first(rep, fr);
  if (fr.verdict == Verdict::NotStationary) {
    Vec d = fr.witness;
    if (target == Target::P0) {
      Direction D = lift(p, z, d);
      double s = max_abs(D);
      if (s > 0.0) d /= s;
      rep.witness = lift(p, z, d);
    } else {
      Direction D = zeros_like(p);
      D.theta = to_std(d);
      rep.witness = D;
    }
    rep.witness_reduced = to_std(d);
    rep.witness_value = md.first(d);
  }
  return rep;
}

}  // namespace

StationarityReport check_d_stationary_P0(const CompositeProblem& p, const Point& z, const CheckOptions& opt) {
  check_point(p, z);
  require_feasible(p, z);
  return theta_space_first(p, z, Target::P0, opt);
}

StationarityReport check_d_stationary_P(const CompositeProblem& p, const std::vector<double>& theta,
                                        const CheckOptions& opt) {
  if (static_cast<int>(theta.size()) != p.n) throw DimensionError("theta has the wrong length");
  Point z = eval_layers(p, theta);
  return theta_space_first(p, z, Target::P, opt);
}

StationarityReport check_second_order(const CompositeProblem& p, const Point& z, Target target,
                                      const std::optional<std::vector<double>>& beta, const CheckOptions& opt) {
  check_point(p, z);
  if (target == Target::P1 && !beta) throw std::invalid_argument("second-order check on P1 needs beta");
  StationarityReport first;
  if (target == Target::P1)
    first = check_d_stationary_P1(p, z, *beta, opt);
  else if (target == Target::P0)
    first = check_d_stationary_P0(p, z, opt);
  else
    first = check_d_stationary_P(p, z.theta, opt);
  StationarityReport rep = first;
  rep.order = 2;
  rep.witness.reset();
  rep.witness_reduced.clear();
  if (first.verdict != Verdict::Stationary) {
    rep.note = std::string("first-order check: ") + verdict_name(first.verdict) +
               (first.note.empty() ? "" : " (" + first.note + ")");
    if (first.verdict == Verdict::NotStationary) {
      rep.witness = first.witness;
      rep.witness_reduced = first.witness_reduced;
      rep.witness_value = first.witness_value;
    }
    return rep;
  }
  if (target == Target::P1 && !residuals(p, z).feasible) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "infeasible point: no tangent cone for the critical directions";
    return rep;
  }

  Point zz = target == Target::P ? eval_layers(p, z.theta) : z;
  auto phi = nested_model(p, zz.theta);
  bool smooth = count_ties(p, zz) == 0;
  SecondQuantity sq;
  std::function<double(const Vec&)> report_value;
  if (target == Target::P) {
    sq.q = [&p, &zz](const Vec& d) { return *dd_Psi(p, zz.theta, to_std(d), 2).second; };
    sq.h = [&p, &zz](const Vec& d) { return std::vector<double>{*dd_Psi(p, zz.theta, to_std(d), 2).second}; };
    report_value = sq.q;
  } else if (target == Target::P1) {
    const auto& b = *beta;
    sq.q = [&p, &zz, &b](const Vec& d) { return *dd_Theta(p, zz, lift(p, zz, d), b, 2).second; };
    sq.h = [&p, &zz](const Vec& d) { return lifted_second_parts(p, zz, lift(p, zz, d)); };
    sq.w = layer_weights(p, b, 1.0);
    report_value = sq.q;
  } else {
    // Radial directions have psi^(2) = 0; the penalty steers the search toward them.
    constexpr double kM = 1e6;
    sq.q = [&p, &zz](const Vec& d) {
      auto h = lifted_second_parts(p, zz, lift(p, zz, d));
      double v = h[0];
      for (std::size_t i = 1; i < h.size(); ++i) v += kM * std::abs(h[i]);
      return v;
    };
    sq.h = [&p, &zz](const Vec& d) { return lifted_second_parts(p, zz, lift(p, zz, d)); };
    sq.w = layer_weights(p, std::vector<double>(p.L(), 1.0), kM);
    sq.admissible = [&p, &zz](const Vec& d) { return radial_membership(p, zz, lift(p, zz, d)); };
    report_value = [&p, &zz](const Vec& d) { return *dd_F(p, zz, lift(p, zz, d), 2).second; };
  }
  auto sr = second_search(phi, sq, smooth, opt, -opt.tol);
  rep.pieces = sr.faces;
  rep.samples += sr.samples;
  rep.min_value = sr.best == kInf ? 0.0 : sr.best;
  rep.mode = sr.exhaustive ? "exhaustive" : "sampled";
  if (sr.capped) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "too many pieces to enumerate the critical cone";
    return rep;
  }
  if (sr.best < -opt.tol) {
    Vec d = sr.best_d;
    if (target != Target::P) {
      double s = max_abs(lift(p, zz, d));
      if (s > 0.0) d /= s;
      rep.witness = lift(p, zz, d);
    } else {
      Direction D = zeros_like(p);
      D.theta = to_std(d);
      rep.witness = D;
    }
    rep.witness_reduced = to_std(d);
    rep.witness_value = report_value(d);
    rep.verdict = Verdict::NotStationary;
    rep.note.clear();
    return rep;
  }
  if (sr.undecided) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "radial membership undecidable for a descent candidate";
    return rep;
  }
  rep.verdict = Verdict::Stationary;
  rep.note.clear();
  return rep;
}

SufficientReport check_strong_local_min_sufficient(const CompositeProblem& p, const Point& z,
                                                   const PenaltyConfig& cfg, const CheckOptions& opt) {
  if (!cfg.certified) throw std::invalid_argument("beta is not certified: sufficient condition does not apply");
  SufficientReport out;
  out.first = check_d_stationary_P1(p, z, cfg.beta, opt);
  if (out.first.verdict != Verdict::Stationary) {
    out.verdict = out.first.verdict == Verdict::NotStationary ? "fails" : "inconclusive";
    out.mode = out.first.mode;
    out.note = "first-order condition not met";
    return out;
  }
  if (!residuals(p, z).feasible) {
    out.verdict = "fails";
    out.note = "point is infeasible";
    return out;
  }
  auto phi = nested_model(p, z.theta);
  bool smooth = count_ties(p, z) == 0;
  SecondQuantity sq;
  sq.q = [&p, &z, &cfg](const Vec& d) {
    auto h = lifted_second_parts(p, z, lift(p, z, d));
    auto w = layer_weights(p, cfg.beta, -1.0);
    double v = h[0];
    for (std::size_t i = 1; i < h.size(); ++i) v += w[i - 1] * std::abs(h[i]);
    return v;
  };
  sq.h = [&p, &z](const Vec& d) { return lifted_second_parts(p, z, lift(p, z, d)); };
  sq.w = layer_weights(p, cfg.beta, -1.0);
  auto sr = second_search(phi, sq, smooth, opt, opt.tol);
  out.mode = sr.exhaustive ? "exhaustive" : "sampled";
  out.min_value = sr.best == kInf ? (sr.lower == kInf ? 0.0 : sr.lower) : sr.best;
  if (sr.capped) {
    out.verdict = "inconclusive";
    out.note = "too many pieces to enumerate the critical cone";
    return out;
  }
  if (sr.best <= opt.tol) {
    Vec d = sr.best_d;
    double s = max_abs(lift(p, z, d));
    if (s > 0.0) d /= s;
    out.witness = lift(p, z, d);
    out.min_value = sq.q(d);
    out.verdict = "fails";
    return out;
  }
  out.verdict = "sufficient-holds";
  return out;
}

SetRelation compare_sets_on_point(const CompositeProblem& p, const Point& z, const PenaltyConfig& cfg,
                                  const CheckOptions& opt) {
  SetRelation r;
  r.feasible = residuals(p, z).feasible;
  double th = eval_Theta(p, z, cfg.beta);
  r.in_level_set = th <= cfg.gamma_bar + 1e-12 * std::max(1.0, std::abs(cfg.gamma_bar));
  r.d1 = check_d_stationary_P1(p, z, cfg.beta, opt);
  r.in_D1 = r.d1.verdict == Verdict::Stationary;
  if (r.in_D1) {
    r.sd1 = check_second_order(p, z, Target::P1, cfg.beta, opt);
    r.in_SD1 = r.sd1.verdict == Verdict::Stationary;
  }
  if (r.feasible) {
    r.d0 = check_d_stationary_P0(p, z, opt);
    r.in_D0 = r.d0.verdict == Verdict::Stationary;
    if (r.in_D0) {
      r.sd0 = check_second_order(p, z, Target::P0, std::nullopt, opt);
      r.in_SD0 = r.sd0.verdict == Verdict::Stationary;
    }
  } else {
    r.d0.target = Target::P0;
    r.d0.verdict = Verdict::NotStationary;
    r.d0.note = "infeasible point";
  }
  if (cfg.certified && r.in_level_set) {
    if (r.in_D1 && !r.feasible) r.violations.push_back("D1 point is infeasible");
    if (r.feasible && r.in_D0 != r.in_D1) r.violations.push_back("D0 and D1 disagree at a feasible point");
    if (r.in_SD1 && !r.in_SD0) r.violations.push_back("SD1 point outside SD0");
  }
  r.consistent = r.violations.empty();
  return r;
}

StationarityReport check_box_stationarity(const BoxProblem& bp, const std::vector<double>& x, int order,
                                          const CheckOptions& opt) {
  if (order != 1 && order != 2) throw std::invalid_argument("order must be 1 or 2");
  if (x.size() != bp.lo.size() || x.size() != bp.hi.size()) throw DimensionError("box bounds and x differ in length");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < bp.lo[i] - 1e-12 || x[i] > bp.hi[i] + 1e-12) throw InfeasiblePointError("x lies outside the box");
  validate(bp.f, static_cast<int>(x.size()), 0, {});
  StationarityReport rep;
  rep.target = Target::P;
  rep.order = order;
  rep.tol = opt.tol;
  auto md = box_model(bp, x);
  auto fr = run_first(md, opt);
  fill_first(rep, fr);
  if (fr.verdict != Verdict::Stationary) {
    if (fr.verdict == Verdict::NotStationary) {
      rep.witness_reduced = to_std(fr.witness);
      rep.witness_value = fr.witness_value;
    }
    if (order == 2) rep.note = std::string("first-order check: ") + verdict_name(fr.verdict);
    return rep;
  }
  if (order == 1) return rep;
  ValueAlg va;
  std::vector<std::vector<double>> noU;
  va.theta = &x;
  va.u = &noU;
  eval(*bp.f, va);
  SecondQuantity sq;
  sq.q = [&bp, &x](const Vec& d) { return *dd_expr(bp.f, x, to_std(d), 2).second; };
  sq.h = [&sq](const Vec& d) { return std::vector<double>{sq.q(d)}; };
  auto sr = second_search(md, sq, va.ties == 0, opt, -opt.tol);
  rep.pieces = sr.faces;
  rep.samples += sr.samples;
  rep.mode = sr.exhaustive ? "exhaustive" : "sampled";
  rep.min_value = sr.best == kInf ? 0.0 : sr.best;
  if (sr.capped) {
    rep.verdict = Verdict::Inconclusive;
    rep.note = "too many pieces to enumerate the critical cone";
  } else if (sr.best < -opt.tol) {
    rep.verdict = Verdict::NotStationary;
    rep.witness_reduced = to_std(sr.best_d);
    rep.witness_value = sq.q(sr.best_d);
  } else {
    rep.verdict = Verdict::Stationary;
  }
  return rep;
}

}  // namespace dstat
