#pragma once
// Brute-force reference implementations used only by tests. Deliberately slow
// and simple so they can serve as independent ground truth for the production
// solvers.
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "slp/geometry.hpp"
#include "slp/rng.hpp"

namespace oracle {

using slp::geom::Vec3;
using slp::geom::Mat3;

// --- random geometry helpers -------------------------------------------------

inline Mat3 random_rotation(slp::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  q.normalize();
  return q.toRotationMatrix();
}

inline Mat3 random_spd(slp::Rng& rng, double lo, double hi) {
  Mat3 R = random_rotation(rng);
  Vec3 lam(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
  return R * lam.asDiagonal() * R.transpose();
}

inline Vec3 random_unit(slp::Rng& rng) {
  Vec3 v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-6) v = Vec3(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

// --- nearest point on a simplex: dense barycentric grid + refinement ---------

// Returns the (approximately) closest point to q on the convex hull of pts by
// searching a barycentric grid, refined around the incumbent. Accurate to
// roughly diam * (1/n0) * (1/nr)^levels.
inline Vec3 grid_nearest_on_hull(const std::vector<Vec3>& pts, const Vec3& q) {
  const int k = static_cast<int>(pts.size());
  if (k == 1) return pts[0];
  // Barycentric coordinates over up to 4 vertices; for hulls with more
  // vertices the tests only use <=4 points.
  auto eval = [&](const Eigen::VectorXd& w) {
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < k; ++i) p += w[i] * pts[i];
    return p;
  };
  Eigen::VectorXd best = Eigen::VectorXd::Constant(k, 1.0 / k);
  double best_d = (eval(best) - q).norm();
  auto scan = [&](const Eigen::VectorXd& center, double radius, int n) {
    // Sample w on the simplex near `center` within `radius` per coordinate.
    std::mt19937_64 eng(12345);
    std::uniform_real_distribution<double> un(-radius, radius);
    // Deterministic grid for k<=3, random for k=4 to keep cost bounded.
    if (k == 2) {
      for (int i = 0; i <= n; ++i) {
        double t = std::clamp(center[0] + radius * (2.0 * i / n - 1.0), 0.0, 1.0);
        Eigen::VectorXd w(2);
        w << t, 1.0 - t;
        double d = (eval(w) - q).norm();
        if (d < best_d) { best_d = d; best = w; }
      }
    } else {
      for (int it = 0; it < (n + 1) * (n + 1); ++it) {
        Eigen::VectorXd w(k);
        double s = 0;
        for (int i = 0; i < k; ++i) {
          w[i] = std::max(0.0, center[i] + un(eng));
          s += w[i];
        }
        if (s <= 0) continue;
        w /= s;
        double d = (eval(w) - q).norm();
        if (d < best_d) { best_d = d; best = w; }
      }
    }
  };
  double radius = 1.0;
  for (int level = 0; level < 14; ++level) {
    scan(best, radius, 180);
    radius *= 0.35;
  }
  return eval(best);
}

// --- MVIE: grid seed + compass (coordinate) search ---------------------------

// Maximizes log det(L) over lower-triangular L (positive diagonal) and center d
// subject to a^T d + ||L^T a|| <= b for every (normalized) halfspace, by
// compass search from a Chebyshev-style interior seed. Returns the ellipsoid
// volume. Converges from inside the feasible set, so it approaches the optimum
// from below.
// Exact 1-d maximization of a concave function along `dir` from `t`:
// brackets the finite (feasible) interval first, then golden-section on
// finite endpoints. `fn` must be concave along the line, -inf off-domain.
template <class Fn>
inline void concave_line_max(Eigen::VectorXd& t, const Eigen::VectorXd& dir, double scale,
                             const Fn& fn) {
  double f0 = fn(t);
  if (!std::isfinite(f0)) return;
  auto at = [&](double s) { return fn(t + s * dir); };
  // Find finite endpoints: halve until feasible, then expand while improving.
  double hi = scale, lo = -scale;
  for (int it = 0; it < 90 && !std::isfinite(at(hi)); ++it) hi *= 0.5;
  for (int it = 0; it < 90 && !std::isfinite(at(lo)); ++it) lo *= 0.5;
  for (int it = 0; it < 90; ++it) {
    double v2 = at(2.0 * hi);
    if (!std::isfinite(v2) || v2 <= at(hi)) break;
    hi *= 2.0;
  }
  for (int it = 0; it < 90; ++it) {
    double v2 = at(2.0 * lo);
    if (!std::isfinite(v2) || v2 <= at(lo)) break;
    lo *= 2.0;
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = at(x1), f2 = at(x2);
  for (int it = 0; it < 90; ++it) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + gr * (hi - lo); f2 = at(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - gr * (hi - lo); f1 = at(x1);
    }
  }
  double best = 0.5 * (x1 + x2);
  if (at(best) > f0) t += best * dir;
}

// Cyclic coordinate ascent with pattern (net-displacement) acceleration on a
// smooth concave function; converges to its global maximum.
template <class Fn>
inline void concave_coordinate_ascent(Eigen::VectorXd& t, const Fn& fn,
                                      const std::function<double(const Eigen::VectorXd&)>& scale_of,
                                      int max_sweeps) {
  const int n = static_cast<int>(t.size());
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double before = fn(t);
    double scale = scale_of(t);
    Eigen::VectorXd start = t;
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[k] = 1.0;
      concave_line_max(t, e, scale, fn);
    }
    Eigen::VectorXd pattern = t - start;
    double pn = pattern.norm();
    if (pn > 1e-15) concave_line_max(t, pattern / pn, 2.0 * pn, fn);
    double after = fn(t);
    if (after - before < 1e-13 * (1.0 + std::abs(after))) break;
  }
}

inline double mvie_volume_compass(const slp::geom::Polytope& poly) {
  const int m = static_cast<int>(poly.hs.size());
  Eigen::MatrixXd A(m, 3);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    double n = poly.hs[i].a.norm();
    A.row(i) = poly.hs[i].a.transpose() / n;
    b[i] = poly.hs[i].b / n;
  }
  auto margin = [&](const Eigen::VectorXd& x) {
    return (b - A * Vec3(x[0], x[1], x[2])).minCoeff();
  };
  // Seed: any strictly interior point will do (the barrier phase recenters).
  // Coarse probing usually suffices; smoothed min-margin ascent is only a
  // fallback for polytopes the probe misses, and stops at first feasibility.
  Eigen::VectorXd d(3);
  d.setZero();
  {
    std::mt19937_64 eng(99);
    std::uniform_real_distribution<double> un(-5.0, 5.0);
    double bm = margin(d);
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd x(3);
      x << un(eng), un(eng), un(eng);
      if (margin(x) > bm) { bm = margin(x); d = x; }
    }
    for (double beta : {32.0, 256.0, 2048.0}) {
      if (margin(d) > 0) break;
      auto soft = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd mg = b - A * Vec3(x[0], x[1], x[2]);
        double mn = mg.minCoeff();
        double acc = 0;
        for (int i = 0; i < m; ++i) acc += std::exp(-beta * (mg[i] - mn));
        return mn - std::log(acc) / beta;
      };
      concave_coordinate_ascent(d, soft, [](const Eigen::VectorXd&) { return 1.0; }, 200);
    }
  }
  double r0 = margin(d);
  if (r0 <= 0) return 0.0;
  // Parameter vector: theta = [L00,L10,L11,L20,L21,L22, d0,d1,d2].
  Eigen::VectorXd th(9);
  th << 0.5 * r0, 0, 0.5 * r0, 0, 0, 0.5 * r0, d[0], d[1], d[2];
  // Barrier surrogate: log det(L) + mu * sum log(margin_i). Smooth and
  // unimodal along every coordinate line, so cyclic 1-d maximization cannot
  // jam the way plain coordinate descent does on the constrained problem;
  // driving mu -> 0 bounds the remaining objective gap by (#constraints) * mu.
  auto barrier = [&](const Eigen::VectorXd& t, double mu) {
    if (t[0] <= 0 || t[2] <= 0 || t[5] <= 0) return -std::numeric_limits<double>::infinity();
    Mat3 L = Mat3::Zero();
    L(0, 0) = t[0];
    L(1, 0) = t[1];
    L(1, 1) = t[2];
    L(2, 0) = t[3];
    L(2, 1) = t[4];
    L(2, 2) = t[5];
    Vec3 dd(t[6], t[7], t[8]);
    double f = std::log(t[0]) + std::log(t[2]) + std::log(t[5]);
    for (int i = 0; i < m; ++i) {
      Vec3 a = A.row(i).transpose();
      double margin = b[i] - a.dot(dd) - (L.transpose() * a).norm();
      if (margin <= 0) return -std::numeric_limits<double>::infinity();
      f += mu * std::log(margin);
    }
    return f;
  };
  for (double mu = 1.0; mu > 1e-8; mu *= 0.2) {
    auto fn = [&](const Eigen::VectorXd& t) { return barrier(t, mu); };
    auto scale_of = [&](const Eigen::VectorXd& t) {
      return 0.5 * std::max({std::abs(t[0]), std::abs(t[2]), std::abs(t[5]), 0.1 * r0});
    };
    concave_coordinate_ascent(th, fn, scale_of, 400);
  }
  return 4.0 / 3.0 * M_PI * th[0] * th[2] * th[5];
}

// Exact maximum-volume inscribed ellipsoid volume for a tetrahedron: the
// problem is affine-invariant, and for the regular tetrahedron the answer is
// the insphere, giving vol_mvie = pi/(6*sqrt(3)) * vol_tetra.
inline double mvie_volume_tetra_exact(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& v3) {
  double vol = std::abs((v1 - v0).cross(v2 - v0).dot(v3 - v0)) / 6.0;
  return M_PI / (6.0 * std::sqrt(3.0)) * vol;
}

// Halfspace form of a tetrahedron with vertices oriented arbitrarily.
inline slp::geom::Polytope tetra_polytope(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& v3) {
  std::array<std::array<int, 3>, 4> faces{{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}}};
  std::array<Vec3, 4> v{v0, v1, v2, v3};
  slp::geom::Polytope P;
  for (int fi = 0; fi < 4; ++fi) {
    auto [i, j, k] = std::tuple{faces[fi][0], faces[fi][1], faces[fi][2]};
    int op = 6 - i - j - k;  // opposite vertex index
    Vec3 n = (v[j] - v[i]).cross(v[k] - v[i]);
    if (n.dot(v[op] - v[i]) > 0) n = -n;  // outward
    P.hs.push_back({n, n.dot(v[i])});
  }
  return P;
}

// --- polyline utilities -------------------------------------------------------

inline double polyline_length(const std::vector<Vec3>& pts) {
  double L = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) L += (pts[i] - pts[i - 1]).norm();
  return L;
}

// n points at uniform arc length along the polyline (endpoints included).
inline std::vector<Vec3> polyline_resample(const std::vector<Vec3>& pts, int n) {
  std::vector<double> s(pts.size(), 0.0);
  for (size_t i = 1; i < pts.size(); ++i) s[i] = s[i - 1] + (pts[i] - pts[i - 1]).norm();
  const double total = s.back();
  std::vector<Vec3> out;
  out.reserve(n);
  size_t j = 0;
  for (int i = 0; i < n; ++i) {
    const double si = total * i / (n - 1);
    while (j + 2 < pts.size() && s[j + 1] < si) ++j;
    const double seg = s[j + 1] - s[j];
    const double t = seg > 0.0 ? (si - s[j]) / seg : 0.0;
    out.push_back(pts[j] + t * (pts[j + 1] - pts[j]));
  }
  return out;
}

inline double point_polyline_distance(const Vec3& q, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < pts.size(); ++i) {
    Vec3 p = slp::geom::nearest_point_on_segment(pts[i - 1], pts[i], q);
    best = std::min(best, (p - q).norm());
  }
  return best;
}

// --- hanging cable: stiff spring-chain equilibrium ----------------------------
//
// Static equilibrium of a chain of point masses joined by stiff linear springs
// with both endpoints pinned. Wind loading follows the cross-flow principle:
// each segment feels an acceleration drag_coeff * v_perp, where v_perp is the
// wind velocity component normal to the segment. The load direction then
// depends on the local tangent, so the equilibrium is generally *not* a planar
// catenary — exactly the modeling error a uniform-field fit incurs. Setting
// cross_flow = false loads every segment with the full wind vector instead,
// which makes the continuum limit an exact catenary in the resultant-field
// plane (useful to isolate fit correctness from model error).
struct ChainParams {
  int segments = 256;
  double linear_density = 0.02;  // kg/m
  double stiffness = 4.0e5;      // N/m per segment spring
  double gravity = 9.81;         // m/s^2
  double drag_coeff = 1.25;      // wind acceleration per unit wind speed, 1/s
  bool cross_flow = true;
};

// Solves force balance with a damped Newton method; the Jacobian is the
// block-tridiagonal spring stiffness (the tiny orientation-dependent wind
// derivative is left out, making this a quasi-Newton iteration on the exact
// residual). Throws if the residual does not reach tolerance.
inline std::vector<Vec3> chain_equilibrium(const Vec3& p_u, const Vec3& p_l, double l0,
                                           const Vec3& wind, const ChainParams& prm = {}) {
  const int N = prm.segments;
  const double rest = l0 / N;
  const double node_mass = prm.linear_density * rest;
  const Vec3 g_vec(0.0, 0.0, -prm.gravity);

  // Initial shape: chord plus a sinusoidal bow toward the uniform resultant
  // field, with the bow height solved so the curve length matches l0. This
  // starts the stiff springs near zero strain.
  const Vec3 chord = p_l - p_u;
  const double chord_len = chord.norm();
  Vec3 g_tot = g_vec + prm.drag_coeff * wind;
  Vec3 bow = g_tot - chord * (chord.dot(g_tot) / chord.squaredNorm());
  if (bow.norm() < 1e-9) {
    bow = Vec3(1, 0, 0) - chord * (chord.x() / chord.squaredNorm());
    if (bow.norm() < 1e-9) bow = Vec3(0, 1, 0) - chord * (chord.y() / chord.squaredNorm());
  }
  bow.normalize();
  auto shape_length = [&](double h) {
    double L = 0.0;
    Vec3 prev = p_u;
    for (int i = 1; i <= N; ++i) {
      const double t = double(i) / N;
      Vec3 p = p_u + t * chord + h * std::sin(M_PI * t) * bow;
      L += (p - prev).norm();
      prev = p;
    }
    return L;
  };
  // Solve the bow height for a hair more than the cable length: springs at
  // exactly zero strain have no transverse tangent stiffness at all, so the
  // first Newton systems would be near-singular. A uniform 1e-4 pre-stretch
  // keeps them positive definite; the equilibrium itself is unaffected.
  const double init_len = l0 * (1.0 + 1e-4);
  double h_lo = 0.0, h_hi = l0;  // shape_length(l0) > init_len for chord < l0
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (h_lo + h_hi);
    (shape_length(mid) < init_len ? h_lo : h_hi) = mid;
  }
  const double h = 0.5 * (h_lo + h_hi);
  std::vector<Vec3> x(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double t = double(i) / N;
    x[i] = p_u + t * chord + h * std::sin(M_PI * t) * bow;
  }
  std::vector<Vec3> init = x;
  init = polyline_resample(init, N + 1);  // uniform arc spacing => uniform strain
  x = init;

  const int M = N - 1;  // free nodes 1..N-1
  // Residual: net force on each free node, with wind recomputed from the
  // current tangents every evaluation.
  auto residual = [&](const std::vector<Vec3>& pos, std::vector<Vec3>& F) {
    std::vector<Vec3> wind_acc(N);
    for (int i = 0; i < N; ++i) {
      Vec3 t = (pos[i + 1] - pos[i]).normalized();
      wind_acc[i] = prm.cross_flow ? Vec3(prm.drag_coeff * (wind - t * t.dot(wind)))
                                   : Vec3(prm.drag_coeff * wind);
    }
    double worst = 0.0;
    for (int i = 1; i < N; ++i) {
      Vec3 d_next = pos[i + 1] - pos[i];
      Vec3 d_prev = pos[i] - pos[i - 1];
      const double ln = d_next.norm(), lp = d_prev.norm();
      Vec3 f = prm.stiffness * (ln - rest) * (d_next / ln) -
               prm.stiffness * (lp - rest) * (d_prev / lp);
      f += node_mass * g_vec;
      f += 0.5 * node_mass * (wind_acc[i - 1] + wind_acc[i]);
      F[i - 1] = f;
      worst = std::max(worst, f.lpNorm<Eigen::Infinity>());
    }
    return worst;
  };

  std::vector<Vec3> F(M), F_try(M);
  std::vector<Mat3> S(N), diag(M), upper(M);
  std::vector<Vec3> rhs(M), delta(M);
  double fn = residual(x, F);
  const double tol = 1e-9;
  // The transverse tangent stiffness of a segment is its tension over its
  // length; floor it at a small fraction of the hanging-tension scale so
  // transiently slack segments cannot make the Newton metric singular.
  const double t_floor = 0.02 * prm.linear_density * l0 *
                         (prm.gravity + prm.drag_coeff * wind.norm());
  bool done = fn < tol;
  for (int newton = 0; newton < 500 && !done; ++newton) {
    for (int i = 0; i < N; ++i) {
      Vec3 d = x[i + 1] - x[i];
      const double len = d.norm();
      Vec3 u = d / len;
      Mat3 uu = u * u.transpose();
      const double transverse =
          std::max(prm.stiffness * (1.0 - rest / len), t_floor / len);
      S[i] = prm.stiffness * uu + transverse * (Mat3::Identity() - uu);
    }
    // Block-tridiagonal solve of J * delta = -F (Thomas algorithm).
    for (int i = 0; i < M; ++i) {
      diag[i] = -S[i] - S[i + 1] - 1e-9 * prm.stiffness * Mat3::Identity();
      upper[i] = S[i + 1];
      rhs[i] = -F[i];
    }
    for (int i = 1; i < M; ++i) {
      Mat3 L = S[i] * diag[i - 1].inverse();  // lower block is S[i]
      diag[i] -= L * upper[i - 1];
      rhs[i] -= L * rhs[i - 1];
    }
    delta[M - 1] = diag[M - 1].inverse() * rhs[M - 1];
    for (int i = M - 2; i >= 0; --i)
      delta[i] = diag[i].inverse() * (rhs[i] - upper[i] * delta[i + 1]);

    double step = 1.0;
    std::vector<Vec3> x_try = x;
    for (int bt = 0; bt < 40; ++bt) {
      for (int i = 1; i < N; ++i) x_try[i] = x[i] + step * delta[i - 1];
      const double fn_try = residual(x_try, F_try);
      if (fn_try < fn * (1.0 - 1e-4 * step) || fn_try < tol) {
        x = x_try;
        F = F_try;
        fn = fn_try;
        break;
      }
      step *= 0.5;
    }
    done = fn < tol;
  }
  if (!done) throw std::runtime_error("chain_equilibrium: Newton did not converge");
  return x;
}

}  // namespace oracle
