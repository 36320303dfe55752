#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slp/minco.hpp"
#include "slp/rng.hpp"

using slp::minco::BandedLU;
using slp::minco::BoundaryState;
using slp::minco::CoeffMatrix;
using slp::minco::PiecewiseTrajectory;
using slp::minco::SplineSystem;
using slp::minco::deserialize_trajectory;
using slp::minco::minco_construct;
using slp::minco::poly_basis;
using slp::minco::serialize_trajectory;
using slp::minco::snap_energy;
using slp::minco::snap_energy_grad;
using slp::geom::Vec3;

namespace {

Vec3 rand_vec(slp::Rng& rng, double scale) {
  return Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale),
              rng.uniform(-scale, scale));
}

BoundaryState rand_state(slp::Rng& rng) {
  BoundaryState z;
  z.p = rand_vec(rng, 2.0);
  z.v = rand_vec(rng, 1.0);
  z.a = rand_vec(rng, 1.0);
  z.j = rand_vec(rng, 1.0);
  return z;
}

// Full 8x8 Gram matrix of the fourth-derivative basis over [0, T]; nonzero
// only on powers 4..7.
Eigen::MatrixXd snap_hessian_block(double t) {
  const double f[8] = {0, 0, 0, 0, 24, 120, 360, 840};
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(8, 8);
  for (int j = 4; j < 8; ++j)
    for (int k = 4; k < 8; ++k) {
      const int power = j + k - 7;
      h(j, k) = f[j] * f[k] * std::pow(t, power) / power;
    }
  return h;
}

// Independent oracle: minimize sum_i c_i^T H_i c_i subject to the full set of
// interpolation constraints (boundary derivatives, waypoint pins, C0..C3
// junction continuity), one axis at a time through the dense KKT system.
// The banded construction must reproduce this minimizer: its C4..C6 junction
// rows are exactly the first-order optimality conditions of this QP.
Eigen::MatrixXd qp_oracle(const std::vector<Vec3>& waypoints,
                          const std::vector<double>& durations,
                          const BoundaryState& z0, const BoundaryState& zf) {
  const int m = static_cast<int>(durations.size());
  const int n = 8 * m;
  const int rows = 5 * m + 3;

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < m; ++i)
    h.block(8 * i, 8 * i, 8, 8) = snap_hessian_block(durations[i]);

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(rows, n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, 3);
  int r = 0;
  for (int k = 0; k < 4; ++k)
    e.block(r + k, 0, 1, 8) = poly_basis(0.0, k).transpose();
  d.row(0) = z0.p.transpose();
  d.row(1) = z0.v.transpose();
  d.row(2) = z0.a.transpose();
  d.row(3) = z0.j.transpose();
  r = 4;
  for (int i = 0; i + 1 < m; ++i) {
    e.block(r, 8 * i, 1, 8) = poly_basis(durations[i], 0).transpose();
    d.row(r) = waypoints[i].transpose();
    ++r;
    for (int k = 0; k < 4; ++k) {
      e.block(r, 8 * i, 1, 8) = poly_basis(durations[i], k).transpose();
      e.block(r, 8 * (i + 1), 1, 8) -= poly_basis(0.0, k).transpose();
      ++r;
    }
  }
  for (int k = 0; k < 4; ++k) {
    e.block(r, 8 * (m - 1), 1, 8) = poly_basis(durations[m - 1], k).transpose();
    ++r;
  }
  d.row(rows - 4) = zf.p.transpose();
  d.row(rows - 3) = zf.v.transpose();
  d.row(rows - 2) = zf.a.transpose();
  d.row(rows - 1) = zf.j.transpose();

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + rows, n + rows);
  kkt.topLeftCorner(n, n) = 2.0 * h;
  kkt.topRightCorner(n, rows) = e.transpose();
  kkt.bottomLeftCorner(rows, n) = e;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + rows, 3);
  rhs.bottomRows(rows) = d;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  REQUIRE(lu.isInvertible());
  Eigen::MatrixXd sol = lu.solve(rhs);
  return sol.topRows(n);
}

PiecewiseTrajectory random_trajectory(slp::Rng& rng, int segments) {
  std::vector<Vec3> waypoints;
  std::vector<double> durations;
  for (int i = 0; i < segments; ++i) durations.push_back(rng.uniform(0.7, 1.6));
  for (int i = 0; i + 1 < segments; ++i) waypoints.push_back(rand_vec(rng, 2.0));
  return minco_construct(waypoints, durations, rand_state(rng), rand_state(rng));
}

}  // namespace

TEST_CASE("poly basis: rows are symbolic derivatives of the monomials") {
  const auto b0 = poly_basis(0.0, 0);
  CHECK(b0(0) == 1.0);
  for (int c = 1; c < 8; ++c) CHECK(b0(c) == 0.0);

  const double t = 2.0;
  const auto b = poly_basis(t, 3);
  for (int c = 0; c < 3; ++c) CHECK(b(c) == 0.0);
  CHECK(b(3) == doctest::Approx(6.0));
  CHECK(b(5) == doctest::Approx(5.0 * 4.0 * 3.0 * t * t));
  CHECK(b(7) == doctest::Approx(7.0 * 6.0 * 5.0 * std::pow(t, 4)));

  const auto p = poly_basis(1.5, 0);
  for (int c = 0; c < 8; ++c) CHECK(p(c) == doctest::Approx(std::pow(1.5, c)));
}

TEST_CASE("banded lu: matches dense full-pivot solutions") {
  slp::Rng rng(31);
  for (const auto [n, lower, upper] :
       {std::array<int, 3>{40, 8, 8}, {17, 3, 5}, {9, 5, 2}}) {
    BandedLU banded(n, lower, upper);
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = std::max(0, i - lower); j <= std::min(n - 1, i + upper); ++j) {
        const double v = rng.uniform(-1.0, 1.0) + (i == j ? 20.0 : 0.0);
        banded.at(i, j) = v;
        dense(i, j) = v;
      }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 3);
    for (int i = 0; i < n; ++i) rhs.row(i) = rand_vec(rng, 1.0).transpose();

    banded.factor();
    Eigen::MatrixXd x = rhs;
    banded.solve(x);
    const Eigen::MatrixXd x_ref = Eigen::FullPivLU<Eigen::MatrixXd>(dense).solve(rhs);
    CHECK((x - x_ref).cwiseAbs().maxCoeff() < 1e-10);

    Eigen::MatrixXd xt = rhs;
    banded.solve_transpose(xt);
    const Eigen::MatrixXd xt_ref =
        Eigen::FullPivLU<Eigen::MatrixXd>(dense.transpose()).solve(rhs);
    CHECK((xt - xt_ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("banded lu: misuse and singularity are reported") {
  BandedLU unfactored(4, 1, 1);
  unfactored.at(0, 0) = 1.0;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(unfactored.solve(rhs), slp::Error);

  BandedLU zero(4, 1, 1);
  try {
    zero.factor();
    CHECK(false);
  } catch (const slp::Error& e) {
    CHECK(e.code() == slp::ErrorCode::SingularSystem);
  }
}

TEST_CASE("construction: rest-to-rest at the origin is the zero polynomial") {
  const BoundaryState rest;
  const auto traj = minco_construct({}, {1.3}, rest, rest);
  REQUIRE(traj.segments() == 1);
  CHECK(traj.coeffs[0].cwiseAbs().maxCoeff() < 1e-14);
  for (int order = 0; order < 10; ++order)
    for (double t : {0.0, 0.4, 1.3})
      CHECK(traj.eval(t, order).norm() < 1e-13);
  CHECK(snap_energy(traj, Vec3(1.0, 1.0, 1.0)) < 1e-14);
}

TEST_CASE("construction: waypoint interpolation and junction smoothness") {
  slp::Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 w = rand_vec(rng, 2.0);
    const std::vector<double> durations = {rng.uniform(0.7, 1.6),
                                           rng.uniform(0.7, 1.6)};
    const auto traj =
        minco_construct({w}, durations, rand_state(rng), rand_state(rng));

    CHECK((traj.eval_segment(0, durations[0], 0) - w).norm() < 1e-10);
    for (int k = 0; k <= 3; ++k) {
      const Vec3 left = traj.eval_segment(0, durations[0], k);
      const Vec3 right = traj.eval_segment(1, 0.0, k);
      CHECK((left - right).norm() < 1e-9);
    }
    // C4..C6 continuity is the optimality condition of the snap QP.
    for (int k = 4; k <= 6; ++k) {
      const Vec3 left = traj.eval_segment(0, durations[0], k);
      const Vec3 right = traj.eval_segment(1, 0.0, k);
      const double scale = std::max({1.0, left.norm(), right.norm()});
      CHECK((left - right).norm() < 1e-7 * scale);
    }
  }
}

TEST_CASE("construction: boundary derivatives are interpolated exactly") {
  slp::Rng rng(19);
  const BoundaryState z0 = rand_state(rng);
  const BoundaryState zf = rand_state(rng);
  const std::vector<double> durations = {0.9, 1.2, 0.8};
  const auto traj = minco_construct({rand_vec(rng, 2.0), rand_vec(rng, 2.0)},
                                    durations, z0, zf);
  CHECK((traj.eval(0.0, 0) - z0.p).norm() < 1e-11);
  CHECK((traj.eval(0.0, 1) - z0.v).norm() < 1e-11);
  CHECK((traj.eval(0.0, 2) - z0.a).norm() < 1e-11);
  CHECK((traj.eval(0.0, 3) - z0.j).norm() < 1e-11);
  const double total = traj.total_time();
  CHECK((traj.eval(total, 0) - zf.p).norm() < 1e-10);
  CHECK((traj.eval(total, 1) - zf.v).norm() < 1e-10);
  CHECK((traj.eval(total, 2) - zf.a).norm() < 1e-9);
  CHECK((traj.eval(total, 3) - zf.j).norm() < 1e-9);
}

TEST_CASE("construction: coefficients match the dense QP oracle") {
  // Single segment, rest-to-rest displacement: the boundary conditions fully
  // determine the degree-7 polynomial, so oracle and construction must agree.
  {
    BoundaryState z0, zf;
    zf.p = Vec3(1.5, -0.7, 0.3);
    const std::vector<double> durations = {2.0};
    const auto traj = minco_construct({}, durations, z0, zf);
    const Eigen::MatrixXd ref = qp_oracle({}, durations, z0, zf);
    CHECK((traj.coeffs[0] - ref.topRows(8)).cwiseAbs().maxCoeff() < 1e-8);
  }

  // Multi-segment: the minimizer is now a genuine optimality question; the
  // C4..C6 junction rows must reproduce the KKT solution.
  slp::Rng rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Vec3> waypoints = {rand_vec(rng, 2.0), rand_vec(rng, 2.0)};
    const std::vector<double> durations = {rng.uniform(0.7, 1.6),
                                           rng.uniform(0.7, 1.6),
                                           rng.uniform(0.7, 1.6)};
    const BoundaryState z0 = rand_state(rng);
    const BoundaryState zf = rand_state(rng);
    const auto traj = minco_construct(waypoints, durations, z0, zf);
    const Eigen::MatrixXd ref = qp_oracle(waypoints, durations, z0, zf);
    for (int i = 0; i < 3; ++i) {
      const Eigen::MatrixXd diff = traj.coeffs[i] - ref.block(8 * i, 0, 8, 3);
      const double scale =
          std::max(1.0, ref.block(8 * i, 0, 8, 3).cwiseAbs().maxCoeff());
      CHECK(diff.cwiseAbs().maxCoeff() < 1e-8 * scale);
    }
  }
}

TEST_CASE("construction: long chains stay exact (bandwidth never exceeded)") {
  slp::Rng rng(55);
  const int m = 40;
  std::vector<Vec3> waypoints;
  std::vector<double> durations;
  for (int i = 0; i < m; ++i) durations.push_back(rng.uniform(0.7, 1.6));
  for (int i = 0; i + 1 < m; ++i) waypoints.push_back(rand_vec(rng, 2.0));
  const BoundaryState z0 = rand_state(rng);
  const BoundaryState zf = rand_state(rng);
  const auto traj = minco_construct(waypoints, durations, z0, zf);

  for (int i = 0; i + 1 < m; ++i) {
    CHECK((traj.eval_segment(i, durations[i], 0) - waypoints[i]).norm() < 1e-8);
    for (int k = 0; k <= 3; ++k) {
      const Vec3 left = traj.eval_segment(i, durations[i], k);
      const Vec3 right = traj.eval_segment(i + 1, 0.0, k);
      CHECK((left - right).norm() < 1e-8 * std::max(1.0, left.norm()));
    }
  }
  CHECK((traj.eval(0.0, 0) - z0.p).norm() < 1e-9);
  CHECK((traj.eval(traj.total_time(), 0) - zf.p).norm() < 1e-8);
}

TEST_CASE("energy: closed form matches composite quadrature") {
  slp::Rng rng(23);
  const auto traj = random_trajectory(rng, 2);
  const Vec3 q(1.0, 2.0, 0.5);

  double quad = 0.0;
  const int panels = 512;
  for (int i = 0; i < traj.segments(); ++i) {
    const double t = traj.durations[i];
    const double h = t / panels;
    auto integrand = [&](double tau) {
      const Vec3 s = traj.eval_segment(i, tau, 4);
      return q.x() * s.x() * s.x() + q.y() * s.y() * s.y() + q.z() * s.z() * s.z();
    };
    for (int p = 0; p < panels; ++p) {
      const double a = p * h;
      quad += h / 6.0 * (integrand(a) + 4.0 * integrand(a + 0.5 * h) +
                         integrand(a + h));
    }
  }
  const double closed = snap_energy(traj, q);
  CHECK(std::abs(closed - quad) < 1e-9 * std::max(1.0, quad));
}

TEST_CASE("eval: derivatives match finite differences of one order lower") {
  slp::Rng rng(47);
  const auto traj = random_trajectory(rng, 2);
  const double eps = 1e-6;
  for (int sample = 0; sample < 30; ++sample) {
    const int seg = rng.uniform_int(0, 1);
    const double t = rng.uniform(0.05, traj.durations[seg] - 0.05);
    for (int order = 0; order <= 3; ++order) {
      const Vec3 fd = (traj.eval_segment(seg, t + eps, order) -
                       traj.eval_segment(seg, t - eps, order)) /
                      (2.0 * eps);
      const Vec3 an = traj.eval_segment(seg, t, order + 1);
      CHECK((fd - an).norm() < 1e-6 * std::max(1.0, an.norm()));
    }
  }
}

TEST_CASE("gradients: adjoint pullback matches finite differences") {
  slp::Rng rng(63);
  const Vec3 q(1.0, 0.8, 1.2);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Vec3> waypoints = {rand_vec(rng, 2.0), rand_vec(rng, 2.0)};
    std::vector<double> durations = {rng.uniform(0.7, 1.6),
                                     rng.uniform(0.7, 1.6),
                                     rng.uniform(0.7, 1.6)};
    const BoundaryState z0 = rand_state(rng);
    const BoundaryState zf = rand_state(rng);

    const SplineSystem system(waypoints, durations, z0, zf);
    std::vector<CoeffMatrix> grad_coeffs;
    std::vector<double> grad_t;
    snap_energy_grad(system.trajectory(), q, &grad_coeffs, &grad_t);
    std::vector<Vec3> grad_wp;
    system.propagate_gradient(grad_coeffs, &grad_wp, &grad_t);

    auto energy_at = [&](const std::vector<Vec3>& wp,
                         const std::vector<double>& t) {
      return snap_energy(minco_construct(wp, t, z0, zf), q);
    };
    const double eps = 1e-5;
    for (size_t j = 0; j < waypoints.size(); ++j)
      for (int ax = 0; ax < 3; ++ax) {
        auto lo = waypoints, hi = waypoints;
        lo[j][ax] -= eps;
        hi[j][ax] += eps;
        const double fd =
            (energy_at(hi, durations) - energy_at(lo, durations)) / (2.0 * eps);
        CHECK(std::abs(grad_wp[j][ax] - fd) <
              1e-6 * std::max(1.0, std::abs(fd)));
      }
    for (size_t i = 0; i < durations.size(); ++i) {
      auto lo = durations, hi = durations;
      lo[i] -= eps;
      hi[i] += eps;
      const double fd =
          (energy_at(waypoints, hi) - energy_at(waypoints, lo)) / (2.0 * eps);
      CHECK(std::abs(grad_t[i] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("gradients: a linear coefficient functional pulls back exactly") {
  slp::Rng rng(71);
  std::vector<Vec3> waypoints = {rand_vec(rng, 2.0)};
  std::vector<double> durations = {1.1, 0.9};
  const BoundaryState z0 = rand_state(rng);
  const BoundaryState zf = rand_state(rng);

  std::vector<CoeffMatrix> weight(2);
  for (auto& w : weight)
    for (int r = 0; r < 8; ++r)
      w.row(r) = rand_vec(rng, 1.0).transpose();

  auto functional = [&](const std::vector<Vec3>& wp,
                        const std::vector<double>& t) {
    const auto traj = minco_construct(wp, t, z0, zf);
    double k = 0.0;
    for (int i = 0; i < 2; ++i)
      k += (weight[i].array() * traj.coeffs[i].array()).sum();
    return k;
  };

  const SplineSystem system(waypoints, durations, z0, zf);
  std::vector<double> grad_t(2, 0.0);
  std::vector<Vec3> grad_wp;
  system.propagate_gradient(weight, &grad_wp, &grad_t);

  const double eps = 1e-5;
  for (int ax = 0; ax < 3; ++ax) {
    auto lo = waypoints, hi = waypoints;
    lo[0][ax] -= eps;
    hi[0][ax] += eps;
    const double fd = (functional(hi, durations) - functional(lo, durations)) /
                      (2.0 * eps);
    CHECK(std::abs(grad_wp[0][ax] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
  for (int i = 0; i < 2; ++i) {
    auto lo = durations, hi = durations;
    lo[i] -= eps;
    hi[i] += eps;
    const double fd = (functional(waypoints, hi) - functional(waypoints, lo)) /
                      (2.0 * eps);
    CHECK(std::abs(grad_t[i] - fd) < 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("construction: degenerate inputs are rejected") {
  const BoundaryState rest;
  try {
    minco_construct({Vec3(1, 0, 0)}, {1.0, 0.0}, rest, rest);
    CHECK(false);
  } catch (const slp::Error& e) {
    CHECK(e.code() == slp::ErrorCode::SingularSystem);
  }
  CHECK_THROWS_AS(minco_construct({}, {-1.0}, rest, rest), slp::Error);
  CHECK_THROWS_AS(minco_construct({Vec3(1, 0, 0)}, {1.0}, rest, rest),
                  slp::Error);
  CHECK_THROWS_AS(minco_construct({}, {}, rest, rest), slp::Error);

  const SplineSystem system({}, {1.0}, rest, rest);
  std::vector<CoeffMatrix> too_many(2, CoeffMatrix::Zero());
  std::vector<Vec3> grad_wp;
  std::vector<double> grad_t(2, 0.0);
  CHECK_THROWS_AS(system.propagate_gradient(too_many, &grad_wp, &grad_t),
                  slp::Error);
}

TEST_CASE("eval: domain errors and beyond-degree orders") {
  slp::Rng rng(83);
  const auto traj = random_trajectory(rng, 2);
  const double total = traj.total_time();

  try {
    traj.eval(-0.1, 0);
    CHECK(false);
  } catch (const slp::Error& e) {
    CHECK(e.code() == slp::ErrorCode::OutOfDomain);
  }
  CHECK_THROWS_AS(traj.eval(total + 0.1, 0), slp::Error);
  CHECK_THROWS_AS(traj.eval(std::nan(""), 0), slp::Error);
  CHECK_THROWS_AS(traj.eval(0.5, -1), slp::Error);

  CHECK(traj.eval(0.5, 8).norm() == 0.0);
  CHECK(traj.eval(0.5, 11).norm() == 0.0);

  // Junction times resolve to the earlier segment.
  double local = -1.0;
  CHECK(traj.locate(traj.durations[0], &local) == 0);
  CHECK(local == doctest::Approx(traj.durations[0]));
}

TEST_CASE("serialization: byte-exact round trip and malformed documents") {
  slp::Rng rng(97);
  const auto traj = random_trajectory(rng, 2);

  const std::string text = serialize_trajectory(traj);
  const auto back = deserialize_trajectory(text);
  REQUIRE(back.segments() == traj.segments());
  for (int i = 0; i < traj.segments(); ++i) {
    CHECK(back.durations[i] == traj.durations[i]);
    for (int r = 0; r < 8; ++r)
      for (int ax = 0; ax < 3; ++ax)
        CHECK(back.coeffs[i](r, ax) == traj.coeffs[i](r, ax));
  }
  CHECK(serialize_trajectory(back) == text);

  for (const char* bad :
       {"{]", "{}", "{\"version\":2,\"segments\":[]}",
        "{\"version\":1,\"segments\":[]}",
        "{\"version\":1,\"segments\":[{\"duration\":1.0,\"coeffs\":[[0,0,0]]}]}",
        "{\"version\":1,\"segments\":[{\"duration\":\"x\",\"coeffs\":[]}]}"}) {
    try {
      deserialize_trajectory(bad);
      CHECK_MESSAGE(false, bad);
    } catch (const slp::Error& e) {
      CHECK(e.code() == slp::ErrorCode::UsageError);
    }
  }
}
