#include <doctest.h>

#include <cmath>
#include <random>

#include "cssdf/spline.hpp"

using namespace cssdf;

namespace {

struct Fixture {
  Eigen::MatrixXd q;
  Eigen::VectorXd T, v0, v1;
};

Fixture random_fixture(int n, int N, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Fixture f;
  f.q = Eigen::MatrixXd(n, N + 1);
  for (int k = 0; k <= N; ++k)
    for (int d = 0; d < n; ++d) f.q(d, k) = u(rng);
  f.T = Eigen::VectorXd(N);
  for (int i = 0; i < N; ++i) f.T[i] = 0.5 + 0.5 * (u(rng) + 1.0);
  f.v0 = Eigen::VectorXd(n);
  f.v1 = Eigen::VectorXd(n);
  for (int d = 0; d < n; ++d) {
    f.v0[d] = u(rng);
    f.v1[d] = u(rng);
  }
  return f;
}

}  // namespace

TEST_CASE("spline interpolates and is twice continuously differentiable") {
  const Fixture f = random_fixture(3, 6, 1);
  const SplineTrajectory s = make_spline(f.q, f.T, f.v0, f.v1);
  double t = 0.0;
  for (int i = 0; i < s.segments(); ++i) {
    CHECK((s.eval(t).q - f.q.col(i)).norm() < 1e-10);
    if (i > 0) {
      CHECK((s.end_velocity(i - 1) - s.start_velocity(i)).norm() < 1e-10);
      const double e = 1e-7;
      CHECK((s.eval(t - e).qdd - s.eval(t + e).qdd).norm() < 1e-5);
    }
    t += f.T[i];
  }
  CHECK((s.eval(s.total_time()).q - f.q.col(6)).norm() < 1e-10);
  CHECK((s.start_velocity(0) - f.v0).norm() < 1e-10);
  CHECK((s.end_velocity(5) - f.v1).norm() < 1e-10);
  CHECK((s.eval(0.0).qdd - s.m.col(0)).norm() < 1e-10);
}

TEST_CASE("clamped spline reproduces a cubic exactly") {
  auto cubic = [](double t) { return 0.4 - 1.2 * t + 0.7 * t * t - 0.25 * t * t * t; };
  auto dcubic = [](double t) { return -1.2 + 1.4 * t - 0.75 * t * t; };
  Eigen::VectorXd T(4);
  T << 0.3, 0.9, 0.5, 1.1;
  Eigen::MatrixXd q(1, 5);
  double t = 0.0;
  for (int k = 0; k < 5; ++k) {
    q(0, k) = cubic(t);
    if (k < 4) t += T[k];
  }
  const SplineTrajectory s =
      make_spline(q, T, Eigen::VectorXd::Constant(1, dcubic(0.0)), Eigen::VectorXd::Constant(1, dcubic(t)));
  for (double x = 0.0; x <= t; x += 0.037) {
    CHECK(s.eval(x).q[0] == doctest::Approx(cubic(x)).epsilon(1e-10));
    CHECK(s.eval(x).qd[0] == doctest::Approx(dcubic(x)).epsilon(1e-9));
  }
}

TEST_CASE("acceleration adjoint matches finite differences") {
  const Fixture f = random_fixture(2, 5, 2);
  const SplineTrajectory s = make_spline(f.q, f.T, f.v0, f.v1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd W(2, 6);
  for (int i = 0; i < W.size(); ++i) W.data()[i] = nd(rng);
  auto L = [&](const Eigen::MatrixXd& q, const Eigen::VectorXd& T) {
    return (W.array() * solve_accelerations(q, T, f.v0, f.v1).array()).sum();
  };
  Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(2, 6);
  Eigen::VectorXd dT = Eigen::VectorXd::Zero(5);
  accumulate_acceleration_adjoint(s, W, dq, dT);
  const double h = 1e-6;
  for (int k = 0; k < 6; ++k)
    for (int d = 0; d < 2; ++d) {
      Eigen::MatrixXd a = f.q, b = f.q;
      a(d, k) += h;
      b(d, k) -= h;
      CHECK(dq(d, k) == doctest::Approx((L(a, f.T) - L(b, f.T)) / (2 * h)).epsilon(1e-6));
    }
  for (int i = 0; i < 5; ++i) {
    Eigen::VectorXd a = f.T, b = f.T;
    a[i] += h;
    b[i] -= h;
    CHECK(dT[i] == doctest::Approx((L(f.q, a) - L(f.q, b)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("segment sample partials") {
  const Fixture f = random_fixture(2, 3, 4);
  SplineTrajectory s = make_spline(f.q, f.T, f.v0, f.v1);
  const int i = 1;
  const double frac = 0.37;
  const SegmentSample smp = sample_segment(s, i, frac);
  CHECK((smp.q - s.eval(f.T[0] + frac * f.T[1]).q).norm() < 1e-12);
  const double h = 1e-6;
  auto pos = [&](const SplineTrajectory& t) { return sample_segment(t, i, frac).q; };
  SplineTrajectory a = s, b = s;
  a.q(0, i) += h;
  b.q(0, i) -= h;
  CHECK(smp.d_qi == doctest::Approx((pos(a)[0] - pos(b)[0]) / (2 * h)));
  a = s;
  b = s;
  a.m(1, i + 1) += h;
  b.m(1, i + 1) -= h;
  CHECK(smp.d_mj == doctest::Approx((pos(a)[1] - pos(b)[1]) / (2 * h)));
  a = s;
  b = s;
  a.T[i] += h;
  b.T[i] -= h;
  CHECK(((pos(a) - pos(b)) / (2 * h) - smp.d_T).norm() < 1e-7);
}
