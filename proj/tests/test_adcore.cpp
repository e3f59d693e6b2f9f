#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <span>

#include "frog/adcore.hpp"
#include "frog/bench.hpp"
#include "frog/rng.hpp"
#include "frog/tangent.hpp"

using frog::DualBatch;
using frog::Jvp;
using frog::MultiDual;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("lift stores the primal and payload unchanged", "[adcore]") {
  const Eigen::VectorXd theta = vec({1, 2});
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const DualBatch batch = frog::lift(theta, eye);
  REQUIRE(batch.primal == theta);
  REQUIRE(batch.payload == eye);

  const Eigen::VectorXd ones3 = Eigen::VectorXd::Ones(3);
  const DualBatch single = frog::lift(Eigen::VectorXd::Zero(3), Eigen::MatrixXd(ones3));
  REQUIRE(single.k() == 1);
  REQUIRE(single.payload == Eigen::MatrixXd::Ones(3, 1));

  // Round trip on random theta is exact.
  frog::Xoshiro256pp rng(0);
  Eigen::VectorXd random_theta(5);
  for (Eigen::Index i = 0; i < 5; ++i) random_theta(i) = rng.gaussian();
  const DualBatch rt = frog::lift(random_theta, frog::sample_gaussian(5, 2, 0));
  REQUIRE(rt.primal == random_theta);
}

TEST_CASE("lift rejects mismatched payloads", "[adcore]") {
  REQUIRE_THROWS_WITH(frog::lift(vec({1, 2, 3}), Eigen::MatrixXd::Identity(2, 2)),
                      Catch::Matchers::ContainsSubstring("DimensionMismatch"));
}

TEST_CASE("product rule over two variables", "[adcore]") {
  const DualBatch batch = frog::lift(vec({2, 3}), Eigen::MatrixXd::Identity(2, 2));
  const Jvp jvp =
      frog::propagate([](std::span<const MultiDual> x) { return x[0] * x[1]; }, batch);
  REQUIRE(jvp.value == 6.0);
  REQUIRE(jvp.derivs(0) == 3.0);
  REQUIRE(jvp.derivs(1) == 2.0);
}

TEST_CASE("sum of squares along a single axis tangent", "[adcore]") {
  const DualBatch batch = frog::lift(vec({1, 2}), Eigen::MatrixXd(vec({1, 0})));
  const Jvp jvp = frog::propagate(
      [](std::span<const MultiDual> x) { return x[0] * x[0] + x[1] * x[1]; }, batch);
  REQUIRE(jvp.value == 5.0);
  REQUIRE(jvp.derivs(0) == 2.0);
}

TEST_CASE("rosenbrock JVP matches the analytic directional derivative", "[adcore]") {
  const frog::Objective obj = frog::make_objective(frog::ObjectiveKind::rosenbrock, 2);
  const Eigen::VectorXd theta = vec({-1, 0});
  const Eigen::VectorXd v = vec({1, 1});
  const Jvp jvp = frog::propagate(
      [&](std::span<const MultiDual> x) { return obj.eval_dual(x); },
      frog::lift(theta, Eigen::MatrixXd(v)));
  // grad f(-1, 0) = (-404, -200), so grad . (1,1) = -604.
  REQUIRE(jvp.value == 104.0);
  REQUIRE(jvp.derivs(0) == Catch::Approx(-604.0).epsilon(1e-12));
  REQUIRE(jvp.derivs(0) == Catch::Approx(obj.gradient(theta).dot(v)).epsilon(1e-12));
}

TEST_CASE("fd_directional basics", "[adcore]") {
  const auto sphere = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  REQUIRE(frog::fd_directional(sphere, vec({1, 0}), vec({1, 0}), 1e-5) ==
          Catch::Approx(2.0).margin(1e-8));

  // Linear function: exact up to rounding for any theta.
  const auto linear = [](const Eigen::VectorXd& x) { return x.sum(); };
  const Eigen::VectorXd theta = vec({0.3, -0.7, 1.1, 0.0, 2.5});
  REQUIRE(frog::fd_directional(linear, theta, Eigen::VectorXd::Ones(5), 1e-5) ==
          Catch::Approx(5.0).margin(1e-10));

  // Styblinski-Tang at zero along e1: analytic slope 5/2.
  const frog::Objective st = frog::make_objective(frog::ObjectiveKind::styblinski_tang, 4);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(4);
  e1(0) = 1.0;
  const auto st_eval = [&](const Eigen::VectorXd& x) { return st.value(x); };
  REQUIRE(frog::fd_directional(st_eval, Eigen::VectorXd::Zero(4), e1, 1e-5) ==
          Catch::Approx(2.5).margin(1e-6));

  REQUIRE_THROWS_AS(frog::fd_directional(sphere, vec({1}), vec({1}), 0.0), frog::Error);
}

TEST_CASE("every primitive matches finite differences on random draws", "[adcore]") {
  struct Primitive {
    const char* name;
    MultiDual (*dual_fn)(std::span<const MultiDual>);
    double (*plain_fn)(const Eigen::VectorXd&);
    int arity;
  };
  const std::vector<Primitive> primitives{
      {"add", [](std::span<const MultiDual> x) { return x[0] + x[1]; },
       [](const Eigen::VectorXd& x) { return x(0) + x(1); }, 2},
      {"sub", [](std::span<const MultiDual> x) { return x[0] - x[1]; },
       [](const Eigen::VectorXd& x) { return x(0) - x(1); }, 2},
      {"mul", [](std::span<const MultiDual> x) { return x[0] * x[1]; },
       [](const Eigen::VectorXd& x) { return x(0) * x(1); }, 2},
      {"div", [](std::span<const MultiDual> x) { return x[0] / (x[1] * x[1] + 1.5); },
       [](const Eigen::VectorXd& x) { return x(0) / (x(1) * x(1) + 1.5); }, 2},
      {"pow", [](std::span<const MultiDual> x) { return frog::pow(x[0] * x[0] + 0.5, 2.5); },
       [](const Eigen::VectorXd& x) { return std::pow(x(0) * x(0) + 0.5, 2.5); }, 1},
      {"exp", [](std::span<const MultiDual> x) { return frog::exp(x[0]); },
       [](const Eigen::VectorXd& x) { return std::exp(x(0)); }, 1},
      {"log", [](std::span<const MultiDual> x) { return frog::log(x[0] * x[0] + 0.5); },
       [](const Eigen::VectorXd& x) { return std::log(x(0) * x(0) + 0.5); }, 1},
      {"relu", [](std::span<const MultiDual> x) { return frog::relu(x[0] + 0.4); },
       [](const Eigen::VectorXd& x) { return std::max(x(0) + 0.4, 0.0); }, 1},
      {"dot",
       [](std::span<const MultiDual> x) { return frog::dot(x.subspan(0, 3), x.subspan(3, 3)); },
       [](const Eigen::VectorXd& x) { return x.head(3).dot(x.tail(3)); }, 6},
      {"matvec",
       [](std::span<const MultiDual> x) {
         Eigen::MatrixXd m(2, 4);
         m << 1.0, -2.0, 0.5, 3.0, 0.25, 1.5, -1.0, 2.0;
         const auto y = frog::matvec(m, x);
         return y[0] * y[1];
       },
       [](const Eigen::VectorXd& x) {
         Eigen::MatrixXd m(2, 4);
         m << 1.0, -2.0, 0.5, 3.0, 0.25, 1.5, -1.0, 2.0;
         const Eigen::VectorXd y = m * x;
         return y(0) * y(1);
       },
       4},
      {"sum", [](std::span<const MultiDual> x) { return frog::sum(x); },
       [](const Eigen::VectorXd& x) { return x.sum(); }, 5},
  };

  frog::Xoshiro256pp rng(99);
  for (const auto& p : primitives) {
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd theta(p.arity), v(p.arity);
      for (int i = 0; i < p.arity; ++i) {
        theta(i) = 2.0 * rng.uniform01() - 1.0;
        v(i) = rng.gaussian();
      }
      const Jvp jvp = frog::propagate(p.dual_fn, frog::lift(theta, Eigen::MatrixXd(v)));
      const double fd = frog::fd_directional(p.plain_fn, theta, v, 1e-5);
      INFO(p.name << " trial " << trial);
      REQUIRE(std::abs(jvp.derivs(0) - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("directional derivative is linear in the tangent", "[adcore]") {
  const frog::Objective obj = frog::make_objective(frog::ObjectiveKind::styblinski_tang, 6);
  frog::Xoshiro256pp rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd theta(6), v(6), w(6);
    for (int i = 0; i < 6; ++i) {
      theta(i) = rng.gaussian();
      v(i) = rng.gaussian();
      w(i) = rng.gaussian();
    }
    const double a = 2.0 * rng.uniform01() - 1.0;
    const double b = 2.0 * rng.uniform01() - 1.0;

    Eigen::MatrixXd payload(6, 3);
    payload.col(0) = v;
    payload.col(1) = w;
    payload.col(2) = a * v + b * w;
    const Jvp jvp = frog::propagate(
        [&](std::span<const MultiDual> x) { return obj.eval_dual(x); },
        frog::lift(theta, payload));
    const double expected = a * jvp.derivs(0) + b * jvp.derivs(1);
    REQUIRE(jvp.derivs(2) == Catch::Approx(expected).margin(1e-12 * std::max(1.0, std::abs(expected))));
  }
}

TEST_CASE("identity seeding recovers the analytic gradient of each benchmark", "[adcore]") {
  frog::Xoshiro256pp rng(17);
  for (const auto kind : {frog::ObjectiveKind::sphere, frog::ObjectiveKind::rosenbrock,
                          frog::ObjectiveKind::styblinski_tang}) {
    const Eigen::Index n = 7;
    const frog::Objective obj = frog::make_objective(kind, n);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd x(n);
      for (Eigen::Index i = 0; i < n; ++i) x(i) = 3.0 * (2.0 * rng.uniform01() - 1.0);
      const Jvp jvp = frog::propagate(
          [&](std::span<const MultiDual> xs) { return obj.eval_dual(xs); },
          frog::lift(x, Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n))));
      const Eigen::VectorXd grad = obj.gradient(x);
      for (Eigen::Index i = 0; i < n; ++i) {
        INFO(obj.name() << " component " << i);
        REQUIRE(std::abs(jvp.derivs(i) - grad(i)) <= 1e-10 * std::max(1.0, std::abs(grad(i))));
      }
    }
  }
}

TEST_CASE("non-finite intermediates are reported", "[adcore]") {
  const DualBatch batch = frog::lift(vec({-1.0}), Eigen::MatrixXd(vec({1.0})));
  REQUIRE_THROWS_AS(
      frog::propagate([](std::span<const MultiDual> x) { return frog::log(x[0]); }, batch),
      frog::Error);
  REQUIRE_THROWS_AS(
      frog::propagate([](std::span<const MultiDual> x) { return x[0] / (x[0] + 1.0); }, batch),
      frog::Error);
  REQUIRE_THROWS_AS(
      frog::propagate([](std::span<const MultiDual> x) { return frog::pow(x[0], 0.5); }, batch),
      frog::Error);

  // Overflow in exp surfaces as NonFinite too.
  const DualBatch big = frog::lift(vec({1000.0}), Eigen::MatrixXd(vec({1.0})));
  REQUIRE_THROWS_AS(
      frog::propagate(
          [](std::span<const MultiDual> x) { return frog::exp(x[0] * x[0]); }, big),
      frog::Error);
}

TEST_CASE("mixing tangent widths is rejected", "[adcore]") {
  const MultiDual a(1.0, Eigen::VectorXd::Ones(2));
  const MultiDual b(2.0, Eigen::VectorXd::Ones(3));
  REQUIRE_THROWS_AS(a + b, frog::Error);
  REQUIRE_THROWS_AS(a * b, frog::Error);
}

TEST_CASE("constants pass through arithmetic without tangents", "[adcore]") {
  const MultiDual x(3.0, Eigen::VectorXd::Ones(2));
  const MultiDual y = (2.0 * x + 1.0) / 4.0 - 0.5;
  REQUIRE(y.value == Catch::Approx(1.25));
  REQUIRE(y.tangent.size() == 2);
  REQUIRE(y.tangent(0) == Catch::Approx(0.5));
  const MultiDual c = MultiDual(2.0) * MultiDual(4.0);
  REQUIRE(c.is_constant());
}

TEST_CASE("relu subgradient at zero is zero", "[adcore]") {
  const MultiDual at_zero(0.0, Eigen::VectorXd::Ones(3));
  const MultiDual r = frog::relu(at_zero);
  REQUIRE(r.value == 0.0);
  REQUIRE(r.tangent == Eigen::VectorXd::Zero(3));

  const MultiDual pos(2.0, Eigen::VectorXd::Ones(3));
  REQUIRE(frog::relu(pos).tangent == Eigen::VectorXd::Ones(3));
}
