#include <cmath>

#include <doctest.h>

#include "instances.hpp"
#include "oboost/errors.hpp"
#include "oboost/extension.hpp"
#include "testkit.hpp"

using namespace oboost;
using testkit::random_point;

namespace {

Point vec(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

const ConvexLoss kZero1 = ConvexLoss::linear(Point::Zero(1));

// Same squared-distance loss hidden behind the generic interface.
ConvexLoss as_custom(const ConvexLoss& f) {
  return ConvexLoss::custom(
      f.dim(), [f](const Point& x) { return f.eval(x); },
      [f](const Point& x) { return f.grad(x); }, std::nullopt, f.smoothness());
}

}  // namespace

TEST_CASE("prox: zero loss inside K is the identity") {
  auto k = DecisionSet::interval(-1.0, 1.0);
  auto r = prox(kZero1, k, 1.0, 0.5, vec({0.3}));
  CHECK(r.point[0] == doctest::Approx(0.3));
  CHECK(r.converged);
}

TEST_CASE("prox: zero loss outside an interval") {
  auto k = DecisionSet::interval(-1.0, 1.0);
  auto r = prox(kZero1, k, 1.0, 0.5, vec({2.0}));
  CHECK(r.point[0] == doctest::Approx(1.5).epsilon(1e-14));
  // 1-D grid oracle on max(|y| - 1, 0) + (2 - y)^2.
  testkit::GridSpec grid{vec({-3.0}), vec({4.0}), 401};
  auto g = testkit::grid_moreau([](const Point& y) { return std::max(std::abs(y[0]) - 1.0, 0.0); },
                                0.5, vec({2.0}), grid);
  CHECK(std::abs(g.argmin[0] - 1.5) <= grid.spacing());
}

TEST_CASE("prox: linear loss on an effectively unbounded set") {
  auto k = DecisionSet::ball(Point::Zero(2), 1e6);
  const Point g = vec({0.7, -1.3});
  const Point x = vec({0.2, 0.4});
  auto r = prox(ConvexLoss::linear(g), k, g.norm(), 0.1, x);
  CHECK((r.point - (x - 0.1 * g)).norm() < 1e-12);
}

TEST_CASE("extended value and gradient on the interval example") {
  auto k = DecisionSet::interval(-1.0, 1.0);
  ExtendedLoss e(kZero1, k, 0.5, 1.0);
  CHECK(e.value(vec({0.3})) == 0.0);
  CHECK(e.gradient(vec({0.3}))[0] == 0.0);
  CHECK(e.value(vec({2.0})) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(e.gradient(vec({2.0}))[0] == doctest::Approx(1.0).epsilon(1e-14));
  testkit::GridSpec grid{vec({-3.0}), vec({4.0}), 401};
  auto g = testkit::grid_moreau([](const Point& y) { return std::max(std::abs(y[0]) - 1.0, 0.0); },
                                0.5, vec({2.0}), grid);
  CHECK(std::abs(g.value - 0.75) <= grid.spacing() * 2.0);
}

TEST_CASE("extension: on-set agreement and projection non-increase") {
  Rng rng(101);
  double tol = ProxOptions{}.tol;
  for (const auto& fam : testkit::small_set_families()) {
    for (int i = 0; i < 200; ++i) {
      const bool square = i % 2 == 0;
      const auto f = testkit::random_loss(rng, fam.set.dim(), square);
      const double gap = 2.0;
      const double g = lipschitz_bound(f, fam.set, gap);
      const double delta = rng.uniform(0.02, 0.5);
      ExtendedLoss e(f, fam.set, delta, g);

      const Point inside = fam.set.project(random_point(rng, fam.set.dim(), 2.0));
      CHECK(std::abs(e.value(inside) - f.eval(inside)) <= delta * g * g / 2.0 + 10 * tol);

      const Point out = testkit::random_exterior(rng, fam.set, gap);
      CHECK(e.value(fam.set.project(out)) <= e.value(out) + g * g * delta + 10 * tol);
      // Upper bound by the unsmoothed composite.
      CHECK(e.value(out) <= f.eval(out) + g * fam.set.distance(out) + 1e-12);
    }
  }
}

TEST_CASE("extension: gradient matches finite differences and is 1/delta-smooth") {
  Rng rng(103);
  for (const auto& fam : testkit::small_set_families()) {
    for (int i = 0; i < 40; ++i) {
      const auto f = testkit::random_loss(rng, fam.set.dim(), i % 2 == 0);
      const double delta = rng.uniform(0.05, 0.5);
      ExtendedLoss e(f, fam.set, delta, lipschitz_bound(f, fam.set, 3.0));
      const Point x = fam.set.centroid() + random_point(rng, fam.set.dim(), 2.5);
      const Point fd = testkit::finite_diff_grad([&](const Point& y) { return e.value(y); }, x);
      const Point g = e.gradient(x);
      CHECK((fd - g).norm() <= 1e-3 * std::max(1.0, g.norm()));

      const Point y = fam.set.centroid() + random_point(rng, fam.set.dim(), 2.5);
      CHECK((e.gradient(x) - e.gradient(y)).norm() <= (x - y).norm() / delta + 1e-9);
    }
  }
}

TEST_CASE("extension: agrees with the grid Moreau oracle in 2-D") {
  Rng rng(107);
  for (const auto& fam : testkit::small_set_families()) {
    if (fam.set.dim() != 2) continue;
    for (int i = 0; i < 5; ++i) {
      const auto f = testkit::random_loss(rng, 2, i % 2 == 0);
      const double kappa = lipschitz_bound(f, fam.set, 3.0);
      const double delta = 0.3;
      ExtendedLoss e(f, fam.set, delta, kappa);
      const Point x = fam.set.centroid() + random_point(rng, 2, 1.5);
      const Point c = fam.set.centroid();
      testkit::GridSpec grid{c.array() - 4.0, c.array() + 4.0, 401};
      auto composite = [&](const Point& y) { return f.eval(y) + kappa * fam.set.distance(y); };
      auto oracle = testkit::grid_moreau(composite, delta, x, grid);
      CHECK_FALSE(oracle.on_boundary);
      const double ghat = lipschitz_bound(f, fam.set, 4.0) + kappa;
      CHECK(oracle.value >= e.value(x) - 1e-9);
      CHECK(oracle.value - e.value(x) <= std::max(grid.spacing() * ghat, ProxOptions{}.tol));
    }
  }
}

TEST_CASE("generic splitting solver matches the closed form") {
  Rng rng(109);
  for (const auto& fam : testkit::small_set_families()) {
    for (int i = 0; i < 30; ++i) {
      const auto f = testkit::random_loss(rng, fam.set.dim(), true);
      const double kappa = lipschitz_bound(f, fam.set, 2.0);
      const double delta = rng.uniform(0.05, 0.5);
      const Point x = fam.set.centroid() + random_point(rng, fam.set.dim(), 3.0);
      auto exact = prox(f, fam.set, kappa, delta, x);
      auto iter = prox(as_custom(f), fam.set, kappa, delta, x, {2000, 1e-10});
      CHECK(iter.converged);
      CHECK((exact.point - iter.point).norm() < 1e-8);
    }
  }
}

TEST_CASE("generic solver: quadratic loss against the grid oracle") {
  Rng rng(113);
  auto box = DecisionSet::box(vec({-1.0, -1.0}), vec({1.0, 1.0}));
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 0.5, 0.5, 1.0;
  const auto q = ConvexLoss::quadratic(a, vec({-1.0, 0.5}));
  const double kappa = lipschitz_bound(q, box, 2.0);
  ExtendedLoss e(q, box, 0.2, kappa);
  for (int i = 0; i < 5; ++i) {
    const Point x = random_point(rng, 2, 2.0);
    auto ev = e.evaluate(x);
    CHECK(ev.prox.converged);
    CHECK(ev.prox.residual <= ProxOptions{}.tol);
    testkit::GridSpec grid{Point::Constant(2, -3.0), Point::Constant(2, 3.0), 401};
    auto oracle = testkit::grid_moreau(
        [&](const Point& y) { return q.eval(y) + kappa * box.distance(y); }, 0.2, x, grid);
    CHECK(oracle.value - ev.value <= grid.spacing() * 2.0 * kappa);
    CHECK(oracle.value >= ev.value - 1e-9);
  }
}

TEST_CASE("prox: exhausted budget flags the residual") {
  auto box = DecisionSet::box(vec({-1.0, -1.0}), vec({1.0, 1.0}));
  Eigen::MatrixXd a(2, 2);
  a << 50.0, 0.0, 0.0, 0.01;
  const auto q = ConvexLoss::quadratic(a, vec({3.0, -2.0}));
  auto r = prox(q, box, 1.0, 10.0, vec({2.0, 2.0}), {2, 1e-14});
  CHECK_FALSE(r.converged);
  CHECK(r.residual > 1e-14);
  CHECK(r.point.allFinite());
}

TEST_CASE("prox: contract errors") {
  auto k = DecisionSet::interval(-1.0, 1.0);
  CHECK_THROWS_AS(prox(kZero1, k, 1.0, 0.0, vec({0.0})), ContractViolation);
  CHECK_THROWS_AS(prox(kZero1, k, 1.0, 1.0, vec({0.0, 1.0})), ContractViolation);
  CHECK_THROWS_AS(ExtendedLoss(kZero1, k, -1.0, 1.0), ConfigError);
}

TEST_CASE("smoothing radius rules") {
  CHECK(smoothing_radius(DeltaRule::balanced, 2.0, 4.0, 0.5, 16) == doctest::Approx(2.0 / (4.0 * 0.5 * 4.0)));
  CHECK(smoothing_radius(DeltaRule::sqrt_rule, 2.0, 4.0, 0.5, 16) ==
        doctest::Approx(std::sqrt(4.0 / 8.0)));
  auto e = ExtendedLoss::with_defaults(ConvexLoss::square(0.5), DecisionSet::interval(-1.0, 1.0),
                                       0.5, 4);
  // Region (1/gamma) K = [-2, 2] inflated by D/(gamma sqrt N) = 2: G = 2 (0.5 + 2 + 2).
  CHECK(e.kappa() == doctest::Approx(9.0));
  CHECK(e.delta() == doctest::Approx(2.0 / (9.0 * 0.5 * 2.0)));
}
