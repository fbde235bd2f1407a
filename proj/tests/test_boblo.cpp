#include <cmath>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "instances.hpp"
#include "oboost/boblo.hpp"
#include "oboost/errors.hpp"
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

BanditConfig bandit(std::optional<double> rate, int n = 3, std::uint64_t seed = 1) {
  BanditConfig c;
  c.explore_rate = rate;
  c.inner.n_learners = n;
  c.inner.gamma = 0.5;
  c.inner.learner.kind = "ridge";
  c.inner.learner.step = 0.1;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("one-point estimate") {
  CHECK(one_point_estimate(4, 0.1, false, 2, 0.5).direction.norm() == 0.0);
  // Coordinate 2 of 4 (index 1): (d / eta) * observed = 4 / 0.1 * 0.5.
  const Point e = one_point_estimate(4, 0.1, true, 1, 0.5).direction;
  CHECK((e - vec({0.0, 20.0, 0.0, 0.0})).norm() < 1e-12);
}

TEST_CASE("one-point estimate is unbiased by exact enumeration") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 1 + rng.index(16);
    const double eta = rng.uniform(0.01, 1.0);
    const Point f = random_point(rng, d, 2.0);
    // Outcomes: no exploration (1 - eta), or coordinate i (eta / d each).
    Point mean = (1.0 - eta) * one_point_estimate(d, eta, false, 0, 0.0).direction;
    for (std::size_t i = 0; i < d; ++i) {
      Point e = Point::Zero(static_cast<Eigen::Index>(d));
      e[static_cast<Eigen::Index>(i)] = 1.0;
      mean += (eta / static_cast<double>(d)) * one_point_estimate(d, eta, true, i, f.dot(e)).direction;
    }
    CHECK((mean - f).lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, f.lpNorm<Eigen::Infinity>()));
    CHECK((testkit::bandit_expectation(f, eta) - mean).norm() <= 1e-12);
  }
}

TEST_CASE("explore rate 1: always a basis vector, uniform coordinates") {
  auto k = DecisionSet::simplex(4);
  Boblo b(k, 1, bandit(1.0));
  std::vector<int> counts(4, 0);
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    const Point x = b.step(Context{vec({0.0})});
    CHECK(x.sum() == 1.0);
    CHECK(x.maxCoeff() == 1.0);
    const auto& r = b.feedback(0.25);
    REQUIRE(r.explored);
    ++counts[*r.coordinate];
    CHECK(r.estimate.direction.lpNorm<Eigen::Infinity>() <= 4.0 / 1.0 * 0.25 + 1e-15);
  }
  const double p = 0.25, sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) <= 3 * sigma);
}

TEST_CASE("explore rate 0: inner prediction, zero estimates, frozen learners") {
  auto k = DecisionSet::box(Point::Zero(3), Point::Ones(3));
  Rng rng(5);
  Boblo b(k, 2, bandit(0.0));
  const Context probe{vec({0.3, -0.2})};
  const Point before = b.inner().predict(probe).played;
  for (int t = 0; t < 200; ++t) {
    const Context c{random_point(rng, 2, 1.0)};
    const Point x = b.step(c);
    CHECK((x - b.inner().predict(c).played).norm() == 0.0);
    const auto& r = b.feedback(rng.uniform(-1.0, 1.0));
    CHECK_FALSE(r.explored);
    CHECK(r.estimate.direction.norm() == 0.0);
  }
  CHECK((b.inner().predict(probe).played - before).norm() == 0.0);
  CHECK(b.inner().learner(0).rounds() == 200);
}

TEST_CASE("fixed seed reproduces the exploration sequence") {
  auto k = DecisionSet::simplex(3);
  auto run = [&](std::uint64_t seed) {
    Boblo b(k, 1, bandit(0.3, 2, seed));
    Rng rng(9);
    std::vector<int> seq;
    for (int t = 0; t < 300; ++t) {
      b.step(Context{random_point(rng, 1, 1.0)});
      const auto& r = b.feedback(rng.uniform());
      seq.push_back(r.explored ? static_cast<int>(*r.coordinate) : -1);
    }
    return seq;
  };
  CHECK(run(4) == run(4));
  CHECK(run(4) != run(5));
}

TEST_CASE("estimator magnitude bound") {
  auto k = DecisionSet::simplex(5);
  Rng rng(11);
  Boblo b(k, 1, bandit(0.2));
  for (int t = 0; t < 500; ++t) {
    const Point f = random_point(rng, 5, 3.0);
    const Point x = b.step(Context{vec({0.0})});
    const auto& r = b.feedback(f.dot(x));
    if (r.explored) {
      CHECK((r.estimate.direction.array() != 0.0).count() <= 1);
      CHECK(r.estimate.direction.lpNorm<Eigen::Infinity>() <= 5.0 / 0.2 * f.lpNorm<Eigen::Infinity>() + 1e-12);
    }
  }
}

TEST_CASE("protocol and construction errors") {
  auto k = DecisionSet::simplex(3);
  Boblo b(k, 1, bandit(0.5));
  CHECK_THROWS_AS(b.feedback(0.1), ContractViolation);
  b.step(Context{vec({0.0})});
  CHECK_THROWS_AS(b.step(Context{vec({0.0})}), ContractViolation);
  CHECK_THROWS_AS(b.feedback(NAN), NonFiniteError);
  b.feedback(0.1);
  CHECK(b.rounds() == 1);

  // A ball of radius 0.5 around the simplex centroid misses the vertices.
  CHECK_THROWS_AS(Boblo(DecisionSet::ball(Point::Constant(3, 1.0 / 3.0), 0.5), 1, bandit(0.5)),
                  ConfigError);
  CHECK_NOTHROW(Boblo(DecisionSet::box(Point::Constant(3, -1.0), Point::Constant(3, 1.0)), 1, bandit(0.5)));
  CHECK_THROWS_AS(Boblo(k, 1, bandit(1.5)), ConfigError);
  CHECK_THROWS_AS(Boblo(k, 1, bandit(std::nullopt)), ConfigError);  // auto rate without horizon
}

TEST_CASE("default explore rate") {
  CHECK(default_explore_rate(4, 10000, 16, 0.5, 100.0) <= 1.0);
  // With R_W = 0 the rate falls like N^(-1/4).
  double last = 2.0;
  for (int n = 1; n <= (1 << 28); n *= 4) {
    const double r = default_explore_rate(1, 1000, n, 1.0, 0.0);
    CHECK((r < last || r == 1.0));
    last = r;
  }
  CHECK(last < 0.03);
  // Independent 1-D minimization of A / eta + eta * T over (0, 1]: golden section
  // on the values (accurate to about sqrt(machine epsilon)) and bisection on the
  // sign of the derivative (accurate to rounding).
  struct Case {
    std::size_t d;
    std::uint64_t t;
    int n;
    double gamma, rw;
  };
  for (const Case& c : {Case{4, 10000, 16, 0.5, 100.0}, Case{2, 1000000, 100000, 1.0, 50.0},
                        Case{3, 100000, 40000, 0.8, 10.0}, Case{1, 10, 1, 0.1, 0.0}}) {
    const double t = static_cast<double>(c.t);
    const double a = 4.0 * c.d * t / (c.gamma * std::sqrt(double(c.n))) + 2.0 * c.d * c.rw / c.gamma;
    const double oracle = testkit::golden_section([&](double eta) { return a / eta + eta * t; }, 1e-12, 1.0, 1e-13);
    double lo = 1e-12, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (-a / (mid * mid) + t < 0.0 ? lo : hi) = mid;
    }
    const double rate = default_explore_rate(c.d, c.t, c.n, c.gamma, c.rw);
    CHECK(rate > 0.0);
    CHECK(rate <= 1.0);
    CHECK(std::abs(rate - oracle) <= 1e-7);
    CHECK(std::abs(rate - 0.5 * (lo + hi)) <= 1e-9);
  }
}

TEST_CASE("arm sampling") {
  Rng rng(13);
  CHECK(sample_arm(vec({0.0, 0.0, 1.0, 0.0}), rng) == 2);
  const int n = 10000;
  std::vector<int> counts(4, 0);
  for (int t = 0; t < n; ++t) ++counts[sample_arm(Point::Constant(4, 0.25), rng)];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n / 4.0) <= 3 * sigma);

  // Expected arm loss equals the linear loss: frequencies against x on a skewed point.
  const Point x = vec({0.1, 0.6, 0.3});
  const Point f = vec({1.0, -2.0, 0.5});
  double mean = 0.0;
  const int m = 200000;
  for (int t = 0; t < m; ++t) mean += f[static_cast<Eigen::Index>(sample_arm(x, rng))];
  mean /= m;
  double var = 0.0;
  for (int i = 0; i < 3; ++i) var += x[i] * (f[i] - f.dot(x)) * (f[i] - f.dot(x));
  CHECK(std::abs(mean - f.dot(x)) <= 4 * std::sqrt(var / m));

  bool repaired = false;
  const std::size_t a = sample_arm(vec({-0.1, 0.0, 1.2}), rng, &repaired);
  CHECK(repaired);
  CHECK(a == 2);
  CHECK_THROWS_AS(sample_arm(vec({-1.0, 0.0}), rng), ContractViolation);
}

TEST_CASE("contextual bandit arms come from the played distribution") {
  auto k = DecisionSet::simplex(3);
  Boblo b(k, 1, bandit(0.2));
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t arm = b.contextual_bandit_arm(Context{vec({rng.uniform()})});
    CHECK(arm < 3);
    const auto played = b.log().size();
    b.feedback(arm == 0 ? 1.0 : 0.0);
    CHECK(b.log().size() == played + 1);
    if (b.log().back().explored) CHECK(*b.log().back().coordinate == arm);
  }
  CHECK(b.repaired_arms() == 0);
  Boblo box(DecisionSet::box(Point::Zero(2), Point::Ones(2)), 1, bandit(0.2));
  CHECK_THROWS_AS(box.contextual_bandit_arm(Context{vec({0.0})}), ContractViolation);
}

TEST_CASE("round log and config records") {
  auto k = DecisionSet::simplex(2);
  Boblo b(k, 1, bandit(1.0));
  for (int t = 0; t < 4; ++t) {
    b.step(Context{vec({0.0})});
    b.feedback(0.5);
  }
  std::ostringstream os;
  b.write_log(os);
  std::istringstream is(os.str());
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    auto j = nlohmann::json::parse(line);
    CHECK(j["b_t"] == 1);
    CHECK(j["estimate_nonzeros"] == 1);
    CHECK(j["observed"] == 0.5);
    ++n;
  }
  CHECK(n == 4);

  auto c = bandit_config_from_json(nlohmann::json::parse(
      R"({"explore_rate": "auto", "horizon": 1000, "seed": 3, "inner": {"N": 4, "gamma": 0.5}})"));
  CHECK_FALSE(c.explore_rate.has_value());
  CHECK(c.inner.n_learners == 4);
  Boblo a(DecisionSet::simplex(3), 2, c);
  CHECK(a.explore_rate() == doctest::Approx(default_explore_rate(3, 1000, 4, 0.5, 0.0)));
  CHECK_THROWS_AS(bandit_config_from_json(nlohmann::json::parse(R"({"explore_rate": "lots"})")), ConfigError);
}
