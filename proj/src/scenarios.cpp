#include "oboost/scenarios.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "oboost/boblo.hpp"
#include "oboost/booco.hpp"
#include "oboost/rng.hpp"

namespace oboost::scenarios {

namespace {

constexpr std::uint64_t kEnvironmentStream = 0x656e76;

Point scalar(double x) { return Point::Constant(1, x); }

std::vector<Hypothesis> rotations() {
  std::vector<Hypothesis> hs;
  for (int j = 0; j < 4; ++j) {
    const double a = j * M_PI / 2.0;
    hs.push_back([a](const Context& c) -> Point {
      const double th = std::atan2(c.features[1], c.features[0]);
      Point v(2);
      v << 0.8 * std::cos(th + a), 0.8 * std::sin(th + a);
      return v;
    });
  }
  return hs;
}

// Arm j in context class 0; class 1 shifts odd arms by one and even arms by three.
std::vector<Hypothesis> arm_policies() {
  std::vector<Hypothesis> hs;
  for (int j = 0; j < 4; ++j) {
    hs.push_back([j](const Context& c) -> Point {
      const int cls = c.features[0] > 0.0 ? 1 : 0;
      Point e = Point::Zero(4);
      e[(j + cls * (j % 2 ? 1 : 3)) % 4] = 1.0;
      return e;
    });
  }
  return hs;
}

std::vector<Hypothesis> shifted(const std::vector<Hypothesis>& hs, const Point& offset) {
  std::vector<Hypothesis> out;
  for (const auto& h : hs) out.push_back([h, offset](const Context& c) -> Point { return h(c) - offset; });
  return out;
}

}  // namespace

OcoOutcome run_oco(const OcoScenario& s) {
  const DecisionSet k = DecisionSet::ball(Point::Zero(2), 1.0);
  const auto hs = rotations();
  const double w[4] = {0.4, 0.3, 0.2, 0.1};
  const double d = k.diameter();
  const double n = static_cast<double>(s.n_learners);
  const double g = 2.0 * (1.0 / s.gamma + 1.0 + d / (s.gamma * std::sqrt(n)));

  BoocoConfig cfg;
  cfg.n_learners = s.n_learners;
  cfg.gamma = s.gamma;
  cfg.lipschitz = g;
  cfg.keep_transcript = false;
  cfg.seed = s.seed;
  std::vector<std::unique_ptr<WeakLearner>> learners;
  for (int i = 0; i < s.n_learners; ++i) {
    learners.push_back(std::make_unique<SyntheticGammaOracle>(k, s.gamma, 2, hs, OracleRule::hedge, 2.0 * g * d));
  }
  Booco booster(k, 2, cfg, std::move(learners));

  Rng env(derive_seed(s.seed, kEnvironmentStream));
  HullProblem problem;
  for (int t = 0; t < s.horizon; ++t) {
    const double th = env.uniform(0.0, 2.0 * M_PI);
    Context c{Point(2)};
    c.features << std::cos(th), std::sin(th);
    Point y = Point::Zero(2);
    std::vector<Point> row;
    for (int j = 0; j < 4; ++j) {
      row.push_back(hs[static_cast<std::size_t>(j)](c));
      y += w[j] * row.back();
    }
    y[0] += 0.1 * env.normal();
    y[1] += 0.1 * env.normal();
    y = k.project(y);
    const ConvexLoss f = ConvexLoss::squared_distance(y);
    const RoundTrajectory traj = booster.predict(c);
    booster.update(f, traj);
    problem.outputs.push_back(std::move(row));
    problem.losses.push_back(f);
  }

  OcoOutcome o;
  o.realized = booster.cumulative_loss();
  o.regret = o.realized - hull_minimize(problem.outputs, problem.losses).value;
  const double tt = static_cast<double>(s.horizon);
  o.bound = 4.0 * g * d * tt / (s.gamma * std::sqrt(n)) +
            (2.0 * g * d / s.gamma) * 2.0 * std::sqrt(tt * std::log(4.0));
  o.lipschitz = g;
  o.diameter = d;
  if (s.keep_problem) o.problem = std::move(problem);
  return o;
}

BanditOutcome run_bandit(const BanditScenario& s) {
  const std::size_t d = 4;
  const DecisionSet k = DecisionSet::simplex(d);
  const Recentered rc = recenter(k);
  const auto hs = arm_policies();
  const auto centered = shifted(hs, rc.offset);

  BanditConfig cfg;
  cfg.inner.n_learners = s.n_learners;
  cfg.inner.gamma = s.gamma;
  cfg.inner.keep_transcript = false;
  cfg.inner.seed = s.seed;
  cfg.explore_rate = s.explore_rate;
  cfg.horizon = static_cast<std::uint64_t>(s.horizon);
  cfg.seed = s.seed;
  const double eta = s.explore_rate.value_or(
      default_explore_rate(d, cfg.horizon, s.n_learners, s.gamma, cfg.weak_regret_bound));
  // Estimates have norm at most d / eta, so linear stage losses span at most that times D.
  const double scale = static_cast<double>(d) / std::max(eta, 1e-12) * rc.set.diameter();
  std::vector<std::unique_ptr<WeakLearner>> learners;
  for (int i = 0; i < s.n_learners; ++i) {
    learners.push_back(std::make_unique<SyntheticGammaOracle>(rc.set, s.gamma, 1, centered,
                                                              OracleRule::hedge, scale));
  }
  Boblo bandit(k, 1, cfg, std::move(learners));

  Rng env(derive_seed(s.seed, kEnvironmentStream));
  Point mu0(4), mu1(4);
  mu0 << 0.5, 0.6, 0.7, 0.4;
  mu1 << 0.7, 0.3, 0.6, 0.5;
  HullProblem problem;
  double realized = 0.0;
  for (int t = 0; t < s.horizon; ++t) {
    Context c{Point(1)};
    c.features[0] = env.uniform(-1.0, 1.0);
    const Point& mu = c.features[0] > 0.0 ? mu1 : mu0;
    Point f(4);
    for (Eigen::Index i = 0; i < 4; ++i) f[i] = env.bernoulli(mu[i]) ? 1.0 : 0.0;
    const Point x = bandit.step(c);
    realized += f.dot(x);
    bandit.feedback(f.dot(x));
    std::vector<Point> row;
    for (const auto& h : hs) row.push_back(h(c));
    problem.outputs.push_back(std::move(row));
    problem.losses.push_back(ConvexLoss::linear(f));
  }

  BanditOutcome o;
  o.realized = realized;
  o.regret = realized - hull_minimize(problem.outputs, problem.losses).value;
  o.explore_rate = bandit.explore_rate();
  if (s.keep_problem) o.problem = std::move(problem);
  return o;
}

ScoInstance sco_instance() {
  ScoInstance in{DecisionSet::interval(-1.0, 1.0), {}, {0.1, 0.2, 0.3, 0.4}, {}};
  in.hypotheses = {
      [](const Context& c) { return scalar(0.9 * std::cos(3.0 * c.features[0])); },
      [](const Context& c) { return scalar(-0.7 + 0.5 * c.features[0]); },
      [](const Context& c) { return scalar(c.features[0] > 0.5 ? 0.6 : -0.9); },
  };
  // Targets: an interior mixture, pushed off the hull so the optimum is not zero.
  const double cs[4] = {0.0, 0.33, 0.66, 1.0};
  const double w[3] = {0.5, 0.3, 0.2};
  const double push[4] = {0.05, -0.04, 0.03, -0.02};
  for (int a = 0; a < 4; ++a) {
    const Context c{scalar(cs[a])};
    double y = push[a];
    for (int j = 0; j < 3; ++j) y += w[j] * in.hypotheses[static_cast<std::size_t>(j)](c)[0];
    in.atoms.push_back({ConvexLoss::squared_distance(scalar(y)), c});
  }
  return in;
}

ScoOutcome run_sco(const ScoScenario& s) {
  const ScoInstance in = sco_instance();
  FiniteSupportOracle oracle(in.atoms, in.probabilities, 0);
  ErmOptimizer erm(in.hypotheses, s.gamma, ErmMode::exact);
  B4coConfig cfg;
  cfg.n_stages = s.n_stages;
  const B4coResult r = b4co(oracle, erm, in.set, cfg);

  const Recentered rc = recenter(in.set);
  const double d = in.set.diameter();
  const double slack = d / (s.gamma * std::sqrt(static_cast<double>(s.n_stages)));
  double g = 0.0;
  HullProblem problem;
  for (std::size_t a = 0; a < in.atoms.size(); ++a) {
    const ConvexLoss f0 = in.atoms[a].loss.translated(rc.offset);
    g = std::max(g, lipschitz_bound(f0, rc.set.scaled(1.0 / s.gamma), slack));
    std::vector<Point> row;
    for (const auto& h : in.hypotheses) row.push_back(h(in.atoms[a].context));
    problem.outputs.push_back(std::move(row));
    problem.losses.push_back(in.atoms[a].loss.scaled(in.probabilities[a]));
  }
  const HullResult hull = hull_minimize(problem.outputs, problem.losses, 1e-12);

  ScoOutcome o;
  o.value = population_loss(r.hypothesis, FiniteSupport<Sample>{in.atoms, in.probabilities});
  o.optimum = hull.value;
  o.gap = o.value - o.optimum;
  o.lipschitz = g;
  o.epsilon = r.stage_epsilon.empty() ? 0.0 : r.stage_epsilon.back();
  o.bound = 4.0 * g * d / (s.gamma * std::sqrt(static_cast<double>(s.n_stages))) +
            (2.0 * g * d / s.gamma) * o.epsilon;
  o.hull_weights.assign(hull.weights.data(), hull.weights.data() + hull.weights.size());
  return o;
}

nlohmann::json to_json(const OcoOutcome& o) {
  return {{"realized", o.realized}, {"regret", o.regret}, {"bound", o.bound},
          {"lipschitz", o.lipschitz}, {"diameter", o.diameter}};
}

nlohmann::json to_json(const BanditOutcome& o) {
  return {{"realized", o.realized}, {"regret", o.regret}, {"explore_rate", o.explore_rate}};
}

nlohmann::json to_json(const ScoOutcome& o) {
  return {{"value", o.value},         {"optimum", o.optimum}, {"gap", o.gap},
          {"bound", o.bound},         {"lipschitz", o.lipschitz}, {"epsilon", o.epsilon},
          {"hull_weights", o.hull_weights}};
}

}  // namespace oboost::scenarios
