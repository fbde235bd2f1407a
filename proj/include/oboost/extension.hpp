#pragma once

#include "oboost/geometry.hpp"
#include "oboost/losses.hpp"

namespace oboost {

struct ProxOptions {
  int budget = 200;   // inner solver iterations
  double tol = 1e-8;  // first-order optimality residual
};

struct ProxResult {
  Point point;
  double residual = 0.0;  // gradient-mapping norm at the returned iterate (0 for closed forms)
  int iterations = 0;
  bool converged = true;
};

// argmin_y f(y) + kappa * Dist(y, K) + ||x - y||^2 / (2 delta).
//
// Linear and squared-distance losses reduce to the proximal map of the scaled
// distance function, which is closed form for any K with a projection. Other
// losses use proximal-gradient splitting with backtracking. If the budget runs
// out the best iterate is returned with converged == false.
ProxResult prox(const ConvexLoss& f, const DecisionSet& set, double kappa, double delta,
                const Point& x, const ProxOptions& options = {});

// Proximal map of lambda * Dist(., K): move z toward its projection by at most lambda.
Point prox_distance(const DecisionSet& set, double lambda, const Point& z);

enum class DeltaRule {
  balanced,  // D / (G gamma sqrt(N)), the value that balances the two regret terms
  sqrt_rule  // sqrt(D^2 / (gamma N)), dimension-free form
};

double smoothing_radius(DeltaRule rule, double diameter, double lipschitz, double gamma,
                        int n_learners);

// The (K, delta, kappa)-extension of a convex loss: the Moreau envelope of
// f + kappa * Dist(., K). Immutable; evaluation is pure.
class ExtendedLoss {
 public:
  struct Evaluation {
    double value = 0.0;
    Point gradient;
    ProxResult prox;
  };

  ExtendedLoss(ConvexLoss base, DecisionSet set, double delta, double kappa,
               ProxOptions options = {});

  // kappa = G = lipschitz_bound(base, region) and delta from `rule`, where the
  // region is the recentered set dilated by 1/gamma (boosting trajectories live there).
  static ExtendedLoss with_defaults(ConvexLoss base, DecisionSet set, double gamma,
                                    int n_learners, DeltaRule rule = DeltaRule::balanced,
                                    ProxOptions options = {});

  Evaluation evaluate(const Point& x) const;
  double value(const Point& x) const { return evaluate(x).value; }
  Point gradient(const Point& x) const { return evaluate(x).gradient; }

  const ConvexLoss& base() const { return base_; }
  const DecisionSet& set() const { return set_; }
  double delta() const { return delta_; }
  double kappa() const { return kappa_; }

 private:
  ConvexLoss base_;
  DecisionSet set_;
  double delta_;
  double kappa_;
  ProxOptions options_;
};

}  // namespace oboost
