#include "oboost/extension.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "oboost/errors.hpp"

namespace oboost {

Point prox_distance(const DecisionSet& set, double lambda, const Point& z) {
  const Point p = set.project(z);
  const Point away = z - p;
  const double dist = away.norm();
  if (dist <= lambda) return p;
  return z - (lambda / dist) * away;
}

namespace {

double composite_value(const ConvexLoss& f, const DecisionSet& set, double kappa, double delta,
                       const Point& x, const Point& y) {
  double v = f.eval(y) + (x - y).squaredNorm() / (2.0 * delta);
  if (kappa > 0.0) v += kappa * set.distance(y);
  return v;
}

// Proximal gradient on s(y) = f(y) + ||y - x||^2/(2 delta) plus h(y) = kappa Dist(y, K).
ProxResult solve_splitting(const ConvexLoss& f, const DecisionSet& set, double kappa,
                           double delta, const Point& x, const ProxOptions& options) {
  auto smooth_value = [&](const Point& y) {
    return f.eval(y) + (y - x).squaredNorm() / (2.0 * delta);
  };
  auto smooth_grad = [&](const Point& y) -> Point { return f.grad(y) + (y - x) / delta; };

  double step = delta;
  if (auto lf = f.smoothness()) step = 1.0 / (*lf + 1.0 / delta);

  Point y = x;
  ProxResult best{y, std::numeric_limits<double>::infinity(), 0, false};
  for (int it = 1; it <= options.budget; ++it) {
    const double sy = smooth_value(y);
    const Point gy = smooth_grad(y);
    Point next;
    for (int bt = 0; bt < 60; ++bt) {
      next = prox_distance(set, step * kappa, y - step * gy);
      const Point d = next - y;
      if (smooth_value(next) <= sy + gy.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(sy)) {
        break;
      }
      step *= 0.5;
    }
    const double residual = (next - y).norm() / step;
    if (residual < best.residual) best = {y, residual, it, false};
    y = std::move(next);
    if (residual <= options.tol) {
      return {y, residual, it, true};
    }
  }
  best.iterations = options.budget;
  return best;
}

}  // namespace

ProxResult prox(const ConvexLoss& f, const DecisionSet& set, double kappa, double delta,
                const Point& x, const ProxOptions& options) {
  if (f.dim() != set.dim()) throw ContractViolation("prox: loss and set dimensions differ");
  require_dim(x, set.dim(), "prox");
  require_finite(x, "prox");
  if (!(delta > 0.0)) throw ContractViolation("prox: delta must be positive");
  if (kappa < 0.0) throw ContractViolation("prox: kappa must be nonnegative");

  const auto& family = f.family();
  if (const auto* lin = std::get_if<LinearFamily>(&family)) {
    // g.y + ||y - x||^2/(2 delta) = ||y - (x - delta g)||^2/(2 delta) + const.
    const Point z = x - delta * lin->direction;
    return {prox_distance(set, delta * kappa, z), 0.0, 0, true};
  }
  if (const auto* sq = std::get_if<SquaredDistanceFamily>(&family)) {
    // w||y - t||^2 + ||y - x||^2/(2 delta) = (w + 1/(2 delta))||y - z||^2 + const.
    const double a = 2.0 * sq->weight * delta;
    const Point z = (a * sq->target + x) / (a + 1.0);
    const double lambda = kappa / (2.0 * sq->weight + 1.0 / delta);
    return {prox_distance(set, lambda, z), 0.0, 0, true};
  }
  return solve_splitting(f, set, kappa, delta, x, options);
}

double smoothing_radius(DeltaRule rule, double diameter, double lipschitz, double gamma,
                        int n_learners) {
  if (!(diameter > 0.0) || !(gamma > 0.0) || n_learners < 1) {
    throw ConfigError("smoothing_radius: diameter, gamma and N must be positive");
  }
  const double n = static_cast<double>(n_learners);
  if (rule == DeltaRule::sqrt_rule) return std::sqrt(diameter * diameter / (gamma * n));
  // A zero-gradient loss extends to zero for any radius; fall back to the sqrt rule.
  if (!(lipschitz > 0.0)) return std::sqrt(diameter * diameter / (gamma * n));
  return diameter / (lipschitz * gamma * std::sqrt(n));
}

ExtendedLoss::ExtendedLoss(ConvexLoss base, DecisionSet set, double delta, double kappa,
                           ProxOptions options)
    : base_(std::move(base)),
      set_(std::move(set)),
      delta_(delta),
      kappa_(kappa),
      options_(options) {
  if (base_.dim() != set_.dim()) throw ContractViolation("extension: dimension mismatch");
  if (!(delta_ > 0.0) || !std::isfinite(delta_)) throw ConfigError("extension: delta must be positive");
  if (kappa_ < 0.0 || !std::isfinite(kappa_)) throw ConfigError("extension: kappa must be nonnegative");
}

ExtendedLoss ExtendedLoss::with_defaults(ConvexLoss base, DecisionSet set, double gamma,
                                         int n_learners, DeltaRule rule, ProxOptions options) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("extension: gamma must lie in (0, 1]");
  const Point c = set.centroid();
  const DecisionSet region = set.translated(-c).scaled(1.0 / gamma).translated(c);
  const double d = set.diameter();
  const double slack = d / (gamma * std::sqrt(static_cast<double>(n_learners)));
  const double g = lipschitz_bound(base, region, slack);
  const double delta = smoothing_radius(rule, d, g, gamma, n_learners);
  return ExtendedLoss(std::move(base), std::move(set), delta, g, options);
}

ExtendedLoss::Evaluation ExtendedLoss::evaluate(const Point& x) const {
  ProxResult p = prox(base_, set_, kappa_, delta_, x, options_);
  Evaluation out;
  out.value = composite_value(base_, set_, kappa_, delta_, x, p.point);
  out.gradient = (x - p.point) / delta_;
  out.prox = std::move(p);
  return out;
}

}  // namespace oboost
