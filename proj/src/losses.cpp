#include "oboost/losses.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "oboost/errors.hpp"

namespace oboost {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_input(const Point& x, std::size_t dim, const char* what) {
  require_dim(x, dim, what);
  require_finite(x, what);
}

}  // namespace

ConvexLoss ConvexLoss::linear(Point direction, double constant) {
  require_finite(direction, "linear loss direction");
  const auto d = static_cast<std::size_t>(direction.size());
  return ConvexLoss(d, LinearFamily{std::move(direction), constant});
}

ConvexLoss ConvexLoss::squared_distance(Point target, double weight) {
  require_finite(target, "squared distance target");
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ConfigError("squared distance loss: weight must be positive");
  }
  const auto d = static_cast<std::size_t>(target.size());
  return ConvexLoss(d, SquaredDistanceFamily{std::move(target), weight, 0.0});
}

ConvexLoss ConvexLoss::square(double target) {
  return squared_distance(Point::Constant(1, target), 1.0);
}

ConvexLoss ConvexLoss::quadratic(Eigen::MatrixXd hessian, Point linear, double constant) {
  if (hessian.rows() != hessian.cols() || hessian.rows() != linear.size()) {
    throw ConfigError("quadratic loss: shape mismatch");
  }
  if (!hessian.allFinite()) throw NonFiniteError("quadratic loss: non-finite hessian");
  require_finite(linear, "quadratic loss linear term");
  Eigen::MatrixXd sym = 0.5 * (hessian + hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) {
    throw ConfigError("quadratic loss: hessian is not positive semidefinite");
  }
  const auto d = static_cast<std::size_t>(linear.size());
  return ConvexLoss(d, QuadraticFamily{std::move(sym), std::move(linear), constant});
}

ConvexLoss ConvexLoss::custom(std::size_t dim, std::function<double(const Point&)> value,
                              std::function<Point(const Point&)> gradient,
                              std::optional<double> lipschitz_hint,
                              std::optional<double> smoothness_hint) {
  if (!value || !gradient) throw ConfigError("custom loss: value and gradient required");
  if (lipschitz_hint && !(*lipschitz_hint > 0.0)) {
    throw ConfigError("custom loss: lipschitz hint must be positive");
  }
  return ConvexLoss(dim, CustomFamily{std::move(value), std::move(gradient), lipschitz_hint,
                                      smoothness_hint});
}

double ConvexLoss::eval(const Point& x) const {
  check_input(x, dim_, "loss eval");
  const double v = std::visit(
      overloaded{
          [&](const LinearFamily& f) { return f.direction.dot(x) + f.constant; },
          [&](const SquaredDistanceFamily& f) {
            return f.weight * (x - f.target).squaredNorm() + f.constant;
          },
          [&](const QuadraticFamily& f) {
            return 0.5 * x.dot(f.hessian * x) + f.linear.dot(x) + f.constant;
          },
          [&](const CustomFamily& f) { return f.value(x); }},
      family_);
  if (!std::isfinite(v)) throw NonFiniteError("loss eval: non-finite value");
  return v;
}

Point ConvexLoss::grad(const Point& x) const {
  check_input(x, dim_, "loss grad");
  Point g = std::visit(
      overloaded{[&](const LinearFamily& f) -> Point { return f.direction; },
                 [&](const SquaredDistanceFamily& f) -> Point {
                   return 2.0 * f.weight * (x - f.target);
                 },
                 [&](const QuadraticFamily& f) -> Point { return f.hessian * x + f.linear; },
                 [&](const CustomFamily& f) -> Point { return f.gradient(x); }},
      family_);
  require_dim(g, dim_, "loss gradient");
  require_finite(g, "loss gradient");
  return g;
}

std::optional<double> ConvexLoss::smoothness() const {
  return std::visit(overloaded{[](const LinearFamily&) -> std::optional<double> { return 0.0; },
                               [](const SquaredDistanceFamily& f) -> std::optional<double> {
                                 return 2.0 * f.weight;
                               },
                               [](const QuadraticFamily& f) -> std::optional<double> {
                                 return spectral_norm(f.hessian);
                               },
                               [](const CustomFamily& f) { return f.smoothness_hint; }},
                    family_);
}

ConvexLoss ConvexLoss::translated(const Point& shift) const {
  require_dim(shift, dim_, "loss translate");
  return std::visit(
      overloaded{[&](const LinearFamily& f) {
                   return ConvexLoss(dim_, LinearFamily{f.direction,
                                                        f.constant + f.direction.dot(shift)});
                 },
                 [&](const SquaredDistanceFamily& f) {
                   return ConvexLoss(dim_, SquaredDistanceFamily{f.target - shift, f.weight,
                                                                 f.constant});
                 },
                 [&](const QuadraticFamily& f) {
                   const Point b = f.linear + f.hessian * shift;
                   const double c =
                       f.constant + 0.5 * shift.dot(f.hessian * shift) + f.linear.dot(shift);
                   return ConvexLoss(dim_, QuadraticFamily{f.hessian, b, c});
                 },
                 [&](const CustomFamily& f) {
                   auto value = [v = f.value, shift](const Point& x) { return v(x + shift); };
                   auto grad = [g = f.gradient, shift](const Point& x) { return g(x + shift); };
                   return ConvexLoss(dim_, CustomFamily{value, grad, f.lipschitz_hint,
                                                        f.smoothness_hint});
                 }},
      family_);
}

ConvexLoss ConvexLoss::scaled(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("loss scale: factor must be positive");
  return std::visit(
      overloaded{[&](const LinearFamily& f) {
                   return ConvexLoss(dim_, LinearFamily{s * f.direction, s * f.constant});
                 },
                 [&](const SquaredDistanceFamily& f) {
                   return ConvexLoss(dim_, SquaredDistanceFamily{f.target, s * f.weight,
                                                                 s * f.constant});
                 },
                 [&](const QuadraticFamily& f) {
                   return ConvexLoss(dim_,
                                     QuadraticFamily{s * f.hessian, s * f.linear, s * f.constant});
                 },
                 [&](const CustomFamily& f) {
                   auto value = [v = f.value, s](const Point& x) { return s * v(x); };
                   auto grad = [g = f.gradient, s](const Point& x) -> Point { return s * g(x); };
                   std::optional<double> lip, smooth;
                   if (f.lipschitz_hint) lip = s * *f.lipschitz_hint;
                   if (f.smoothness_hint) smooth = s * *f.smoothness_hint;
                   return ConvexLoss(dim_, CustomFamily{value, grad, lip, smooth});
                 }},
      family_);
}

double lipschitz_bound(const ConvexLoss& loss, const DecisionSet& region, double slack) {
  if (loss.dim() != region.dim()) throw ContractViolation("lipschitz_bound: dimension mismatch");
  if (slack < 0.0) throw ContractViolation("lipschitz_bound: negative slack");
  return std::visit(
      overloaded{[](const LinearFamily& f) { return f.direction.norm(); },
                 [&](const SquaredDistanceFamily& f) {
                   return 2.0 * f.weight * (region.max_distance_from(f.target) + slack);
                 },
                 [&](const QuadraticFamily& f) {
                   // ||A x + b|| <= ||A c + b|| + ||A|| ||x - c|| with c the region centroid.
                   const Point c = region.centroid();
                   return (f.hessian * c + f.linear).norm() +
                          spectral_norm(f.hessian) * (region.max_distance_from(c) + slack);
                 },
                 [](const CustomFamily& f) {
                   if (!f.lipschitz_hint) {
                     throw ConfigError("lipschitz_bound: custom loss needs a lipschitz hint");
                   }
                   return *f.lipschitz_hint;
                 }},
      loss.family());
}

double square_loss_lipschitz(double target_lo, double target_hi, const DecisionSet& region,
                             double slack) {
  if (region.dim() != 1) throw ContractViolation("square_loss_lipschitz: region must be 1-D");
  if (target_hi < target_lo) throw ConfigError("square_loss_lipschitz: empty target range");
  // The farthest distance is convex in the target, so the endpoints suffice.
  const double far = std::max(region.max_distance_from(Point::Constant(1, target_lo)),
                              region.max_distance_from(Point::Constant(1, target_hi)));
  return 2.0 * (far + slack);
}

double value_range(const ConvexLoss& loss, const DecisionSet& region) {
  if (loss.dim() != region.dim()) throw ContractViolation("value_range: dimension mismatch");
  return std::visit(
      overloaded{[&](const LinearFamily& f) {
                   return region.support(f.direction) + region.support(-f.direction);
                 },
                 [&](const SquaredDistanceFamily& f) {
                   const double far = region.max_distance_from(f.target);
                   const double near = region.distance(f.target);
                   return f.weight * (far * far - near * near);
                 },
                 [&](const auto&) { return lipschitz_bound(loss, region) * region.diameter(); }},
      loss.family());
}

ConvexLoss unit_normalized(const ConvexLoss& loss, const DecisionSet& region) {
  const double range = value_range(loss, region);
  if (!(range > 0.0)) return loss;
  return loss.scaled(1.0 / range);
}

}  // namespace oboost
