#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>

#include "oboost/geometry.hpp"

namespace oboost {

// f(x) = direction . x
struct LinearLoss {
  Point direction;

  double value(const Point& x) const { return direction.dot(x); }
  double norm() const { return direction.norm(); }
};

// Loss families with closed-form structure the extension operator can exploit.
struct LinearFamily {
  Point direction;
  double constant = 0.0;  // f(x) = direction . x + constant
};

struct SquaredDistanceFamily {
  Point target;
  double weight = 1.0;  // f(x) = weight * ||x - target||^2
  double constant = 0.0;
};

struct QuadraticFamily {
  Eigen::MatrixXd hessian;  // symmetric PSD, f(x) = 1/2 x'Ax + b'x + c
  Point linear;
  double constant = 0.0;
};

struct CustomFamily {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;
  std::optional<double> lipschitz_hint;
  std::optional<double> smoothness_hint;
};

// A differentiable convex cost over R^d.
class ConvexLoss {
 public:
  using Family = std::variant<LinearFamily, SquaredDistanceFamily, QuadraticFamily, CustomFamily>;

  static ConvexLoss linear(Point direction, double constant = 0.0);
  static ConvexLoss linear(const LinearLoss& l) { return linear(l.direction); }
  static ConvexLoss squared_distance(Point target, double weight = 1.0);
  // Scalar square loss (x - target)^2.
  static ConvexLoss square(double target);
  static ConvexLoss quadratic(Eigen::MatrixXd hessian, Point linear, double constant = 0.0);
  static ConvexLoss custom(std::size_t dim, std::function<double(const Point&)> value,
                           std::function<Point(const Point&)> gradient,
                           std::optional<double> lipschitz_hint = std::nullopt,
                           std::optional<double> smoothness_hint = std::nullopt);

  std::size_t dim() const { return dim_; }
  double eval(const Point& x) const;
  Point grad(const Point& x) const;

  // Lipschitz constant of the gradient when known (0 for linear losses).
  std::optional<double> smoothness() const;

  // x -> f(x + shift)
  ConvexLoss translated(const Point& shift) const;
  // x -> s * f(x), s > 0
  ConvexLoss scaled(double s) const;

  const Family& family() const { return family_; }

 private:
  ConvexLoss(std::size_t dim, Family family) : dim_(dim), family_(std::move(family)) {}
  std::size_t dim_;
  Family family_;
};

// Certified upper bound on sup ||grad f(x)|| over `region` inflated by `slack`
// (every point within Euclidean distance `slack` of the region).
double lipschitz_bound(const ConvexLoss& loss, const DecisionSet& region, double slack = 0.0);

// Bound for the square-loss family {(x - y)^2 : y in [target_lo, target_hi]}.
double square_loss_lipschitz(double target_lo, double target_hi, const DecisionSet& region,
                             double slack = 0.0);

// Upper bound on max_K f - min_K f (exact for linear and squared-distance losses
// on ball, box and simplex).
double value_range(const ConvexLoss& loss, const DecisionSet& region);

// f / value_range(f, K), a unit loss on K; a constant loss is returned unchanged.
ConvexLoss unit_normalized(const ConvexLoss& loss, const DecisionSet& region);

}  // namespace oboost
