#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace oboost {

using Point = Eigen::VectorXd;

// Euclidean distance below which a point counts as a member of a set.
inline constexpr double kMembershipTol = 1e-9;

void require_finite(const Point& x, const char* what);
void require_dim(const Point& x, std::size_t dim, const char* what);

struct Ball {
  Point center;
  double radius = 1.0;
};

// Axis-aligned box; a closed interval is the one-dimensional case.
struct Box {
  Point lo;
  Point hi;
};

// The set { scale * p + offset : p in probability simplex of dimension `dim` }.
struct Simplex {
  std::size_t dim = 0;
  double scale = 1.0;
  Point offset;
};

using Projector = std::function<Point(const Point&)>;

// User-provided convex body, described only through its projection oracle.
// Scaling and translation are tracked here and applied around the oracle.
struct CustomSet {
  std::size_t dim = 0;
  Projector projector;
  double diameter = 0.0;
  Point centroid;
  double scale = 1.0;
  Point offset;
};

enum class SetKind { ball, box, simplex, custom };

// A closed convex decision set with analytic projection (or a projection oracle).
// Values are immutable; scaled() and translated() return new sets.
class DecisionSet {
 public:
  using Shape = std::variant<Ball, Box, Simplex, CustomSet>;

  static DecisionSet ball(Point center, double radius);
  static DecisionSet box(Point lo, Point hi);
  static DecisionSet interval(double lo, double hi);
  static DecisionSet simplex(std::size_t dim);
  static DecisionSet custom(std::size_t dim, Projector projector, double diameter,
                            Point centroid);

  SetKind kind() const;
  std::size_t dim() const;
  double diameter() const;
  Point centroid() const;

  Point project(const Point& x) const;
  double distance(const Point& x) const;
  bool contains(const Point& x, double tol = kMembershipTol) const;

  // { c x : x in set } for c > 0, dilation about the origin.
  DecisionSet scaled(double c) const;
  // { x + v : x in set }.
  DecisionSet translated(const Point& v) const;

  // Upper bound on max_{x in set} ||x - y|| (exact for ball, box and simplex).
  double max_distance_from(const Point& y) const;
  // Upper bound on max_{x in set} g.x (exact for ball, box and simplex).
  double support(const Point& g) const;

  const Shape& shape() const { return shape_; }

 private:
  explicit DecisionSet(Shape shape) : shape_(std::move(shape)) {}
  Shape shape_;
};

struct Recentered {
  DecisionSet set;
  Point offset;  // subtracted centroid; original = recentered + offset
};

// Translate so the uniform-measure centroid sits at the origin.
Recentered recenter(const DecisionSet& set);

// Euclidean projection onto the probability simplex (sort-and-threshold).
Point project_to_simplex(const Point& x);

// Plain construction record. `kind` is one of ball, box, interval, simplex, custom.
struct SetConfig {
  std::string kind;
  Point center;            // ball
  double radius = 1.0;     // ball
  Point lo, hi;            // box
  double lo1 = -1.0;       // interval
  double hi1 = 1.0;        // interval
  std::size_t dim = 0;     // simplex, custom
  Projector projector;     // custom
  std::optional<double> diameter;  // custom
  std::optional<Point> centroid;   // custom
};

DecisionSet make_set(const SetConfig& config);
// JSON form of SetConfig; custom sets cannot be described in JSON.
DecisionSet set_from_json(const nlohmann::json& j);

}  // namespace oboost
