#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cpodem {

struct ParameterRange {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  std::string unit;

  bool operator==(const ParameterRange&) const = default;
};

/// Ordered box of design parameters. Units are documentation only; every
/// check happens against the lo/hi bounds.
class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<ParameterRange> params);

  std::size_t dim() const noexcept { return params_.size(); }
  const ParameterRange& operator[](std::size_t k) const { return params_.at(k); }
  const std::vector<ParameterRange>& params() const noexcept { return params_; }

  /// Index of the parameter called `name`; throws InvalidArgument if absent.
  std::size_t index_of(std::string_view name) const;

  /// Parses the line-oriented `name lo hi unit` format (`#` starts a comment).
  static DesignSpace parse(std::string_view text);
  static DesignSpace load(const std::filesystem::path& path);
  std::string to_text() const;

  bool operator==(const DesignSpace&) const = default;

 private:
  std::vector<ParameterRange> params_;
};

/// The swirl-injector box: L [20,100] mm, R_n [2,5] mm, theta [45,75] deg,
/// delta [0.5,2] mm, dL [1,4] mm. Same content as data/injector_space.cfg.
const DesignSpace& injector_design_space();

/// Column order of the injector parameters inside a DesignPoint.
namespace injector {
inline constexpr std::size_t kLength = 0;
inline constexpr std::size_t kRadius = 1;
inline constexpr std::size_t kTheta = 2;
inline constexpr std::size_t kDelta = 3;
inline constexpr std::size_t kHeadend = 4;
inline constexpr std::size_t kDim = 5;
}  // namespace injector

/// A design in physical units, ordered like the DesignSpace it belongs to.
class DesignPoint {
 public:
  DesignPoint() = default;
  explicit DesignPoint(std::vector<double> values) : values_(std::move(values)) {}
  DesignPoint(std::initializer_list<double> values) : values_(values) {}

  /// Builds the point and checks it against `space` (OutOfBounds on failure).
  static DesignPoint checked(std::vector<double> values, const DesignSpace& space);

  std::size_t dim() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_.at(k); }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const DesignPoint&) const = default;

 private:
  std::vector<double> values_;
};

/// Coordinates of a design inside the unit hypercube.
class NormalizedDesign {
 public:
  NormalizedDesign() = default;
  explicit NormalizedDesign(std::vector<double> coords);
  NormalizedDesign(std::initializer_list<double> coords);

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t k) const { return coords_.at(k); }
  std::span<const double> coords() const noexcept { return coords_; }

  bool operator==(const NormalizedDesign&) const = default;

 private:
  std::vector<double> coords_;
};

/// Throws OutOfBounds naming the first offending parameter.
void check_in_bounds(const DesignPoint& d, const DesignSpace& s);

NormalizedDesign normalize(const DesignPoint& d, const DesignSpace& s);
DesignPoint denormalize(const NormalizedDesign& n, const DesignSpace& s);
double normalized_distance(const DesignPoint& a, const DesignPoint& b, const DesignSpace& s);

/// Multiplies each coordinate by (1 + fractions[k]); the result must stay in `s`.
DesignPoint offset_design(const DesignPoint& d, std::span<const double> fractions,
                          const DesignSpace& s);

/// Parses "20,3.22,52.9,0.52,3.42" (commas or whitespace).
DesignPoint parse_design(std::string_view text);
std::string format_design(const DesignPoint& d);

}  // namespace cpodem
