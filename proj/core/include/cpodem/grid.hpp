#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpodem/design.hpp"

namespace cpodem {

enum class Region : std::uint8_t { Headend = 0, Interior = 1, NearField = 2, MidField = 3, FarField = 4 };
inline constexpr std::size_t kRegionCount = 5;

std::string_view region_name(Region r) noexcept;

/// Geometry derived from the injector parameters. Axial coordinate x runs
/// from the headend wall (x = 0) through the injector (exit at dL + L) and
/// 3L downstream; radial coordinate r spans [0, 3 R_n]. Lengths in mm.
struct InjectorGeometry {
  double length = 0.0;   ///< L
  double radius = 0.0;   ///< R_n
  double headend = 0.0;  ///< dL

  static InjectorGeometry from(const DesignPoint& d);

  double exit() const noexcept { return headend + length; }
  double domain_length() const noexcept { return headend + 4.0 * length; }
  double domain_radius() const noexcept { return 3.0 * radius; }
  /// Axial run past the exit over which the spreading angle is measured (one
  /// nozzle radius).
  double spread_run() const noexcept { return radius; }
};

/// Axis-aligned box in (x, r).
struct Box {
  double x0 = 0.0, x1 = 0.0, r0 = 0.0, r1 = 0.0;
  bool operator==(const Box&) const = default;
};

using RegionBoxes = std::array<Box, kRegionCount>;

/// Tensor-product (x, r) grid. Nodes are stored axial-major: node = i * nr + j.
struct AxisymGrid {
  std::vector<double> x;                   ///< axial node coordinates, mm
  std::vector<double> r;                   ///< radial node coordinates, mm
  std::vector<double> cell_area;           ///< quadrature weight per node, mm^2
  std::vector<std::uint8_t> region_label;  ///< Region per node

  std::size_t nx() const noexcept { return x.size(); }
  std::size_t nr() const noexcept { return r.size(); }
  std::size_t nodes() const noexcept { return x.size() * r.size(); }
  std::size_t node(std::size_t i, std::size_t j) const noexcept { return i * r.size() + j; }
  double node_x(std::size_t n) const { return x[n / r.size()]; }
  double node_r(std::size_t n) const { return r[n % r.size()]; }
  Region region(std::size_t n) const { return static_cast<Region>(region_label[n]); }

  /// Upper radial edge: last node plus half a spacing (radial nodes are cell centred).
  double r_extent() const;

  /// Throws InvalidArgument if any invariant (monotone axes, positive areas,
  /// consistent sizes, labels in range) is broken.
  void validate() const;

  bool operator==(const AxisymGrid&) const = default;
};

/// Resolution and clustering of the generated case grids. Axial intervals are
/// split between headend, interior and downstream; downstream spacing grows
/// geometrically away from the exit so the near-exit film is resolved even
/// for long injectors.
struct GridSpec {
  std::size_t nx = 64;
  std::size_t nr = 48;
  double headend_share = 0.08;
  double interior_share = 0.30;
  double exit_spacing = 0.001;  ///< first downstream spacing as a fraction of 3L

  bool operator==(const GridSpec&) const = default;
};

/// Case grid for the injector geometry. Two geometries built with the same
/// spec have identical node positions in region-local coordinates.
AxisymGrid build_case_grid(const InjectorGeometry& geom, const GridSpec& spec);

/// Axial breaks {0, dL, dL+L, dL+2L, dL+3L, dL+4L} as five region boxes with
/// a single radial box [0, 3 R_n].
RegionBoxes region_boxes(const InjectorGeometry& geom);

inline const std::array<std::string, 5>& standard_variables() {
  static const std::array<std::string, 5> names{"temperature", "density", "pressure", "axial_velocity",
                                                "azimuthal_velocity"};
  return names;
}

/// Time-ordered snapshots of several variables on one grid. Each variable is
/// a nodes x T matrix; column t is the snapshot at t0 + t * dt.
struct SnapshotSeries {
  AxisymGrid grid;
  std::map<std::string, Eigen::MatrixXd> variables;
  double dt = 0.0;
  double t0 = 0.0;

  std::size_t steps() const;
  const Eigen::MatrixXd& at(const std::string& name) const;
  void validate() const;
};

struct CaseMeta {
  DesignPoint design;
  double dt = 0.0;
  double t0 = 0.0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
};

/// grid.bin: "CPG1", u32 nx, u32 nr, f64 x[nx], f64 r[nr], f64 cell_area[nodes], u8 region[nodes].
void write_grid(const std::filesystem::path& file, const AxisymGrid& grid);
AxisymGrid read_grid(const std::filesystem::path& file);

/// var_<name>.bin: "CPS1", u32 T, u32 nodes, f64 data[T][nodes] (time-major).
void write_variable(const std::filesystem::path& file, const Eigen::MatrixXd& data);
Eigen::MatrixXd read_variable(const std::filesystem::path& file);

void write_meta(const std::filesystem::path& file, const CaseMeta& meta);
CaseMeta read_meta(const std::filesystem::path& file);

/// Writes grid.bin, var_<name>.bin for every variable and case.meta into `dir`.
void write_case(const std::filesystem::path& dir, const SnapshotSeries& series, const CaseMeta& meta);

struct StoredCase {
  SnapshotSeries series;
  CaseMeta meta;
};

/// Reads a case directory; `variables` empty means every var_*.bin present.
StoredCase read_case(const std::filesystem::path& dir, const std::vector<std::string>& variables = {});

/// Sorted list of case directories (those holding a case.meta) under `corpus`.
std::vector<std::filesystem::path> list_cases(const std::filesystem::path& corpus);

}  // namespace cpodem
