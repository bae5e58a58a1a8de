#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cpodem/design.hpp"
#include "cpodem/grid.hpp"
#include "cpodem/kdtree.hpp"

namespace cpodem {

/// Five region boxes for the design's geometry. Throws GeometryMismatch if
/// the grid does not reach the domain extent.
RegionBoxes partition_domain(const AxisymGrid& grid, const DesignPoint& d);

/// Reference grid that every case is rescaled onto.
struct CommonGrid {
  AxisymGrid grid;
  RegionBoxes boxes{};
  DesignPoint design;       ///< design whose geometry defines the boxes
  std::size_t source = 0;   ///< index of the case it was taken from
};

/// Index of the grid with the most nodes; ties go to the lowest index.
std::size_t densest_grid(std::span<const AxisymGrid> grids);

/// Picks the densest grid among the cases and partitions it with its own design.
CommonGrid select_common_grid(std::span<const AxisymGrid> grids, std::span<const DesignPoint> designs);

/// Per-region axis-aligned affine map from common coordinates to case
/// coordinates: x' = sx x + ox, r' = sr r + or.
class RegionMap {
 public:
  struct Affine {
    double sx = 1.0, ox = 0.0, sr = 1.0, orr = 0.0;
  };

  RegionMap() = default;
  RegionMap(const RegionBoxes& common, const RegionBoxes& target);

  const RegionBoxes& common_boxes() const noexcept { return common_; }
  const RegionBoxes& target_boxes() const noexcept { return target_; }
  const Affine& transform(std::size_t region) const { return maps_.at(region); }

  /// Region of a common-space point (boundary points go upstream, clamped to the ends).
  std::size_t common_region(double x) const noexcept;
  std::size_t target_region(double x) const noexcept;

  KdTree2::Point forward(const KdTree2::Point& common_point) const;
  KdTree2::Point inverse(const KdTree2::Point& target_point) const;

 private:
  RegionBoxes common_{};
  RegionBoxes target_{};
  std::array<Affine, kRegionCount> maps_{};
};

/// Map from the common grid's boxes to the boxes of `case_design`.
/// Throws DegenerateRegion when a case box has zero extent.
RegionMap build_region_map(const CommonGrid& common, const DesignPoint& case_design);

struct IdwOptions {
  std::size_t k = 10;
  double power = 2.0;
  /// Queries closer than this (in scaled units) to a node copy its value.
  double exact_tolerance = 1e-12;
};

/// Inverse-distance weighting over a fixed set of source nodes. Distances are
/// measured after dividing x and r by the given scales.
class IdwInterpolator {
 public:
  IdwInterpolator(std::vector<KdTree2::Point> source, double x_scale, double r_scale, IdwOptions options = {});

  /// Interpolation weights as a sparse (queries x source) row-stochastic matrix.
  Eigen::SparseMatrix<double, Eigen::RowMajor> operator_for(std::span<const KdTree2::Point> queries) const;

  Eigen::VectorXd interpolate(const Eigen::VectorXd& values, std::span<const KdTree2::Point> queries) const;

  std::size_t size() const noexcept { return tree_.size(); }

 private:
  KdTree2 tree_;
  double sx_ = 1.0;
  double sr_ = 1.0;
  IdwOptions options_;
};

/// Convenience wrapper around IdwInterpolator with unit scales.
Eigen::VectorXd idw_interpolate(std::span<const KdTree2::Point> source, const Eigen::VectorXd& values,
                                std::span<const KdTree2::Point> queries, std::size_t k = 10, double power = 2.0);

std::vector<KdTree2::Point> node_points(const AxisymGrid& grid);

/// Operator taking case-grid values to common-grid values: each common node is
/// mapped forward into case coordinates and interpolated from the case grid.
Eigen::SparseMatrix<double, Eigen::RowMajor> case_to_common_operator(const AxisymGrid& case_grid, const RegionMap& map,
                                                                      const CommonGrid& common,
                                                                      const IdwOptions& options = {});

/// Operator taking common-grid values to a target grid: each target node is
/// mapped back into common coordinates and interpolated from the common grid.
Eigen::SparseMatrix<double, Eigen::RowMajor> common_to_case_operator(const CommonGrid& common, const RegionMap& map,
                                                                      const AxisymGrid& target_grid,
                                                                      const IdwOptions& options = {});

/// Common grid carried through the map: every node moves with its region's
/// affine transform, so values on the common grid need no interpolation.
AxisymGrid map_grid(const AxisymGrid& common, const RegionMap& map);

SnapshotSeries rescale_case_to_common(const SnapshotSeries& series, const RegionMap& map, const CommonGrid& common,
                                      const IdwOptions& options = {});

}  // namespace cpodem
