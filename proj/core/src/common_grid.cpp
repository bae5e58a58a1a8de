#include "cpodem/common_grid.hpp"

#include <cmath>

#include "cpodem/error.hpp"
#include "cpodem/parallel.hpp"

namespace cpodem {
namespace {

constexpr double kExtentTol = 1e-9;

std::size_t region_of(const RegionBoxes& boxes, double x) noexcept {
  for (std::size_t k = 0; k + 1 < kRegionCount; ++k) {
    if (x <= boxes[k].x1) return k;
  }
  return kRegionCount - 1;
}

}  // namespace

RegionBoxes partition_domain(const AxisymGrid& grid, const DesignPoint& d) {
  const auto geom = InjectorGeometry::from(d);
  if (grid.x.empty() || grid.r.empty()) throw Error(ErrorKind::GeometryMismatch, "grid has no nodes");
  const double need_x = geom.domain_length();
  const double need_r = geom.domain_radius();
  if (grid.x.front() > kExtentTol * need_x || grid.x.back() < need_x * (1.0 - kExtentTol) ||
      grid.r_extent() < need_r * (1.0 - kExtentTol)) {
    throw Error(ErrorKind::GeometryMismatch, "grid does not cover the injector domain");
  }
  return region_boxes(geom);
}

std::size_t densest_grid(std::span<const AxisymGrid> grids) {
  if (grids.empty()) throw Error(ErrorKind::InvalidArgument, "no grids to choose from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < grids.size(); ++i) {
    if (grids[i].nodes() > grids[best].nodes()) best = i;
  }
  return best;
}

CommonGrid select_common_grid(std::span<const AxisymGrid> grids, std::span<const DesignPoint> designs) {
  if (grids.size() != designs.size()) throw Error(ErrorKind::ShapeMismatch, "one design per grid required");
  const auto i = densest_grid(grids);
  CommonGrid c;
  c.grid = grids[i];
  c.design = designs[i];
  c.boxes = partition_domain(c.grid, c.design);
  c.source = i;
  return c;
}

RegionMap::RegionMap(const RegionBoxes& common, const RegionBoxes& target) : common_(common), target_(target) {
  for (std::size_t k = 0; k < kRegionCount; ++k) {
    const auto& a = common[k];
    const auto& b = target[k];
    if (!(a.x1 > a.x0) || !(a.r1 > a.r0)) {
      throw Error(ErrorKind::DegenerateRegion, "common region " + std::to_string(k) + " has zero extent");
    }
    if (!(b.x1 > b.x0) || !(b.r1 > b.r0)) {
      throw Error(ErrorKind::DegenerateRegion, "case region " + std::to_string(k) + " has zero extent");
    }
    Affine m;
    m.sx = (b.x1 - b.x0) / (a.x1 - a.x0);
    m.ox = b.x0 - m.sx * a.x0;
    m.sr = (b.r1 - b.r0) / (a.r1 - a.r0);
    m.orr = b.r0 - m.sr * a.r0;
    maps_[k] = m;
  }
}

std::size_t RegionMap::common_region(double x) const noexcept { return region_of(common_, x); }
std::size_t RegionMap::target_region(double x) const noexcept { return region_of(target_, x); }

KdTree2::Point RegionMap::forward(const KdTree2::Point& p) const {
  const auto& m = maps_[common_region(p[0])];
  return {m.sx * p[0] + m.ox, m.sr * p[1] + m.orr};
}

KdTree2::Point RegionMap::inverse(const KdTree2::Point& p) const {
  const auto& m = maps_[target_region(p[0])];
  return {(p[0] - m.ox) / m.sx, (p[1] - m.orr) / m.sr};
}

RegionMap build_region_map(const CommonGrid& common, const DesignPoint& case_design) {
  return RegionMap(common.boxes, region_boxes(InjectorGeometry::from(case_design)));
}

IdwInterpolator::IdwInterpolator(std::vector<KdTree2::Point> source, double x_scale, double r_scale,
                                 IdwOptions options)
    : sx_(x_scale), sr_(r_scale), options_(options) {
  if (source.empty()) throw Error(ErrorKind::EmptySource, "IDW needs at least one source node");
  if (!(x_scale > 0.0 && r_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "IDW scales must be positive");
  if (options_.k < 1) throw Error(ErrorKind::InvalidArgument, "IDW needs k >= 1");
  if (options_.k > source.size()) {
    throw Error(ErrorKind::InvalidArgument, "IDW k exceeds the number of source nodes");
  }
  for (auto& p : source) p = {p[0] / sx_, p[1] / sr_};
  tree_ = KdTree2(std::move(source));
}

Eigen::SparseMatrix<double, Eigen::RowMajor> IdwInterpolator::operator_for(
    std::span<const KdTree2::Point> queries) const {
  const std::size_t k = options_.k;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(queries.size());
  parallel_for(queries.size(), [&](std::size_t qi) {
    const KdTree2::Point q{queries[qi][0] / sx_, queries[qi][1] / sr_};
    const auto nn = tree_.nearest(q, k);
    auto& row = rows[qi];
    const double tol2 = options_.exact_tolerance * options_.exact_tolerance;
    if (nn.front().first <= tol2) {
      row.emplace_back(nn.front().second, 1.0);
      return;
    }
    double total = 0.0;
    row.reserve(nn.size());
    for (const auto& [d2, idx] : nn) {
      const double w = std::pow(d2, -0.5 * options_.power);
      row.emplace_back(idx, w);
      total += w;
    }
    for (auto& e : row) e.second /= total;
  });

  Eigen::SparseMatrix<double, Eigen::RowMajor> W(static_cast<Eigen::Index>(queries.size()),
                                                 static_cast<Eigen::Index>(tree_.size()));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(queries.size() * k);
  for (std::size_t qi = 0; qi < rows.size(); ++qi) {
    for (const auto& [idx, w] : rows[qi]) {
      trips.emplace_back(static_cast<Eigen::Index>(qi), static_cast<Eigen::Index>(idx), w);
    }
  }
  W.setFromTriplets(trips.begin(), trips.end());
  return W;
}

Eigen::VectorXd IdwInterpolator::interpolate(const Eigen::VectorXd& values,
                                             std::span<const KdTree2::Point> queries) const {
  if (static_cast<std::size_t>(values.size()) != tree_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "value count does not match the IDW source nodes");
  }
  return operator_for(queries) * values;
}

Eigen::VectorXd idw_interpolate(std::span<const KdTree2::Point> source, const Eigen::VectorXd& values,
                                std::span<const KdTree2::Point> queries, std::size_t k, double power) {
  IdwInterpolator idw(std::vector<KdTree2::Point>(source.begin(), source.end()), 1.0, 1.0,
                      IdwOptions{k, power, 1e-12});
  return idw.interpolate(values, queries);
}

std::vector<KdTree2::Point> node_points(const AxisymGrid& grid) {
  std::vector<KdTree2::Point> pts(grid.nodes());
  for (std::size_t n = 0; n < grid.nodes(); ++n) pts[n] = {grid.node_x(n), grid.node_r(n)};
  return pts;
}

namespace {

/// Source-domain extents used to normalize IDW distances.
std::pair<double, double> extents(const RegionBoxes& b) { return {b.back().x1 - b.front().x0, b.front().r1}; }

}  // namespace

Eigen::SparseMatrix<double, Eigen::RowMajor> case_to_common_operator(const AxisymGrid& case_grid, const RegionMap& map,
                                                                      const CommonGrid& common,
                                                                      const IdwOptions& options) {
  const auto [X, R] = extents(map.target_boxes());
  IdwInterpolator idw(node_points(case_grid), X, R, options);
  auto queries = node_points(common.grid);
  for (auto& q : queries) q = map.forward(q);
  return idw.operator_for(queries);
}

Eigen::SparseMatrix<double, Eigen::RowMajor> common_to_case_operator(const CommonGrid& common, const RegionMap& map,
                                                                      const AxisymGrid& target_grid,
                                                                      const IdwOptions& options) {
  const auto [X, R] = extents(map.common_boxes());
  IdwInterpolator idw(node_points(common.grid), X, R, options);
  auto queries = node_points(target_grid);
  for (auto& q : queries) q = map.inverse(q);
  return idw.operator_for(queries);
}

AxisymGrid map_grid(const AxisymGrid& common, const RegionMap& map) {
  AxisymGrid out;
  out.x.resize(common.nx());
  out.r.resize(common.nr());
  for (std::size_t i = 0; i < common.nx(); ++i) out.x[i] = map.forward({common.x[i], 0.0})[0];
  const auto& m = map.transform(0);
  for (std::size_t j = 0; j < common.nr(); ++j) out.r[j] = m.sr * common.r[j] + m.orr;
  out.region_label = common.region_label;
  out.cell_area.resize(common.nodes());
  const double dr = common.nr() > 1 ? out.r[1] - out.r[0] : 2.0 * out.r[0];
  for (std::size_t i = 0; i < out.nx(); ++i) {
    const double left = i == 0 ? out.x[0] : 0.5 * (out.x[i - 1] + out.x[i]);
    const double right = i + 1 == out.nx() ? out.x.back() : 0.5 * (out.x[i] + out.x[i + 1]);
    for (std::size_t j = 0; j < out.nr(); ++j) out.cell_area[out.node(i, j)] = (right - left) * dr;
  }
  out.validate();
  return out;
}

SnapshotSeries rescale_case_to_common(const SnapshotSeries& series, const RegionMap& map, const CommonGrid& common,
                                      const IdwOptions& options) {
  const auto W = case_to_common_operator(series.grid, map, common, options);
  SnapshotSeries out;
  out.grid = common.grid;
  out.dt = series.dt;
  out.t0 = series.t0;
  for (const auto& [name, m] : series.variables) {
    if (static_cast<std::size_t>(m.rows()) != series.grid.nodes()) {
      throw Error(ErrorKind::ShapeMismatch, "variable '" + name + "' does not match its grid");
    }
    out.variables.emplace(name, Eigen::MatrixXd(W * m));
  }
  return out;
}

}  // namespace cpodem
