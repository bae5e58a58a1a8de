#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cpodem/common_grid.hpp"
#include "cpodem/error.hpp"
#include "cpodem/flow_oracle.hpp"
#include "cpodem/kdtree.hpp"
#include "cpodem/random.hpp"
#include "test_support.hpp"

namespace cpodem {
namespace {

using Point = KdTree2::Point;

const DesignPoint kDesignA{20.0, 3.22, 52.9, 0.52, 3.42};
const DesignPoint kDesignB{41.9, 3.05, 65.5, 1.57, 1.00};

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::Io;
}

CommonGrid common_from(const DesignPoint& d, const GridSpec& spec = {}) {
  const std::vector<AxisymGrid> grids{build_case_grid(InjectorGeometry::from(d), spec)};
  const std::vector<DesignPoint> designs{d};
  return select_common_grid(grids, designs);
}

double rel_rms(const Eigen::VectorXd& ref, const Eigen::VectorXd& got) {
  return std::sqrt((got - ref).squaredNorm() / ref.squaredNorm());
}

TEST(KdTree, MatchesBruteForce) {
  auto rng = make_rng(1);
  std::vector<Point> pts(700);
  for (auto& p : pts) p = {uniform01(rng) * 10.0, uniform01(rng)};
  // Duplicated points exercise the index tie-break.
  pts[10] = pts[20];
  pts[30] = pts[20];
  const KdTree2 tree(pts);
  for (int q = 0; q < 200; ++q) {
    const Point query = q == 0 ? pts[20] : Point{uniform01(rng) * 11.0 - 0.5, uniform01(rng) * 1.2 - 0.1};
    for (std::size_t k : {1u, 3u, 10u, 25u}) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dx = pts[i][0] - query[0], dr = pts[i][1] - query[1];
        all.emplace_back(dx * dx + dr * dr, i);
      }
      std::sort(all.begin(), all.end());
      all.resize(k);
      EXPECT_EQ(tree.nearest(query, k), all) << q << " k=" << k;
    }
  }
}

TEST(KdTree, SmallAndEmpty) {
  const KdTree2 empty;
  EXPECT_TRUE(empty.nearest({0, 0}, 3).empty());
  const KdTree2 two({{0, 0}, {1, 0}});
  const auto r = two.nearest({0.9, 0}, 5);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].second, 1u);
}

TEST(PartitionDomain, AxialBreaks) {
  const auto grid = build_case_grid(InjectorGeometry::from(kDesignA), {});
  const auto boxes = partition_domain(grid, kDesignA);
  const double breaks[] = {0, 3.42, 23.42, 43.42, 63.42, 83.42};
  for (std::size_t k = 0; k < kRegionCount; ++k) {
    EXPECT_NEAR(boxes[k].x0, breaks[k], 1e-12);
    EXPECT_NEAR(boxes[k].x1, breaks[k + 1], 1e-12);
    EXPECT_EQ(boxes[k].r0, 0.0);
    EXPECT_NEAR(boxes[k].r1, 3 * 3.22, 1e-12);
  }
  EXPECT_EQ(boxes, partition_domain(build_case_grid(InjectorGeometry::from(kDesignA), {}), kDesignA));
}

TEST(PartitionDomain, GridTooSmall) {
  const auto grid = build_case_grid(InjectorGeometry::from(kDesignA), {});
  EXPECT_EQ(kind_of([&] { partition_domain(grid, kDesignB); }), ErrorKind::GeometryMismatch);
}

TEST(PartitionDomain, EveryNodeHasOneRegion) {
  const auto grid = build_case_grid(InjectorGeometry::from(kDesignB), {});
  grid.validate();
  const auto boxes = region_boxes(InjectorGeometry::from(kDesignB));
  std::array<std::size_t, kRegionCount> counts{};
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    const auto reg = static_cast<std::size_t>(grid.region(n));
    ASSERT_LT(reg, kRegionCount);
    ++counts[reg];
    EXPECT_GE(grid.node_x(n), boxes[reg].x0 - 1e-12);
    EXPECT_LE(grid.node_x(n), boxes[reg].x1 + 1e-12);
  }
  for (auto c : counts) EXPECT_GT(c, 0u);
}

TEST(SelectCommonGrid, DensestWins) {
  GridSpec coarse, fine;
  fine.nx = 96;
  fine.nr = 64;
  const std::vector<AxisymGrid> grids{build_case_grid(InjectorGeometry::from(kDesignB), coarse),
                                      build_case_grid(InjectorGeometry::from(kDesignA), fine)};
  const std::vector<DesignPoint> designs{kDesignB, kDesignA};
  const auto c = select_common_grid(grids, designs);
  EXPECT_EQ(c.source, 1u);
  EXPECT_EQ(c.grid.nodes(), 96u * 64u);
  EXPECT_EQ(c.design, kDesignA);

  const std::vector<AxisymGrid> tied{grids[0], grids[0]};
  EXPECT_EQ(densest_grid(tied), 0u);
  const std::vector<AxisymGrid> one{grids[0]};
  EXPECT_EQ(densest_grid(one), 0u);
  EXPECT_EQ(kind_of([] { densest_grid({}); }), ErrorKind::InvalidArgument);
}

TEST(RegionMap, IdentityForSameGeometry) {
  const auto common = common_from(kDesignA);
  const auto map = build_region_map(common, kDesignA);
  for (std::size_t k = 0; k < kRegionCount; ++k) {
    const auto& t = map.transform(k);
    EXPECT_NEAR(t.sx, 1.0, 1e-14);
    EXPECT_NEAR(t.ox, 0.0, 1e-12);
    EXPECT_NEAR(t.sr, 1.0, 1e-14);
    EXPECT_NEAR(t.orr, 0.0, 1e-12);
  }
}

TEST(RegionMap, TwoPointAffine) {
  RegionBoxes common{}, target{};
  const double cb[] = {0, 3, 23, 30, 40, 50}, tb[] = {0, 1, 41, 50, 60, 70};
  for (std::size_t k = 0; k < kRegionCount; ++k) {
    common[k] = {cb[k], cb[k + 1], 0, 6};
    target[k] = {tb[k], tb[k + 1], 0, 9};
  }
  const RegionMap map(common, target);
  EXPECT_DOUBLE_EQ(map.transform(1).sx, 2.0);
  EXPECT_DOUBLE_EQ(map.transform(1).ox, -5.0);
  EXPECT_DOUBLE_EQ(map.transform(1).sr, 1.5);
  target[2].x1 = target[2].x0;
  EXPECT_EQ(kind_of([&] { RegionMap(common, target); }), ErrorKind::DegenerateRegion);
}

TEST(RegionMap, ForwardInverseRoundTrip) {
  const auto common = common_from(kDesignA);
  const auto map = build_region_map(common, kDesignB);
  auto rng = make_rng(2);
  const auto& b = common.boxes;
  for (int i = 0; i < 1000; ++i) {
    const Point p{b.front().x0 + uniform01(rng) * (b.back().x1 - b.front().x0), uniform01(rng) * b.front().r1};
    const auto back = map.inverse(map.forward(p));
    EXPECT_NEAR(back[0], p[0], 1e-12 * (1 + std::abs(p[0])));
    EXPECT_NEAR(back[1], p[1], 1e-12 * (1 + std::abs(p[1])));
  }
}

TEST(RegionMap, ContinuousAtBoundaries) {
  const auto common = common_from(kDesignA);
  const auto map = build_region_map(common, kDesignB);
  for (std::size_t k = 0; k + 1 < kRegionCount; ++k) {
    const double xb = common.boxes[k].x1;
    for (double r : {0.0, 1.0, 5.0, 9.0}) {
      const auto& lo = map.transform(k);
      const auto& hi = map.transform(k + 1);
      EXPECT_NEAR(lo.sx * xb + lo.ox, hi.sx * xb + hi.ox, 1e-9);
      EXPECT_NEAR(lo.sr * r + lo.orr, hi.sr * r + hi.orr, 1e-9);
    }
    EXPECT_NEAR(map.forward({xb, 1.0})[0], map.target_boxes()[k].x1, 1e-9);
  }
}

TEST(Idw, ExactAtNodesAndConstantPreserving) {
  auto rng = make_rng(3);
  std::vector<Point> src(200);
  Eigen::VectorXd v(200);
  for (std::size_t i = 0; i < src.size(); ++i) {
    src[i] = {uniform01(rng), uniform01(rng)};
    v(static_cast<Eigen::Index>(i)) = std::sin(7 * src[i][0]) + src[i][1];
  }
  const auto at_nodes = idw_interpolate(src, v, src);
  EXPECT_EQ(at_nodes, v);

  std::vector<Point> queries(100);
  for (auto& q : queries) q = {uniform01(rng) * 1.4 - 0.2, uniform01(rng) * 1.4 - 0.2};
  const auto flat = idw_interpolate(src, Eigen::VectorXd::Constant(200, 4.25), queries);
  for (Eigen::Index i = 0; i < flat.size(); ++i) EXPECT_NEAR(flat(i), 4.25, 1e-13);
}

TEST(Idw, EquidistantPair) {
  const std::vector<Point> src{{0, 0}, {2, 0}, {10, 10}};
  const Eigen::Vector3d v(0.0, 10.0, -50.0);
  const std::vector<Point> q{{1, 0}};
  EXPECT_DOUBLE_EQ(idw_interpolate(src, v, q, 2)(0), 5.0);
}

TEST(Idw, ConvexCombinationOfNeighbours) {
  auto rng = make_rng(4);
  std::vector<Point> src(300);
  Eigen::VectorXd v(300);
  for (std::size_t i = 0; i < src.size(); ++i) {
    src[i] = {uniform01(rng), uniform01(rng)};
    v(static_cast<Eigen::Index>(i)) = uniform01(rng) * 100 - 50;
  }
  const KdTree2 tree(src);
  for (int i = 0; i < 300; ++i) {
    const Point q{uniform01(rng), uniform01(rng)};
    const std::vector<Point> qs{q};
    const double y = idw_interpolate(src, v, qs)(0);
    double lo = 1e300, hi = -1e300;
    for (const auto& [d2, idx] : tree.nearest(q, 10)) {
      lo = std::min(lo, v(static_cast<Eigen::Index>(idx)));
      hi = std::max(hi, v(static_cast<Eigen::Index>(idx)));
    }
    EXPECT_GE(y, lo - 1e-12);
    EXPECT_LE(y, hi + 1e-12);
  }
}

TEST(Idw, OperatorRowsAreStochastic) {
  auto rng = make_rng(6);
  std::vector<Point> src(50), qs(40);
  for (auto& p : src) p = {uniform01(rng) * 5, uniform01(rng)};
  for (auto& p : qs) p = {uniform01(rng) * 5, uniform01(rng)};
  const IdwInterpolator idw(src, 5.0, 1.0);
  const auto W = idw.operator_for(qs);
  ASSERT_EQ(W.rows(), 40);
  ASSERT_EQ(W.cols(), 50);
  const Eigen::VectorXd sums = W * Eigen::VectorXd::Ones(50);
  for (Eigen::Index i = 0; i < sums.size(); ++i) EXPECT_NEAR(sums(i), 1.0, 1e-14);
  for (int k = 0; k < W.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(W, k); it; ++it) EXPECT_GE(it.value(), 0.0);
  }
}

TEST(Idw, Errors) {
  const std::vector<Point> none;
  const std::vector<Point> q{{0, 0}};
  EXPECT_EQ(kind_of([&] { idw_interpolate(none, Eigen::VectorXd(), q); }), ErrorKind::EmptySource);
  const std::vector<Point> two{{0, 0}, {1, 1}};
  EXPECT_EQ(kind_of([&] { idw_interpolate(two, Eigen::Vector2d(1, 2), q, 3); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { IdwInterpolator(two, 1.0, 1.0, IdwOptions{1, 2.0, 1e-12}).interpolate(Eigen::Vector3d::Zero(), q); }),
            ErrorKind::ShapeMismatch);
}

TEST(Rescale, SameGeometryIsIdentity) {
  const auto common = common_from(kDesignA);
  OracleOptions oo;
  oo.steps = 4;
  const auto series = oracle_fields(kDesignA, injector_design_space(), oo);
  const auto out = rescale_case_to_common(series, build_region_map(common, kDesignA), common);
  for (const auto& [name, m] : series.variables) EXPECT_EQ(out.at(name), m) << name;
}

TEST(Rescale, LinearFieldUnderScaling) {
  const auto common = common_from(kDesignA);
  const auto map = build_region_map(common, kDesignB);
  const auto case_grid = build_case_grid(InjectorGeometry::from(kDesignB), {});
  const double a = 3.0, b = 0.25;
  Eigen::VectorXd f(static_cast<Eigen::Index>(case_grid.nodes()));
  for (std::size_t n = 0; n < case_grid.nodes(); ++n) f(static_cast<Eigen::Index>(n)) = a + b * case_grid.node_x(n);
  const auto W = case_to_common_operator(case_grid, map, common);
  const Eigen::VectorXd g = W * f;
  const auto& cb = common.boxes;
  for (std::size_t n = 0; n < common.grid.nodes(); ++n) {
    const double x = common.grid.node_x(n);
    if (x <= cb.front().x0 || x >= cb.back().x1) continue;
    const double expected = a + b * map.forward({x, common.grid.node_r(n)})[0];
    EXPECT_NEAR(g(static_cast<Eigen::Index>(n)), expected, 0.01 * std::abs(expected)) << n;
  }
}

TEST(Rescale, OutputWithinInputRange) {
  const auto common = common_from(kDesignA);
  OracleOptions oo;
  oo.steps = 3;
  const auto series = oracle_fields(kDesignB, injector_design_space(), oo);
  const auto out = rescale_case_to_common(series, build_region_map(common, kDesignB), common);
  for (const auto& [name, m] : series.variables) {
    EXPECT_GE(out.at(name).minCoeff(), m.minCoeff() - 1e-9) << name;
    EXPECT_LE(out.at(name).maxCoeff(), m.maxCoeff() + 1e-9) << name;
  }
}

TEST(Rescale, SmoothFieldRoundTripWithinTwoPercent) {
  const auto& space = injector_design_space();
  const auto common = common_from(kDesignA);
  OracleOptions oo;
  oo.steps = 2;
  for (const auto& d : {kDesignB, DesignPoint{60, 3.5, 60, 1.25, 2.5}, DesignPoint{95, 4.8, 70, 1.9, 1.5}}) {
    const auto map = build_region_map(common, d);
    const auto case_grid = build_case_grid(InjectorGeometry::from(d), {});
    const auto to_case = common_to_case_operator(common, map, case_grid);
    const auto to_common = case_to_common_operator(case_grid, map, common);
    // Oracle fields carried onto the common grid through the map.
    const auto mapped = oracle_on_grid(d, space, map_grid(common.grid, map), oo);
    for (const char* v : {"temperature", "pressure", "axial_velocity", "azimuthal_velocity"}) {
      const Eigen::VectorXd f = mapped.at(v).col(1);
      const Eigen::VectorXd back = to_common * (to_case * f);
      EXPECT_LE(rel_rms(f, back), 0.02) << v << " at " << format_design(d);
    }
  }
}

TEST(MapGrid, NodesFollowTheAffineMaps) {
  const auto common = common_from(kDesignA);
  const auto map = build_region_map(common, kDesignB);
  const auto g = map_grid(common.grid, map);
  g.validate();
  ASSERT_EQ(g.nodes(), common.grid.nodes());
  const auto& tb = map.target_boxes();
  EXPECT_NEAR(g.x.front(), map.forward({common.grid.x.front(), 0})[0], 1e-12);
  EXPECT_NEAR(g.x.back(), map.forward({common.grid.x.back(), 0})[0], 1e-9);
  EXPECT_LE(g.x.back(), tb.back().x1 + 1e-9);
  EXPECT_EQ(g.region_label, common.grid.region_label);
}

}  // namespace
}  // namespace cpodem
