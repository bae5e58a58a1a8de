#include "cpodem/flow_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "cpodem/diagnostics.hpp"
#include "cpodem/error.hpp"
#include "cpodem/parallel.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

constexpr double kPi = std::numbers::pi;

double logistic(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

OracleTruth oracle_metrics(const DesignPoint& d, const DesignSpace& s) {
  if (s.dim() != injector::kDim) {
    throw Error(ErrorKind::InvalidArgument, "the flow oracle needs the 5-parameter injector space");
  }
  const auto n = normalize(d, s);
  const double l = n[injector::kLength];
  const double vt = n[injector::kTheta];
  const double dn = n[injector::kDelta];

  OracleTruth t;
  t.alpha = 20.0 + 30.0 * vt - 18.0 * dn + 2.0 * (1.0 - l);
  t.h = d[injector::kRadius] * std::max(0.10 + 0.25 * dn - 0.10 * vt + 0.03 * l, 0.02);
  t.f_wave = 2000.0 * (1.0 + 0.5 * vt);
  t.label = label_for_angle(t.alpha);
  return t;
}

FlowOracle::FlowOracle(const DesignPoint& d, const DesignSpace& s)
    : geom_(InjectorGeometry::from(d)), truth_(oracle_metrics(d, s)) {
  swirl_ = normalize(d, s)[injector::kTheta];
  tan_alpha_ = std::tan(truth_.alpha * kPi / 180.0);
  // mdot = rho_liq * U0 * 2 pi R_n h, lengths converted from mm to m.
  u0_ = kMassFlow / (kLiquidDensity * 2.0 * kPi * geom_.radius * 1e-3 * truth_.h * 1e-3);
}

double FlowOracle::interface_radius(double x) const {
  const double base = geom_.radius - truth_.h;
  const double s = x - geom_.exit();
  if (s <= 0.0) return base;
  const double run = truth_.label == FlowLabel::Swirl ? s : std::min(s, geom_.spread_run());
  return base + run * tan_alpha_;
}

double FlowOracle::phase(double x, double t) const noexcept {
  return 2.0 * kPi * truth_.f_wave * t - 2.0 * kPi * x / (4.0 * truth_.h);
}

double FlowOracle::interface_radius(double x, double t) const {
  return interface_radius(x) + 0.1 * truth_.h * std::sin(phase(x, t));
}

double FlowOracle::density_of(double temperature) noexcept {
  // Affine: 120 K -> 1000 kg/m^3, 300 K -> 130 kg/m^3.
  return 1000.0 + (temperature - kLiquidTemperature) * (130.0 - 1000.0) / (kAmbientTemperature - kLiquidTemperature);
}

FlowSample FlowOracle::sample(double x, double r, double t) const {
  const double h = truth_.h;
  const double ph = phase(x, t);
  const double rf = interface_radius(x) + 0.1 * h * std::sin(ph);

  FlowSample out;
  const double z = (r - rf) / (0.15 * h);
  out.temperature = kAmbientTemperature - (kAmbientTemperature - kLiquidTemperature) * logistic(-z);
  out.density = density_of(out.temperature);

  const double decay = std::exp(-std::max(0.0, x - geom_.exit()) / geom_.length);
  out.pressure = kChamberPressure + 0.01 * kChamberPressure * std::sin(ph) * decay;

  // Quarter-cosine across the liquid, peaking on the axis and vanishing at the
  // interface; its radial mean over [0, rf] is exactly u0.
  out.axial_velocity = r < rf ? u0_ * 0.5 * kPi * std::cos(0.5 * kPi * r / rf) : 0.0;

  // Rankine profile: solid body inside the interface, free vortex outside.
  const double rankine = r <= rf ? r / rf : rf / r;
  out.azimuthal_velocity = 2.0 * u0_ * swirl_ * rankine;
  return out;
}

SnapshotSeries oracle_fields(const DesignPoint& d, const DesignSpace& s, const OracleOptions& options) {
  return oracle_on_grid(d, s, build_case_grid(InjectorGeometry::from(d), options.grid), options);
}

SnapshotSeries oracle_on_grid(const DesignPoint& d, const DesignSpace& s, const AxisymGrid& grid_in,
                              const OracleOptions& options) {
  if (options.steps < 1) throw Error(ErrorKind::InvalidArgument, "oracle needs at least one snapshot");
  if (!(options.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "oracle dt must be positive");
  const FlowOracle oracle(d, s);

  SnapshotSeries series;
  series.grid = grid_in;
  series.dt = options.dt;
  if (options.start_jitter > 0.0) {
    auto rng = make_rng(options.seed, 0x0AC1E);
    series.t0 = uniform01(rng) * options.start_jitter / oracle.truth().f_wave;
  }

  const auto nodes = static_cast<Eigen::Index>(series.grid.nodes());
  const auto T = static_cast<Eigen::Index>(options.steps);
  Eigen::MatrixXd temp(nodes, T), dens(nodes, T), pres(nodes, T), uax(nodes, T), uaz(nodes, T);
  const auto& grid = series.grid;
  parallel_for(options.steps, [&](std::size_t ti) {
    const double t = series.t0 + static_cast<double>(ti) * options.dt;
    const auto c = static_cast<Eigen::Index>(ti);
    for (std::size_t n = 0; n < grid.nodes(); ++n) {
      const auto f = oracle.sample(grid.node_x(n), grid.node_r(n), t);
      const auto row = static_cast<Eigen::Index>(n);
      temp(row, c) = f.temperature;
      dens(row, c) = f.density;
      pres(row, c) = f.pressure;
      uax(row, c) = f.axial_velocity;
      uaz(row, c) = f.azimuthal_velocity;
    }
  });
  series.variables.emplace("temperature", std::move(temp));
  series.variables.emplace("density", std::move(dens));
  series.variables.emplace("pressure", std::move(pres));
  series.variables.emplace("axial_velocity", std::move(uax));
  series.variables.emplace("azimuthal_velocity", std::move(uaz));
  return series;
}

FlowLabel label_flow(const SnapshotSeries& series, const InjectorGeometry& geom) {
  return label_for_angle(extract_film_metrics(series, geom).alpha);
}

std::vector<std::filesystem::path> write_oracle_corpus(const std::filesystem::path& dir,
                                                       std::span<const DesignPoint> designs, const DesignSpace& s,
                                                       const OracleOptions& options) {
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    OracleOptions o = options;
    o.seed = mix_seed(options.seed, i);
    const auto series = oracle_fields(designs[i], s, o);
    char name[32];
    std::snprintf(name, sizeof name, "case_%03zu", i);
    const auto cdir = dir / name;
    write_case(cdir, series, CaseMeta{designs[i], series.dt, series.t0, o.seed, series.steps()});
    out.push_back(cdir);
  }
  return out;
}

}  // namespace cpodem
