#include "cpodem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "cpodem/common_grid.hpp"
#include "cpodem/error.hpp"
#include "cpodem/kriging.hpp"

namespace cpodem {
namespace {

constexpr double kPi = std::numbers::pi;

RegionSpec select(const AxisymGrid& grid, std::string name, auto&& keep) {
  RegionSpec r{std::move(name), {}};
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    if (keep(n)) r.nodes.push_back(n);
  }
  if (r.nodes.empty()) throw Error(ErrorKind::InvalidArgument, "region '" + r.name + "' has no nodes");
  return r;
}

/// Radius of the strongest radial gradient in axial column i, or NaN when
/// the column carries no clear interface.
double interface_in_column(const Eigen::VectorXd& rho, const AxisymGrid& grid, std::size_t i, double field_range,
                           double min_jump) {
  const std::size_t nr = grid.nr();
  if (nr < 3) return std::nan("");
  std::vector<double> g(nr);
  for (std::size_t j = 0; j < nr; ++j) {
    const std::size_t a = j == 0 ? 0 : j - 1;
    const std::size_t b = j + 1 == nr ? j : j + 1;
    g[j] = std::abs(rho(static_cast<Eigen::Index>(grid.node(i, b))) - rho(static_cast<Eigen::Index>(grid.node(i, a)))) /
           (grid.r[b] - grid.r[a]);
  }
  const auto it = std::max_element(g.begin(), g.end());
  const auto js = static_cast<std::size_t>(it - g.begin());
  if (js == 0 || js + 1 == nr) return std::nan("");
  const double spacing = 0.5 * (grid.r[js + 1] - grid.r[js - 1]);
  if (*it * spacing < min_jump * field_range) return std::nan("");
  const double gm = g[js - 1];
  const double g0 = g[js];
  const double gp = g[js + 1];
  const double curv = gm - 2.0 * g0 + gp;
  double off = curv < 0.0 ? 0.5 * (gm - gp) / curv : 0.0;
  off = std::clamp(off, -0.5, 0.5);
  return grid.r[js] + off * (off < 0.0 ? grid.r[js] - grid.r[js - 1] : grid.r[js + 1] - grid.r[js]);
}

}  // namespace

RegionSpec region_overall(const AxisymGrid& grid) {
  return select(grid, "overall", [](std::size_t) { return true; });
}

RegionSpec region_upstream(const AxisymGrid& grid, const InjectorGeometry& geom) {
  const double xe = geom.exit() * (1.0 + 1e-12);
  return select(grid, "upstream", [&](std::size_t n) { return grid.node_x(n) <= xe; });
}

RegionSpec region_downstream(const AxisymGrid& grid, const InjectorGeometry& geom) {
  const double xe = geom.exit() * (1.0 + 1e-12);
  return select(grid, "downstream", [&](std::size_t n) { return grid.node_x(n) > xe; });
}

RegionSpec region_box(const AxisymGrid& grid, const Box& box, std::string name) {
  return select(grid, std::move(name), [&](std::size_t n) {
    const double x = grid.node_x(n);
    const double r = grid.node_r(n);
    return x >= box.x0 && x <= box.x1 && r >= box.r0 && r <= box.r1;
  });
}

double rmsre(const Eigen::VectorXd& sim, const Eigen::VectorXd& emu, const RegionSpec& region) {
  if (sim.size() != emu.size()) throw Error(ErrorKind::ShapeMismatch, "simulated and emulated fields differ in size");
  if (region.nodes.empty()) throw Error(ErrorKind::InvalidArgument, "empty region");
  const double range = sim.maxCoeff() - sim.minCoeff();
  if (!(range > 0.0)) throw Error(ErrorKind::ZeroRange, "simulated field is constant");
  double acc = 0.0;
  for (auto n : region.nodes) {
    if (n >= static_cast<std::size_t>(sim.size())) throw Error(ErrorKind::ShapeMismatch, "region node out of range");
    const double d = emu(static_cast<Eigen::Index>(n)) - sim(static_cast<Eigen::Index>(n));
    acc += d * d;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(region.nodes.size())) / range;
}

double rmsre_series(const Eigen::MatrixXd& sim, const Eigen::MatrixXd& emu, const RegionSpec& region) {
  if (sim.rows() != emu.rows() || sim.cols() != emu.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "simulated and emulated series differ in shape");
  }
  if (sim.cols() == 0) throw Error(ErrorKind::ShapeMismatch, "empty series");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < sim.cols(); ++t) acc += rmsre(sim.col(t), emu.col(t), region);
  return acc / static_cast<double>(sim.cols());
}

Spectrum psd(std::span<const double> signal, double dt, Window window, bool detrend) {
  const std::size_t N = signal.size();
  if (N < 8) throw Error(ErrorKind::InvalidArgument, "PSD needs at least 8 samples");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "PSD needs dt > 0");
  std::vector<double> x(signal.begin(), signal.end());
  if (detrend) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(N);
    for (double& v : x) v -= mean;
  }
  double wss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double w =
        window == Window::Hann ? 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(n) / static_cast<double>(N)))
                               : 1.0;
    x[n] *= w;
    wss += w * w;
  }
  const double U = wss / static_cast<double>(N);

  Spectrum s;
  s.df = 1.0 / (static_cast<double>(N) * dt);
  const std::size_t half = N / 2;
  s.frequency.resize(half + 1);
  s.density.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < N; ++n) {
      const double ang = -2.0 * kPi * static_cast<double>((k * n) % N) / static_cast<double>(N);
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    double p = std::norm(acc) * dt / (static_cast<double>(N) * U);
    const bool unpaired = k == 0 || (N % 2 == 0 && k == half);
    if (!unpaired) p *= 2.0;
    s.frequency[k] = static_cast<double>(k) * s.df;
    s.density[k] = p;
  }
  return s;
}

double nyquist_frequency(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  return 0.5 / dt;
}

double dominant_frequency(const Spectrum& s) {
  if (s.density.size() < 2) throw Error(ErrorKind::InvalidArgument, "spectrum has no non-DC bins");
  const auto it = std::max_element(s.density.begin() + 1, s.density.end());
  return s.frequency[static_cast<std::size_t>(it - s.density.begin())];
}

FilmMetrics extract_film_metrics(const Eigen::VectorXd& rho, const AxisymGrid& grid, const InjectorGeometry& geom,
                                 const FilmOptions& options) {
  if (static_cast<std::size_t>(rho.size()) != grid.nodes()) {
    throw Error(ErrorKind::ShapeMismatch, "density does not match the grid");
  }
  const double xe = geom.exit();
  if (xe < grid.x.front() || xe > grid.x.back()) throw Error(ErrorKind::NoInterface, "injector exit outside the grid");
  const double range = rho.maxCoeff() - rho.minCoeff();
  const double scale = std::max(rho.cwiseAbs().maxCoeff(), 1e-300);
  if (!(range > 1e-9 * scale)) throw Error(ErrorKind::NoInterface, "density field is flat");

  FilmMetrics out;
  std::vector<double> rif(grid.nx(), std::nan(""));
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    rif[i] = interface_in_column(rho, grid, i, range, options.min_jump);
    if (std::isfinite(rif[i])) out.interface.push_back({grid.x[i], rif[i]});
  }

  const auto exit_it = std::min_element(grid.x.begin(), grid.x.end(), [&](double a, double b) {
    return std::abs(a - xe) < std::abs(b - xe);
  });
  const auto ie = static_cast<std::size_t>(exit_it - grid.x.begin());
  if (!std::isfinite(rif[ie])) throw Error(ErrorKind::NoInterface, "no interface at the injector exit");
  out.h = geom.radius - rif[ie];

  double window = geom.spread_run();
  std::vector<double> xs, rs;
  for (;;) {
    xs.clear();
    rs.clear();
    for (std::size_t i = ie; i < grid.nx(); ++i) {
      if (grid.x[i] > xe + window * (1.0 + 1e-12)) break;
      if (std::isfinite(rif[i])) {
        xs.push_back(grid.x[i]);
        rs.push_back(rif[i]);
      }
    }
    if (xs.size() >= options.min_stations) break;
    if (xe + window >= grid.x.back()) throw Error(ErrorKind::NoInterface, "too few interface stations downstream");
    window *= 1.5;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, mr = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    mr += rs[k];
  }
  mx /= n;
  mr /= n;
  double sxx = 0.0, sxr = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxr += (xs[k] - mx) * (rs[k] - mr);
  }
  out.alpha = std::atan(sxr / sxx) * 180.0 / kPi;
  out.slope_stations = xs.size();
  return out;
}

FilmMetrics extract_film_metrics(const SnapshotSeries& series, const InjectorGeometry& geom,
                                 const FilmOptions& options) {
  const auto& rho = series.at("density");
  return extract_film_metrics(Eigen::VectorXd(rho.rowwise().mean()), series.grid, geom, options);
}

ProbeSet default_probes(const FilmMetrics& film, const AxisymGrid& grid, const InjectorGeometry& geom,
                        std::size_t count) {
  if (film.interface.empty()) throw Error(ErrorKind::NoInterface, "no interface samples for probe placement");
  if (count < 1) throw Error(ErrorKind::InvalidArgument, "need at least one probe");
  const double x0 = geom.headend + 0.5 * geom.length;
  const double x1 = geom.exit() + geom.length;
  const double rmax = grid.r.back();
  ProbeSet probes;
  for (std::size_t k = 0; k < count; ++k) {
    const double x = count == 1 ? x0 : x0 + (x1 - x0) * static_cast<double>(k) / static_cast<double>(count - 1);
    const auto& s = film.interface;
    double r = s.front()[1];
    if (x >= s.back()[0]) {
      r = s.back()[1];
    } else if (x > s.front()[0]) {
      const auto hi = std::lower_bound(s.begin(), s.end(), x, [](const auto& p, double v) { return p[0] < v; });
      const auto lo = hi - 1;
      const double w = ((*hi)[0] - (*lo)[0]) > 0.0 ? (x - (*lo)[0]) / ((*hi)[0] - (*lo)[0]) : 0.0;
      r = (*lo)[1] + w * ((*hi)[1] - (*lo)[1]);
    }
    probes.push_back({x, std::clamp(r, grid.r.front(), rmax)});
  }
  return probes;
}

Eigen::MatrixXd probe_signals(const SnapshotSeries& series, const ProbeSet& probes, const std::string& variable) {
  const auto& grid = series.grid;
  for (const auto& p : probes) {
    if (p[0] < grid.x.front() || p[0] > grid.x.back() || p[1] < 0.0 || p[1] > grid.r_extent()) {
      throw Error(ErrorKind::OutOfDomain, "probe outside the grid");
    }
  }
  const auto& data = series.at(variable);
  const double X = grid.x.back() - grid.x.front();
  const double R = grid.r_extent();
  IdwInterpolator idw(node_points(grid), X, R, IdwOptions{std::min<std::size_t>(4, grid.nodes()), 2.0, 1e-12});
  const auto W = idw.operator_for(probes);
  return Eigen::MatrixXd((W * data).transpose());
}

Eigen::MatrixXd uq_map(const Eigen::MatrixXd& variance, double level) {
  const double z = confidence_halfwidth(1.0, level);
  if ((variance.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "negative variance");
  return z * variance.array().sqrt().matrix();
}

}  // namespace cpodem
