#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpodem/grid.hpp"

namespace cpodem {

/// Named node subset for error statistics.
struct RegionSpec {
  std::string name;
  std::vector<std::size_t> nodes;
};

RegionSpec region_overall(const AxisymGrid& grid);
/// Nodes with x <= injector exit.
RegionSpec region_upstream(const AxisymGrid& grid, const InjectorGeometry& geom);
RegionSpec region_downstream(const AxisymGrid& grid, const InjectorGeometry& geom);
RegionSpec region_box(const AxisymGrid& grid, const Box& box, std::string name);

/// RMS of (emu - sim) over the region divided by the max-min range of `sim`
/// over the whole field, in percent. Throws ZeroRange for a flat field.
double rmsre(const Eigen::VectorXd& sim, const Eigen::VectorXd& emu, const RegionSpec& region);

/// Time average of the per-snapshot RMSRE (columns are snapshots).
double rmsre_series(const Eigen::MatrixXd& sim, const Eigen::MatrixXd& emu, const RegionSpec& region);

enum class Window { Rect, Hann };

struct Spectrum {
  std::vector<double> frequency;  ///< Hz, 0 .. Nyquist
  std::vector<double> density;    ///< (signal units)^2 / Hz, one-sided
  double df = 0.0;
};

/// One-sided periodogram. Densities are scaled so that sum(density) * df
/// equals the mean square of the windowed signal divided by the window's
/// mean square; with the rect window that is exactly the signal's mean square.
Spectrum psd(std::span<const double> signal, double dt, Window window = Window::Rect, bool detrend = false);

double nyquist_frequency(double dt);

/// Frequency of the largest non-DC bin.
double dominant_frequency(const Spectrum& s);

struct FilmMetrics {
  double h = 0.0;      ///< mm
  double alpha = 0.0;  ///< degrees
  /// Interface samples (x, r) at every station where one was found.
  std::vector<std::array<double, 2>> interface;
  std::size_t slope_stations = 0;
};

struct FilmOptions {
  /// Stations whose peak gradient jump is below this share of the field range are skipped.
  double min_jump = 0.05;
  std::size_t min_stations = 3;
};

/// Interface = radius of the largest radial density gradient per axial
/// station (centered differences with parabolic refinement). h is R_n minus
/// the interface radius at the exit; alpha is the arctangent of the
/// least-squares slope of interface radius against x over the spread run
/// downstream of the exit (widened until enough stations carry an interface).
FilmMetrics extract_film_metrics(const Eigen::VectorXd& density, const AxisymGrid& grid, const InjectorGeometry& geom,
                                 const FilmOptions& options = {});

/// Same, applied to the time-mean density of the series.
FilmMetrics extract_film_metrics(const SnapshotSeries& series, const InjectorGeometry& geom,
                                 const FilmOptions& options = {});

using ProbeSet = std::vector<std::array<double, 2>>;

/// `count` probes on the extracted film surface, evenly spaced in x from
/// mid-injector to one injector length past the exit.
ProbeSet default_probes(const FilmMetrics& film, const AxisymGrid& grid, const InjectorGeometry& geom,
                        std::size_t count = 8);

/// Time signal of `variable` at each probe by 4-neighbour IDW (one column per
/// probe). Throws OutOfDomain for probes outside the grid.
Eigen::MatrixXd probe_signals(const SnapshotSeries& series, const ProbeSet& probes, const std::string& variable);

/// Pointwise one-sided CI widths for a variance field.
Eigen::MatrixXd uq_map(const Eigen::MatrixXd& variance, double level = 0.80);

}  // namespace cpodem
