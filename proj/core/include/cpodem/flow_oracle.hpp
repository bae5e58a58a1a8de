#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cpodem/design.hpp"
#include "cpodem/grid.hpp"
#include "cpodem/label.hpp"

namespace cpodem {

struct OracleTruth {
  double h = 0.0;       ///< film thickness, mm
  double alpha = 0.0;   ///< spreading angle, degrees
  double f_wave = 0.0;  ///< surface-wave frequency, Hz
  FlowLabel label = FlowLabel::Jet;
};

/// Closed-form ground truth. With (l, rho, vt, dn, dl) the normalized design:
///   alpha = 20 + 30 vt - 18 dn + 2 (1 - l)
///   h     = R_n max(0.10 + 0.25 dn - 0.10 vt + 0.03 l, 0.02)
///   f     = 2000 (1 + 0.5 vt)
OracleTruth oracle_metrics(const DesignPoint& d, const DesignSpace& s);

struct FlowSample {
  double temperature = 0.0;         ///< K
  double density = 0.0;             ///< kg/m^3
  double pressure = 0.0;            ///< Pa
  double axial_velocity = 0.0;      ///< m/s
  double azimuthal_velocity = 0.0;  ///< m/s
};

/// Point evaluator for the synthetic injector flow.
///
/// A liquid core sits on the axis side of the interface r_f(x) and ambient
/// gas outside it. Inside the injector r_f = R_n - h. Downstream of the exit
/// swirling designs open a cone at alpha; jet-like designs spread at alpha
/// only over the spread run (one nozzle radius) and then continue as a
/// straight annulus. A travelling wave of amplitude 0.1 h and wavelength 4 h rides the interface.
class FlowOracle {
 public:
  static constexpr double kAmbientTemperature = 300.0;
  static constexpr double kLiquidTemperature = 120.0;
  static constexpr double kChamberPressure = 10132500.0;  // 100 atm
  static constexpr double kMassFlow = 0.15;               // kg/s
  static constexpr double kLiquidDensity = 1000.0;        // kg/m^3

  FlowOracle(const DesignPoint& d, const DesignSpace& s);

  const OracleTruth& truth() const noexcept { return truth_; }
  const InjectorGeometry& geometry() const noexcept { return geom_; }

  /// Mean interface radius (no wave), mm.
  double interface_radius(double x) const;
  /// Interface radius including the travelling wave at time t.
  double interface_radius(double x, double t) const;
  /// Bulk axial velocity of the film, m/s.
  double film_velocity() const noexcept { return u0_; }

  FlowSample sample(double x, double r, double t) const;

  static double density_of(double temperature) noexcept;

 private:
  double phase(double x, double t) const noexcept;

  InjectorGeometry geom_;
  OracleTruth truth_;
  double swirl_ = 0.0;  // normalized theta
  double tan_alpha_ = 0.0;
  double u0_ = 0.0;
};

struct OracleOptions {
  GridSpec grid{};
  std::size_t steps = 64;
  double dt = 30e-6;
  std::uint64_t seed = 0;
  /// Start time drawn from [0, start_jitter / f_wave) with the seed; 0 keeps t0 = 0.
  double start_jitter = 0.0;
};

/// Samples the oracle on the case grid built from the design's geometry.
SnapshotSeries oracle_fields(const DesignPoint& d, const DesignSpace& s, const OracleOptions& options = {});

/// Samples the oracle on an arbitrary grid (options.grid is ignored).
SnapshotSeries oracle_on_grid(const DesignPoint& d, const DesignSpace& s, const AxisymGrid& grid,
                              const OracleOptions& options = {});

/// Jet or swirl from the spreading angle extracted out of the density field.
FlowLabel label_flow(const SnapshotSeries& series, const InjectorGeometry& geom);

/// Writes one oracle case per design as case_000, case_001, ... under `dir`.
/// Case i uses seed mix_seed(options.seed, i). Returns the case directories.
std::vector<std::filesystem::path> write_oracle_corpus(const std::filesystem::path& dir,
                                                       std::span<const DesignPoint> designs, const DesignSpace& s,
                                                       const OracleOptions& options = {});

}  // namespace cpodem
