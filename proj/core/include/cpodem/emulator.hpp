#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpodem/common_grid.hpp"
#include "cpodem/cpod.hpp"
#include "cpodem/design.hpp"
#include "cpodem/diagnostics.hpp"
#include "cpodem/grid.hpp"
#include "cpodem/kriging.hpp"
#include "cpodem/label.hpp"
#include "cpodem/tree.hpp"

namespace cpodem {

struct EmulatorConfig {
  std::vector<std::string> variables{"temperature", "density", "pressure", "axial_velocity", "azimuthal_velocity"};
  double energy_target = 0.99;
  bool center = true;  ///< subtract the pooled mean before CPOD
  double nugget = 1e-8;
  /// Fit the nugget by maximum likelihood (bounded below by `nugget`) for the
  /// field GPs and the scalar GPs respectively.
  bool field_nugget_mle = false;
  bool scalar_nugget_mle = false;
  double max_nugget = 1e-2;
  std::size_t gp_starts = 8;         ///< multi-starts per (mode, timestep) GP
  std::size_t scalar_gp_starts = 8;  ///< multi-starts for the thickness and angle GPs
  std::uint64_t seed = 1;
  bool partitioned = true;
  std::size_t tree_max_depth = 4;
  std::size_t tree_min_leaf = 2;
  EigenSolverKind solver = EigenSolverKind::Auto;
  double ci_level = 0.80;
  IdwOptions idw{};
};

/// Per-variable CPOD basis with one GP per (mode, timestep).
struct VariableModel {
  CPODBasis basis;
  CoeffTable coefficients;
  std::vector<GPModel> gps;  ///< index k * T + t

  const GPModel& gp(std::size_t k, std::size_t t) const { return gps.at(k * coefficients.T + t); }
};

/// One training subgroup: its cases, common grid, and per-variable models.
struct PartitionModel {
  std::string name;                  ///< "jet", "swirl" or "pooled"
  std::vector<std::size_t> cases;    ///< indices into EmulatorModel::designs
  Eigen::MatrixXd X;                 ///< normalized training designs, one row per case
  CommonGrid common;
  std::vector<RegionBoxes> case_boxes;
  std::map<std::string, VariableModel> variables;
};

struct TrainingCase {
  std::string name;
  DesignPoint design;
  SnapshotSeries series;
};

struct EmulatorModel {
  EmulatorConfig config;
  DesignSpace space;
  std::size_t steps = 0;
  double dt = 0.0;
  double t0 = 0.0;

  std::vector<std::string> case_names;
  std::vector<DesignPoint> designs;
  std::vector<FlowLabel> labels;  ///< from the extracted spreading angle
  std::vector<double> thickness;  ///< extracted film thickness per case, mm
  std::vector<double> angle;      ///< extracted spreading angle per case, degrees

  std::optional<DecisionTree> tree;  ///< present iff trained with partitioning
  std::vector<PartitionModel> partitions;
  std::map<FlowLabel, std::size_t> routing;  ///< class -> partition index

  GPModel thickness_gp;
  GPModel angle_gp;
  std::vector<std::string> warnings;

  FlowLabel classify(const DesignPoint& d) const;
  const PartitionModel& partition_for(FlowLabel label) const;
};

/// Trains from in-memory cases (all sharing T and the configured variables).
/// Cases are labeled by the 30 degree rule on their extracted spreading
/// angle. With partitioning, a tree is fitted on the labels and each class
/// with at least two cases gets its own CPOD and GP set; classes with fewer
/// fall back to a pooled model. Throws CorpusError for inconsistent input.
EmulatorModel train(const std::vector<TrainingCase>& cases, const DesignSpace& space, const EmulatorConfig& config);

/// Reads every case directory under `corpus` and trains.
EmulatorModel train_from_corpus(const std::filesystem::path& corpus, const DesignSpace& space,
                                const EmulatorConfig& config);

struct ScalarPrediction {
  double mean = 0.0;
  double variance = 0.0;
  double ci = 0.0;  ///< one-sided half-width at the model's level
};

struct EmulationResult {
  DesignPoint design;
  FlowLabel classification = FlowLabel::Jet;
  std::string partition;
  SnapshotSeries fields;                               ///< on the design's mapped grid
  std::map<std::string, Eigen::MatrixXd> variance;     ///< nodes x T per variable
  std::map<std::string, Eigen::MatrixXd> coefficients; ///< K x T predicted beta per variable
  ScalarPrediction thickness;                          ///< point-wise scalar GP
  ScalarPrediction angle;
  std::optional<FilmMetrics> extracted;                ///< from the emulated density, when available
};

struct PredictOptions {
  std::vector<std::string> variables;  ///< empty = every trained variable
  bool variance = true;
  std::size_t mode_limit = 0;          ///< 0 = all modes; otherwise later modes are zeroed
  /// Called with the partition name before any GP is evaluated.
  std::function<void(const std::string&)> on_route;
};

/// Classifies the design, routes it to its partition, predicts every
/// (mode, timestep) coefficient and assembles mean and variance fields on the
/// design's own geometry. Throws OutOfBounds or ModelMissing.
EmulationResult predict_field(const EmulatorModel& model, const DesignPoint& d, const PredictOptions& options = {});

enum class ScalarResponse { Thickness, Angle };

ScalarPrediction predict_scalar(const EmulatorModel& model, ScalarResponse response, const DesignPoint& d);

/// Rows of normalized designs for the given case indices.
Eigen::MatrixXd normalized_designs(const std::vector<DesignPoint>& designs, const DesignSpace& space);

}  // namespace cpodem
