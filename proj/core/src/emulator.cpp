#include "cpodem/emulator.hpp"

#include <algorithm>
#include <functional>

#include "cpodem/error.hpp"
#include "cpodem/log.hpp"
#include "cpodem/parallel.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

std::uint64_t name_hash(const std::string& s) noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

GPModel fit_or_constant(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPFitOptions& opts) {
  if (X.rows() < 2) return GPModel::constant(X, y, Eigen::VectorXd::Ones(X.cols()), opts.nugget);
  return fit_mle(X, y, opts);
}

void check_corpus(const std::vector<TrainingCase>& cases, const EmulatorConfig& config) {
  if (cases.empty()) throw Error(ErrorKind::CorpusError, "training corpus is empty");
  if (config.variables.empty()) throw Error(ErrorKind::CorpusError, "no variables selected for training");
  const auto T = cases.front().series.steps();
  for (const auto& c : cases) {
    if (c.series.steps() != T) throw Error(ErrorKind::CorpusError, "case '" + c.name + "' has a different snapshot count");
    if (c.series.dt != cases.front().series.dt) {
      throw Error(ErrorKind::CorpusError, "case '" + c.name + "' has a different sampling interval");
    }
    if (!c.series.variables.count("density")) {
      throw Error(ErrorKind::CorpusError, "case '" + c.name + "' lacks density, needed for labeling");
    }
    for (const auto& v : config.variables) {
      if (!c.series.variables.count(v)) throw Error(ErrorKind::CorpusError, "case '" + c.name + "' lacks variable '" + v + "'");
    }
  }
}

PartitionModel train_partition(const std::string& name, std::vector<std::size_t> members,
                               const std::vector<TrainingCase>& cases, const Eigen::MatrixXd& X_all,
                               const EmulatorConfig& config, std::uint64_t stream) {
  PartitionModel part;
  part.name = name;
  part.cases = std::move(members);
  const auto n = part.cases.size();
  part.X.resize(static_cast<Eigen::Index>(n), X_all.cols());
  std::vector<AxisymGrid> grids;
  std::vector<DesignPoint> designs;
  for (std::size_t i = 0; i < n; ++i) {
    part.X.row(static_cast<Eigen::Index>(i)) = X_all.row(static_cast<Eigen::Index>(part.cases[i]));
    grids.push_back(cases[part.cases[i]].series.grid);
    designs.push_back(cases[part.cases[i]].design);
  }
  part.common = select_common_grid(grids, designs);

  std::vector<SnapshotSeries> rescaled(n);
  part.case_boxes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& src = cases[part.cases[i]].series;
    SnapshotSeries subset;
    subset.grid = src.grid;
    subset.dt = src.dt;
    subset.t0 = src.t0;
    for (const auto& v : config.variables) subset.variables.emplace(v, src.at(v));
    const auto map = build_region_map(part.common, designs[i]);
    part.case_boxes[i] = map.target_boxes();
    rescaled[i] = rescale_case_to_common(subset, map, part.common, config.idw);
  }
  const Eigen::VectorXd quadrature =
      Eigen::Map<const Eigen::VectorXd>(part.common.grid.cell_area.data(),
                                        static_cast<Eigen::Index>(part.common.grid.cell_area.size()));

  for (const auto& v : config.variables) {
    const auto ensemble = assemble_ensemble(std::span<const SnapshotSeries>(rescaled), v, config.center);
    BasisOptions bopts;
    bopts.energy_target = config.energy_target;
    bopts.solver = config.solver;
    auto fit = compute_basis(ensemble, quadrature, bopts);
    fit.basis.variable = v;

    VariableModel vm;
    vm.basis = std::move(fit.basis);
    vm.coefficients = std::move(fit.coefficients);
    const auto K = vm.coefficients.K;
    const auto T = vm.coefficients.T;
    vm.gps.resize(K * T);
    const auto vseed = mix_seed(config.seed, name_hash(v) ^ stream);
    parallel_for(K * T, [&](std::size_t kt) {
      const auto k = kt / T;
      const auto t = kt % T;
      Eigen::VectorXd y(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = vm.coefficients(k, i, t);
      GPFitOptions opts;
      opts.nugget = config.nugget;
      opts.n_starts = config.gp_starts;
      opts.estimate_nugget = config.field_nugget_mle;
      opts.max_nugget = config.max_nugget;
      opts.seed = mix_seed(vseed, kt);
      vm.gps[kt] = fit_or_constant(part.X, y, opts);
    });
    log::info("partition " + name + ": " + v + " K=" + std::to_string(K) + " energy=" +
              std::to_string(vm.basis.captured_energy()));
    part.variables.emplace(v, std::move(vm));
  }
  return part;
}

}  // namespace

Eigen::MatrixXd normalized_designs(const std::vector<DesignPoint>& designs, const DesignSpace& space) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(designs.size()), static_cast<Eigen::Index>(space.dim()));
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const auto c = normalize(designs[i], space);
    for (std::size_t k = 0; k < c.dim(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = c[k];
  }
  return X;
}

FlowLabel EmulatorModel::classify(const DesignPoint& d) const {
  if (tree) return tree->classify(normalize(d, space));
  return label_for_angle(predict_scalar(*this, ScalarResponse::Angle, d).mean);
}

const PartitionModel& EmulatorModel::partition_for(FlowLabel label) const {
  const auto it = routing.find(label);
  if (it == routing.end() || it->second >= partitions.size()) {
    throw Error(ErrorKind::ModelMissing, "no partition serves " + std::string(to_string(label)) + " designs");
  }
  return partitions[it->second];
}

EmulatorModel train(const std::vector<TrainingCase>& cases, const DesignSpace& space, const EmulatorConfig& config) {
  check_corpus(cases, config);
  if (!(config.energy_target > 0.0 && config.energy_target <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "energy target must lie in (0, 1]");
  }
  EmulatorModel m;
  m.config = config;
  m.space = space;
  m.steps = cases.front().series.steps();
  m.dt = cases.front().series.dt;
  m.t0 = cases.front().series.t0;

  for (const auto& c : cases) {
    check_in_bounds(c.design, space);
    const auto film = extract_film_metrics(c.series, InjectorGeometry::from(c.design));
    m.case_names.push_back(c.name);
    m.designs.push_back(c.design);
    m.thickness.push_back(film.h);
    m.angle.push_back(film.alpha);
    m.labels.push_back(label_for_angle(film.alpha));
  }
  const Eigen::MatrixXd X = normalized_designs(m.designs, space);
  const auto n = cases.size();

  std::vector<std::size_t> jet, swirl, all(n);
  for (std::size_t i = 0; i < n; ++i) {
    all[i] = i;
    (m.labels[i] == FlowLabel::Swirl ? swirl : jet).push_back(i);
  }

  if (config.partitioned) {
    std::vector<LabeledDesign> data;
    for (std::size_t i = 0; i < n; ++i) data.push_back({normalize(m.designs[i], space), m.labels[i]});
    m.tree = fit_tree(data, config.tree_max_depth, config.tree_min_leaf);

    const bool jet_ok = jet.size() >= 2;
    const bool swirl_ok = swirl.size() >= 2;
    if (jet_ok) {
      m.routing[FlowLabel::Jet] = m.partitions.size();
      m.partitions.push_back(train_partition("jet", jet, cases, X, config, 1));
    }
    if (swirl_ok) {
      m.routing[FlowLabel::Swirl] = m.partitions.size();
      m.partitions.push_back(train_partition("swirl", swirl, cases, X, config, 2));
    }
    if (!jet_ok || !swirl_ok) {
      for (const auto label : {FlowLabel::Jet, FlowLabel::Swirl}) {
        if (m.routing.count(label)) continue;
        m.warnings.push_back(std::string("fewer than two ") + std::string(to_string(label)) +
                             " cases; that class falls back to the pooled model");
        log::warn(m.warnings.back());
        m.routing[label] = m.partitions.size();
      }
      m.partitions.push_back(train_partition("pooled", all, cases, X, config, 0));
    }
  } else {
    m.routing[FlowLabel::Jet] = 0;
    m.routing[FlowLabel::Swirl] = 0;
    m.partitions.push_back(train_partition("pooled", all, cases, X, config, 0));
  }

  GPFitOptions sopts;
  sopts.nugget = config.nugget;
  sopts.n_starts = config.scalar_gp_starts;
  sopts.estimate_nugget = config.scalar_nugget_mle;
  sopts.max_nugget = config.max_nugget;
  sopts.seed = mix_seed(config.seed, 0x5ca1a4);
  const auto to_vec = [](const std::vector<double>& v) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  m.thickness_gp = fit_or_constant(X, to_vec(m.thickness), sopts);
  sopts.seed = mix_seed(config.seed, 0xa9a1e);
  m.angle_gp = fit_or_constant(X, to_vec(m.angle), sopts);
  return m;
}

EmulatorModel train_from_corpus(const std::filesystem::path& corpus, const DesignSpace& space,
                                const EmulatorConfig& config) {
  const auto dirs = list_cases(corpus);
  if (dirs.empty()) throw Error(ErrorKind::CorpusError, "no case directories under " + corpus.string());
  std::vector<std::string> wanted = config.variables;
  if (std::find(wanted.begin(), wanted.end(), "density") == wanted.end()) wanted.push_back("density");
  std::vector<TrainingCase> cases;
  for (const auto& dir : dirs) {
    StoredCase sc;
    try {
      sc = read_case(dir, wanted);
    } catch (const Error& e) {
      throw Error(ErrorKind::CorpusError, dir.filename().string() + ": " + e.what());
    }
    cases.push_back({dir.filename().string(), sc.meta.design, std::move(sc.series)});
  }
  return train(cases, space, config);
}

ScalarPrediction predict_scalar(const EmulatorModel& model, ScalarResponse response, const DesignPoint& d) {
  check_in_bounds(d, model.space);
  const auto& gp = response == ScalarResponse::Thickness ? model.thickness_gp : model.angle_gp;
  if (gp.designs().rows() == 0) throw Error(ErrorKind::ModelMissing, "scalar emulator was not trained");
  const auto c = normalize(d, model.space);
  const auto p = gp.predict(c.coords());
  return {p.mean, p.variance, confidence_halfwidth(p.variance, model.config.ci_level)};
}

EmulationResult predict_field(const EmulatorModel& model, const DesignPoint& d, const PredictOptions& options) {
  check_in_bounds(d, model.space);
  if (model.partitions.empty()) throw Error(ErrorKind::ModelMissing, "model has no trained partitions");

  EmulationResult out;
  out.design = d;
  out.classification = model.classify(d);
  const auto& part = model.partition_for(out.classification);
  out.partition = part.name;
  if (options.on_route) options.on_route(part.name);

  std::vector<std::string> vars = options.variables;
  if (vars.empty()) {
    for (const auto& [name, vm] : part.variables) vars.push_back(name);
  }
  const auto map = build_region_map(part.common, d);
  out.fields.grid = map_grid(part.common.grid, map);
  out.fields.dt = model.dt;
  out.fields.t0 = model.t0;

  const auto c = normalize(d, model.space);
  for (const auto& v : vars) {
    const auto it = part.variables.find(v);
    if (it == part.variables.end()) throw Error(ErrorKind::ModelMissing, "variable '" + v + "' was not trained");
    const auto& vm = it->second;
    const auto K = vm.coefficients.K;
    const auto T = vm.coefficients.T;
    const auto active = options.mode_limit ? std::min(options.mode_limit, K) : K;
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(T));
    Eigen::MatrixXd var = beta;
    parallel_for(active * T, [&](std::size_t kt) {
      const auto k = static_cast<Eigen::Index>(kt / T);
      const auto t = static_cast<Eigen::Index>(kt % T);
      const auto p = vm.gps[kt].predict(c.coords());
      beta(k, t) = p.mean;
      var(k, t) = p.variance;
    });
    Eigen::MatrixXd field = vm.basis.modes * beta;
    field.colwise() += vm.basis.mean;
    out.fields.variables.emplace(v, std::move(field));
    if (options.variance) out.variance.emplace(v, vm.basis.modes.cwiseAbs2() * var);
    out.coefficients.emplace(v, std::move(beta));
  }

  if (out.fields.variables.count("density")) {
    try {
      out.extracted = extract_film_metrics(out.fields, InjectorGeometry::from(d));
    } catch (const Error&) {
      out.extracted.reset();
    }
  }
  out.thickness = predict_scalar(model, ScalarResponse::Thickness, d);
  out.angle = predict_scalar(model, ScalarResponse::Angle, d);
  return out;
}

}  // namespace cpodem
