#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cpodem/archive.hpp"
#include "cpodem/common_grid.hpp"
#include "cpodem/diagnostics.hpp"
#include "cpodem/emulator.hpp"
#include "cpodem/error.hpp"
#include "cpodem/flow_oracle.hpp"
#include "cpodem/maxpro.hpp"
#include "cpodem/sobol.hpp"
#include "cpodem/tree.hpp"
#include "service.hpp"

namespace cpodem::cli {
namespace {

namespace fs = std::filesystem;

DesignSpace load_space(const std::string& path) {
  return path.empty() ? injector_design_space() : DesignSpace::load(path);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + p.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + p.string());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Normalized rows of a `cpodem doe` file.
std::vector<NormalizedDesign> read_design_table(const fs::path& p) {
  std::vector<NormalizedDesign> rows;
  std::istringstream in(read_text(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (ls.fail() && !ls.eof()) throw Error(ErrorKind::InvalidArgument, p.string() + ": bad row '" + line + "'");
    if (!v.empty()) rows.emplace_back(std::move(v));
  }
  return rows;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ---- doe -----------------------------------------------------------------

struct DoeArgs {
  std::size_t n = 30, p = 5;
  std::uint64_t seed = 1;
  std::size_t restarts = 4, iters = 200;
  std::string out;
};

void run_doe(const DoeArgs& a, Context& ctx) {
  AnnealingOptions opts;
  opts.n_restarts = a.restarts;
  opts.n_iters = a.iters;
  const auto D = generate_design(a.n, a.p, a.seed, opts);
  std::ostringstream ss;
  ss << "# maxpro n=" << a.n << " p=" << a.p << " criterion=" << fmt(maxpro_criterion(D)) << "\n";
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    for (Eigen::Index k = 0; k < D.cols(); ++k) ss << (k ? "\t" : "") << fmt(D(i, k));
    ss << "\n";
  }
  write_text(a.out, ss.str());
  ctx.out << "wrote " << a.n << " points to " << a.out << "\n";
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string designs, space, out;
  std::vector<std::string> design;
  std::size_t steps = 64, nx = 64, nr = 48;
  double dt = 30e-6, jitter = 0.0;
  std::uint64_t seed = 1;
};

void run_simulate(const SimulateArgs& a, Context& ctx) {
  const auto space = load_space(a.space);
  std::vector<DesignPoint> points;
  if (!a.designs.empty()) {
    for (const auto& n : read_design_table(a.designs)) points.push_back(denormalize(n, space));
  }
  for (const auto& s : a.design) {
    auto d = parse_design(s);
    check_in_bounds(d, space);
    points.push_back(std::move(d));
  }
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "no designs given (use --designs or --design)");
  OracleOptions o;
  o.grid.nx = a.nx;
  o.grid.nr = a.nr;
  o.steps = a.steps;
  o.dt = a.dt;
  o.seed = a.seed;
  o.start_jitter = a.jitter;
  const auto dirs = write_oracle_corpus(a.out, points, space, o);
  ctx.out << "wrote " << dirs.size() << " cases to " << a.out << "\n";
}

// ---- sensitivity -----------------------------------------------------------

struct SensitivityArgs {
  std::string response, model, space, out;
  std::size_t n = 4096;
  std::uint64_t seed = 1;
  bool no_pairs = false;
};

void run_sensitivity(const SensitivityArgs& a, Context& ctx) {
  const bool thickness = a.response == "thickness";
  SobolResult r;
  std::vector<std::string> names;
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    for (const auto& p : model.space.params()) names.push_back(p.name);
    const auto which = thickness ? ScalarResponse::Thickness : ScalarResponse::Angle;
    r = design_sensitivity([&](const DesignPoint& d) { return predict_scalar(model, which, d).mean; }, model.space,
                           a.n, a.seed, !a.no_pairs);
  } else {
    const auto space = load_space(a.space);
    for (const auto& p : space.params()) names.push_back(p.name);
    r = design_sensitivity(
        [&](const DesignPoint& d) {
          const auto t = oracle_metrics(d, space);
          return thickness ? t.h : t.alpha;
        },
        space, a.n, a.seed, !a.no_pairs);
  }
  const auto tsv = sobol_tsv(r, names);
  if (a.out.empty()) {
    ctx.out << tsv;
  } else {
    write_text(a.out, tsv);
    ctx.out << "wrote " << a.out << "\n";
  }
}

// ---- classify --------------------------------------------------------------

struct ClassifyArgs {
  std::string tree, model, design, space;
  bool rules = false;
};

bool satisfies(const Rule& rule, const DesignPoint& d) {
  for (const auto& c : rule.constraints) {
    const bool ge = d[c.feature] >= c.threshold;
    if (ge != c.at_least) return false;
  }
  return true;
}

void run_classify(const ClassifyArgs& a, Context& ctx) {
  DecisionTree tree;
  DesignSpace space;
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    if (!model.tree) throw Error(ErrorKind::ModelMissing, "model was trained without partitioning");
    tree = *model.tree;
    space = model.space;
  } else {
    tree = DecisionTree::from_json(read_text(a.tree));
    space = load_space(a.space);
  }
  const auto rules = extract_rules(tree, space);
  if (a.rules) {
    for (const auto& r : rules) ctx.out << format_rule(r, space) << "\n";
  }
  if (a.design.empty()) return;
  const auto d = parse_design(a.design);
  check_in_bounds(d, space);
  const auto label = tree.classify(normalize(d, space));
  ctx.out << to_string(label) << "\n";
  for (const auto& r : rules) {
    if (r.label == label && satisfies(r, d)) {
      ctx.out << format_rule(r, space) << "\n";
      break;
    }
  }
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus, out, config, space;
  std::vector<std::string> variables;
  std::uint64_t seed = 1;
  bool seed_set = false;
  bool no_partition = false;
  double energy = 0.0, nugget = -1.0;
  std::size_t starts = 0;
};

void run_train(const TrainArgs& a, Context& ctx) {
  EmulatorConfig config = a.config.empty() ? EmulatorConfig{} : config_from_json(read_text(a.config));
  if (a.seed_set) config.seed = a.seed;
  if (a.no_partition) config.partitioned = false;
  if (a.energy > 0.0) config.energy_target = a.energy;
  if (a.nugget >= 0.0) config.nugget = a.nugget;
  if (a.starts > 0) config.gp_starts = a.starts;
  if (!a.variables.empty()) config.variables = a.variables;
  config = config_from_json(config_to_json(config));  // validates overrides

  const auto model = train_from_corpus(a.corpus, load_space(a.space), config);
  save_model(model, a.out);
  for (const auto& p : model.partitions) {
    ctx.out << "partition " << p.name << ": " << p.cases.size() << " cases";
    for (const auto& [v, vm] : p.variables) ctx.out << ", " << v << " K=" << vm.basis.size();
    ctx.out << "\n";
  }
  for (const auto& w : model.warnings) ctx.err << "warning: " << w << "\n";
  ctx.out << "model " << model_hash(a.out) << " written to " << a.out << "\n";
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string model, design, out;
  bool normalized = false;
};

DesignPoint design_arg(const std::string& text, bool normalized, const DesignSpace& space) {
  auto d = parse_design(text);
  if (normalized) {
    std::vector<double> u(d.values().begin(), d.values().end());
    d = denormalize(NormalizedDesign(u), space);
  }
  if (auto report = service::bounds_report(d, space)) throw Error(ErrorKind::OutOfBounds, *report);
  return d;
}

void run_predict(const PredictArgs& a, Context& ctx) {
  const auto model = load_model(a.model);
  const auto hash = model_hash(a.model);
  const auto d = design_arg(a.design, a.normalized, model.space);
  const auto r = predict_field(model, d);
  const auto body = service::prediction_json(r, service::prediction_id(d, hash), hash);
  ctx.out << body << "\n";
  if (!a.out.empty()) {
    write_case(a.out, r.fields, CaseMeta{d, r.fields.dt, r.fields.t0, model.config.seed, r.fields.steps()});
    for (const auto& [v, var] : r.variance) write_variable(fs::path(a.out) / ("variance_" + v + ".bin"), var);
    write_text(fs::path(a.out) / "prediction.json", body + "\n");
  }
}

// ---- report ----------------------------------------------------------------

struct ReportArgs {
  std::string model, design, truth, out;
};

void run_report(const ReportArgs& a, Context& ctx) {
  const auto model = load_model(a.model);
  const auto truth = read_case(a.truth);
  const auto d = a.design.empty() ? truth.meta.design : parse_design(a.design);
  const auto r = predict_field(model, d);
  const auto geom = InjectorGeometry::from(d);
  const auto& tg = truth.series.grid;

  // Emulated values live on the common grid's nodes; carry them to the truth grid.
  const auto& part = model.partition_for(r.classification);
  const auto op = common_to_case_operator(part.common, build_region_map(part.common, d), tg, model.config.idw);
  SnapshotSeries emu;
  emu.grid = tg;
  emu.dt = r.fields.dt;
  emu.t0 = r.fields.t0;
  std::map<std::string, Eigen::MatrixXd> ci;
  for (const auto& [v, m] : r.fields.variables) {
    if (!truth.series.variables.count(v)) continue;
    emu.variables.emplace(v, op * m);
    ci.emplace(v, op * uq_map(r.variance.at(v), model.config.ci_level));
  }
  if (emu.variables.empty()) throw Error(ErrorKind::CorpusError, "truth case shares no variable with the model");

  fs::create_directories(a.out);
  const auto up = region_upstream(tg, geom), down = region_downstream(tg, geom), all = region_overall(tg);
  std::ostringstream rm;
  rm << "variable\toverall\tupstream\tdownstream\n";
  for (const auto& [v, m] : emu.variables) {
    const auto& s = truth.series.at(v);
    rm << v << "\t" << fmt(rmsre_series(s, m, all)) << "\t" << fmt(rmsre_series(s, m, up)) << "\t"
       << fmt(rmsre_series(s, m, down)) << "\n";
  }
  write_text(fs::path(a.out) / "rmsre.tsv", rm.str());

  std::ostringstream mt;
  mt << "metric\temulated\tci\ttruth\n";
  std::optional<FilmMetrics> tf;
  if (truth.series.variables.count("density")) tf = extract_film_metrics(truth.series, geom);
  const auto truth_of = [&](double FilmMetrics::*f) { return tf ? fmt((*tf).*f) : std::string("nan"); };
  mt << "thickness_mm\t" << fmt(r.thickness.mean) << "\t" << fmt(r.thickness.ci) << "\t" << truth_of(&FilmMetrics::h)
     << "\n";
  mt << "angle_deg\t" << fmt(r.angle.mean) << "\t" << fmt(r.angle.ci) << "\t" << truth_of(&FilmMetrics::alpha) << "\n";
  if (r.extracted) {
    mt << "field_thickness_mm\t" << fmt(r.extracted->h) << "\t\t" << truth_of(&FilmMetrics::h) << "\n";
    mt << "field_angle_deg\t" << fmt(r.extracted->alpha) << "\t\t" << truth_of(&FilmMetrics::alpha) << "\n";
  }
  mt << "classification\t" << to_string(r.classification) << "\t\t"
     << (tf ? std::string(to_string(label_for_angle(tf->alpha))) : "nan") << "\n";
  write_text(fs::path(a.out) / "metrics.tsv", mt.str());

  std::size_t probe_files = 0;
  if (tf && emu.variables.count("pressure")) {
    const auto probes = default_probes(*tf, tg, geom);
    const auto se = probe_signals(emu, probes, "pressure");
    const auto st = probe_signals(truth.series, probes, "pressure");
    for (Eigen::Index p = 0; p < se.cols(); ++p) {
      const Eigen::VectorXd e = se.col(p), t = st.col(p);
      const auto pe = psd(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), emu.dt, Window::Hann, true);
      const auto pt = psd(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())), emu.dt, Window::Hann, true);
      std::ostringstream ps;
      ps << "# probe x=" << fmt(probes[static_cast<std::size_t>(p)][0]) << " r=" << fmt(probes[static_cast<std::size_t>(p)][1])
         << "\nfrequency_hz\temulated\ttruth\n";
      for (std::size_t i = 0; i < pe.frequency.size(); ++i) {
        ps << fmt(pe.frequency[i]) << "\t" << fmt(pe.density[i]) << "\t" << fmt(pt.density[i]) << "\n";
      }
      write_text(fs::path(a.out) / ("psd_probe" + std::to_string(p + 1) + ".tsv"), ps.str());
      ++probe_files;
    }
  }

  // Time-mean field dumps for plotting.
  for (const auto& [v, m] : emu.variables) {
    const Eigen::VectorXd em = m.rowwise().mean(), tm = truth.series.at(v).rowwise().mean(),
                          cm = ci.at(v).rowwise().mean();
    std::ostringstream fd;
    fd << "x_mm\tr_mm\temulated\ttruth\tci\n";
    for (std::size_t n = 0; n < tg.nodes(); ++n) {
      const auto i = static_cast<Eigen::Index>(n);
      fd << fmt(tg.node_x(n)) << "\t" << fmt(tg.node_r(n)) << "\t" << fmt(em(i)) << "\t" << fmt(tm(i)) << "\t"
         << fmt(cm(i)) << "\n";
    }
    write_text(fs::path(a.out) / ("field_" + v + ".tsv"), fd.str());
  }
  ctx.out << "report for " << format_design(d) << " (" << to_string(r.classification) << ", " << probe_files
          << " probes) written to " << a.out << "\n";
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string model, host = "127.0.0.1", static_dir;
  int port = 8080;
  std::size_t cache = 32, sobol_n = 4096;
  std::uint64_t seed = 1;
};

void run_serve(const ServeArgs& a, Context& ctx) {
  service::ServiceOptions opts;
  opts.cache_capacity = a.cache;
  opts.sobol_n = a.sobol_n;
  opts.sobol_seed = a.seed;
  auto svc = service::ModelService::from_archive(a.model, opts);
  service::HttpServer server(*svc, a.static_dir);
  const int port = server.bind(a.host, a.port);
  ctx.out << "serving model " << svc->hash() << " on http://" << a.host << ":" << port << std::endl;
  server.listen();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"CPOD + kriging flowfield emulator for swirl injectors", "cpodem"};
  app.require_subcommand(1);
  Context ctx{out, err};

  DoeArgs doe;
  auto* c_doe = app.add_subcommand("doe", "MaxPro Latin-hypercube design (normalized TSV)");
  c_doe->add_option("--n", doe.n, "points")->check(CLI::PositiveNumber);
  c_doe->add_option("--p", doe.p, "dimensions")->check(CLI::PositiveNumber);
  c_doe->add_option("--seed", doe.seed, "random seed");
  c_doe->add_option("--restarts", doe.restarts, "annealing restarts")->check(CLI::PositiveNumber);
  c_doe->add_option("--iters", doe.iters, "annealing sweeps per restart");
  c_doe->add_option("--out", doe.out, "output TSV")->required();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "write an oracle corpus, one case directory per design");
  c_sim->add_option("--designs", sim.designs, "TSV from `cpodem doe` (normalized rows)");
  c_sim->add_option("--design", sim.design, "physical design \"L,R_n,theta,delta,dL\" (repeatable)");
  c_sim->add_option("--space", sim.space, "design-space file (default: built-in injector box)");
  c_sim->add_option("--out", sim.out, "corpus directory")->required();
  c_sim->add_option("--steps", sim.steps, "snapshots per case")->check(CLI::PositiveNumber);
  c_sim->add_option("--dt", sim.dt, "sampling interval, s")->check(CLI::PositiveNumber);
  c_sim->add_option("--nx", sim.nx, "axial nodes")->check(CLI::Range(8, 4096));
  c_sim->add_option("--nr", sim.nr, "radial nodes")->check(CLI::Range(4, 4096));
  c_sim->add_option("--jitter", sim.jitter, "start-time jitter in wave periods");
  c_sim->add_option("--seed", sim.seed, "random seed");

  SensitivityArgs sen;
  auto* c_sen = app.add_subcommand("sensitivity", "Sobol' indices of film thickness or spreading angle");
  c_sen->add_option("--response", sen.response, "thickness | angle")
      ->required()
      ->check(CLI::IsMember({"thickness", "angle"}));
  c_sen->add_option("--n", sen.n, "base sample count")->check(CLI::Range(64, 1 << 24));
  c_sen->add_option("--seed", sen.seed, "random seed");
  c_sen->add_option("--model", sen.model, "model archive (default: closed-form oracle)");
  c_sen->add_option("--space", sen.space, "design-space file for the oracle");
  c_sen->add_option("--out", sen.out, "output TSV (default: stdout)");
  c_sen->add_flag("--no-pairs", sen.no_pairs, "main effects only");

  ClassifyArgs cls;
  auto* c_cls = app.add_subcommand("classify", "jet/swirl classification with the decision tree");
  auto* tree_opt = c_cls->add_option("--tree", cls.tree, "tree JSON");
  auto* model_opt = c_cls->add_option("--model", cls.model, "model archive holding a tree");
  tree_opt->excludes(model_opt);
  c_cls->add_option("--design", cls.design, "physical design \"L,R_n,theta,delta,dL\"");
  c_cls->add_option("--space", cls.space, "design-space file");
  c_cls->add_flag("--rules", cls.rules, "print every rule");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "train the emulator on a case corpus");
  c_tr->add_option("--corpus", tr.corpus, "corpus directory")->required();
  c_tr->add_option("--out", tr.out, "model archive directory")->required();
  c_tr->add_option("--config", tr.config, "JSON config (keys as in manifest.json)");
  c_tr->add_option("--space", tr.space, "design-space file");
  c_tr->add_option("--variables", tr.variables, "variables to emulate");
  c_tr->add_option("--seed", tr.seed, "random seed")->each([&](const std::string&) { tr.seed_set = true; });
  c_tr->add_flag("--no-partition", tr.no_partition, "train one pooled model");
  c_tr->add_option("--energy", tr.energy, "CPOD energy target")->check(CLI::Range(1e-6, 1.0));
  c_tr->add_option("--nugget", tr.nugget, "GP nugget")->check(CLI::NonNegativeNumber);
  c_tr->add_option("--starts", tr.starts, "GP multi-starts")->check(CLI::PositiveNumber);

  PredictArgs pr;
  auto* c_pr = app.add_subcommand("predict", "emulate a design; prints the prediction JSON");
  c_pr->add_option("--model", pr.model, "model archive")->required();
  c_pr->add_option("--design", pr.design, "design \"L,R_n,theta,delta,dL\"")->required();
  c_pr->add_flag("--normalized", pr.normalized, "design given in unit-cube coordinates");
  c_pr->add_option("--out", pr.out, "write fields, variances and the JSON here");

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "compare an emulation with a truth case");
  c_rep->add_option("--model", rep.model, "model archive")->required();
  c_rep->add_option("--truth", rep.truth, "truth case directory")->required();
  c_rep->add_option("--design", rep.design, "design (default: the truth case's)");
  c_rep->add_option("--out", rep.out, "report directory")->required();

  ServeArgs srv;
  auto* c_srv = app.add_subcommand("serve", "HTTP service for the explorer");
  c_srv->add_option("--model", srv.model, "model archive")->required();
  c_srv->add_option("--host", srv.host, "bind address");
  c_srv->add_option("--port", srv.port, "port (0 = any free port)")->check(CLI::Range(0, 65535));
  c_srv->add_option("--cache", srv.cache, "prediction cache entries");
  c_srv->add_option("--sobol-n", srv.sobol_n, "base sample count for /api/sensitivity")->check(CLI::Range(64, 1 << 24));
  c_srv->add_option("--seed", srv.seed, "Sobol' seed");
  c_srv->add_option("--static", srv.static_dir, "explorer bundle to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 1;
  }

  try {
    if (c_doe->parsed()) run_doe(doe, ctx);
    if (c_sim->parsed()) run_simulate(sim, ctx);
    if (c_sen->parsed()) run_sensitivity(sen, ctx);
    if (c_cls->parsed()) {
      if (cls.tree.empty() && cls.model.empty()) {
        err << "error: classify needs --tree or --model\n\n" << c_cls->help();
        return 1;
      }
      run_classify(cls, ctx);
    }
    if (c_tr->parsed()) run_train(tr, ctx);
    if (c_pr->parsed()) run_predict(pr, ctx);
    if (c_rep->parsed()) run_report(rep, ctx);
    if (c_srv->parsed()) run_serve(srv, ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace cpodem::cli
