#include "cpodem/archive.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpodem/binary_io.hpp"
#include "cpodem/error.hpp"
#include "json.hpp"

namespace cpodem {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + file.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ojson parse_json(const fs::path& file) {
  try {
    return ojson::parse(read_text(file));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, file.string() + ": " + e.what());
  }
}

std::string_view solver_name(EigenSolverKind k) {
  switch (k) {
    case EigenSolverKind::Dense: return "dense";
    case EigenSolverKind::Iterative: return "iterative";
    default: return "auto";
  }
}

EigenSolverKind parse_solver(const std::string& s) {
  if (s == "auto") return EigenSolverKind::Auto;
  if (s == "dense") return EigenSolverKind::Dense;
  if (s == "iterative") return EigenSolverKind::Iterative;
  throw Error(ErrorKind::InvalidArgument, "unknown eigensolver '" + s + "'");
}

ojson config_json(const EmulatorConfig& c) {
  ojson j;
  j["variables"] = c.variables;
  j["energy_target"] = c.energy_target;
  j["center"] = c.center;
  j["nugget"] = c.nugget;
  j["field_nugget_mle"] = c.field_nugget_mle;
  j["scalar_nugget_mle"] = c.scalar_nugget_mle;
  j["max_nugget"] = c.max_nugget;
  j["gp_starts"] = c.gp_starts;
  j["scalar_gp_starts"] = c.scalar_gp_starts;
  j["seed"] = c.seed;
  j["partitioned"] = c.partitioned;
  j["tree_max_depth"] = c.tree_max_depth;
  j["tree_min_leaf"] = c.tree_min_leaf;
  j["solver"] = std::string(solver_name(c.solver));
  j["ci_level"] = c.ci_level;
  j["idw"] = {{"k", c.idw.k}, {"power", c.idw.power}, {"exact_tolerance", c.idw.exact_tolerance}};
  return j;
}

EmulatorConfig config_from(const nlohmann::ordered_json& j) {
  EmulatorConfig c;
  try {
    c.variables = j.value("variables", c.variables);
    c.energy_target = j.value("energy_target", c.energy_target);
    c.center = j.value("center", c.center);
    c.nugget = j.value("nugget", c.nugget);
    c.field_nugget_mle = j.value("field_nugget_mle", c.field_nugget_mle);
    c.scalar_nugget_mle = j.value("scalar_nugget_mle", c.scalar_nugget_mle);
    c.max_nugget = j.value("max_nugget", c.max_nugget);
    c.gp_starts = j.value("gp_starts", c.gp_starts);
    c.scalar_gp_starts = j.value("scalar_gp_starts", c.scalar_gp_starts);
    c.seed = j.value("seed", c.seed);
    c.partitioned = j.value("partitioned", c.partitioned);
    c.tree_max_depth = j.value("tree_max_depth", c.tree_max_depth);
    c.tree_min_leaf = j.value("tree_min_leaf", c.tree_min_leaf);
    c.solver = parse_solver(j.value("solver", std::string("auto")));
    c.ci_level = j.value("ci_level", c.ci_level);
    if (j.contains("idw")) {
      const auto& w = j["idw"];
      c.idw.k = w.value("k", c.idw.k);
      c.idw.power = w.value("power", c.idw.power);
      c.idw.exact_tolerance = w.value("exact_tolerance", c.idw.exact_tolerance);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  if (!(c.energy_target > 0.0 && c.energy_target <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "config: energy_target must lie in (0, 1]");
  }
  if (c.nugget < 0.0) throw Error(ErrorKind::InvalidArgument, "config: nugget must be non-negative");
  if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) throw Error(ErrorKind::InvalidArgument, "config: ci_level must lie in (0, 1)");
  if (c.idw.k < 1) throw Error(ErrorKind::InvalidArgument, "config: idw.k must be positive");
  return c;
}

ojson box_json(const Box& b) { return ojson::array({b.x0, b.x1, b.r0, b.r1}); }
Box box_from(const ojson& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()}; }

ojson boxes_json(const RegionBoxes& boxes) {
  ojson a = ojson::array();
  for (const auto& b : boxes) a.push_back(box_json(b));
  return a;
}

RegionBoxes boxes_from(const ojson& j) {
  RegionBoxes out{};
  if (j.size() != kRegionCount) throw Error(ErrorKind::Io, "maps.json: expected five region boxes");
  for (std::size_t k = 0; k < kRegionCount; ++k) out[k] = box_from(j.at(k));
  return out;
}

ojson gp_json(const GPModel& gp) {
  return {{"mu", gp.mu()},
          {"sigma2", gp.sigma2()},
          {"eta", std::vector<double>(gp.eta().data(), gp.eta().data() + gp.eta().size())},
          {"nugget", gp.nugget()},
          {"degenerate", gp.degenerate()},
          {"log_likelihood", gp.log_likelihood()}};
}

GPModel rebuild_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& eta, double nugget) {
  if (X.rows() < 2) return GPModel::constant(X, y, eta, nugget);
  return GPModel::with_eta(X, y, eta, nugget);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void write_gps(const fs::path& file, const VariableModel& vm, std::size_t p) {
  io::Writer w(file);
  w.magic("CPK1");
  w.u32(static_cast<std::uint32_t>(vm.coefficients.K));
  w.u32(static_cast<std::uint32_t>(vm.coefficients.T));
  w.u32(static_cast<std::uint32_t>(p));
  for (const auto& gp : vm.gps) {
    w.f64(gp.mu());
    w.f64(gp.sigma2());
    for (std::size_t k = 0; k < p; ++k) w.f64(gp.eta()(static_cast<Eigen::Index>(k)));
    w.f64(gp.nugget());
  }
  w.close();
}

void read_gps(const fs::path& file, VariableModel& vm, const Eigen::MatrixXd& X) {
  io::Reader r(file);
  r.expect_magic("CPK1");
  const auto K = r.u32();
  const auto T = r.u32();
  const auto p = r.u32();
  if (K != vm.coefficients.K || T != vm.coefficients.T || p != static_cast<std::uint32_t>(X.cols())) {
    throw Error(ErrorKind::Io, file.string() + ": GP table does not match the coefficients");
  }
  vm.gps.resize(static_cast<std::size_t>(K) * T);
  const auto n = vm.coefficients.n;
  for (std::size_t kt = 0; kt < vm.gps.size(); ++kt) {
    r.f64();  // mu and sigma2 are re-derived from eta
    r.f64();
    Eigen::VectorXd eta(p);
    for (std::uint32_t k = 0; k < p; ++k) eta(k) = r.f64();
    const double nugget = r.f64();
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = vm.coefficients(kt / T, i, kt % T);
    vm.gps[kt] = rebuild_gp(X, y, eta, nugget);
  }
}

ojson space_json(const DesignSpace& s) {
  ojson a = ojson::array();
  for (const auto& p : s.params()) a.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}, {"unit", p.unit}});
  return a;
}

DesignSpace space_from(const ojson& j) {
  std::vector<ParameterRange> ps;
  for (const auto& e : j) ps.push_back({e.at("name").get<std::string>(), e.at("lo").get<double>(), e.at("hi").get<double>(),
                                         e.value("unit", std::string())});
  return DesignSpace(std::move(ps));
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string config_to_json(const EmulatorConfig& config) { return dump(config_json(config)); }

EmulatorConfig config_from_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
  return config_from(j);
}

void write_basis(const fs::path& file, const CPODBasis& b) {
  io::Writer w(file);
  w.magic("CPB1");
  w.u32(static_cast<std::uint32_t>(b.size()));
  w.u32(static_cast<std::uint32_t>(b.mean.size()));
  w.f64s({b.mean.data(), static_cast<std::size_t>(b.mean.size())});
  w.f64s({b.modes.data(), static_cast<std::size_t>(b.modes.size())});
  w.f64s({b.eigenvalues.data(), static_cast<std::size_t>(b.eigenvalues.size())});
  w.f64s({b.quadrature.data(), static_cast<std::size_t>(b.quadrature.size())});
  w.close();
}

CPODBasis read_basis(const fs::path& file) {
  io::Reader r(file);
  r.expect_magic("CPB1");
  const auto K = static_cast<Eigen::Index>(r.u32());
  const auto nodes = static_cast<Eigen::Index>(r.u32());
  CPODBasis b;
  b.mean.resize(nodes);
  b.modes.resize(nodes, K);
  b.eigenvalues.resize(K);
  b.quadrature.resize(nodes);
  r.f64s({b.mean.data(), static_cast<std::size_t>(nodes)});
  r.f64s({b.modes.data(), static_cast<std::size_t>(nodes * K)});
  r.f64s({b.eigenvalues.data(), static_cast<std::size_t>(K)});
  r.f64s({b.quadrature.data(), static_cast<std::size_t>(nodes)});
  return b;
}

void write_coefficients(const fs::path& file, const CoeffTable& t) {
  io::Writer w(file);
  w.magic("CPC1");
  w.u32(static_cast<std::uint32_t>(t.K));
  w.u32(static_cast<std::uint32_t>(t.n));
  w.u32(static_cast<std::uint32_t>(t.T));
  w.f64s(t.data);
  w.close();
}

CoeffTable read_coefficients(const fs::path& file) {
  io::Reader r(file);
  r.expect_magic("CPC1");
  const auto K = r.u32();
  const auto n = r.u32();
  const auto T = r.u32();
  CoeffTable t(K, n, T);
  r.f64s(t.data);
  return t;
}

void save_model(const EmulatorModel& m, const fs::path& dir) {
  fs::create_directories(dir);
  for (const char* stale : {"jet", "swirl", "pooled"}) fs::remove_all(dir / stale);

  ojson man;
  man["format"] = "cpodem-model";
  man["version"] = kFormatVersion;
  man["config"] = config_json(m.config);
  man["design_space"] = space_json(m.space);
  man["steps"] = m.steps;
  man["dt"] = m.dt;
  man["t0"] = m.t0;
  ojson cases = ojson::array();
  for (std::size_t i = 0; i < m.designs.size(); ++i) {
    const auto v = m.designs[i].values();
    cases.push_back({{"name", m.case_names[i]},
                     {"design", std::vector<double>(v.begin(), v.end())},
                     {"label", std::string(to_string(m.labels[i]))},
                     {"thickness", m.thickness[i]},
                     {"angle", m.angle[i]}});
  }
  man["cases"] = cases;
  ojson parts = ojson::array();
  for (const auto& p : m.partitions) {
    ojson pj;
    pj["name"] = p.name;
    pj["cases"] = p.cases;
    ojson vars = ojson::object();
    for (const auto& [v, vm] : p.variables) {
      vars[v] = {{"modes", vm.basis.size()},
                 {"total_energy", vm.basis.total_energy},
                 {"captured_energy", vm.basis.captured_energy()}};
    }
    pj["variables"] = vars;
    parts.push_back(pj);
  }
  man["partitions"] = parts;
  ojson routing = ojson::object();
  for (const auto& [label, idx] : m.routing) routing[std::string(to_string(label))] = m.partitions.at(idx).name;
  man["routing"] = routing;
  man["scalar"] = {{"thickness", gp_json(m.thickness_gp)}, {"angle", gp_json(m.angle_gp)}};
  man["warnings"] = m.warnings;
  write_text(dir / "manifest.json", dump(man));

  if (m.tree) {
    write_text(dir / "tree.json", m.tree->to_json() + "\n");
  } else {
    fs::remove(dir / "tree.json");
  }

  for (const auto& p : m.partitions) {
    const auto pdir = dir / p.name;
    fs::create_directories(pdir);
    write_grid(pdir / "common_grid.bin", p.common.grid);
    ojson maps;
    const auto cd = p.common.design.values();
    maps["common_design"] = std::vector<double>(cd.begin(), cd.end());
    maps["common_source"] = p.cases.at(p.common.source);
    maps["common_boxes"] = boxes_json(p.common.boxes);
    ojson cb = ojson::array();
    for (std::size_t i = 0; i < p.cases.size(); ++i) {
      cb.push_back({{"case", p.cases[i]}, {"boxes", boxes_json(p.case_boxes.at(i))}});
    }
    maps["cases"] = cb;
    write_text(pdir / "maps.json", dump(maps));
    for (const auto& [v, vm] : p.variables) {
      write_basis(pdir / ("basis_" + v + ".bin"), vm.basis);
      write_coefficients(pdir / ("coeffs_" + v + ".bin"), vm.coefficients);
      write_gps(pdir / ("gp_" + v + ".bin"), vm, m.space.dim());
    }
  }
}

EmulatorModel load_model(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw Error(ErrorKind::ModelMissing, "no model archive at " + dir.string());
  const auto man = parse_json(dir / "manifest.json");
  EmulatorModel m;
  try {
    if (man.value("format", std::string()) != "cpodem-model" || man.value("version", 0) != kFormatVersion) {
      throw Error(ErrorKind::Io, "unsupported model archive format");
    }
    m.config = config_from(man.at("config"));
    m.space = space_from(man.at("design_space"));
    m.steps = man.at("steps").get<std::size_t>();
    m.dt = man.at("dt").get<double>();
    m.t0 = man.at("t0").get<double>();
    for (const auto& c : man.at("cases")) {
      m.case_names.push_back(c.at("name").get<std::string>());
      m.designs.emplace_back(c.at("design").get<std::vector<double>>());
      const auto lbl = parse_label(c.at("label").get<std::string>());
      if (!lbl) throw Error(ErrorKind::Io, "manifest: bad case label");
      m.labels.push_back(*lbl);
      m.thickness.push_back(c.at("thickness").get<double>());
      m.angle.push_back(c.at("angle").get<double>());
    }
    m.warnings = man.value("warnings", std::vector<std::string>{});

    const Eigen::MatrixXd X = normalized_designs(m.designs, m.space);
    const auto scalar = [&](const ojson& j, const std::vector<double>& y) {
      return rebuild_gp(X, to_vector(y), to_vector(j.at("eta").get<std::vector<double>>()), j.at("nugget").get<double>());
    };
    m.thickness_gp = scalar(man.at("scalar").at("thickness"), m.thickness);
    m.angle_gp = scalar(man.at("scalar").at("angle"), m.angle);

    if (fs::exists(dir / "tree.json")) m.tree = DecisionTree::from_json(read_text(dir / "tree.json"));

    for (const auto& pj : man.at("partitions")) {
      PartitionModel p;
      p.name = pj.at("name").get<std::string>();
      p.cases = pj.at("cases").get<std::vector<std::size_t>>();
      const auto pdir = dir / p.name;
      p.X.resize(static_cast<Eigen::Index>(p.cases.size()), X.cols());
      for (std::size_t i = 0; i < p.cases.size(); ++i) {
        p.X.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(p.cases.at(i)));
      }
      p.common.grid = read_grid(pdir / "common_grid.bin");
      const auto maps = parse_json(pdir / "maps.json");
      p.common.design = DesignPoint(maps.at("common_design").get<std::vector<double>>());
      const auto src = maps.at("common_source").get<std::size_t>();
      const auto it = std::find(p.cases.begin(), p.cases.end(), src);
      p.common.source = static_cast<std::size_t>(it - p.cases.begin());
      p.common.boxes = boxes_from(maps.at("common_boxes"));
      for (const auto& c : maps.at("cases")) p.case_boxes.push_back(boxes_from(c.at("boxes")));

      for (const auto& [v, info] : pj.at("variables").items()) {
        VariableModel vm;
        vm.basis = read_basis(pdir / ("basis_" + v + ".bin"));
        vm.basis.variable = v;
        vm.basis.total_energy = info.at("total_energy").get<double>();
        const auto K = vm.basis.eigenvalues.size();
        vm.basis.energy_fraction.resize(K);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
          acc += vm.basis.eigenvalues(k);
          vm.basis.energy_fraction(k) =
              vm.basis.total_energy > 0.0 ? std::min(acc / vm.basis.total_energy, 1.0) : 1.0;
        }
        vm.coefficients = read_coefficients(pdir / ("coeffs_" + v + ".bin"));
        if (vm.coefficients.K != vm.basis.size() || vm.coefficients.n != p.cases.size()) {
          throw Error(ErrorKind::Io, "coefficient table does not match the basis for " + v);
        }
        read_gps(pdir / ("gp_" + v + ".bin"), vm, p.X);
        p.variables.emplace(v, std::move(vm));
      }
      m.partitions.push_back(std::move(p));
    }
    for (const auto& [label, name] : man.at("routing").items()) {
      const auto lbl = parse_label(label);
      if (!lbl) throw Error(ErrorKind::Io, "manifest: bad routing label");
      const auto pit = std::find_if(m.partitions.begin(), m.partitions.end(),
                                    [&](const PartitionModel& p) { return p.name == name.get<std::string>(); });
      if (pit == m.partitions.end()) throw Error(ErrorKind::Io, "manifest: routing names an unknown partition");
      m.routing[*lbl] = static_cast<std::size_t>(pit - m.partitions.begin());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string model_hash(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::ModelMissing, "no model archive at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& f : files) {
    mix(f.generic_string());
    mix(std::string_view("\0", 1));
    mix(read_text(dir / f));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cpodem
