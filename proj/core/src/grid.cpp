#include "cpodem/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cpodem/binary_io.hpp"
#include "cpodem/error.hpp"

namespace cpodem {
namespace {

/// Ratio q > 1 such that f0 * (q^m - 1)/(q - 1) = 1, i.e. m geometric
/// intervals with first spacing f0 add up to a unit length.
double stretch_ratio(double f0, std::size_t m) {
  if (f0 * static_cast<double>(m) >= 1.0) return 1.0;
  auto total = [&](double q) { return f0 * (std::pow(q, static_cast<double>(m)) - 1.0) / (q - 1.0); };
  double lo = 1.0 + 1e-12;
  double hi = 2.0;
  while (total(hi) < 1.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void append_uniform(std::vector<double>& x, double a, double b, std::size_t m) {
  for (std::size_t i = 1; i <= m; ++i) {
    x.push_back(i == m ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(m));
  }
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

std::string_view region_name(Region r) noexcept {
  switch (r) {
    case Region::Headend: return "headend";
    case Region::Interior: return "interior";
    case Region::NearField: return "near-field";
    case Region::MidField: return "mid-field";
    case Region::FarField: return "far-field";
  }
  return "unknown";
}

InjectorGeometry InjectorGeometry::from(const DesignPoint& d) {
  if (d.dim() != injector::kDim) {
    throw Error(ErrorKind::InvalidArgument, "injector geometry needs a 5-parameter design");
  }
  return {d[injector::kLength], d[injector::kRadius], d[injector::kHeadend]};
}

double AxisymGrid::r_extent() const {
  if (r.empty()) return 0.0;
  if (r.size() == 1) return 2.0 * r[0];
  return r.back() + 0.5 * (r.back() - r[r.size() - 2]);
}

void AxisymGrid::validate() const {
  if (x.empty() || r.empty()) throw Error(ErrorKind::InvalidArgument, "grid has no nodes");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw Error(ErrorKind::InvalidArgument, "axial coordinates not increasing");
  }
  for (std::size_t j = 1; j < r.size(); ++j) {
    if (!(r[j] > r[j - 1])) throw Error(ErrorKind::InvalidArgument, "radial coordinates not increasing");
  }
  if (cell_area.size() != nodes() || region_label.size() != nodes()) {
    throw Error(ErrorKind::InvalidArgument, "per-node arrays do not match nx*nr");
  }
  for (double a : cell_area) {
    if (!(a > 0.0)) throw Error(ErrorKind::InvalidArgument, "cell area must be positive");
  }
  for (auto lbl : region_label) {
    if (lbl >= kRegionCount) throw Error(ErrorKind::InvalidArgument, "region label out of range");
  }
}

RegionBoxes region_boxes(const InjectorGeometry& g) {
  const double R = g.domain_radius();
  const double xe = g.exit();
  const double b[6] = {0.0, g.headend, xe, xe + g.length, xe + 2.0 * g.length, xe + 3.0 * g.length};
  RegionBoxes boxes;
  for (std::size_t k = 0; k < kRegionCount; ++k) boxes[k] = {b[k], b[k + 1], 0.0, R};
  return boxes;
}

AxisymGrid build_case_grid(const InjectorGeometry& g, const GridSpec& spec) {
  if (spec.nx < 9 || spec.nr < 2) throw Error(ErrorKind::InvalidArgument, "grid needs nx >= 9 and nr >= 2");
  if (!(g.length > 0.0 && g.radius > 0.0 && g.headend > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "geometry lengths must be positive");
  }
  const std::size_t intervals = spec.nx - 1;
  const auto share = [&](double f, std::size_t floor) {
    return std::max(floor, static_cast<std::size_t>(std::lround(f * static_cast<double>(intervals))));
  };
  const std::size_t m_head = share(spec.headend_share, 2);
  const std::size_t m_int = share(spec.interior_share, 3);
  if (m_head + m_int + 3 > intervals) throw Error(ErrorKind::InvalidArgument, "nx too small for the region split");
  const std::size_t m_down = intervals - m_head - m_int;

  AxisymGrid grid;
  grid.x.reserve(spec.nx);
  grid.x.push_back(0.0);
  append_uniform(grid.x, 0.0, g.headend, m_head);
  append_uniform(grid.x, g.headend, g.exit(), m_int);

  const double down = 3.0 * g.length;
  const double q = stretch_ratio(spec.exit_spacing, m_down);
  double s = 0.0;
  double step = q == 1.0 ? 1.0 / static_cast<double>(m_down) : spec.exit_spacing;
  for (std::size_t i = 1; i <= m_down; ++i) {
    s += step;
    step *= q;
    grid.x.push_back(i == m_down ? g.domain_length() : g.exit() + down * s);
  }

  const double dr = g.domain_radius() / static_cast<double>(spec.nr);
  grid.r.resize(spec.nr);
  for (std::size_t j = 0; j < spec.nr; ++j) grid.r[j] = (static_cast<double>(j) + 0.5) * dr;

  const auto boxes = region_boxes(g);
  const std::size_t nx = grid.x.size();
  grid.cell_area.resize(nx * spec.nr);
  grid.region_label.resize(nx * spec.nr);
  for (std::size_t i = 0; i < nx; ++i) {
    const double left = i == 0 ? grid.x[0] : 0.5 * (grid.x[i - 1] + grid.x[i]);
    const double right = i + 1 == nx ? grid.x[nx - 1] : 0.5 * (grid.x[i] + grid.x[i + 1]);
    // Boundary nodes belong to the upstream region.
    std::uint8_t label = kRegionCount - 1;
    for (std::size_t k = 0; k < kRegionCount; ++k) {
      if (grid.x[i] <= boxes[k].x1 * (1.0 + 1e-12)) {
        label = static_cast<std::uint8_t>(k);
        break;
      }
    }
    for (std::size_t j = 0; j < spec.nr; ++j) {
      grid.cell_area[i * spec.nr + j] = (right - left) * dr;
      grid.region_label[i * spec.nr + j] = label;
    }
  }
  return grid;
}

std::size_t SnapshotSeries::steps() const {
  return variables.empty() ? 0 : static_cast<std::size_t>(variables.begin()->second.cols());
}

const Eigen::MatrixXd& SnapshotSeries::at(const std::string& name) const {
  const auto it = variables.find(name);
  if (it == variables.end()) throw Error(ErrorKind::CorpusError, "series has no variable '" + name + "'");
  return it->second;
}

void SnapshotSeries::validate() const {
  grid.validate();
  if (variables.empty()) throw Error(ErrorKind::ShapeMismatch, "series has no variables");
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  const auto T = steps();
  if (T < 1) throw Error(ErrorKind::ShapeMismatch, "series needs at least one snapshot");
  for (const auto& [name, m] : variables) {
    if (static_cast<std::size_t>(m.rows()) != grid.nodes() || static_cast<std::size_t>(m.cols()) != T) {
      throw Error(ErrorKind::ShapeMismatch, "variable '" + name + "' has inconsistent shape");
    }
    if (!m.allFinite()) throw Error(ErrorKind::InvalidArgument, "variable '" + name + "' has non-finite values");
  }
}

void write_grid(const std::filesystem::path& file, const AxisymGrid& grid) {
  io::Writer w(file);
  w.magic("CPG1");
  w.u32(static_cast<std::uint32_t>(grid.nx()));
  w.u32(static_cast<std::uint32_t>(grid.nr()));
  w.f64s(grid.x);
  w.f64s(grid.r);
  w.f64s(grid.cell_area);
  for (auto lbl : grid.region_label) w.u8(lbl);
  w.close();
}

AxisymGrid read_grid(const std::filesystem::path& file) {
  io::Reader rd(file);
  rd.expect_magic("CPG1");
  AxisymGrid g;
  const auto nx = rd.u32();
  const auto nr = rd.u32();
  g.x.resize(nx);
  g.r.resize(nr);
  g.cell_area.resize(std::size_t{nx} * nr);
  g.region_label.resize(std::size_t{nx} * nr);
  rd.f64s(g.x);
  rd.f64s(g.r);
  rd.f64s(g.cell_area);
  for (auto& lbl : g.region_label) lbl = rd.u8();
  g.validate();
  return g;
}

void write_variable(const std::filesystem::path& file, const Eigen::MatrixXd& data) {
  io::Writer w(file);
  w.magic("CPS1");
  w.u32(static_cast<std::uint32_t>(data.cols()));
  w.u32(static_cast<std::uint32_t>(data.rows()));
  // Column-major storage is already time-major (one contiguous snapshot per column).
  w.f64s(std::span<const double>(data.data(), static_cast<std::size_t>(data.size())));
  w.close();
}

Eigen::MatrixXd read_variable(const std::filesystem::path& file) {
  io::Reader rd(file);
  rd.expect_magic("CPS1");
  const auto T = rd.u32();
  const auto nodes = rd.u32();
  Eigen::MatrixXd m(nodes, T);
  rd.f64s(std::span<double>(m.data(), static_cast<std::size_t>(m.size())));
  return m;
}

void write_meta(const std::filesystem::path& file, const CaseMeta& meta) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot create " + file.string());
  out.precision(17);
  out << "design=" << format_design(meta.design) << '\n';
  out << "dt=" << meta.dt << '\n';
  out << "t0=" << meta.t0 << '\n';
  out << "seed=" << meta.seed << '\n';
  out << "steps=" << meta.steps << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + file.string());
}

CaseMeta read_meta(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  CaseMeta meta;
  bool have_design = false;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "design") {
        meta.design = parse_design(value);
        have_design = true;
      } else if (key == "dt") {
        meta.dt = std::stod(value);
      } else if (key == "t0") {
        meta.t0 = std::stod(value);
      } else if (key == "seed") {
        meta.seed = std::stoull(value);
      } else if (key == "steps") {
        meta.steps = std::stoull(value);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::CorpusError, file.string() + ": bad value for '" + key + "'");
    }
  }
  if (!have_design) throw Error(ErrorKind::CorpusError, file.string() + ": missing design");
  return meta;
}

void write_case(const std::filesystem::path& dir, const SnapshotSeries& series, const CaseMeta& meta) {
  std::filesystem::create_directories(dir);
  write_grid(dir / "grid.bin", series.grid);
  for (const auto& [name, m] : series.variables) write_variable(dir / ("var_" + name + ".bin"), m);
  write_meta(dir / "case.meta", meta);
}

StoredCase read_case(const std::filesystem::path& dir, const std::vector<std::string>& variables) {
  StoredCase out;
  out.meta = read_meta(dir / "case.meta");
  out.series.grid = read_grid(dir / "grid.bin");
  out.series.dt = out.meta.dt;
  out.series.t0 = out.meta.t0;

  std::vector<std::string> names = variables;
  if (names.empty()) {
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
      const auto fname = entry.path().filename().string();
      if (fname.starts_with("var_") && fname.ends_with(".bin")) names.push_back(fname.substr(4, fname.size() - 8));
    }
    std::sort(names.begin(), names.end());
  }
  for (const auto& name : names) {
    const auto path = dir / ("var_" + name + ".bin");
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorKind::CorpusError, dir.string() + ": missing variable '" + name + "'");
    }
    auto m = read_variable(path);
    if (static_cast<std::size_t>(m.rows()) != out.series.grid.nodes()) {
      throw Error(ErrorKind::CorpusError, path.string() + ": node count does not match grid.bin");
    }
    out.series.variables.emplace(name, std::move(m));
  }
  return out;
}

std::vector<std::filesystem::path> list_cases(const std::filesystem::path& corpus) {
  if (!std::filesystem::is_directory(corpus)) {
    throw Error(ErrorKind::CorpusError, "corpus directory " + corpus.string() + " does not exist");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(corpus)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "case.meta")) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cpodem
