#include "cpodem/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cpodem/error.hpp"

namespace cpodem {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::DimensionUnsupported: return "DimensionUnsupported";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::EmptyNode: return "EmptyNode";
    case ErrorKind::NoSplit: return "NoSplit";
    case ErrorKind::GeometryMismatch: return "GeometryMismatch";
    case ErrorKind::DegenerateRegion: return "DegenerateRegion";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::SolverFailure: return "SolverFailure";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::ZeroRange: return "ZeroRange";
    case ErrorKind::NoInterface: return "NoInterface";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::CorpusError: return "CorpusError";
    case ErrorKind::ModelMissing: return "ModelMissing";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

DesignSpace::DesignSpace(std::vector<ParameterRange> params) : params_(std::move(params)) {
  if (params_.empty()) throw Error(ErrorKind::InvalidArgument, "design space needs at least one parameter");
  std::set<std::string> names;
  for (const auto& p : params_) {
    if (!(p.lo < p.hi)) {
      throw Error(ErrorKind::InvalidArgument, "parameter '" + p.name + "' needs lo < hi");
    }
    if (!names.insert(p.name).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate parameter name '" + p.name + "'");
    }
  }
}

std::size_t DesignSpace::index_of(std::string_view name) const {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (params_[k].name == name) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "no parameter named '" + std::string(name) + "'");
}

DesignSpace DesignSpace::parse(std::string_view text) {
  std::vector<ParameterRange> params;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ParameterRange p;
    if (!(fields >> p.name)) continue;
    if (!(fields >> p.lo >> p.hi)) {
      throw Error(ErrorKind::InvalidArgument,
                  "design-space line " + std::to_string(lineno) + ": expected 'name lo hi unit'");
    }
    fields >> p.unit;
    params.push_back(std::move(p));
  }
  return DesignSpace(std::move(params));
}

DesignSpace DesignSpace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open design-space file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string DesignSpace::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "# name lo hi unit\n";
  for (const auto& p : params_) out << p.name << ' ' << p.lo << ' ' << p.hi << ' ' << p.unit << '\n';
  return out.str();
}

const DesignSpace& injector_design_space() {
  static const DesignSpace space({
      {"L", 20.0, 100.0, "mm"},
      {"R_n", 2.0, 5.0, "mm"},
      {"theta", 45.0, 75.0, "deg"},
      {"delta", 0.5, 2.0, "mm"},
      {"dL", 1.0, 4.0, "mm"},
  });
  return space;
}

DesignPoint DesignPoint::checked(std::vector<double> values, const DesignSpace& space) {
  DesignPoint d(std::move(values));
  check_in_bounds(d, space);
  return d;
}

NormalizedDesign::NormalizedDesign(std::vector<double> coords) : coords_(std::move(coords)) {
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    if (!(coords_[k] >= 0.0 && coords_[k] <= 1.0)) {
      throw Error(ErrorKind::OutOfBounds,
                  "normalized coordinate " + std::to_string(k) + " = " + std::to_string(coords_[k]) +
                      " outside [0,1]");
    }
  }
}

NormalizedDesign::NormalizedDesign(std::initializer_list<double> coords)
    : NormalizedDesign(std::vector<double>(coords)) {}

void check_in_bounds(const DesignPoint& d, const DesignSpace& s) {
  if (d.dim() != s.dim()) {
    throw Error(ErrorKind::OutOfBounds, "design has " + std::to_string(d.dim()) +
                                            " coordinates, space has " + std::to_string(s.dim()));
  }
  for (std::size_t k = 0; k < s.dim(); ++k) {
    const auto& p = s[k];
    if (!(d[k] >= p.lo && d[k] <= p.hi)) {
      std::ostringstream msg;
      msg << p.name << " = " << d[k] << " outside [" << p.lo << ", " << p.hi << "]";
      throw Error(ErrorKind::OutOfBounds, msg.str());
    }
  }
}

NormalizedDesign normalize(const DesignPoint& d, const DesignSpace& s) {
  check_in_bounds(d, s);
  std::vector<double> coords(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) {
    // Clamp guards the last ulp when d_k == hi.
    coords[k] = std::clamp((d[k] - s[k].lo) / (s[k].hi - s[k].lo), 0.0, 1.0);
  }
  return NormalizedDesign(std::move(coords));
}

DesignPoint denormalize(const NormalizedDesign& n, const DesignSpace& s) {
  if (n.dim() != s.dim()) {
    throw Error(ErrorKind::OutOfBounds, "normalized design dimension does not match the space");
  }
  std::vector<double> values(s.dim());
  for (std::size_t k = 0; k < s.dim(); ++k) {
    values[k] = s[k].lo + n[k] * (s[k].hi - s[k].lo);
  }
  return DesignPoint(std::move(values));
}

double normalized_distance(const DesignPoint& a, const DesignPoint& b, const DesignSpace& s) {
  const auto na = normalize(a, s);
  const auto nb = normalize(b, s);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.dim(); ++k) {
    const double diff = na[k] - nb[k];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

DesignPoint offset_design(const DesignPoint& d, std::span<const double> fractions,
                          const DesignSpace& s) {
  if (fractions.size() != d.dim()) {
    throw Error(ErrorKind::InvalidArgument, "need one offset fraction per parameter");
  }
  std::vector<double> values(d.dim());
  for (std::size_t k = 0; k < d.dim(); ++k) values[k] = d[k] * (1.0 + fractions[k]);
  return DesignPoint::checked(std::move(values), s);
}

DesignPoint parse_design(std::string_view text) {
  std::string s(text);
  for (char& c : s) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(s);
  std::vector<double> values;
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
      throw Error(ErrorKind::InvalidArgument, "cannot parse design value '" + tok + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "empty design string");
  return DesignPoint(std::move(values));
}

std::string format_design(const DesignPoint& d) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t k = 0; k < d.dim(); ++k) {
    if (k) out << ',';
    out << d[k];
  }
  return out.str();
}

}  // namespace cpodem
