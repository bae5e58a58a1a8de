#include "service.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cpodem/archive.hpp"
#include "cpodem/error.hpp"
#include "cpodem/kriging.hpp"
#include "cpodem/tree.hpp"

namespace cpodem::service {
namespace {

using ojson = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

Response json_response(int status, const ojson& j) { return {status, "application/json", j.dump()}; }

Response error_response(int status, std::string_view message) {
  return json_response(status, ojson{{"error", std::string(message)}});
}

std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    parts.push_back(path.substr(0, slash));
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash);
  }
  return parts;
}

ojson scalar_json(const ScalarPrediction& p) { return {{"mean", p.mean}, {"ci", p.ci}, {"variance", p.variance}}; }

ojson sobol_json(const SobolResult& r) {
  ojson j;
  j["f0"] = r.f0;
  j["D"] = r.D;
  j["main"] = r.S_main;
  j["main_ci"] = r.ci_main;
  ojson pair = ojson::array(), pair_ci = ojson::array();
  for (Eigen::Index i = 0; i < r.S_pair.rows(); ++i) {
    ojson row = ojson::array(), row_ci = ojson::array();
    for (Eigen::Index k = 0; k < r.S_pair.cols(); ++k) {
      row.push_back(r.S_pair(i, k));
      row_ci.push_back(r.ci_pair(i, k));
    }
    pair.push_back(std::move(row));
    pair_ci.push_back(std::move(row_ci));
  }
  j["pair"] = std::move(pair);
  j["pair_ci"] = std::move(pair_ci);
  return j;
}

}  // namespace

std::string prediction_id(const DesignPoint& d, std::string_view model_hash) {
  std::string key;
  char buf[32];
  for (double v : d.values()) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    key += buf;
  }
  key += model_hash;
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(key)));
  return buf;
}

std::string prediction_json(const EmulationResult& r, std::string_view id, std::string_view model_hash) {
  ojson j;
  j["id"] = std::string(id);
  j["model"] = std::string(model_hash);
  j["design"] = std::vector<double>(r.design.values().begin(), r.design.values().end());
  j["classification"] = std::string(to_string(r.classification));
  j["partition"] = r.partition;
  j["thickness"] = scalar_json(r.thickness);
  j["angle"] = scalar_json(r.angle);
  if (r.extracted) {
    j["extracted"] = {{"h", r.extracted->h}, {"alpha", r.extracted->alpha}};
  } else {
    j["extracted"] = nullptr;
  }
  ojson fields;
  std::vector<std::string> vars;
  for (const auto& [name, m] : r.fields.variables) vars.push_back(name);
  fields["variables"] = vars;
  fields["steps"] = r.fields.steps();
  fields["nx"] = r.fields.grid.nx();
  fields["nr"] = r.fields.grid.nr();
  fields["dt"] = r.fields.dt;
  fields["t0"] = r.fields.t0;
  fields["grid"] = "/api/field/" + std::string(id) + "/grid";
  fields["frame"] = "/api/field/" + std::string(id) + "/{variable}/{t}";
  j["fields"] = std::move(fields);
  return j.dump();
}

DesignPoint parse_design_request(std::string_view body, const DesignSpace& space) {
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("design")) {
    throw Error(ErrorKind::InvalidArgument, "request needs a \"design\" field");
  }
  const auto units = j.value("units", std::string("physical"));
  if (units != "physical" && units != "normalized") {
    throw Error(ErrorKind::InvalidArgument, "units must be \"physical\" or \"normalized\"");
  }
  std::vector<double> values(space.dim());
  const auto& d = j["design"];
  try {
    if (d.is_array()) {
      if (d.size() != space.dim()) {
        throw Error(ErrorKind::InvalidArgument, "design needs " + std::to_string(space.dim()) + " numbers");
      }
      for (std::size_t k = 0; k < space.dim(); ++k) values[k] = d.at(k).get<double>();
    } else if (d.is_object()) {
      for (std::size_t k = 0; k < space.dim(); ++k) {
        if (!d.contains(space[k].name)) throw Error(ErrorKind::InvalidArgument, "design lacks " + space[k].name);
        values[k] = d[space[k].name].get<double>();
      }
    } else {
      throw Error(ErrorKind::InvalidArgument, "design must be an array or an object");
    }
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::InvalidArgument, "design values must be numbers");
  }
  if (units == "normalized") {
    for (std::size_t k = 0; k < space.dim(); ++k) values[k] = space[k].lo + values[k] * (space[k].hi - space[k].lo);
  }
  return DesignPoint(std::move(values));
}

std::optional<std::string> bounds_report(const DesignPoint& d, const DesignSpace& space) {
  for (std::size_t k = 0; k < space.dim(); ++k) {
    const double v = d[k];
    if (!(v >= space[k].lo && v <= space[k].hi)) {
      return ojson{{"param", space[k].name}, {"lo", space[k].lo}, {"hi", space[k].hi}}.dump();
    }
  }
  return std::nullopt;
}

std::string encode_frame(std::size_t nx, std::size_t nr, const Eigen::Ref<const Eigen::VectorXd>& values) {
  std::string out;
  out.reserve(8 + 4 * static_cast<std::size_t>(values.size()));
  const auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  put32(static_cast<std::uint32_t>(nx));
  put32(static_cast<std::uint32_t>(nr));
  for (Eigen::Index i = 0; i < values.size(); ++i) put32(std::bit_cast<std::uint32_t>(static_cast<float>(values(i))));
  return out;
}

ModelService::ModelService(EmulatorModel model, std::string model_hash, ServiceOptions options)
    : model_(std::move(model)), hash_(std::move(model_hash)), options_(options) {}

std::unique_ptr<ModelService> ModelService::from_archive(const std::filesystem::path& dir, ServiceOptions options) {
  return std::make_unique<ModelService>(load_model(dir), model_hash(dir), options);
}

std::size_t ModelService::cache_size() const {
  std::lock_guard lock(cache_mutex_);
  return lru_.size();
}

std::size_t ModelService::cache_hits() const {
  std::lock_guard lock(cache_mutex_);
  return hits_;
}

std::shared_ptr<const ModelService::Entry> ModelService::lookup(const std::string& id) {
  std::lock_guard lock(cache_mutex_);
  const auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second);
  ++hits_;
  return it->second->second;
}

std::shared_ptr<const ModelService::Entry> ModelService::insert(const std::string& id,
                                                                std::shared_ptr<const Entry> entry) {
  std::lock_guard lock(cache_mutex_);
  if (const auto it = index_.find(id); it != index_.end()) {
    // Another request finished first; keep its entry so bodies stay identical.
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
  }
  if (options_.cache_capacity == 0) return entry;
  lru_.emplace_front(id, std::move(entry));
  index_[id] = lru_.begin();
  while (lru_.size() > options_.cache_capacity) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
  return lru_.front().second;
}

Response ModelService::predict(std::string_view body) {
  DesignPoint d;
  try {
    d = parse_design_request(body, model_.space);
  } catch (const Error& e) {
    return error_response(400, e.what());
  }
  if (auto report = bounds_report(d, model_.space)) return {400, "application/json", *report};

  const auto id = prediction_id(d, hash_);
  if (auto hit = lookup(id)) return {200, "application/json", hit->body};
  try {
    auto entry = std::make_shared<Entry>();
    entry->result = predict_field(model_, d);
    entry->body = prediction_json(entry->result, id, hash_);
    return {200, "application/json", insert(id, std::move(entry))->body};
  } catch (const Error& e) {
    return error_response(e.kind() == ErrorKind::OutOfBounds ? 400 : 500, e.what());
  }
}

Response ModelService::field(std::string_view id, std::string_view variable, std::string_view step,
                             const Query& query) {
  const auto entry = lookup(std::string(id));
  if (!entry) return error_response(404, "unknown prediction handle");
  const auto& r = entry->result;
  const auto it = r.fields.variables.find(std::string(variable));
  if (it == r.fields.variables.end()) return error_response(404, "unknown variable");
  const auto t = parse_index(step);
  if (!t || *t >= r.fields.steps()) return error_response(404, "timestep out of range");

  const auto kind_it = query.find("kind");
  const std::string kind = kind_it == query.end() ? "mean" : kind_it->second;
  const auto col = static_cast<Eigen::Index>(*t);
  const auto& g = r.fields.grid;
  if (kind == "mean") return {200, "application/octet-stream", encode_frame(g.nx(), g.nr(), it->second.col(col))};
  const auto vit = r.variance.find(std::string(variable));
  if (vit == r.variance.end()) return error_response(404, "no variance for this variable");
  if (kind == "variance") return {200, "application/octet-stream", encode_frame(g.nx(), g.nr(), vit->second.col(col))};
  if (kind == "ci") {
    const Eigen::VectorXd w = uq_map(vit->second.col(col), model_.config.ci_level);
    return {200, "application/octet-stream", encode_frame(g.nx(), g.nr(), w)};
  }
  return error_response(400, "kind must be mean, variance or ci");
}

Response ModelService::field_grid(std::string_view id) {
  const auto entry = lookup(std::string(id));
  if (!entry) return error_response(404, "unknown prediction handle");
  const auto& g = entry->result.fields.grid;
  Eigen::VectorXd coords(static_cast<Eigen::Index>(g.nx() + g.nr()));
  for (std::size_t i = 0; i < g.nx(); ++i) coords(static_cast<Eigen::Index>(i)) = g.x[i];
  for (std::size_t j = 0; j < g.nr(); ++j) coords(static_cast<Eigen::Index>(g.nx() + j)) = g.r[j];
  // Same header as a frame, followed by x[nx] then r[nr].
  return {200, "application/octet-stream", encode_frame(g.nx(), g.nr(), coords)};
}

Response ModelService::sensitivity() {
  std::lock_guard lock(sobol_mutex_);
  if (!sobol_body_) {
    try {
      ojson j;
      j["N"] = options_.sobol_n;
      j["seed"] = options_.sobol_seed;
      std::vector<std::string> names;
      for (const auto& p : model_.space.params()) names.push_back(p.name);
      j["parameters"] = names;
      const auto run = [&](ScalarResponse which) {
        return design_sensitivity(
            [&](const DesignPoint& d) { return predict_scalar(model_, which, d).mean; }, model_.space,
            options_.sobol_n, options_.sobol_seed, true);
      };
      j["thickness"] = sobol_json(run(ScalarResponse::Thickness));
      j["angle"] = sobol_json(run(ScalarResponse::Angle));
      sobol_body_ = j.dump();
    } catch (const Error& e) {
      return error_response(404, std::string("sensitivity unavailable: ") + e.what());
    }
  }
  return {200, "application/json", *sobol_body_};
}

Response ModelService::tree() const {
  if (!model_.tree) return error_response(404, "model was trained without partitioning");
  ojson rules = ojson::array();
  for (const auto& rule : extract_rules(*model_.tree, model_.space)) {
    ojson cons = ojson::array();
    for (const auto& c : rule.constraints) {
      cons.push_back({{"param", model_.space[c.feature].name},
                      {"op", c.at_least ? ">=" : "<"},
                      {"threshold", c.threshold},
                      {"unit", model_.space[c.feature].unit}});
    }
    rules.push_back({{"constraints", std::move(cons)},
                     {"label", std::string(to_string(rule.label))},
                     {"n_jet", rule.n_jet},
                     {"n_swirl", rule.n_swirl},
                     {"text", format_rule(rule, model_.space)}});
  }
  ojson j;
  j["depth"] = model_.tree->depth();
  j["leaves"] = model_.tree->leaf_count();
  j["rules"] = std::move(rules);
  j["tree"] = ojson::parse(model_.tree->to_json());
  return json_response(200, j);
}

Response ModelService::design_space() const {
  ojson params = ojson::array();
  for (const auto& p : model_.space.params()) {
    params.push_back({{"name", p.name}, {"lo", p.lo}, {"hi", p.hi}, {"unit", p.unit}});
  }
  return json_response(200, ojson{{"parameters", std::move(params)}});
}

Response ModelService::mode(std::string_view k, const Query& query) const {
  const auto index = parse_index(k);
  if (!index) return error_response(404, "mode index must be a non-negative integer");
  const PartitionModel* part = &model_.partitions.front();
  if (const auto it = query.find("partition"); it != query.end()) {
    part = nullptr;
    for (const auto& p : model_.partitions) {
      if (p.name == it->second) part = &p;
    }
    if (!part) return error_response(404, "unknown partition");
  }
  std::string variable = model_.config.variables.front();
  if (const auto it = query.find("variable"); it != query.end()) variable = it->second;
  const auto vit = part->variables.find(variable);
  if (vit == part->variables.end()) return error_response(404, "unknown variable");
  const auto& basis = vit->second.basis;
  if (*index >= basis.size()) return error_response(404, "mode index out of range");
  const auto& g = part->common.grid;
  return {200, "application/octet-stream",
          encode_frame(g.nx(), g.nr(), basis.modes.col(static_cast<Eigen::Index>(*index)))};
}

Response ModelService::handle(std::string_view method, std::string_view path, std::string_view body,
                              const Query& query) {
  const auto parts = split_path(path);
  if (parts.size() < 2 || parts[0] != "api") return error_response(404, "no such endpoint");
  const auto& ep = parts[1];
  const bool get = method == "GET";
  if (ep == "predict" && parts.size() == 2) {
    return method == "POST" ? predict(body) : error_response(405, "use POST");
  }
  if (!get) return error_response(405, "use GET");
  if (ep == "field" && parts.size() == 3) return error_response(404, "no such endpoint");
  if (ep == "field" && parts.size() == 4 && parts[3] == "grid") return field_grid(parts[2]);
  if (ep == "field" && parts.size() == 5) return field(parts[2], parts[3], parts[4], query);
  if (ep == "sensitivity" && parts.size() == 2) return sensitivity();
  if (ep == "tree" && parts.size() == 2) return tree();
  if (ep == "designspace" && parts.size() == 2) return design_space();
  if (ep == "modes" && parts.size() == 3) return mode(parts[2], query);
  return error_response(404, "no such endpoint");
}

struct HttpServer::Impl {
  ModelService& service;
  httplib::Server server;
  explicit Impl(ModelService& s) : service(s) {}
};

HttpServer::HttpServer(ModelService& service, const std::filesystem::path& static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    Query q;
    for (const auto& [k, v] : req.params) q.emplace(k, v);
    const auto r = impl_->service.handle(req.method, req.path, req.body, q);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->server.Post("/api/.*", dispatch);
  impl_->server.Get("/api/.*", dispatch);
  if (!static_dir.empty()) impl_->server.set_mount_point("/", static_dir.string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace cpodem::service
