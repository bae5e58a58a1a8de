#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "cpodem/emulator.hpp"
#include "cpodem/sobol.hpp"

namespace cpodem::service {

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using Query = std::map<std::string, std::string>;

struct ServiceOptions {
  std::size_t cache_capacity = 32;
  std::size_t sobol_n = 4096;
  std::uint64_t sobol_seed = 1;
};

/// Handle for a prediction: FNV-1a of the design (17 significant digits per
/// coordinate) and the model hash, as 16 hex digits.
std::string prediction_id(const DesignPoint& d, std::string_view model_hash);

/// JSON body shared by `cpodem predict` and POST /api/predict.
std::string prediction_json(const EmulationResult& r, std::string_view id, std::string_view model_hash);

/// Parses {"design": [...], "units": "physical"|"normalized"} (or the design
/// as an object keyed by parameter name). Throws InvalidArgument.
DesignPoint parse_design_request(std::string_view body, const DesignSpace& space);

/// {"param", "lo", "hi"} for the first out-of-bounds coordinate, if any.
std::optional<std::string> bounds_report(const DesignPoint& d, const DesignSpace& space);

/// u32 nx, u32 nr, then nx*nr float32 values in node order, little-endian.
std::string encode_frame(std::size_t nx, std::size_t nr, const Eigen::Ref<const Eigen::VectorXd>& values);

/// Single-model request handler. The model is immutable once loaded; the
/// only mutable state is the LRU cache of predictions and the lazily
/// computed sensitivity result, both behind mutexes.
class ModelService {
 public:
  ModelService(EmulatorModel model, std::string model_hash, ServiceOptions options = {});
  static std::unique_ptr<ModelService> from_archive(const std::filesystem::path& dir, ServiceOptions options = {});

  const EmulatorModel& model() const noexcept { return model_; }
  const std::string& hash() const noexcept { return hash_; }

  Response handle(std::string_view method, std::string_view path, std::string_view body, const Query& query = {});

  Response predict(std::string_view body);
  Response field(std::string_view id, std::string_view variable, std::string_view step, const Query& query);
  Response field_grid(std::string_view id);
  Response sensitivity();
  Response tree() const;
  Response design_space() const;
  Response mode(std::string_view k, const Query& query) const;

  std::size_t cache_size() const;
  std::size_t cache_hits() const;

 private:
  struct Entry {
    EmulationResult result;
    std::string body;
  };

  std::shared_ptr<const Entry> lookup(const std::string& id);
  std::shared_ptr<const Entry> insert(const std::string& id, std::shared_ptr<const Entry> entry);

  EmulatorModel model_;
  std::string hash_;
  ServiceOptions options_;

  mutable std::mutex cache_mutex_;
  std::list<std::pair<std::string, std::shared_ptr<const Entry>>> lru_;
  std::unordered_map<std::string, decltype(lru_)::iterator> index_;
  std::size_t hits_ = 0;

  std::mutex sobol_mutex_;
  std::optional<std::string> sobol_body_;
};

/// HTTP front end for a ModelService. `static_dir`, when non-empty, is
/// mounted at "/" (the explorer bundle).
class HttpServer {
 public:
  explicit HttpServer(ModelService& service, const std::filesystem::path& static_dir = {});
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called from another thread.
  void listen();
  /// Blocks until listen() is accepting connections.
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cpodem::service
