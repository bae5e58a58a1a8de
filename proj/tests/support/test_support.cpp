#include "test_support.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cpodem/flow_oracle.hpp"
#include "cpodem/maxpro.hpp"
#include "cpodem/random.hpp"

namespace cpodem::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

DesignPoint from_unit(std::vector<double> u, const DesignSpace& space) {
  return denormalize(NormalizedDesign(std::move(u)), space);
}

std::vector<DesignPoint> designs_from_matrix(const Eigen::MatrixXd& D, const DesignSpace& space) {
  std::vector<DesignPoint> out;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(D.cols()));
    for (Eigen::Index k = 0; k < D.cols(); ++k) row[static_cast<std::size_t>(k)] = D(i, k);
    out.push_back(from_unit(std::move(row), space));
  }
  return out;
}

std::vector<TrainingCase> oracle_cases(const std::vector<DesignPoint>& designs, const GridSpec& grid,
                                       std::size_t steps, std::uint64_t seed) {
  const auto& space = injector_design_space();
  OracleOptions oo;
  oo.grid = grid;
  oo.steps = steps;
  std::vector<TrainingCase> cases;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    oo.seed = mix_seed(seed, i);
    cases.push_back({"case_" + std::to_string(i), designs[i], oracle_fields(designs[i], space, oo)});
  }
  return cases;
}

std::vector<TrainingCase> oracle_cases(std::size_t n, const GridSpec& grid, std::size_t steps, std::uint64_t seed) {
  return oracle_cases(designs_from_matrix(generate_design(n, injector::kDim, seed, AnnealingOptions{1, 40})), grid,
                      steps, seed);
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cpodem::testing
