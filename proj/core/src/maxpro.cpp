#include "cpodem/maxpro.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "cpodem/error.hpp"
#include "cpodem/random.hpp"

namespace cpodem {
namespace {

double pair_product(const DesignMatrix& d, Eigen::Index i, Eigen::Index j) {
  double prod = 1.0;
  for (Eigen::Index k = 0; k < d.cols(); ++k) {
    const double diff = d(i, k) - d(j, k);
    prod /= diff * diff;
  }
  return prod;
}

double criterion_from_sum(double sum, std::size_t n, std::size_t p) {
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return std::pow(sum / pairs, 1.0 / static_cast<double>(p));
}

/// Pairwise products kept in a dense symmetric table so a swap only touches
/// two rows of it.
class SwapState {
 public:
  explicit SwapState(DesignMatrix design) : d_(std::move(design)), prod_(d_.rows(), d_.rows()) {
    prod_.setZero();
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < d_.rows(); ++j) {
        prod_(i, j) = prod_(j, i) = pair_product(d_, i, j);
      }
    }
    resum();
  }

  void resum() {
    sum_ = 0.0;
    for (Eigen::Index i = 0; i < d_.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < d_.rows(); ++j) sum_ += prod_(i, j);
    }
  }

  /// Change in the pair sum if column c of rows a and b were exchanged.
  double swap_delta(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    double delta = 0.0;
    const double xa = d_(a, c);
    const double xb = d_(b, c);
    for (Eigen::Index m = 0; m < d_.rows(); ++m) {
      if (m == a || m == b) continue;
      const double xm = d_(m, c);
      const double da = (xa - xm) * (xa - xm);
      const double db = (xb - xm) * (xb - xm);
      delta += prod_(a, m) * (da / db - 1.0) + prod_(b, m) * (db / da - 1.0);
    }
    return delta;
  }

  void apply_swap(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    std::swap(d_(a, c), d_(b, c));
    for (Eigen::Index m = 0; m < d_.rows(); ++m) {
      if (m == a || m == b) continue;
      prod_(a, m) = prod_(m, a) = pair_product(d_, a, m);
      prod_(b, m) = prod_(m, b) = pair_product(d_, b, m);
    }
    resum();
  }

  double sum() const { return sum_; }
  const DesignMatrix& design() const { return d_; }

 private:
  DesignMatrix d_;
  Eigen::MatrixXd prod_;
  double sum_ = 0.0;
};

DesignMatrix random_lh(std::size_t n, std::size_t p, Rng& rng) {
  DesignMatrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < p; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          (static_cast<double>(perm[i]) + 0.5) / static_cast<double>(n);
    }
  }
  return d;
}

}  // namespace

double maxpro_criterion(const DesignMatrix& design) {
  const auto n = static_cast<std::size_t>(design.rows());
  const auto p = static_cast<std::size_t>(design.cols());
  if (n < 2 || p < 1) throw Error(ErrorKind::InvalidArgument, "MaxPro criterion needs n >= 2 and p >= 1");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < design.rows(); ++j) {
      for (Eigen::Index k = 0; k < design.cols(); ++k) {
        if (design(i, k) == design(j, k)) {
          throw Error(ErrorKind::DegenerateDesign, "rows " + std::to_string(i) + " and " +
                                                       std::to_string(j) + " share coordinate " +
                                                       std::to_string(k));
        }
      }
      sum += pair_product(design, i, j);
    }
  }
  return criterion_from_sum(sum, n, p);
}

DesignMatrix random_latin_hypercube(std::size_t n, std::size_t p, std::uint64_t seed) {
  auto rng = make_rng(seed, 0xD0E);
  return random_lh(n, p, rng);
}

DesignMatrix generate_design(std::size_t n, std::size_t p, std::uint64_t seed,
                             const AnnealingOptions& options, MaxProTrace* trace) {
  if (n < 2 || p < 1) throw Error(ErrorKind::InvalidArgument, "generate_design needs n >= 2 and p >= 1");
  const std::size_t restarts = std::max<std::size_t>(options.n_restarts, 1);

  MaxProTrace local;
  DesignMatrix best_overall;
  double best_overall_psi = std::numeric_limits<double>::infinity();

  // Restarts are independent streams; the reduction keeps the lowest index on ties.
  for (std::size_t r = 0; r < restarts; ++r) {
    auto rng = make_rng(seed, r);
    SwapState state(random_lh(n, p, rng));
    double current_psi = criterion_from_sum(state.sum(), n, p);
    local.initial_criteria.push_back(current_psi);

    DesignMatrix best = state.design();
    double best_psi = current_psi;
    double temperature = options.initial_temperature * current_psi;
    const std::size_t proposals_per_sweep = n * p;

    if (n > 2) {
      for (std::size_t sweep = 0; sweep < options.n_iters; ++sweep) {
        for (std::size_t s = 0; s < proposals_per_sweep; ++s) {
          const auto c = static_cast<Eigen::Index>(uniform_index(rng, p));
          const auto a = static_cast<Eigen::Index>(uniform_index(rng, n));
          auto b = static_cast<Eigen::Index>(uniform_index(rng, n - 1));
          if (b >= a) ++b;
          const double new_psi = criterion_from_sum(state.sum() + state.swap_delta(a, b, c), n, p);
          const double delta = new_psi - current_psi;
          const double u = uniform01(rng);
          if (delta <= 0.0 || (temperature > 0.0 && u < std::exp(-delta / temperature))) {
            state.apply_swap(a, b, c);
            current_psi = criterion_from_sum(state.sum(), n, p);
            if (current_psi < best_psi) {
              best_psi = current_psi;
              best = state.design();
            }
          }
        }
        temperature *= options.cooling;
        local.best_history.push_back(best_psi);
      }
    } else {
      local.best_history.push_back(best_psi);
    }

    if (best_psi < best_overall_psi) {
      best_overall_psi = best_psi;
      best_overall = best;
      local.best_restart = r;
    }
  }

  // Incremental sums drift slightly; report the exact criterion of the returned design.
  local.final_criterion = maxpro_criterion(best_overall);
  if (trace) *trace = std::move(local);
  return best_overall;
}

std::vector<Projection> projection_scatter(const DesignMatrix& design) {
  std::vector<Projection> out;
  for (Eigen::Index k = 0; k < design.cols(); ++k) {
    for (Eigen::Index l = k + 1; l < design.cols(); ++l) {
      Projection proj{static_cast<std::size_t>(k), static_cast<std::size_t>(l), {}};
      proj.points.reserve(static_cast<std::size_t>(design.rows()));
      for (Eigen::Index i = 0; i < design.rows(); ++i) proj.points.push_back({design(i, k), design(i, l)});
      out.push_back(std::move(proj));
    }
  }
  return out;
}

}  // namespace cpodem
