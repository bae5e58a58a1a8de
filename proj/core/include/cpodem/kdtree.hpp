#pragma once

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace cpodem {

/// Static 2D k-d tree for k-nearest-neighbour queries. Immutable after
/// construction, so concurrent queries are safe.
class KdTree2 {
 public:
  using Point = std::array<double, 2>;

  KdTree2() = default;
  explicit KdTree2(std::vector<Point> points);

  std::size_t size() const noexcept { return points_.size(); }
  const Point& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points to q as (squared distance, index), ascending by
  /// distance then index.
  std::vector<std::pair<double, std::size_t>> nearest(const Point& q, std::size_t k) const;

 private:
  struct Node {
    std::size_t index = 0;
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);

  std::vector<Point> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace cpodem
