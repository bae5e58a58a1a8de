#include "cpodem/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace cpodem {

KdTree2::KdTree2(std::vector<Point> points) : points_(std::move(points)) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

int KdTree2::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 2;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const int me = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(me)].left = left;
  nodes_[static_cast<std::size_t>(me)].right = right;
  return me;
}

std::vector<std::pair<double, std::size_t>> KdTree2::nearest(const Point& q, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<std::pair<double, std::size_t>> out;
  if (k == 0) return out;
  // Max-heap of the current best k; lexicographic order keeps ties deterministic.
  std::priority_queue<std::pair<double, std::size_t>> heap;

  auto visit = [&](auto&& self, int ni) -> void {
    if (ni < 0) return;
    const auto& n = nodes_[static_cast<std::size_t>(ni)];
    const auto& p = points_[n.index];
    const double dx = p[0] - q[0];
    const double dy = p[1] - q[1];
    const std::pair<double, std::size_t> cand{dx * dx + dy * dy, n.index};
    if (heap.size() < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
    const double diff = q[n.axis] - p[n.axis];
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    if (heap.size() < k || diff * diff <= heap.top().first) self(self, far);
  };
  visit(visit, root_);

  out.resize(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

}  // namespace cpodem
