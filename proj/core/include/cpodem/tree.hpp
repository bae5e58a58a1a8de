#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpodem/design.hpp"
#include "cpodem/label.hpp"

namespace cpodem {

struct LabeledDesign {
  NormalizedDesign design;
  FlowLabel label = FlowLabel::Jet;
};

/// p_j (1 - p_j) + p_s (1 - p_s). Throws EmptyNode when both counts are zero.
double gini_impurity(std::size_t n_jet, std::size_t n_swirl);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  ///< count-weighted mean Gini of the two children
};

/// Exhaustive search over features and midpoints between adjacent distinct
/// values. Ties go to the lowest feature, then the lowest threshold.
/// Children must hold at least `min_leaf` samples each.
Split best_split(std::span<const LabeledDesign> data, std::size_t min_leaf = 1);

/// Binary classification tree stored as a flat node array; node 0 is the root.
/// Internal nodes send coordinate < threshold left and >= threshold right.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    FlowLabel label = FlowLabel::Swirl;
    std::size_t n_jet = 0;
    std::size_t n_swirl = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  DecisionTree() = default;
  explicit DecisionTree(std::vector<Node> nodes);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t leaf_count() const;
  std::size_t depth() const;

  FlowLabel classify(const NormalizedDesign& d) const;

  std::string to_json() const;
  static DecisionTree from_json(const std::string& text);

  bool operator==(const DecisionTree&) const = default;

 private:
  std::vector<Node> nodes_;
};

/// Greedy CART growth. A branch stops when it is pure, reaches max_depth,
/// has no admissible split, or the best split does not lower the impurity.
/// Leaves take the majority label; an even split goes to swirl.
DecisionTree fit_tree(std::span<const LabeledDesign> data, std::size_t max_depth = 4, std::size_t min_leaf = 2);

FlowLabel classify(const DecisionTree& tree, const NormalizedDesign& d);

struct RuleConstraint {
  std::size_t feature = 0;
  bool at_least = false;     ///< true for ">=", false for "<"
  double threshold = 0.0;    ///< physical units
};

struct Rule {
  std::vector<RuleConstraint> constraints;
  FlowLabel label = FlowLabel::Jet;
  std::size_t n_jet = 0;
  std::size_t n_swirl = 0;
};

/// One rule per leaf, thresholds denormalized through `space`.
std::vector<Rule> extract_rules(const DecisionTree& tree, const DesignSpace& space);

/// "theta < 60 deg and delta >= 1.4 mm -> jet (jet 9, swirl 1)".
std::string format_rule(const Rule& rule, const DesignSpace& space);

}  // namespace cpodem
