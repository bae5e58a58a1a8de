#include "cpodem/tree.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "cpodem/error.hpp"
#include "json.hpp"

namespace cpodem {
namespace {

constexpr double kTieTol = 1e-12;

struct Counts {
  std::size_t jet = 0;
  std::size_t swirl = 0;
  std::size_t total() const { return jet + swirl; }
  void add(FlowLabel l) { (l == FlowLabel::Swirl ? swirl : jet) += 1; }
};

Counts count(std::span<const LabeledDesign> data) {
  Counts c;
  for (const auto& s : data) c.add(s.label);
  return c;
}

double weighted(const Counts& l, const Counts& r) {
  const double n = static_cast<double>(l.total() + r.total());
  return (static_cast<double>(l.total()) * gini_impurity(l.jet, l.swirl) +
          static_cast<double>(r.total()) * gini_impurity(r.jet, r.swirl)) /
         n;
}

FlowLabel majority(const Counts& c) { return c.jet > c.swirl ? FlowLabel::Jet : FlowLabel::Swirl; }

bool find_split(std::span<const LabeledDesign> data, std::size_t min_leaf, Split& best) {
  const std::size_t p = data.front().design.dim();
  bool found = false;
  std::vector<std::size_t> order(data.size());
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data[a].design[k] < data[b].design[k]; });
    Counts left;
    Counts right = count(data);
    for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
      const auto& s = data[order[pos]];
      left.add(s.label);
      (s.label == FlowLabel::Swirl ? right.swirl : right.jet) -= 1;
      const double here = s.design[k];
      const double next = data[order[pos + 1]].design[k];
      if (!(next > here)) continue;
      if (left.total() < min_leaf || right.total() < min_leaf) continue;
      const double imp = weighted(left, right);
      if (!found || imp < best.impurity - kTieTol) {
        best = {k, 0.5 * (here + next), imp};
        found = true;
      }
    }
  }
  return found;
}

}  // namespace

double gini_impurity(std::size_t n_jet, std::size_t n_swirl) {
  const std::size_t n = n_jet + n_swirl;
  if (n == 0) throw Error(ErrorKind::EmptyNode, "Gini impurity of an empty node");
  const double pj = static_cast<double>(n_jet) / static_cast<double>(n);
  const double ps = static_cast<double>(n_swirl) / static_cast<double>(n);
  return pj * (1.0 - pj) + ps * (1.0 - ps);
}

Split best_split(std::span<const LabeledDesign> data, std::size_t min_leaf) {
  if (data.size() < 2) throw Error(ErrorKind::InvalidArgument, "best_split needs at least two samples");
  const auto c = count(data);
  if (c.jet == 0 || c.swirl == 0) throw Error(ErrorKind::InvalidArgument, "best_split needs both classes");
  Split best;
  if (!find_split(data, std::max<std::size_t>(min_leaf, 1), best)) {
    throw Error(ErrorKind::NoSplit, "no admissible split point");
  }
  return best;
}

DecisionTree::DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    const auto size = static_cast<int>(nodes_.size());
    if (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size) {
      throw Error(ErrorKind::InvalidArgument, "tree node has an invalid child index");
    }
  }
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::function<std::size_t(int)> rec = [&](int i) -> std::size_t {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    return n.is_leaf() ? 0 : 1 + std::max(rec(n.left), rec(n.right));
  };
  return rec(0);
}

FlowLabel DecisionTree::classify(const NormalizedDesign& d) const {
  if (nodes_.empty()) throw Error(ErrorKind::ModelMissing, "empty decision tree");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(d[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes_[i].label;
}

std::string DecisionTree::to_json() const {
  std::function<nlohmann::ordered_json(int)> rec = [&](int i) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    nlohmann::ordered_json j;
    if (n.is_leaf()) {
      j["label"] = std::string(to_string(n.label));
      j["counts"] = {{"jet", n.n_jet}, {"swirl", n.n_swirl}};
    } else {
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["majority"] = std::string(to_string(n.label));
      j["counts"] = {{"jet", n.n_jet}, {"swirl", n.n_swirl}};
      j["left"] = rec(n.left);
      j["right"] = rec(n.right);
    }
    return j;
  };
  return nodes_.empty() ? std::string("null") : rec(0).dump(2);
}

DecisionTree DecisionTree::from_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("tree JSON: ") + e.what());
  }
  std::vector<Node> nodes;
  std::function<int(const nlohmann::json&)> rec = [&](const nlohmann::json& j) -> int {
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "tree JSON node must be an object");
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    Node n;
    if (j.contains("counts")) {
      n.n_jet = j["counts"].value("jet", std::size_t{0});
      n.n_swirl = j["counts"].value("swirl", std::size_t{0});
    }
    if (j.contains("label")) {
      const auto lbl = parse_label(j["label"].get<std::string>());
      if (!lbl) throw Error(ErrorKind::InvalidArgument, "tree JSON: unknown label");
      n.label = *lbl;
    } else {
      if (j.contains("majority")) {
        const auto lbl = parse_label(j["majority"].get<std::string>());
        if (!lbl) throw Error(ErrorKind::InvalidArgument, "tree JSON: unknown label");
        n.label = *lbl;
      }
      n.feature = j.at("feature").get<int>();
      n.threshold = j.at("threshold").get<double>();
      if (n.feature < 0) throw Error(ErrorKind::InvalidArgument, "tree JSON: negative feature");
      n.left = rec(j.at("left"));
      n.right = rec(j.at("right"));
    }
    nodes[static_cast<std::size_t>(idx)] = n;
    return idx;
  };
  try {
    if (!root.is_null()) rec(root);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("tree JSON: ") + e.what());
  }
  return DecisionTree(std::move(nodes));
}

DecisionTree fit_tree(std::span<const LabeledDesign> data, std::size_t max_depth, std::size_t min_leaf) {
  if (data.empty()) throw Error(ErrorKind::InvalidArgument, "fit_tree needs data");
  const std::size_t p = data.front().design.dim();
  for (const auto& s : data) {
    if (s.design.dim() != p) throw Error(ErrorKind::ShapeMismatch, "samples differ in dimension");
  }
  min_leaf = std::max<std::size_t>(min_leaf, 1);

  std::vector<DecisionTree::Node> nodes;
  std::function<int(std::vector<LabeledDesign>, std::size_t)> grow = [&](std::vector<LabeledDesign> subset,
                                                                       std::size_t depth) -> int {
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const auto c = count(subset);
    DecisionTree::Node node;
    node.n_jet = c.jet;
    node.n_swirl = c.swirl;
    node.label = majority(c);

    Split split;
    const bool pure = c.jet == 0 || c.swirl == 0;
    if (!pure && depth < max_depth && find_split(subset, min_leaf, split) &&
        split.impurity < gini_impurity(c.jet, c.swirl) - kTieTol) {
      std::vector<LabeledDesign> left, right;
      for (auto& s : subset) (s.design[split.feature] < split.threshold ? left : right).push_back(std::move(s));
      node.feature = static_cast<int>(split.feature);
      node.threshold = split.threshold;
      node.left = grow(std::move(left), depth + 1);
      node.right = grow(std::move(right), depth + 1);
    }
    nodes[static_cast<std::size_t>(idx)] = node;
    return idx;
  };
  grow(std::vector<LabeledDesign>(data.begin(), data.end()), 0);
  return DecisionTree(std::move(nodes));
}

FlowLabel classify(const DecisionTree& tree, const NormalizedDesign& d) { return tree.classify(d); }

std::vector<Rule> extract_rules(const DecisionTree& tree, const DesignSpace& space) {
  std::vector<Rule> rules;
  if (tree.empty()) return rules;
  const auto& nodes = tree.nodes();
  std::function<void(int, std::vector<RuleConstraint>)> walk = [&](int i, std::vector<RuleConstraint> path) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      rules.push_back({std::move(path), n.label, n.n_jet, n.n_swirl});
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const auto& prm = space[f];
    const double phys = prm.lo + n.threshold * (prm.hi - prm.lo);
    auto left = path;
    left.push_back({f, false, phys});
    walk(n.left, std::move(left));
    path.push_back({f, true, phys});
    walk(n.right, std::move(path));
  };
  walk(0, {});
  return rules;
}

std::string format_rule(const Rule& rule, const DesignSpace& space) {
  std::ostringstream out;
  out.precision(6);
  if (rule.constraints.empty()) out << "always";
  for (std::size_t i = 0; i < rule.constraints.size(); ++i) {
    const auto& c = rule.constraints[i];
    if (i) out << " and ";
    out << space[c.feature].name << (c.at_least ? " >= " : " < ") << c.threshold;
    if (!space[c.feature].unit.empty()) out << ' ' << space[c.feature].unit;
  }
  out << " -> " << to_string(rule.label) << " (jet " << rule.n_jet << ", swirl " << rule.n_swirl << ')';
  return out.str();
}

}  // namespace cpodem
