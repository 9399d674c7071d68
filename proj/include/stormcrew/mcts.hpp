#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stormcrew/errors.hpp"
#include "stormcrew/rng.hpp"

namespace stormcrew {

struct MctsConfig {
  double alpha = 2.2;             // UCT exploration weight
  int d_thr = 5;                  // actions expanded before UCT takes over
  int e_thr = 3;                  // outcomes expanded before reusing explored
  int n_iter = 4000;
  double horizon_minutes = 1440;  // lookahead plan horizon (24 h)
  int k_actions = 10;             // candidate actions per node
  std::uint64_t seed = 0;
};

// One exogenous event out of a post-decision state.
struct Outcome {
  int id = 0;
  double prob = 0.0;
};

// The search is generic over a lookahead model:
//   using State = ...;                                   copyable
//   bool is_terminal(const State&) const;
//   std::vector<int> actions(const State&) const;        ascending ids
//   std::vector<Outcome> outcomes(const State&, int a) const;  probs sum to 1
//   State transition(const State&, int a, int outcome_id) const;
//   double leg_cost(const State&, int a, int outcome_id) const;
//   double rollout(const State&, Rng&) const;  cost-to-go estimate; must
//                                              return the exact terminal value
//                                              on terminal states
template <class Model>
class MctsSearch {
 public:
  using State = typename Model::State;

  struct PostNode;

  struct PreNode {
    State state;
    bool terminal = false;
    int visit_count = 0;  // always equals the sum of child action counts
    double value = 0.0;   // running average of the rollout and delta samples
    int value_samples = 0;
    std::vector<int> unexplored_actions;              // ascending
    std::vector<std::unique_ptr<PostNode>> explored;  // expansion order

    void add_value_sample(double v) {
      ++value_samples;
      value += (v - value) / value_samples;
    }

    // Cost-to-go estimate the parent backup consumes: the best explored
    // action once the node has children, its own sample value otherwise.
    double backed_value() const {
      if (explored.empty()) return value;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& p : explored)
        best = std::min(best, p->mean_cost + p->value);
      return best;
    }
  };

  struct Edge {
    Outcome outcome;
    int count = 0;  // traversals through this outcome, arrivals included
    std::unique_ptr<PreNode> child;
  };

  struct PostNode {
    int action = -1;
    double mean_cost = 0.0;  // sum over all outcomes of p * leg cost
    int count = 0;           // N(S, x)
    double value = 0.0;      // normalized importance-weighted child mean
    std::vector<Outcome> all_outcomes;
    std::vector<Edge> explored;
    std::vector<int> unexplored_outcomes;

    double explored_prob() const {
      double p = 0.0;
      for (const auto& e : explored) p += e.outcome.prob;
      return p;
    }
  };

  struct Decision {
    int action = -1;
    double value = 0.0;  // min over explored root actions of cost + value
  };

  MctsSearch(const Model& model, State root_state, const MctsConfig& cfg)
      : model_(model), cfg_(cfg), rng_(cfg.seed) {
    root_ = make_node(std::move(root_state));
  }

  Decision run() {
    if (root_->terminal)
      throw NoCandidateActions("lookahead root has no candidate actions");
    for (int n = 0; n < cfg_.n_iter; ++n) iterate();
    Decision best;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& post : root_->explored) {
      const double score = post->mean_cost + post->value;
      if (score < best_score ||
          (score == best_score && post->action < best.action)) {
        best_score = score;
        best.action = post->action;
      }
    }
    best.value = best_score;
    return best;
  }

  // One tree-policy descent with leaf evaluation, then backup.
  void iterate() {
    path_.clear();
    PreNode* leaf = tree_policy();
    backup(leaf);
  }

  PreNode& root() { return *root_; }
  const PreNode& root() const { return *root_; }

  // UCT over explored actions; ties broken by ascending action id.
  int select_uct(const PreNode& node, double alpha) const {
    const PostNode* best = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& post : node.explored) {
      const double exploit = -(post->mean_cost + post->value);
      const double explore =
          alpha * std::sqrt(std::log(static_cast<double>(node.visit_count)) /
                            static_cast<double>(post->count));
      const double score = exploit + explore;
      if (score > best_score ||
          (score == best_score && post->action < best->action)) {
        best_score = score;
        best = post.get();
      }
    }
    return best->action;
  }

  // Importance sampling with a uniform proposal: over the unexplored set
  // while the node is below e_thr, over the explored set afterwards.
  // Returns the drawn outcome and its weight p/g.
  std::pair<Outcome, double> sample_outcome_importance(const PostNode& post) {
    const bool expanding =
        static_cast<int>(post.explored.size()) < cfg_.e_thr &&
        !post.unexplored_outcomes.empty();
    if (expanding) {
      const std::size_t n = post.unexplored_outcomes.size();
      const int id = post.unexplored_outcomes[uniform_index(rng_, n)];
      for (const auto& o : post.all_outcomes)
        if (o.id == id) return {o, o.prob * static_cast<double>(n)};
    }
    const std::size_t n = post.explored.size();
    const Outcome o = post.explored[uniform_index(rng_, n)].outcome;
    return {o, o.prob * static_cast<double>(n)};
  }

  // Optimistic expansion out of a pre-decision node: scan every unexplored
  // action with one sampled outcome and a rollout, expand the best pair.
  // Returns the fresh, already-evaluated leaf.
  PreNode* expand_optimistic(PreNode& node) {
    int best_action = -1;
    Outcome best_outcome;
    double best_child_value = 0.0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int action : node.unexplored_actions) {
      const auto outs = model_.outcomes(node.state, action);
      const Outcome o = outs[uniform_index(rng_, outs.size())];
      const State child = model_.transition(node.state, action, o.id);
      const double v = model_.rollout(child, rng_);
      const double score = model_.leg_cost(node.state, action, o.id) + v;
      if (score < best_score) {
        best_score = score;
        best_action = action;
        best_outcome = o;
        best_child_value = v;
      }
    }
    node.unexplored_actions.erase(
        std::remove(node.unexplored_actions.begin(),
                    node.unexplored_actions.end(), best_action),
        node.unexplored_actions.end());
    node.explored.push_back(make_post(node, best_action));
    PostNode& post = *node.explored.back();
    PreNode* leaf = attach_outcome(node, post, best_outcome);
    path_.push_back({&node, &post, &post.explored.back()});
    leaf->add_value_sample(best_child_value);
    return leaf;
  }

  // Descends the tree; the returned leaf always carries a fresh evaluation.
  PreNode* tree_policy() {
    PreNode* node = root_.get();
    while (!node->terminal) {
      const int width = static_cast<int>(node->explored.size()) +
                        static_cast<int>(node->unexplored_actions.size());
      const int d_thr = std::min(cfg_.d_thr, width);
      if (static_cast<int>(node->explored.size()) < d_thr &&
          !node->unexplored_actions.empty()) {
        return expand_optimistic(*node);
      }
      const int action = select_uct(*node, cfg_.alpha);
      PostNode* post = nullptr;
      for (const auto& p : node->explored)
        if (p->action == action) post = p.get();

      const bool expanding =
          static_cast<int>(post->explored.size()) < cfg_.e_thr &&
          !post->unexplored_outcomes.empty();
      const auto [outcome, weight] = sample_outcome_importance(*post);
      (void)weight;
      if (expanding) {
        PreNode* leaf = attach_outcome(*node, *post, outcome);
        path_.push_back({node, post, &post->explored.back()});
        leaf->add_value_sample(model_.rollout(leaf->state, rng_));
        return leaf;
      }
      Edge* taken = nullptr;
      for (auto& e : post->explored)
        if (e.outcome.id == outcome.id) taken = &e;
      path_.push_back({node, post, taken});
      node = taken->child.get();
    }
    // Terminal leaf: re-evaluate (terminal values are exact and constant).
    node->add_value_sample(model_.rollout(node->state, rng_));
    return node;
  }

  // Walks the recorded path to the root. Post-decision values become the
  // probability-normalized mean over explored children; pre-decision values
  // take an incremental-average update with delta = cost + post value.
  void backup(PreNode* leaf) {
    (void)leaf;
    for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
      PostNode& post = *it->post;
      PreNode& pre = *it->pre;
      post.count += 1;
      it->edge->count += 1;
      double weighted = 0.0;
      for (const auto& e : post.explored)
        weighted += e.outcome.prob * e.child->backed_value();
      post.value = weighted / post.explored_prob();
      pre.visit_count += 1;
      pre.add_value_sample(post.mean_cost + post.value);
    }
  }

  std::string dump() const {
    std::ostringstream os;
    dump_pre(os, *root_, 0);
    return os.str();
  }

 private:
  struct PathStep {
    PreNode* pre;
    PostNode* post;
    Edge* edge;
  };

  std::unique_ptr<PreNode> make_node(State s) {
    auto node = std::make_unique<PreNode>();
    node->terminal = model_.is_terminal(s);
    if (!node->terminal) {
      node->unexplored_actions = model_.actions(s);
      std::sort(node->unexplored_actions.begin(),
                node->unexplored_actions.end());
      if (node->unexplored_actions.empty()) node->terminal = true;
    }
    node->state = std::move(s);
    return node;
  }

  std::unique_ptr<PostNode> make_post(const PreNode& node, int action) {
    auto post = std::make_unique<PostNode>();
    post->action = action;
    post->all_outcomes = model_.outcomes(node.state, action);
    for (const auto& o : post->all_outcomes) {
      post->mean_cost += o.prob * model_.leg_cost(node.state, action, o.id);
      post->unexplored_outcomes.push_back(o.id);
    }
    return post;
  }

  PreNode* attach_outcome(PreNode& node, PostNode& post, const Outcome& o) {
    post.unexplored_outcomes.erase(
        std::remove(post.unexplored_outcomes.begin(),
                    post.unexplored_outcomes.end(), o.id),
        post.unexplored_outcomes.end());
    auto child = make_node(model_.transition(node.state, post.action, o.id));
    post.explored.push_back({o, 0, std::move(child)});
    return post.explored.back().child.get();
  }

  void dump_pre(std::ostringstream& os, const PreNode& node, int depth) const {
    const std::string pad(2 * depth, ' ');
    os << pad << "pre N=" << node.visit_count << " value=" << node.value
       << " best=" << node.backed_value() << (node.terminal ? " terminal" : "")
       << "\n";
    for (const auto& post : node.explored) {
      os << pad << "  action " << post->action << " N=" << post->count
         << " cost=" << post->mean_cost << " value=" << post->value << "\n";
      for (const auto& e : post->explored) {
        os << pad << "    outcome " << e.outcome.id << " p=" << e.outcome.prob
           << "\n";
        dump_pre(os, *e.child, depth + 3);
      }
    }
  }

  const Model& model_;
  MctsConfig cfg_;
  Rng rng_;
  std::unique_ptr<PreNode> root_;
  std::vector<PathStep> path_;
};

}  // namespace stormcrew
