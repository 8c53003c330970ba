#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "wmmd/error.hpp"

namespace wmmd {

/// Primal network simplex on the complete bipartite graph n sources -> m sinks with
/// uncapacitated arcs (the transportation problem). Spanning-tree bookkeeping
/// (parent / thread / succ_num / last_succ) and the block-search pivot follow LEMON.
///
/// Arc a goes from source a / m to sink n + a % m. Arcs n*m .. n*m+n+m-1 are the
/// artificial arcs to the root node n + m.
class NetworkSimplex {
 public:
  using Node = std::int64_t;
  using Arc = std::int64_t;

  enum class Status { Optimal, Infeasible, IterationLimit };

  /// cost is row-major n x m; supply and demand each sum to the same total.
  NetworkSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : n_(static_cast<Node>(supply.size())), m_(static_cast<Node>(demand.size())) {
    require(n_ >= 1 && m_ >= 1, Errc::EmptyInput, "transport problem needs sources and sinks");
    require(static_cast<Arc>(cost.size()) == n_ * m_, Errc::DimensionMismatch, "cost matrix has the wrong size");
    node_num_ = n_ + m_;
    arc_num_ = n_ * m_;
    const Node all_nodes = node_num_ + 1;
    const Arc all_arcs = arc_num_ + node_num_;
    cost_ = std::move(cost);
    cost_.resize(static_cast<std::size_t>(all_arcs), 0.0);
    supply_.assign(static_cast<std::size_t>(all_nodes), 0.0);
    for (Node i = 0; i < n_; ++i) supply_[i] = supply[static_cast<std::size_t>(i)];
    for (Node j = 0; j < m_; ++j) supply_[n_ + j] = -demand[static_cast<std::size_t>(j)];
    flow_.assign(static_cast<std::size_t>(all_arcs), 0.0);
    state_.assign(static_cast<std::size_t>(all_arcs), kLower);
    art_source_.assign(static_cast<std::size_t>(node_num_), 0);
    art_target_.assign(static_cast<std::size_t>(node_num_), 0);
    pi_.assign(static_cast<std::size_t>(all_nodes), 0.0);
    parent_.assign(static_cast<std::size_t>(all_nodes), 0);
    pred_.assign(static_cast<std::size_t>(all_nodes), 0);
    thread_.assign(static_cast<std::size_t>(all_nodes), 0);
    rev_thread_.assign(static_cast<std::size_t>(all_nodes), 0);
    succ_num_.assign(static_cast<std::size_t>(all_nodes), 0);
    last_succ_.assign(static_cast<std::size_t>(all_nodes), 0);
    forward_.assign(static_cast<std::size_t>(all_nodes), 0);
  }

  void set_tolerance(double eps) { eps_ = eps; }
  void set_iteration_limit(std::uint64_t limit) { max_iter_ = limit; }

  Status run() {
    double total = 0.0;
    for (Node u = 0; u < node_num_; ++u) total += supply_[u];
    double scale = 0.0;
    for (Node u = 0; u < n_; ++u) scale += supply_[u];
    if (std::abs(total) > 1e-9 * std::max(1.0, scale)) return Status::Infeasible;
    // absorb the rounding mismatch into the last sink
    supply_[node_num_ - 1] -= total;

    double max_cost = 0.0;
    for (Arc a = 0; a < arc_num_; ++a) max_cost = std::max(max_cost, std::abs(cost_[a]));
    const double art_cost = (max_cost + 1.0) * static_cast<double>(node_num_);

    const Node root = node_num_;
    parent_[root] = -1;
    pred_[root] = -1;
    thread_[root] = 0;
    rev_thread_[0] = root;
    succ_num_[root] = node_num_ + 1;
    last_succ_[root] = root - 1;
    supply_[root] = 0.0;
    pi_[root] = 0.0;

    Arc e = arc_num_;
    for (Node u = 0; u < node_num_; ++u, ++e) {
      parent_[u] = root;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kTree;
      if (supply_[u] >= 0.0) {
        forward_[u] = 1;
        pi_[u] = 0.0;
        art_source_[u] = u;
        art_target_[u] = root;
        flow_[e] = supply_[u];
        cost_[e] = 0.0;
      } else {
        forward_[u] = 0;
        pi_[u] = art_cost;
        art_source_[u] = root;
        art_target_[u] = u;
        flow_[e] = -supply_[u];
        cost_[e] = art_cost;
      }
    }

    next_arc_ = 0;
    block_size_ = std::max<Arc>(static_cast<Arc>(std::sqrt(static_cast<double>(arc_num_))), 10);

    initial_pivots();
    iterations_ = 0;
    while (find_entering_arc()) {
      if (++iterations_ > max_iter_) return Status::IterationLimit;
      pivot();
    }
    for (Arc a = arc_num_; a < arc_num_ + node_num_; ++a) {
      if (flow_[a] > 1e-9 * std::max(1.0, scale)) return Status::Infeasible;
      flow_[a] = 0.0;
    }
    return Status::Optimal;
  }

  double flow(Node i, Node j) const { return flow_[i * m_ + j]; }
  const std::vector<double>& flows() const { return flow_; }
  std::uint64_t iterations() const { return iterations_; }

  double total_cost() const {
    double c = 0.0;
    for (Arc a = 0; a < arc_num_; ++a)
      if (flow_[a] != 0.0) c += flow_[a] * cost_[a];
    return c;
  }

 private:
  static constexpr signed char kUpper = -1, kTree = 0, kLower = 1;

  Node source(Arc a) const { return a < arc_num_ ? a / m_ : art_source_[a - arc_num_]; }
  Node target(Arc a) const { return a < arc_num_ ? n_ + a % m_ : art_target_[a - arc_num_]; }

  double reduced(Arc a) const { return state_[a] * (cost_[a] + pi_[source(a)] - pi_[target(a)]); }

  bool significant(double min, Arc a) const {
    double scale = std::max({std::abs(pi_[source(a)]), std::abs(pi_[target(a)]), std::abs(cost_[a])});
    return min < -eps_ * scale;
  }

  bool find_entering_arc() {
    double min = 0.0;
    Arc e = next_arc_;
    Arc cnt = block_size_;
    for (Arc ind = 0; ind < arc_num_; ++ind, ++e) {
      if (e == arc_num_) e = 0;
      const double c = reduced(e);
      if (c < min) {
        min = c;
        in_arc_ = e;
      }
      if (--cnt == 0) {
        if (min < 0.0 && significant(min, in_arc_)) {
          next_arc_ = e;
          return true;
        }
        cnt = block_size_;
      }
    }
    if (min < 0.0 && significant(min, in_arc_)) {
      next_arc_ = e;
      return true;
    }
    return false;
  }

  // cheapest incoming arc for each sink, a standard warm start
  void initial_pivots() {
    for (Node v = n_; v < node_num_; ++v) {
      double best = std::numeric_limits<double>::infinity();
      Arc best_arc = -1;
      for (Node i = 0; i < n_; ++i) {
        const Arc a = i * m_ + (v - n_);
        if (cost_[a] < best) {
          best = cost_[a];
          best_arc = a;
        }
      }
      in_arc_ = best_arc;
      if (reduced(in_arc_) >= 0.0) continue;
      pivot();
    }
  }

  void pivot() {
    find_join_node();
    const bool change = find_leaving_arc();
    change_flow(change);
    if (change) {
      update_tree();
      update_potential();
    }
  }

  void find_join_node() {
    Node u = source(in_arc_), v = target(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    join_ = u;
  }

  bool find_leaving_arc() {
    if (state_[in_arc_] == kLower) {
      first_ = source(in_arc_);
      second_ = target(in_arc_);
    } else {
      first_ = target(in_arc_);
      second_ = source(in_arc_);
    }
    const double inf = std::numeric_limits<double>::infinity();
    delta_ = inf;
    int result = 0;
    for (Node u = first_; u != join_; u = parent_[u]) {
      const double d = forward_[u] ? flow_[pred_[u]] : inf;
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (Node u = second_; u != join_; u = parent_[u]) {
      const double d = forward_[u] ? inf : flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    require(result != 0, Errc::SolverFailure, "unbounded pivot in an uncapacitated transport problem");
    if (result == 1) {
      u_in_ = first_;
      v_in_ = second_;
    } else {
      u_in_ = second_;
      v_in_ = first_;
    }
    return true;
  }

  void change_flow(bool change) {
    if (delta_ > 0.0) {
      const double val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (Node u = source(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] += forward_[u] ? -val : val;
      for (Node u = target(in_arc_); u != join_; u = parent_[u]) flow_[pred_[u]] += forward_[u] ? val : -val;
    }
    if (change) {
      state_[in_arc_] = kTree;
      // without capacities the leaving arc always drops to its lower bound
      state_[pred_[u_out_]] = kLower;
      flow_[pred_[u_out_]] = 0.0;
    } else {
      state_[in_arc_] = static_cast<signed char>(-state_[in_arc_]);
    }
  }

  void update_tree() {
    Node w, u = last_succ_[u_in_];
    const Node old_rev_thread = rev_thread_[u_out_];
    const Node old_succ_num = succ_num_[u_out_];
    const Node old_last_succ = last_succ_[u_out_];
    const Node v_out = parent_[u_out_];
    Node right = thread_[u];
    Node last;
    if (old_rev_thread == v_in_)
      last = thread_[last_succ_[u_out_]];
    else
      last = thread_[v_in_];

    Node stem = u_in_;
    thread_[v_in_] = stem;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    Node par_stem = v_in_;
    while (stem != u_out_) {
      const Node new_stem = parent_[stem];
      thread_[u] = new_stem;
      dirty_revs_.push_back(u);
      w = rev_thread_[stem];
      thread_[w] = right;
      rev_thread_[right] = w;
      parent_[stem] = par_stem;
      par_stem = stem;
      stem = new_stem;
      u = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
      right = thread_[u];
    }
    parent_[u_out_] = par_stem;
    thread_[u] = last;
    rev_thread_[last] = last_succ_[u_out_] = u;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = right;
      rev_thread_[right] = old_rev_thread;
    }
    for (Node x : dirty_revs_) rev_thread_[thread_[x]] = x;

    Node tmp_sc = 0, tmp_ls = last_succ_[u_out_];
    u = u_out_;
    while (u != u_in_) {
      w = parent_[u];
      pred_[u] = pred_[w];
      forward_[u] = !forward_[w];
      tmp_sc += succ_num_[u] - succ_num_[w];
      succ_num_[u] = tmp_sc;
      last_succ_[w] = tmp_ls;
      u = w;
    }
    pred_[u_in_] = in_arc_;
    forward_[u_in_] = (u_in_ == source(in_arc_));
    succ_num_[u_in_] = old_succ_num;

    Node up_limit_in = -1, up_limit_out = -1;
    if (last_succ_[join_] == v_in_)
      up_limit_out = join_;
    else
      up_limit_in = join_;

    for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_[u_out_];

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u]) last_succ_[u] = old_rev_thread;
    } else {
      for (u = v_out; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_[u_out_];
    }

    for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (u = v_out; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = forward_[u_in_] ? pi_[v_in_] - pi_[u_in_] - cost_[pred_[u_in_]]
                                         : pi_[v_in_] - pi_[u_in_] + cost_[pred_[u_in_]];
    const Node end = thread_[last_succ_[u_in_]];
    for (Node u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  Node n_, m_, node_num_;
  Arc arc_num_;
  std::vector<double> cost_, supply_, flow_, pi_;
  std::vector<signed char> state_, forward_;
  std::vector<Node> art_source_, art_target_, parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, dirty_revs_;
  double eps_ = 1e-14;
  std::uint64_t max_iter_ = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t iterations_ = 0;
  Arc next_arc_ = 0, block_size_ = 10, in_arc_ = 0;
  Node join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, first_ = 0, second_ = 0;
  double delta_ = 0.0;
};

}  // namespace wmmd
