#include "triwad/network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "triwad/error.hpp"

namespace triwad {

namespace {

using Node = std::int64_t;
using Arc = std::int64_t;

constexpr Arc kInvalidArc = -1;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum ArcState : signed char {
  kStateUpper = -1,
  kStateTree = 0,
  kStateLower = 1,
};

// Spanning-tree representation of a basic solution, LEMON-style:
// thread/rev_thread give a preorder traversal, succ_num and last_succ
// track subtree extents so pivots update in amortized sublinear time.
class Core {
public:
  Core(std::span<const double> supplies, std::span<const double> demands,
       std::span<const double> costs, const NetworkSimplex::Options& options)
      : m_(static_cast<Node>(supplies.size())),
        n_(static_cast<Node>(demands.size())),
        node_count_(m_ + n_),
        arc_count_(static_cast<Arc>(m_) * static_cast<Arc>(n_)),
        all_arc_count_(arc_count_ + node_count_),
        eps_small_(options.epsilon_small_factor *
                   std::numeric_limits<double>::epsilon()),
        eps_large_(options.epsilon_large_factor *
                   std::numeric_limits<double>::epsilon()) {
    max_iterations_ = options.max_iterations
                          ? options.max_iterations
                          : 200ull * static_cast<std::uint64_t>(node_count_) +
                                100000ull;

    cost_.assign(costs.begin(), costs.end());
    cost_.resize(all_arc_count_, 0.0);
    flow_.assign(all_arc_count_, 0.0);
    state_.assign(all_arc_count_, kStateLower);
    arc_source_of_art_.assign(node_count_, false);

    const Node root = node_count_;
    supply_.resize(node_count_ + 1);
    pi_.resize(node_count_ + 1);
    parent_.resize(node_count_ + 1);
    pred_.resize(node_count_ + 1);
    thread_.resize(node_count_ + 1);
    rev_thread_.resize(node_count_ + 1);
    succ_num_.resize(node_count_ + 1);
    last_succ_.resize(node_count_ + 1);
    forward_.resize(node_count_ + 1);

    double balance = 0.0;
    for (Node i = 0; i < m_; ++i) {
      supply_[i] = supplies[i];
      balance += supplies[i];
    }
    for (Node j = 0; j < n_; ++j) {
      supply_[m_ + j] = -demands[j];
      balance -= demands[j];
    }
    if (std::abs(balance) > eps_large_ * std::max<double>(1.0, node_count_))
      throw SolverError("transportation problem is imbalanced by " +
                        std::to_string(balance));

    // Artificial cost dominating any reduced cost that can appear.
    double max_cost = 0.0;
    for (Arc a = 0; a < arc_count_; ++a)
      max_cost = std::max(max_cost, cost_[a]);
    const double art_cost = (max_cost + 1.0) * static_cast<double>(node_count_);

    parent_[root] = -1;
    pred_[root] = kInvalidArc;
    thread_[root] = 0;
    rev_thread_[0] = root;
    succ_num_[root] = node_count_ + 1;
    last_succ_[root] = root - 1;
    supply_[root] = -balance;
    pi_[root] = 0.0;

    // Initial tree: every node hangs off the root through its
    // artificial arc, oriented by supply sign.
    for (Node u = 0, e = arc_count_; u < node_count_; ++u, ++e) {
      parent_[u] = root;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kStateTree;
      if (supply_[u] >= 0.0) {
        forward_[u] = true;
        pi_[u] = 0.0;
        flow_[e] = supply_[u];
        cost_[e] = 0.0;
        arc_source_of_art_[e - arc_count_] = false;  // u -> root
      } else {
        forward_[u] = false;
        pi_[u] = art_cost;
        flow_[e] = -supply_[u];
        cost_[e] = art_cost;
        arc_source_of_art_[e - arc_count_] = true;  // root -> u
      }
    }

    block_size_ = std::max<Arc>(
        static_cast<Arc>(std::sqrt(static_cast<double>(arc_count_))), 10);
    next_arc_ = 0;
  }

  NetworkSimplex::Solution run() {
    iterations_ = 0;
    while (find_entering_arc()) {
      if (++iterations_ > max_iterations_)
        throw SolverError("network simplex exceeded " +
                          std::to_string(max_iterations_) +
                          " pivots (m=" + std::to_string(m_) +
                          ", n=" + std::to_string(n_) + ")");
      find_join_node();
      bool change = find_leaving_arc();
      if (delta_ >= kInf) throw SolverError("unbounded transportation problem");
      change_flow(change);
      if (change) {
        update_tree();
        update_potentials();
      }
    }

    // Artificial arcs must end up empty; tiny residue is rounding.
    for (Arc e = arc_count_; e < all_arc_count_; ++e) {
      if (flow_[e] != 0.0) {
        if (std::abs(flow_[e]) > eps_large_)
          throw SolverError("infeasible basis: artificial flow " +
                            std::to_string(flow_[e]));
        flow_[e] = 0.0;
      }
    }

    // Degenerate basic arcs can carry pivot-arithmetic dust; snap it.
    for (Arc a = 0; a < arc_count_; ++a)
      if (std::abs(flow_[a]) <= eps_large_) flow_[a] = 0.0;

    NetworkSimplex::Solution out;
    out.flow.assign(flow_.begin(), flow_.begin() + arc_count_);
    out.pi_source.resize(m_);
    out.pi_target.resize(n_);
    for (Node i = 0; i < m_; ++i) out.pi_source[i] = pi_[i];
    for (Node j = 0; j < n_; ++j) out.pi_target[j] = pi_[m_ + j];
    double total = 0.0;
    for (Arc a = 0; a < arc_count_; ++a) total += flow_[a] * cost_[a];
    out.cost = total;
    out.iterations = iterations_;
    return out;
  }

private:
  Node arc_source(Arc a) const {
    if (a < arc_count_) return a / n_;
    return arc_source_of_art_[a - arc_count_] ? node_count_ : a - arc_count_;
  }
  Node arc_target(Arc a) const {
    if (a < arc_count_) return m_ + a % n_;
    return arc_source_of_art_[a - arc_count_] ? a - arc_count_ : node_count_;
  }

  double reduced_cost(Arc a) const {
    return cost_[a] + pi_[arc_source(a)] - pi_[arc_target(a)];
  }

  // Block search over bipartite arcs. The accept threshold scales with
  // the magnitudes entering the reduced cost so optimality is decided
  // relative to the data, not absolutely.
  bool find_entering_arc() {
    double best = 0.0;
    Arc best_arc = kInvalidArc;
    Arc e = next_arc_;
    Arc remaining = arc_count_;
    Arc count = block_size_;
    for (; remaining > 0; --remaining, ++e) {
      if (e == arc_count_) e = 0;
      const double c = state_[e] * reduced_cost(e);
      if (c < best) {
        best = c;
        best_arc = e;
      }
      if (--count == 0) {
        if (accepts(best, best_arc)) {
          in_arc_ = best_arc;
          next_arc_ = e + 1 == arc_count_ ? 0 : e + 1;
          return true;
        }
        count = block_size_;
      }
    }
    if (accepts(best, best_arc)) {
      in_arc_ = best_arc;
      next_arc_ = e == arc_count_ ? 0 : e;
      return true;
    }
    return false;
  }

  bool accepts(double best, Arc best_arc) const {
    if (best_arc == kInvalidArc) return false;
    double scale = std::max({std::abs(pi_[arc_source(best_arc)]),
                             std::abs(pi_[arc_target(best_arc)]),
                             std::abs(cost_[best_arc]), 1.0});
    return best < -eps_small_ * scale;
  }

  void find_join_node() {
    Node u = arc_source(in_arc_);
    Node v = arc_target(in_arc_);
    while (u != v) {
      if (succ_num_[u] < succ_num_[v])
        u = parent_[u];
      else
        v = parent_[v];
    }
    join_ = u;
  }

  // Walks both tree paths of the pivot cycle; arcs are uncapacitated so
  // only arcs pointing against the cycle limit the step.
  bool find_leaving_arc() {
    Node first, second;
    if (state_[in_arc_] == kStateLower) {
      first = arc_source(in_arc_);
      second = arc_target(in_arc_);
    } else {
      first = arc_target(in_arc_);
      second = arc_source(in_arc_);
    }
    delta_ = kInf;
    char result = 0;
    for (Node u = first; u != join_; u = parent_[u]) {
      const double d = forward_[u] ? flow_[pred_[u]] : kInf;
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (Node u = second; u != join_; u = parent_[u]) {
      const double d = forward_[u] ? kInf : flow_[pred_[u]];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
    return result != 0;
  }

  void change_flow(bool change) {
    if (delta_ > 0.0) {
      const double val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (Node u = arc_source(in_arc_); u != join_; u = parent_[u])
        flow_[pred_[u]] += forward_[u] ? -val : val;
      for (Node u = arc_target(in_arc_); u != join_; u = parent_[u])
        flow_[pred_[u]] += forward_[u] ? val : -val;
    }
    if (change) {
      state_[in_arc_] = kStateTree;
      // Uncapacitated arcs always leave at their lower bound; force the
      // exact zero the augmentation arithmetic may have missed.
      flow_[pred_[u_out_]] = 0.0;
      state_[pred_[u_out_]] = kStateLower;
    } else {
      state_[in_arc_] = static_cast<ArcState>(-state_[in_arc_]);
    }
  }

  void update_tree() {
    Node u = last_succ_[u_in_];
    const Node old_rev_thread = rev_thread_[u_out_];
    const Node old_succ_num = succ_num_[u_out_];
    const Node old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];
    Node right = thread_[u];
    Node last =
        old_rev_thread == v_in_ ? thread_[last_succ_[u_out_]] : thread_[v_in_];

    thread_[v_in_] = u_in_;
    dirty_revs_.clear();
    dirty_revs_.push_back(v_in_);
    Node stem = u_in_;
    Node par_stem = v_in_;
    while (stem != u_out_) {
      const Node new_stem = parent_[stem];
      thread_[u] = new_stem;
      dirty_revs_.push_back(u);

      const Node w = rev_thread_[stem];
      thread_[w] = right;
      rev_thread_[right] = w;

      parent_[stem] = par_stem;
      par_stem = stem;
      stem = new_stem;

      u = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem]
                                                   : last_succ_[stem];
      right = thread_[u];
    }
    parent_[u_out_] = par_stem;
    thread_[u] = last;
    rev_thread_[last] = u;
    last_succ_[u_out_] = u;

    if (old_rev_thread != v_in_) {
      thread_[old_rev_thread] = right;
      rev_thread_[right] = old_rev_thread;
    }
    for (Node d : dirty_revs_) rev_thread_[thread_[d]] = d;

    Node tmp_sc = 0;
    Node tmp_ls = last_succ_[u_out_];
    u = u_out_;
    while (u != u_in_) {
      const Node w = parent_[u];
      pred_[u] = pred_[w];
      forward_[u] = !forward_[w];
      tmp_sc += succ_num_[u] - succ_num_[w];
      succ_num_[u] = tmp_sc;
      last_succ_[w] = tmp_ls;
      u = w;
    }
    pred_[u_in_] = in_arc_;
    forward_[u_in_] = u_in_ == arc_source(in_arc_);
    succ_num_[u_in_] = old_succ_num;

    Node up_limit_in = -1;
    Node up_limit_out = -1;
    if (last_succ_[join_] == v_in_)
      up_limit_out = join_;
    else
      up_limit_in = join_;

    for (u = v_in_; u != up_limit_in && last_succ_[u] == v_in_; u = parent_[u])
      last_succ_[u] = last_succ_[u_out_];

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
           u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else {
      for (u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ;
           u = parent_[u])
        last_succ_[u] = last_succ_[u_out_];
    }

    for (u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potentials() {
    const double sigma = forward_[u_in_]
                             ? pi_[v_in_] - pi_[u_in_] - cost_[pred_[u_in_]]
                             : pi_[v_in_] - pi_[u_in_] + cost_[pred_[u_in_]];
    const Node end = thread_[last_succ_[u_in_]];
    for (Node u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  Node m_, n_, node_count_;
  Arc arc_count_, all_arc_count_;
  double eps_small_, eps_large_;
  std::uint64_t max_iterations_, iterations_ = 0;

  std::vector<double> cost_, flow_, supply_, pi_;
  std::vector<signed char> state_;
  std::vector<Node> parent_, thread_, rev_thread_, succ_num_, last_succ_;
  std::vector<Node> dirty_revs_;
  std::vector<Arc> pred_;
  std::vector<bool> forward_;
  // True when the artificial arc for node u runs root -> u.
  std::vector<bool> arc_source_of_art_;

  Arc next_arc_ = 0, in_arc_ = kInvalidArc;
  Arc block_size_ = 0;
  Node join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
  double delta_ = 0.0;
};

}  // namespace

NetworkSimplex::Solution NetworkSimplex::solve(
    std::span<const double> supplies, std::span<const double> demands,
    std::span<const double> costs, const Options& options) {
  if (supplies.empty() || demands.empty())
    throw SolverError("empty transportation problem");
  if (costs.size() != supplies.size() * demands.size())
    throw SolverError("cost matrix size mismatch");
  Core core(supplies, demands, costs, options);
  return core.run();
}

}  // namespace triwad
