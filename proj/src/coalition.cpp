// Coalition matrix: psi_ij = probability that proposer i buys agent j's vote.
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "bargaining/solver.hpp"

namespace bargaining {
namespace {

constexpr double kRowZero = 1e-14;   // proposers this unlikely do not move column marginals
constexpr double kFillTol = 1e-12;
constexpr int kIpfSweeps = 4000;

// Solves sum_j c_j min(1, t w_j) = target for t >= 0 and applies it in place.
// Entries with w_j = 0 stay at zero.
void capped_scale(std::vector<double*>& cells, const std::vector<double>& coef, double target) {
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    if (*cells[j] > 0.0 && coef[j] > 0.0) order.push_back(j);
  }
  if (order.empty()) return;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return *cells[a] > *cells[b]; });

  double saturated = 0.0;
  double free_mass = 0.0;
  for (auto j : order) free_mass += coef[j] * *cells[j];
  std::size_t m = 0;
  double t = 0.0;
  for (; m < order.size(); ++m) {
    t = (target - saturated) / free_mass;
    if (t * *cells[order[m]] <= 1.0) break;
    saturated += coef[order[m]];
    free_mass -= coef[order[m]] * *cells[order[m]];
  }
  for (std::size_t q = 0; q < order.size(); ++q) {
    double& cell = *cells[order[q]];
    cell = q < m ? 1.0 : std::min(1.0, std::max(0.0, t) * cell);
  }
}

// Dinic on a small dense graph with real capacities.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : adj_(nodes), level_(nodes), it_(nodes) {}

  int add_edge(int from, int to, double cap) {
    adj_[from].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, cap});
    adj_[to].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0.0});
    return static_cast<int>(edges_.size()) - 2;
  }

  double flow_on(int edge) const { return edges_[edge ^ 1].cap; }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(it_.begin(), it_.end(), 0);
      for (double pushed; (pushed = dfs(s, t, std::numeric_limits<double>::infinity())) > kEps;) {
        total += pushed;
      }
    }
    return total;
  }

 private:
  static constexpr double kEps = 1e-15;
  struct Edge {
    int to;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int e : adj_[u]) {
        if (edges_[e].cap > kEps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int u, int t, double limit) {
    if (u == t) return limit;
    for (int& i = it_[u]; i < static_cast<int>(adj_[u].size()); ++i) {
      Edge& e = edges_[adj_[u][i]];
      if (e.cap <= kEps || level_[e.to] != level_[u] + 1) continue;
      const double got = dfs(e.to, t, std::min(limit, e.cap));
      if (got > kEps) {
        e.cap -= got;
        edges_[adj_[u][i] ^ 1].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Edge> edges_;
  std::vector<int> level_;
  std::vector<int> it_;
};

struct Block {
  std::vector<std::size_t> rows;  // proposers with p_i > kRowZero
  std::vector<std::size_t> cols;  // N2 agents
  std::vector<double> need;       // N2 slots per row
};

double column_gap(const std::vector<std::vector<double>>& psi, const Block& b,
                  std::span<const double> p, std::span<const double> mu) {
  double gap = 0.0;
  for (auto j : b.cols) {
    double mass = 0.0;
    for (auto i : b.rows) mass += p[i] * psi[i][j];
    gap = std::max(gap, std::abs(mass - mu[j]));
  }
  return gap;
}

bool fill_ipf(std::vector<std::vector<double>>& psi, const Block& b, std::span<const double> p,
              std::span<const double> mu) {
  for (std::size_t r = 0; r < b.rows.size(); ++r) {
    const auto i = b.rows[r];
    int slots = 0;
    for (auto j : b.cols) slots += j != i;
    for (auto j : b.cols) {
      if (j != i && slots > 0) psi[i][j] = b.need[r] / slots;
    }
  }
  for (int sweep = 0; sweep < kIpfSweeps; ++sweep) {
    for (auto j : b.cols) {
      std::vector<double*> cells;
      std::vector<double> coef;
      for (auto i : b.rows) {
        if (i == j) continue;
        cells.push_back(&psi[i][j]);
        coef.push_back(p[i]);
      }
      if (mu[j] <= 0.0) {
        for (double* c : cells) *c = 0.0;
      } else {
        capped_scale(cells, coef, mu[j]);
      }
    }
    double row_gap = 0.0;
    for (std::size_t r = 0; r < b.rows.size(); ++r) {
      const auto i = b.rows[r];
      std::vector<double*> cells;
      for (auto j : b.cols) {
        if (j != i) cells.push_back(&psi[i][j]);
      }
      double sum = 0.0;
      for (double* c : cells) sum += *c;
      row_gap = std::max(row_gap, std::abs(sum - b.need[r]));
      capped_scale(cells, std::vector<double>(cells.size(), 1.0), b.need[r]);
    }
    if (row_gap <= kFillTol && column_gap(psi, b, p, mu) <= kFillTol) return true;
  }
  return false;
}

void fill_flow(std::vector<std::vector<double>>& psi, const Block& b, std::span<const double> p,
               std::span<const double> mu) {
  const int nr = static_cast<int>(b.rows.size());
  const int nc = static_cast<int>(b.cols.size());
  const int source = nr + nc;
  const int sink = source + 1;
  MaxFlow g(nr + nc + 2);
  double supply = 0.0;
  for (int r = 0; r < nr; ++r) {
    g.add_edge(source, r, b.need[r] * p[b.rows[r]]);
    supply += b.need[r] * p[b.rows[r]];
  }
  std::vector<std::vector<int>> edge(nr, std::vector<int>(nc, -1));
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      if (b.rows[r] != b.cols[c]) edge[r][c] = g.add_edge(r, nr + c, p[b.rows[r]]);
    }
  }
  for (int c = 0; c < nc; ++c) g.add_edge(nr + c, sink, std::max(0.0, mu[b.cols[c]]));
  const double flow = g.run(source, sink);
  if (flow < supply - 1e-10) {
    throw Error(ErrorKind::Fill, "coalition marginals infeasible: routed " + std::to_string(flow) +
                                     " of " + std::to_string(supply));
  }
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) {
      if (edge[r][c] >= 0) {
        psi[b.rows[r]][b.cols[c]] = std::clamp(g.flow_on(edge[r][c]) / p[b.rows[r]], 0.0, 1.0);
      }
    }
  }
}

}  // namespace

std::vector<std::vector<double>> coalition_fill(std::span<const double> p, std::span<const double> mu,
                                                std::span<const Partition> partition, int k,
                                                const SolverConfig& cfg) {
  (void)cfg;
  const std::size_t n = p.size();
  if (mu.size() != n || partition.size() != n) {
    throw Error(ErrorKind::Domain, "coalition_fill: profile sizes differ");
  }
  std::vector<std::vector<double>> psi(n, std::vector<double>(n, 0.0));
  if (k <= 1) return psi;

  Block block;
  std::vector<std::size_t> idle;  // rows with negligible recognition probability
  std::vector<double> idle_need;
  for (std::size_t j = 0; j < n; ++j) {
    if (partition[j] == Partition::Marginal) block.cols.push_back(j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    int cheap_others = 0;
    int marginal_others = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (partition[j] == Partition::Cheap) {
        psi[i][j] = 1.0;
        ++cheap_others;
      }
      marginal_others += partition[j] == Partition::Marginal;
    }
    const int need = k - 1 - cheap_others;
    if (need < 0 || need > marginal_others) {
      throw Error(ErrorKind::Fill, "proposer " + std::to_string(i + 1) + " cannot form a coalition of size " +
                                       std::to_string(k - 1));
    }
    if (p[i] > kRowZero) {
      block.rows.push_back(i);
      block.need.push_back(need);
    } else {
      idle.push_back(i);
      idle_need.push_back(need);
    }
  }

  if (!block.cols.empty() && !block.rows.empty() && !fill_ipf(psi, block, p, mu)) {
    for (auto i : block.rows) {
      for (auto j : block.cols) psi[i][j] = 0.0;
    }
    fill_flow(psi, block, p, mu);
  }

  // Unlikely proposers: take the N2 agents with the most slack, which leaves the
  // marginals untouched to within p_i.
  for (std::size_t r = 0; r < idle.size(); ++r) {
    const auto i = idle[r];
    std::vector<std::size_t> pick;
    for (auto j : block.cols) {
      if (j != i) pick.push_back(j);
    }
    std::stable_sort(pick.begin(), pick.end(), [&](auto a, auto b) { return mu[a] > mu[b]; });
    for (int s = 0; s < static_cast<int>(idle_need[r]); ++s) psi[i][pick[s]] = 1.0;
  }
  return psi;
}

}  // namespace bargaining
