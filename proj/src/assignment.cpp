#include "mvtrack/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace mvtrack::assignment {
namespace {

// Lexicographic cost: the number of padded or infeasible cells used, then the
// real cost, with componentwise addition.
struct Lex {
  std::int64_t miss = 0;
  double cost = 0.0;

  friend Lex operator+(Lex a, Lex b) { return {a.miss + b.miss, a.cost + b.cost}; }
  friend Lex operator-(Lex a, Lex b) { return {a.miss - b.miss, a.cost - b.cost}; }
  Lex& operator+=(Lex o) { return *this = *this + o; }
  Lex& operator-=(Lex o) { return *this = *this - o; }
  friend bool operator<(Lex a, Lex b) { return a.miss != b.miss ? a.miss < b.miss : a.cost < b.cost; }
};

constexpr Lex kLexInf{std::numeric_limits<std::int64_t>::max() / 4, 0.0};

// Square Hungarian method (potentials + augmenting paths). Returns, for each
// row, the column assigned to it.
std::vector<std::size_t> hungarian_square(const std::vector<Lex>& a, std::size_t n) {
  std::vector<Lex> u(n + 1), v(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<Lex> minv(n + 1, kLexInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      Lex delta = kLexInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Lex cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

struct SubSolution {
  // Indexed by position in `rows`; original column index or kUnmatched.
  std::vector<std::size_t> cols;
  std::size_t matched = 0;
  double cost = 0.0;
};

SubSolution solve_subproblem(const CostMatrix& c, const std::vector<std::size_t>& rows,
                             const std::vector<std::size_t>& cols) {
  SubSolution out;
  out.cols.assign(rows.size(), kUnmatched);
  const std::size_t n = std::max(rows.size(), cols.size());
  if (n == 0 || rows.empty() || cols.empty()) return out;
  std::vector<Lex> a(n * n, Lex{1, 0.0});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      if (c.feasible(rows[i], cols[j])) a[i * n + j] = Lex{0, c.cost(rows[i], cols[j])};
  const auto r2c = hungarian_square(a, n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t j = r2c[i];
    if (j < cols.size() && c.feasible(rows[i], cols[j])) {
      out.cols[i] = cols[j];
      ++out.matched;
      out.cost += c.cost(rows[i], cols[j]);
    }
  }
  return out;
}

bool same_value(std::size_t matched_a, double cost_a, std::size_t matched_b, double cost_b) {
  return matched_a == matched_b &&
         std::abs(cost_a - cost_b) <= 1e-9 * std::max({1.0, std::abs(cost_a), std::abs(cost_b)});
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), costs_(rows * cols, 0.0), feasible_(rows * cols, 0) {}

CostMatrix CostMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n_cols = rows.empty() ? 0 : rows.front().size();
  CostMatrix m(rows.size(), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols) throw std::invalid_argument("ragged cost matrix");
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (rows[r][c] == std::numeric_limits<double>::infinity())
        m.set(r, c, kInfeasible);
      else
        m.set(r, c, rows[r][c]);
    }
  }
  return m;
}

std::optional<double> CostMatrix::at(std::size_t r, std::size_t c) const {
  if (!feasible(r, c)) return std::nullopt;
  return cost(r, c);
}

void CostMatrix::set(std::size_t r, std::size_t c, double cost) {
  if (!std::isfinite(cost) || cost < 0.0) throw std::invalid_argument("cost must be finite and non-negative");
  costs_[r * cols_ + c] = cost;
  feasible_[r * cols_ + c] = 1;
}

void CostMatrix::set(std::size_t r, std::size_t c, Infeasible) {
  costs_[r * cols_ + c] = 0.0;
  feasible_[r * cols_ + c] = 0;
}

Assignment solve(const CostMatrix& c) {
  std::vector<std::size_t> rows(c.rows()), cols(c.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = j;

  SubSolution current = solve_subproblem(c, rows, cols);
  std::size_t target_matched = current.matched;
  double target_cost = current.cost;

  // Rows in order, each on the smallest column that still admits an optimum
  // for the remaining rows.
  std::vector<std::size_t> chosen(c.rows(), kUnmatched);
  std::vector<std::size_t> avail = cols;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    const std::size_t assigned = current.cols.front();
    std::vector<std::size_t> rest(rows.begin() + static_cast<std::ptrdiff_t>(r) + 1, rows.end());
    std::size_t pick = assigned;
    for (std::size_t col : avail) {
      if (col >= assigned) break;
      if (!c.feasible(r, col)) continue;
      std::vector<std::size_t> rest_cols;
      rest_cols.reserve(avail.size());
      for (std::size_t k : avail)
        if (k != col) rest_cols.push_back(k);
      const SubSolution sub = solve_subproblem(c, rest, rest_cols);
      if (same_value(sub.matched + 1, sub.cost + c.cost(r, col), target_matched, target_cost)) {
        pick = col;
        current = sub;
        current.cols.insert(current.cols.begin(), col);
        break;
      }
    }
    chosen[r] = pick;
    current.cols.erase(current.cols.begin());
    if (pick != kUnmatched) {
      target_matched -= 1;
      target_cost -= c.cost(r, pick);
      avail.erase(std::find(avail.begin(), avail.end(), pick));
    }
  }

  Assignment out;
  std::vector<char> col_used(c.cols(), 0);
  for (std::size_t r = 0; r < c.rows(); ++r) {
    if (chosen[r] == kUnmatched) {
      out.unmatched_rows.push_back(r);
    } else {
      out.pairs.emplace_back(r, chosen[r]);
      out.total_cost += c.cost(r, chosen[r]);
      col_used[chosen[r]] = 1;
    }
  }
  for (std::size_t j = 0; j < c.cols(); ++j)
    if (!col_used[j]) out.unmatched_cols.push_back(j);
  return out;
}

CostMatrix gate_costs(const CostMatrix& c, double gate) {
  if (!(gate > 0.0)) throw std::invalid_argument("gate must be positive");
  CostMatrix out = c;
  for (std::size_t r = 0; r < c.rows(); ++r)
    for (std::size_t j = 0; j < c.cols(); ++j)
      if (c.feasible(r, j) && c.cost(r, j) > gate) out.set(r, j, kInfeasible);
  return out;
}

}  // namespace mvtrack::assignment
