#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace mvtrack::assignment {

/// Marker for a forbidden row/column pairing.
struct Infeasible {};
inline constexpr Infeasible kInfeasible{};

/// Dense rows x cols matrix of non-negative costs, where any entry may instead
/// be INFEASIBLE. Infeasibility is tracked separately from the values, so no
/// large-float stand-in ever leaks into a total.
class CostMatrix {
 public:
  CostMatrix() = default;
  /// All entries start INFEASIBLE.
  CostMatrix(std::size_t rows, std::size_t cols);

  /// Builds from nested rows; +infinity entries become INFEASIBLE.
  static CostMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool feasible(std::size_t r, std::size_t c) const { return feasible_[r * cols_ + c] != 0; }
  /// nullopt when INFEASIBLE.
  std::optional<double> at(std::size_t r, std::size_t c) const;
  /// Value of a feasible entry (unchecked).
  double cost(std::size_t r, std::size_t c) const { return costs_[r * cols_ + c]; }

  /// Throws std::invalid_argument for negative or non-finite costs.
  void set(std::size_t r, std::size_t c, double cost);
  void set(std::size_t r, std::size_t c, Infeasible);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> costs_;
  std::vector<unsigned char> feasible_;
};

struct Assignment {
  /// (row, col) pairs sorted by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<std::size_t> unmatched_rows;
  std::vector<std::size_t> unmatched_cols;
  double total_cost = 0.0;
};

/// Minimum-cost matching of maximum cardinality among feasible entries.
/// Among equal-cost optima, returns the one whose row-ordered column sequence
/// is lexicographically smallest (an unmatched row sorts after every column).
Assignment solve(const CostMatrix& c);

/// Entries strictly greater than `gate` become INFEASIBLE.
CostMatrix gate_costs(const CostMatrix& c, double gate);

}  // namespace mvtrack::assignment
