#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tclkit/error.hpp"

namespace tclkit {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }

  std::vector<double> column(std::size_t c) const;

  /// Copy of the selected rows, in the given order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  /// Copy with column `c` removed.
  Matrix drop_column(std::size_t c) const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Covariates X (n x d), binary treatment A and outcome Y.
struct ObservationSet {
  Matrix covariates;
  std::vector<double> treatment;
  std::vector<double> outcome;

  std::size_t size() const noexcept { return treatment.size(); }
  std::size_t dimension() const noexcept { return covariates.cols(); }

  /// Subset (with repetition allowed) in the given row order.
  ObservationSet select_rows(std::span<const std::size_t> indices) const;

  /// Row-wise concatenation; dimensions must agree.
  static ObservationSet concat(const ObservationSet& first, const ObservationSet& second);

  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;
};

struct DomainPair {
  ObservationSet source;
  ObservationSet target;
};

enum class LinkKind { Linear, Sigmoid, Exponential };

std::string_view to_string(LinkKind link) noexcept;
LinkKind parse_link(std::string_view name);

struct PropensityModel {
  LinkKind link = LinkKind::Sigmoid;
  std::vector<double> beta;
};

enum class EstimateMethod { Correlation, OLS, IPW, TCL };

std::string_view to_string(EstimateMethod method) noexcept;
EstimateMethod parse_method(std::string_view name);

struct CausalEstimate {
  double value = 0.0;
  EstimateMethod method = EstimateMethod::IPW;
  std::string domain_label;
};

/// Throws Error (InvalidInput / DimensionMismatch) naming the offending
/// row and column when an ObservationSet invariant fails.
void validate(const ObservationSet& obs);

/// Checks both sets and that they share the covariate dimension.
void validate(const DomainPair& pair);

struct BinarizeResult {
  double threshold = 0.0;
  std::vector<int> indicator;
};

/// Nearest-rank percentile: threshold is the ceil(percentile * n)-th
/// smallest value (1-based); indicator[i] = values[i] > threshold.
BinarizeResult binarize_at_percentile(std::span<const double> values, double percentile);

/// Rows with column value 0 form the source, 1 the target. The splitting
/// column is removed and row order is preserved within each side.
DomainPair split_subgroups(const ObservationSet& obs, std::size_t column);

/// Table-style symbol for a point estimate: "--", "-", "*" or "+".
std::string_view quantize_ace(double tau);

}  // namespace tclkit
