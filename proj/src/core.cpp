#include "tclkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tclkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorKind::DimensionMismatch,
                "matrix storage has " + std::to_string(data_.size()) + " entries, expected " +
                    std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) {
      throw Error(ErrorKind::DimensionMismatch, "ragged matrix row " + std::to_string(r));
    }
    data.insert(data.end(), rows[r].begin(), rows[r].end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(indices[k] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(k * cols_));
  }
  return out;
}

Matrix Matrix::drop_column(std::size_t c) const {
  Matrix out(rows_, cols_ - 1);
  for (std::size_t r = 0; r < rows_; ++r) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (j != c) out(r, k++) = (*this)(r, j);
    }
  }
  return out;
}

ObservationSet ObservationSet::select_rows(std::span<const std::size_t> indices) const {
  ObservationSet out;
  out.covariates = covariates.select_rows(indices);
  out.treatment.reserve(indices.size());
  out.outcome.reserve(indices.size());
  for (auto i : indices) {
    out.treatment.push_back(treatment[i]);
    out.outcome.push_back(outcome[i]);
  }
  return out;
}

ObservationSet ObservationSet::concat(const ObservationSet& first, const ObservationSet& second) {
  if (first.dimension() != second.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "cannot concatenate sets of dimension " +
                                                  std::to_string(first.dimension()) + " and " +
                                                  std::to_string(second.dimension()));
  }
  std::vector<double> data(first.covariates.values().begin(), first.covariates.values().end());
  data.insert(data.end(), second.covariates.values().begin(), second.covariates.values().end());
  ObservationSet out;
  out.covariates = Matrix(first.size() + second.size(), first.dimension(), std::move(data));
  out.treatment = first.treatment;
  out.treatment.insert(out.treatment.end(), second.treatment.begin(), second.treatment.end());
  out.outcome = first.outcome;
  out.outcome.insert(out.outcome.end(), second.outcome.begin(), second.outcome.end());
  return out;
}

std::string_view to_string(LinkKind link) noexcept {
  switch (link) {
    case LinkKind::Linear: return "linear";
    case LinkKind::Sigmoid: return "sigmoid";
    case LinkKind::Exponential: return "exponential";
  }
  return "unknown";
}

LinkKind parse_link(std::string_view name) {
  if (name == "linear") return LinkKind::Linear;
  if (name == "sigmoid") return LinkKind::Sigmoid;
  if (name == "exponential") return LinkKind::Exponential;
  throw Error(ErrorKind::Usage, "unknown link '" + std::string(name) + "'");
}

std::string_view to_string(EstimateMethod method) noexcept {
  switch (method) {
    case EstimateMethod::Correlation: return "correlation";
    case EstimateMethod::OLS: return "ols";
    case EstimateMethod::IPW: return "ipw";
    case EstimateMethod::TCL: return "tcl";
  }
  return "unknown";
}

EstimateMethod parse_method(std::string_view name) {
  if (name == "correlation") return EstimateMethod::Correlation;
  if (name == "ols") return EstimateMethod::OLS;
  if (name == "ipw") return EstimateMethod::IPW;
  if (name == "tcl") return EstimateMethod::TCL;
  throw Error(ErrorKind::Usage, "unknown method '" + std::string(name) + "'");
}

void validate(const ObservationSet& obs) {
  const std::size_t n = obs.treatment.size();
  if (n == 0) throw Error(ErrorKind::InvalidInput, "observation set is empty");
  if (obs.outcome.size() != n || obs.covariates.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch,
                "row counts differ: covariates " + std::to_string(obs.covariates.rows()) +
                    ", treatment " + std::to_string(n) + ", outcome " +
                    std::to_string(obs.outcome.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double a = obs.treatment[i];
    if (a != 0.0 && a != 1.0) {
      throw Error(ErrorKind::InvalidInput, "non-binary treatment at row " + std::to_string(i));
    }
    if (!std::isfinite(obs.outcome[i])) {
      throw Error(ErrorKind::InvalidInput, "non-finite outcome at row " + std::to_string(i));
    }
    const auto row = obs.covariates.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!std::isfinite(row[j])) {
        throw Error(ErrorKind::InvalidInput, "non-finite covariate at row " + std::to_string(i) +
                                                 ", column " + std::to_string(j));
      }
    }
  }
}

void validate(const DomainPair& pair) {
  validate(pair.source);
  validate(pair.target);
  if (pair.source.dimension() != pair.target.dimension()) {
    throw Error(ErrorKind::DimensionMismatch,
                "source has " + std::to_string(pair.source.dimension()) + " columns, target has " +
                    std::to_string(pair.target.dimension()));
  }
}

BinarizeResult binarize_at_percentile(std::span<const double> values, double percentile) {
  if (values.empty()) throw Error(ErrorKind::InvalidInput, "cannot binarize an empty vector");
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw Error(ErrorKind::InvalidInput, "percentile must lie in (0, 1)");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorKind::InvalidInput, "non-finite value at index " + std::to_string(i));
    }
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Tolerance keeps products like 0.8 * 5 from rounding up a whole rank.
  auto rank = static_cast<std::size_t>(std::ceil(percentile * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());

  BinarizeResult result;
  result.threshold = sorted[rank - 1];
  result.indicator.reserve(values.size());
  for (double v : values) result.indicator.push_back(v > result.threshold ? 1 : 0);
  return result;
}

DomainPair split_subgroups(const ObservationSet& obs, std::size_t column) {
  if (column >= obs.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "splitting column " + std::to_string(column) +
                                                  " out of range for dimension " +
                                                  std::to_string(obs.dimension()));
  }
  std::vector<std::size_t> source_rows;
  std::vector<std::size_t> target_rows;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double v = obs.covariates(i, column);
    if (v == 0.0) {
      source_rows.push_back(i);
    } else if (v == 1.0) {
      target_rows.push_back(i);
    } else {
      throw Error(ErrorKind::InvalidInput, "non-binary splitting column at row " + std::to_string(i));
    }
  }
  if (source_rows.empty()) throw Error(ErrorKind::InvalidInput, "empty source subgroup");
  if (target_rows.empty()) throw Error(ErrorKind::InvalidInput, "empty target subgroup");

  const ObservationSet reduced{obs.covariates.drop_column(column), obs.treatment, obs.outcome};
  return DomainPair{reduced.select_rows(source_rows), reduced.select_rows(target_rows)};
}

std::string_view quantize_ace(double tau) {
  if (!std::isfinite(tau)) throw Error(ErrorKind::InvalidInput, "cannot quantize a non-finite estimate");
  if (tau <= -500.0) return "--";
  if (tau < -100.0) return "-";
  if (tau <= 100.0) return "*";
  return "+";
}

}  // namespace tclkit
