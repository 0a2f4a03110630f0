#ifndef DAUCTION_COMMON_HPP
#define DAUCTION_COMMON_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dauction {

/// Tolerances shared by every solver and verifier. The CLI may override them
/// through flags; library callers pass their own where an overload exists.
namespace tol {
inline constexpr double kPrimalFeasibility = 1e-10;
inline constexpr double kKktResidual = 1e-8;
inline constexpr double kDualRelative = 1e-12;
inline constexpr double kFixedPointResidual = 1e-9;
inline constexpr double kVerification = 1e-8;
inline constexpr double kDeviationGain = 1e-12;
inline constexpr double kBracketFloor = 1e-12;
inline constexpr double kUndefinedUtility = 1e-12;
}  // namespace tol

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Error taxonomy. The CLI maps each class to an exit code.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what + " (best residual " + std::to_string(best_residual) + ")"),
        residual(best_residual) {}
  double residual;
};

/// A query fell outside the tabulated range of a piecewise marginal cost.
struct RangeError : std::out_of_range {
  RangeError(const std::string& what, double offending)
      : std::out_of_range(what), value(offending) {}
  double value;
};

struct UndefinedRatioError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Dense row-major matrix indexed (user, link).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  [[nodiscard]] std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  void set_column(std::size_t c, const std::vector<double>& values) {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
  }

  [[nodiscard]] double row_sum(std::size_t r) const {
    double s = 0.0;
    for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c);
    return s;
  }

  [[nodiscard]] double column_sum(std::size_t c) const {
    double s = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c);
    return s;
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("matrix shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace dauction

#endif  // DAUCTION_COMMON_HPP
