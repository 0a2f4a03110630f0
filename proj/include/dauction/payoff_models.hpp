#ifndef DAUCTION_PAYOFF_MODELS_HPP
#define DAUCTION_PAYOFF_MODELS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dauction/common.hpp"

namespace dauction {

/// A user's true pay-off U(x). Both shipped families are concave, strictly
/// increasing and have finite U'(0).
class PayoffSpec {
 public:
  enum class Family { Linear, ShiftedLog };

  /// U(x) = c x
  static PayoffSpec linear(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError("linear payoff requires c > 0");
    return PayoffSpec(Family::Linear, c);
  }

  /// U(x) = b ln(1 + x)
  static PayoffSpec shifted_log(double b) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("shifted-log payoff requires b > 0");
    return PayoffSpec(Family::ShiftedLog, b);
  }

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] double parameter() const noexcept { return param_; }
  [[nodiscard]] bool is_linear() const noexcept { return family_ == Family::Linear; }

  [[nodiscard]] double value(double x) const {
    check_rate(x);
    return family_ == Family::Linear ? param_ * x : param_ * std::log1p(x);
  }

  [[nodiscard]] double marginal(double x) const {
    check_rate(x);
    return family_ == Family::Linear ? param_ : param_ / (1.0 + x);
  }

  [[nodiscard]] double marginal_at_zero() const noexcept { return param_; }

  /// Demand at marginal price u: the x >= 0 with U'(x) = u, or 0 when u is at
  /// or above U'(0). A linear pay-off has no interior solution; below its
  /// slope the demand is unbounded and +inf is returned.
  [[nodiscard]] double marginal_inverse(double u) const {
    if (!(u > 0.0)) throw InputError("marginal_inverse requires u > 0");
    if (u >= param_) return 0.0;
    if (family_ == Family::Linear) return kInfinity;
    return param_ / u - 1.0;
  }

  /// x U'(x) -> inf as x -> inf. Required by the general Stackelberg search.
  [[nodiscard]] bool has_unbounded_revenue_growth() const noexcept {
    return family_ == Family::Linear;
  }

  [[nodiscard]] std::string describe() const {
    return (family_ == Family::Linear ? "linear(c=" : "shifted_log(b=") + std::to_string(param_) +
           ")";
  }

  friend bool operator==(const PayoffSpec&, const PayoffSpec&) = default;

 private:
  PayoffSpec(Family f, double p) : family_(f), param_(p) {}

  static void check_rate(double x) {
    if (!(x >= 0.0)) throw InputError("payoff evaluated at negative rate");
  }

  Family family_;
  double param_;
};

/// One tabulated point of a piecewise-linear marginal cost.
struct Breakpoint {
  double rate;
  double marginal;
  friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/// A link's true cost V(y) with marginal v = V' and its inverse. V(0) = 0.
class CostSpec {
 public:
  enum class Family { Polynomial, PiecewiseMarginal };

  /// V(y) = b y^n
  static CostSpec polynomial(double b, int n) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("polynomial cost requires b > 0");
    if (n < 2) throw InputError("polynomial cost requires n >= 2");
    CostSpec s(Family::Polynomial);
    s.b_ = b;
    s.n_ = n;
    return s;
  }

  /// v linearly interpolated between breakpoints; V is its exact integral.
  /// The first breakpoint must sit at rate 0.
  static CostSpec piecewise_marginal(std::vector<Breakpoint> points) {
    if (points.size() < 2) throw InputError("piecewise marginal needs at least two breakpoints");
    if (points.front().rate != 0.0) throw InputError("first breakpoint must be at rate 0");
    if (!(points.front().marginal >= 0.0))
      throw InputError("piecewise marginal values must be nonnegative");
    for (std::size_t i = 1; i < points.size(); ++i) {
      if (!(points[i].rate > points[i - 1].rate))
        throw InputError("breakpoint rates must be strictly increasing");
      if (!(points[i].marginal > points[i - 1].marginal))
        throw InputError("marginal values must be strictly increasing");
      if (!std::isfinite(points[i].rate) || !std::isfinite(points[i].marginal))
        throw InputError("breakpoints must be finite");
    }
    CostSpec s(Family::PiecewiseMarginal);
    s.cumulative_.assign(points.size(), 0.0);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double w = points[i].rate - points[i - 1].rate;
      s.cumulative_[i] =
          s.cumulative_[i - 1] + 0.5 * w * (points[i].marginal + points[i - 1].marginal);
    }
    s.points_ = std::move(points);
    return s;
  }

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] double coefficient() const noexcept { return b_; }
  [[nodiscard]] int degree() const noexcept { return n_; }
  [[nodiscard]] const std::vector<Breakpoint>& breakpoints() const noexcept { return points_; }
  [[nodiscard]] bool is_polynomial() const noexcept { return family_ == Family::Polynomial; }

  /// Largest rate at which V and v are defined.
  [[nodiscard]] double domain_end() const noexcept {
    return is_polynomial() ? kInfinity : points_.back().rate;
  }

  [[nodiscard]] double value(double y) const {
    check_rate(y);
    if (is_polynomial()) return b_ * std::pow(y, n_);
    const std::size_t i = segment_of_rate(y);
    const double v = interpolate(i, y);
    return cumulative_[i] + 0.5 * (y - points_[i].rate) * (points_[i].marginal + v);
  }

  [[nodiscard]] double marginal(double y) const {
    check_rate(y);
    if (is_polynomial()) return n_ * b_ * std::pow(y, n_ - 1);
    return interpolate(segment_of_rate(y), y);
  }

  [[nodiscard]] double marginal_at_zero() const noexcept {
    return is_polynomial() ? 0.0 : points_.front().marginal;
  }

  /// Supply at marginal price w: the y >= 0 with v(y) = w, or 0 when w is at
  /// or below v(0).
  [[nodiscard]] double marginal_inverse(double w) const {
    if (!(w > 0.0)) throw InputError("cost marginal_inverse requires w > 0");
    if (is_polynomial()) return std::pow(w / (n_ * b_), 1.0 / (n_ - 1));
    if (w <= points_.front().marginal) return 0.0;
    if (w > points_.back().marginal)
      throw RangeError("marginal price " + std::to_string(w) +
                           " exceeds the last tabulated marginal cost",
                       w);
    auto it = std::lower_bound(points_.begin(), points_.end(), w,
                               [](const Breakpoint& p, double m) { return p.marginal < m; });
    const std::size_t hi = static_cast<std::size_t>(it - points_.begin());
    const Breakpoint& a = points_[hi - 1];
    const Breakpoint& b = points_[hi];
    return a.rate + (w - a.marginal) / (b.marginal - a.marginal) * (b.rate - a.rate);
  }

  /// V(x)/x -> inf. Piecewise specs have a bounded domain and report false.
  [[nodiscard]] bool has_superlinear_growth() const noexcept { return is_polynomial(); }

  [[nodiscard]] std::string describe() const {
    if (is_polynomial())
      return "polynomial(b=" + std::to_string(b_) + ",n=" + std::to_string(n_) + ")";
    return "piecewise_marginal(" + std::to_string(points_.size()) + " breakpoints)";
  }

  friend bool operator==(const CostSpec& a, const CostSpec& b) {
    return a.family_ == b.family_ && a.b_ == b.b_ && a.n_ == b.n_ && a.points_ == b.points_;
  }

 private:
  explicit CostSpec(Family f) : family_(f) {}

  static void check_rate(double y) {
    if (!(y >= 0.0)) throw InputError("cost evaluated at negative rate");
  }

  std::size_t segment_of_rate(double y) const {
    if (y > points_.back().rate)
      throw RangeError("rate " + std::to_string(y) + " exceeds the last breakpoint", y);
    auto it = std::upper_bound(points_.begin(), points_.end(), y,
                               [](double r, const Breakpoint& p) { return r < p.rate; });
    std::size_t hi = static_cast<std::size_t>(it - points_.begin());
    if (hi >= points_.size()) hi = points_.size() - 1;
    return hi - 1;
  }

  double interpolate(std::size_t i, double y) const {
    const Breakpoint& a = points_[i];
    const Breakpoint& b = points_[i + 1];
    return a.marginal + (y - a.rate) / (b.rate - a.rate) * (b.marginal - a.marginal);
  }

  Family family_;
  double b_ = 0.0;
  int n_ = 0;
  std::vector<Breakpoint> points_;
  std::vector<double> cumulative_;
};

}  // namespace dauction

#endif  // DAUCTION_PAYOFF_MODELS_HPP
