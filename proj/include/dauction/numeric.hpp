#ifndef DAUCTION_NUMERIC_HPP
#define DAUCTION_NUMERIC_HPP

#include <cmath>
#include <utility>
#include <vector>

namespace dauction::numeric {

struct Bracket {
  double lo;
  double hi;
};

/// Bisection on a function that is positive at `lo` and nonpositive at `hi`
/// (a decreasing sign change). Stops when the bracket width falls under
/// `rel_tol * max(1, |hi|)` or after `max_iter` halvings.
template <typename F>
Bracket bisect_decreasing(F&& g, double lo, double hi, double rel_tol = 1e-15,
                          int max_iter = 400) {
  for (int i = 0; i < max_iter; ++i) {
    if (hi - lo <= rel_tol * std::max(1.0, std::abs(hi))) break;
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, hi};
}

inline constexpr double kInvGolden = 0.6180339887498948482;

/// Golden-section search for the maximiser of a unimodal `f` on [a, b].
/// Returns (argmax, value).
template <typename F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, double x_tol = 1e-10,
                                             int max_iter = 200) {
  double c = b - kInvGolden * (b - a);
  double d = a + kInvGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > x_tol; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGolden * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

template <typename F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double x_tol = 1e-10,
                                             int max_iter = 200) {
  auto [x, v] = golden_section_max([&](double t) { return -f(t); }, a, b, x_tol, max_iter);
  return {x, -v};
}

/// `count` log-spaced points from lo to hi inclusive.
inline std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out;
  if (count <= 0) return out;
  if (count == 1) return {lo};
  out.reserve(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(a + (b - a) * i / (count - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace dauction::numeric

#endif  // DAUCTION_NUMERIC_HPP
