#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kdpa/error.hpp"

namespace kdpa {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 48;
  int initial_segments = 8;
};

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth, bool& converged) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double floor_tol = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (std::abs(delta) <= 15.0 * std::max(tol, floor_tol)) return left + right + delta / 15.0;
  if (depth <= 0) {
    converged = false;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, converged) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, converged);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over the finite interval [a, b].
///
/// The interval is first split into `initial_segments` equal pieces so that
/// narrow features are not skipped by the coarsest sample. Throws
/// QuadratureFailure when some branch hits the depth limit.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (!(std::isfinite(a) && std::isfinite(b)))
    throw Error(ErrorCode::QuadratureFailure, "integration bounds must be finite");
  if (a == b) return 0.0;
  const int segments = std::max(1, opt.initial_segments);
  const double h = (b - a) / segments;
  const double seg_tol = opt.abs_tol / segments;
  bool converged = true;
  double total = 0.0;
  double x0 = a;
  double f0 = f(x0);
  for (int s = 0; s < segments; ++s) {
    const double x1 = (s + 1 == segments) ? b : a + (s + 1) * h;
    const double f1 = f(x1);
    const double xm = 0.5 * (x0 + x1);
    const double fm = f(xm);
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += detail::simpson_step(f, x0, f0, x1, f1, xm, fm, whole, seg_tol, opt.max_depth,
                                  converged);
    x0 = x1;
    f0 = f1;
  }
  if (!converged) throw Error(ErrorCode::QuadratureFailure, "adaptive Simpson depth limit reached");
  return total;
}

// ---------------------------------------------------------------------------
// Root finding and 1-D maximisation
// ---------------------------------------------------------------------------

/// Bisection for an increasing function: returns x in [lo, hi] with f(x) ~ target.
/// Stops once the bracket is narrower than `tol` or after `max_iter` halvings.
template <class F>
double bisect_increasing(F&& f, double target, double lo, double hi, double tol = 1e-12,
                         int max_iter = 200) {
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Maximum {
  double arg;
  double value;
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <class F>
Maximum golden_section_max(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && b - a > tol; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? Maximum{c, fc} : Maximum{d, fd};
}

// ---------------------------------------------------------------------------
// Combinatorics
// ---------------------------------------------------------------------------

/// Binomial(trials, p) probability masses for 0..max_count, computed by the
/// ratio recurrence in log space so large `trials` neither overflow nor
/// underflow prematurely.
inline std::vector<double> binomial_pmf_prefix(int trials, double p, int max_count) {
  max_count = std::min(max_count, trials);
  std::vector<double> pmf(static_cast<std::size_t>(std::max(0, max_count + 1)), 0.0);
  if (max_count < 0) return pmf;
  if (p <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    if (max_count == trials) pmf[static_cast<std::size_t>(trials)] = 1.0;
    return pmf;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double log_term = trials * log_q;
  pmf[0] = std::exp(log_term);
  for (int i = 0; i < max_count; ++i) {
    log_term += std::log(static_cast<double>(trials - i) / (i + 1)) + log_p - log_q;
    pmf[static_cast<std::size_t>(i + 1)] = std::exp(log_term);
  }
  return pmf;
}

inline double binomial_pmf(int trials, int count, double p) {
  if (count < 0 || count > trials) return 0.0;
  return binomial_pmf_prefix(trials, p, count)[static_cast<std::size_t>(count)];
}

/// E[min(N, cap)] for N ~ Binomial(trials, p).
inline double expected_min_binomial(int trials, double p, int cap) {
  if (cap <= 0) return 0.0;
  if (cap >= trials) return trials * std::clamp(p, 0.0, 1.0);
  if (cap == 1) {
    // 1 - (1-p)^trials without cancellation for small p
    return p >= 1.0 ? 1.0 : -std::expm1(trials * std::log1p(-p));
  }
  const auto pmf = binomial_pmf_prefix(trials, p, cap - 1);
  double shortfall = 0.0;
  for (int i = 0; i < cap; ++i) shortfall += (cap - i) * pmf[static_cast<std::size_t>(i)];
  return std::max(0.0, cap - shortfall);
}

/// sum_{i=0}^{n-1} a^i b^{n-1-i}, evaluated by Horner's rule (all terms
/// non-negative for a, b >= 0, so there is no cancellation even when a == b).
inline double geometric_sum(double a, double b, int n) {
  double s = 1.0;
  double b_pow = 1.0;
  for (int t = 1; t < n; ++t) {
    b_pow *= b;
    s = a * s + b_pow;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Streaming moments
// ---------------------------------------------------------------------------

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Welford accumulator with Chan's pairwise merge.
class RunningStats {
 public:
  void push(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningStats& other) {
    if (other.count_ == 0) return;
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(count_ + other.count_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * static_cast<double>(other.count_) / total;
    m2_ += other.m2_ + delta * delta * static_cast<double>(count_) *
                           static_cast<double>(other.count_) / total;
    count_ += other.count_;
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }
  Estimate estimate() const { return {mean_, std_error()}; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace kdpa
