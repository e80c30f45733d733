#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdpa/error.hpp"
#include "kdpa/numeric.hpp"

namespace kdpa {

/// Guards the division by g(v) in the virtual value.
inline constexpr double kDensityFloor = 1e-12;
/// Upper quantile at which integrals over unbounded supports are truncated.
inline constexpr double kTailMass = 1e-9;

/// An atomless law on the real line described by CDF, optional PDF and
/// quantile callbacks. Immutable once built; copies share nothing mutable, so
/// a Distribution may be used concurrently from any number of threads.
///
/// Serves both as the buyer value law G and as a prophet reward law F.
class Distribution {
 public:
  using Function = std::function<double(double)>;

  /// `survival` is optional; families that know 1 - G in closed form pass it
  /// to keep upper-tail virtual values accurate.
  Distribution(std::string name, Function cdf, Function pdf, Function quantile, double support_lo,
               double support_hi, Function survival = {})
      : name_(std::move(name)),
        cdf_(std::move(cdf)),
        pdf_(std::move(pdf)),
        quantile_(std::move(quantile)),
        survival_(std::move(survival)),
        lo_(support_lo),
        hi_(support_hi) {
    detail::require(static_cast<bool>(cdf_) && static_cast<bool>(quantile_), ErrorCode::DomainError,
                    "distribution needs cdf and quantile callbacks");
    detail::require(lo_ < hi_, ErrorCode::DomainError, "empty support");
  }

  const std::string& name() const { return name_; }
  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  bool has_density() const { return static_cast<bool>(pdf_); }

  double cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    return std::clamp(cdf_(x), 0.0, 1.0);
  }

  /// 1 - G(x).
  double survival(double x) const {
    if (x <= lo_) return 1.0;
    if (x >= hi_) return 0.0;
    return survival_ ? std::clamp(survival_(x), 0.0, 1.0) : 1.0 - cdf(x);
  }

  double pdf(double x) const {
    detail::require(has_density(), ErrorCode::DomainError, "distribution has no density");
    if (x < lo_ || x > hi_) return 0.0;
    return pdf_(x);
  }

  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::OutOfRange, "quantile level outside [0,1]");
    if (q == 0.0) return lo_;
    if (q == 1.0) return hi_;
    return std::clamp(quantile_(q), lo_, hi_);
  }

  /// Largest value used as the right end of integrals: support_hi when finite,
  /// otherwise the quantile leaving `tail` mass above it.
  double integration_cap(double tail = kTailMass) const {
    return std::isfinite(hi_) ? hi_ : quantile(1.0 - tail);
  }

 private:
  std::string name_;
  Function cdf_;
  Function pdf_;
  Function quantile_;
  Function survival_;
  double lo_;
  double hi_;
};

using ValueDistribution = Distribution;
using RewardDistribution = Distribution;

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

inline Distribution uniform_distribution(double a, double b) {
  detail::require(std::isfinite(a) && std::isfinite(b) && a < b, ErrorCode::DomainError,
                  "uniform needs finite a < b");
  const double width = b - a;
  std::ostringstream name;
  name << "uniform:" << a << ',' << b;
  return Distribution(
      name.str(), [a, width](double x) { return (x - a) / width; },
      [width](double) { return 1.0 / width; }, [a, width](double q) { return a + q * width; }, a,
      b, [b, width](double x) { return (b - x) / width; });
}

inline Distribution exponential_distribution(double rate) {
  detail::require(std::isfinite(rate) && rate > 0.0, ErrorCode::DomainError,
                  "exponential needs a positive rate");
  std::ostringstream name;
  name << "exp:" << rate;
  return Distribution(
      name.str(), [rate](double x) { return -std::expm1(-rate * x); },
      [rate](double x) { return rate * std::exp(-rate * x); },
      [rate](double q) { return -std::log1p(-q) / rate; }, 0.0, kInf,
      [rate](double x) { return std::exp(-rate * x); });
}

/// Atomless law from CDF and PDF callbacks. The quantile is obtained by
/// bisection (tolerance 1e-12, at most 200 halvings); unbounded supports are
/// bracketed by doubling.
inline Distribution distribution_from_cdf(std::string name, Distribution::Function cdf,
                                          Distribution::Function pdf, double lo, double hi) {
  auto quantile = [cdf, lo, hi](double q) {
    double a = lo;
    double b = hi;
    if (!std::isfinite(a)) {
      double step = 1.0;
      a = std::isfinite(b) ? b - step : -step;
      while (cdf(a) > q && step < 1e300) {
        step *= 2.0;
        a = (std::isfinite(b) ? b : 0.0) - step;
      }
    }
    if (!std::isfinite(b)) {
      double step = 1.0;
      b = a + step;
      while (cdf(b) < q && step < 1e300) {
        step *= 2.0;
        b = a + step;
      }
    }
    return bisect_increasing(cdf, q, a, b, 1e-12, 200);
  };
  return Distribution(std::move(name), std::move(cdf), std::move(pdf), std::move(quantile), lo, hi);
}

struct QuantilePoint {
  double q;
  double v;
};

/// Piecewise-linear quantile function through the given (q, v) knots; the
/// first knot must have q = 0 and the last q = 1, both coordinates strictly
/// increasing.
inline Distribution quantile_table_distribution(std::vector<QuantilePoint> points,
                                                std::string name = "table") {
  detail::require(points.size() >= 2, ErrorCode::DomainError, "quantile table needs two knots");
  detail::require(points.front().q == 0.0 && points.back().q == 1.0, ErrorCode::DomainError,
                  "quantile table must span q = 0 .. 1");
  for (std::size_t i = 1; i < points.size(); ++i) {
    detail::require(points[i].q > points[i - 1].q && points[i].v > points[i - 1].v,
                    ErrorCode::DomainError, "quantile table knots must be strictly increasing");
  }
  auto table = std::make_shared<const std::vector<QuantilePoint>>(std::move(points));

  auto segment_by_value = [table](double x) {
    auto it = std::upper_bound(table->begin(), table->end(), x,
                               [](double val, const QuantilePoint& p) { return val < p.v; });
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - table->begin(), 1,
                                                               static_cast<std::ptrdiff_t>(table->size()) - 1));
  };
  auto cdf = [table, segment_by_value](double x) {
    const auto i = segment_by_value(x);
    const auto& l = (*table)[i - 1];
    const auto& r = (*table)[i];
    return l.q + (x - l.v) * (r.q - l.q) / (r.v - l.v);
  };
  auto pdf = [table, segment_by_value](double x) {
    const auto i = segment_by_value(x);
    const auto& l = (*table)[i - 1];
    const auto& r = (*table)[i];
    return (r.q - l.q) / (r.v - l.v);
  };
  auto quantile = [table](double q) {
    auto it = std::upper_bound(table->begin(), table->end(), q,
                               [](double val, const QuantilePoint& p) { return val < p.q; });
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        it - table->begin(), 1, static_cast<std::ptrdiff_t>(table->size()) - 1));
    const auto& l = (*table)[i - 1];
    const auto& r = (*table)[i];
    return l.v + (q - l.q) * (r.v - l.v) / (r.q - l.q);
  };
  const double lo = table->front().v;
  const double hi = table->back().v;
  return Distribution(std::move(name), cdf, pdf, quantile, lo, hi);
}

// ---------------------------------------------------------------------------
// Distribution spec strings: uniform:a,b | exp:rate | table:path.csv
// ---------------------------------------------------------------------------

namespace detail {

inline double parse_double(std::string_view text, const char* what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorCode::ParseError, std::string("cannot parse ") + what + " from '" +
                                           std::string(text) + "'");
  return value;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      parts.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

}  // namespace detail

inline std::vector<QuantilePoint> read_quantile_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open quantile table '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty quantile table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "q,v") throw Error(ErrorCode::ParseError, "quantile table header must be 'q,v'");
  std::vector<QuantilePoint> points;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 2) throw Error(ErrorCode::ParseError, "quantile table row needs two cells");
    points.push_back({detail::parse_double(cells[0], "q"), detail::parse_double(cells[1], "v")});
  }
  return points;
}

inline Distribution parse_distribution_spec(std::string_view spec) {
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw Error(ErrorCode::ParseError, "distribution spec needs 'family:params'");
  const auto family = spec.substr(0, colon);
  const auto params = spec.substr(colon + 1);
  if (family == "uniform") {
    const auto parts = detail::split(params, ',');
    if (parts.size() != 2) throw Error(ErrorCode::ParseError, "uniform spec is uniform:a,b");
    return uniform_distribution(detail::parse_double(parts[0], "a"),
                                detail::parse_double(parts[1], "b"));
  }
  if (family == "exp") return exponential_distribution(detail::parse_double(params, "rate"));
  if (family == "table") {
    const std::string path(params);
    return quantile_table_distribution(read_quantile_table(path), "table:" + path);
  }
  throw Error(ErrorCode::ParseError, "unknown distribution family '" + std::string(family) + "'");
}

// ---------------------------------------------------------------------------
// Virtual values
// ---------------------------------------------------------------------------

/// phi_G(v) = v - (1 - G(v)) / g(v) on the closed support.
inline double virtual_value(const ValueDistribution& g, double v) {
  if (!(v >= g.support_lo() && v <= g.support_hi()))
    throw Error(ErrorCode::OutOfSupport, "virtual value requested outside the support");
  const double density = g.pdf(v);
  if (!(density > kDensityFloor)) throw Error(ErrorCode::ZeroDensity, "density below floor");
  return v - g.survival(v) / density;
}

/// A value law together with the zero crossing of its virtual value.
class VirtualValueTransform {
 public:
  explicit VirtualValueTransform(ValueDistribution base) : base_(std::move(base)) {
    detail::require(base_.has_density(), ErrorCode::DomainError,
                    "virtual values need a density");
    const double lo = base_.support_lo();
    detail::require(std::isfinite(lo), ErrorCode::DomainError,
                    "virtual values need a finite lower support bound");
    if (virtual_value(base_, lo) >= 0.0) {
      reserve_ = lo;
    } else {
      const double hi = search_cap();
      reserve_ = bisect_increasing([this](double v) { return virtual_value(base_, v); }, 0.0, lo, hi,
                                   1e-13, 200);
    }
  }

  const ValueDistribution& base() const { return base_; }
  /// rho with phi(rho) = 0 (or the lower support bound if phi >= 0 throughout).
  double reserve() const { return reserve_; }
  double operator()(double v) const { return virtual_value(base_, v); }

  /// Right end used when bracketing inverse virtual values: support_hi when
  /// finite, otherwise a far quantile where the density is still resolvable.
  double search_cap() const {
    if (std::isfinite(base_.support_hi())) return base_.support_hi();
    double q = 1.0 - 1e-15;
    double v = base_.quantile(q);
    while (!(base_.pdf(v) > kDensityFloor) && q > 0.5) {
      q = 1.0 - (1.0 - q) * 16.0;
      v = base_.quantile(q);
    }
    return v;
  }

 private:
  ValueDistribution base_;
  double reserve_ = 0.0;
};

/// v with phi(v) = x, by bisection on the monotone virtual value.
inline double inverse_virtual_value(const VirtualValueTransform& t, double x) {
  const auto& g = t.base();
  const double lo = g.support_lo();
  const double hi = t.search_cap();
  const double phi_lo = t(lo);
  const double phi_hi = t(hi);
  constexpr double slack = 1e-12;
  if (x < phi_lo - slack || x > phi_hi + slack)
    throw Error(ErrorCode::OutOfRange, "value outside the range of the virtual value");
  if (x <= phi_lo) return lo;
  if (x >= phi_hi) return hi;
  return bisect_increasing(t, x, lo, hi, 1e-13, 200);
}

/// Non-decreasing virtual value on a quantile-spaced grid of `grid_size`
/// interior points (absolute slack 1e-9 for float noise).
inline bool check_regularity(const VirtualValueTransform& t, int grid_size) {
  detail::require(grid_size >= 2, ErrorCode::DomainError, "regularity grid needs >= 2 points");
  const auto& g = t.base();
  double previous = -kInf;
  try {
    for (int i = 0; i < grid_size; ++i) {
      const double v = g.quantile(static_cast<double>(i + 1) / (grid_size + 1));
      const double phi = t(v);
      if (phi < previous - 1e-9) return false;
      previous = phi;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ZeroDensity) return false;
    throw;
  }
  return true;
}

/// Law of phi_G(v) for v ~ G, i.e. F(x) = G(phi^{-1}(x)); with
/// `condition_nonnegative` the law conditioned on phi >= 0,
/// Fbar(x) = (F(x) - F(0)) / (1 - F(0)) on [0, inf).
inline RewardDistribution induced_reward_distribution(const VirtualValueTransform& t,
                                                      bool condition_nonnegative) {
  const auto& g = t.base();
  const double phi_lo = t(g.support_lo());
  const double phi_hi = std::isfinite(g.support_hi()) ? t(g.support_hi()) : kInf;
  const double cap = t.search_cap();
  const double phi_cap = t(cap);

  auto unconditioned_cdf = [t, phi_lo, phi_cap](double x) {
    if (x <= phi_lo) return 0.0;
    if (x >= phi_cap) return t.base().cdf(t.search_cap());
    return t.base().cdf(inverse_virtual_value(t, x));
  };

  if (!condition_nonnegative) {
    auto quantile = [t](double q) { return t(t.base().quantile(q)); };
    return Distribution("virtual(" + g.name() + ")", unconditioned_cdf, {}, quantile, phi_lo,
                        phi_hi);
  }

  const double base_mass = g.cdf(t.reserve());
  if (!(1.0 - base_mass > 1e-12))
    throw Error(ErrorCode::DegenerateConditioning, "no mass above the reserve");
  auto cdf = [unconditioned_cdf, base_mass](double x) {
    return (unconditioned_cdf(x) - base_mass) / (1.0 - base_mass);
  };
  auto quantile = [t, base_mass](double q) {
    return std::max(0.0, t(t.base().quantile(base_mass + q * (1.0 - base_mass))));
  };
  return Distribution("virtual+(" + g.name() + ")", cdf, {}, quantile, std::max(0.0, phi_lo),
                      phi_hi);
}

/// E[V | V in [a, b)] by adaptive Simpson on the CDF:
///   E = a + (1 / mass) * integral_a^b (F(b) - F(z)) dz.
/// Unbounded right ends are truncated at the 1 - 1e-9 quantile.
inline double conditional_mean(const RewardDistribution& d, double a, double b) {
  detail::require(a < b, ErrorCode::DomainError, "conditional mean needs a < b");
  const double lo = std::max(a, d.support_lo());
  const double hi = std::min(b, d.integration_cap());
  const double f_b = std::isfinite(b) ? d.cdf(b) : 1.0;
  const double mass = f_b - d.cdf(lo);
  if (!(mass > 1e-12)) throw Error(ErrorCode::EmptyInterval, "interval carries no mass");
  if (!(hi > lo)) return lo;
  QuadratureOptions opt;
  opt.abs_tol = 1e-10 * std::min(1.0, mass);
  const double excess = integrate([&](double z) { return f_b - d.cdf(z); }, lo, hi, opt);
  return lo + excess / mass;
}

}  // namespace kdpa
