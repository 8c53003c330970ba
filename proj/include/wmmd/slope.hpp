#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "wmmd/error.hpp"

namespace wmmd {

/// Ordinary least squares of log y on log x.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 1.0;
  std::vector<std::pair<double, double>> grid;  // (log x, log y)
};

inline SlopeFit fit_line(std::vector<std::pair<double, double>> pts) {
  const auto n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  require(sxx > 0.0, Errc::DegenerateGrid, "abscissae must not all coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - (f.intercept + f.slope * x);
    sse += e * e;
  }
  f.stderr_slope = pts.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  f.r2 = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  f.grid = std::move(pts);
  return f;
}

/// Exponent b in measurement ~ a * scale^b.
inline SlopeFit scaling_exponent(const std::vector<std::pair<double, double>>& values) {
  require(values.size() >= 4, Errc::DegenerateGrid, "need at least four (scale, value) pairs");
  std::vector<std::pair<double, double>> pts;
  pts.reserve(values.size());
  for (const auto& [x, y] : values) {
    require(x > 0.0 && y > 0.0 && std::isfinite(x) && std::isfinite(y), Errc::InvalidArgument,
            "scaling data must be strictly positive");
    pts.emplace_back(std::log(x), std::log(y));
  }
  return fit_line(std::move(pts));
}

inline SlopeFit scaling_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), Errc::DimensionMismatch, "x and y differ in length");
  std::vector<std::pair<double, double>> v;
  for (std::size_t i = 0; i < x.size(); ++i) v.emplace_back(x[i], y[i]);
  return scaling_exponent(v);
}

enum class RateStatus { Ok, DegenerateZero };

/// Output of a sample-size sweep: E[distance(pi, pi_n)] per n and its log-log slope.
struct RateResult {
  RateStatus status = RateStatus::Ok;
  SlopeFit fit;
  std::vector<double> n;
  std::vector<double> mean;
  std::vector<double> stderr_mean;
  std::vector<double> bound;  // per-n theoretical bound when one applies, else empty
};

/// Checks the sample-size grid: at least five strictly increasing, geometric entries.
inline void validate_rate_grid(const std::vector<std::size_t>& grid, std::size_t trials, std::size_t min_trials = 20) {
  require(grid.size() >= 5, Errc::DegenerateGrid, "rate grid needs at least five points");
  require(grid.front() >= 1, Errc::DegenerateGrid, "rate grid entries must be positive");
  const double ratio = static_cast<double>(grid[1]) / static_cast<double>(grid[0]);
  require(ratio > 1.0, Errc::DegenerateGrid, "rate grid must be increasing");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double r = static_cast<double>(grid[i]) / static_cast<double>(grid[i - 1]);
    require(std::abs(r - ratio) <= 1e-6 * ratio, Errc::DegenerateGrid, "rate grid must be geometric");
  }
  require(trials >= min_trials, Errc::InvalidArgument, "too few trials for a rate fit");
}

inline RateResult finish_rate(const std::vector<std::size_t>& grid, const std::vector<std::vector<double>>& values) {
  RateResult r;
  bool all_zero = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& v = values[i];
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    const double se = v.size() > 1 ? std::sqrt(s2 / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
    r.n.push_back(static_cast<double>(grid[i]));
    r.mean.push_back(m);
    r.stderr_mean.push_back(se);
    if (m > 0.0) all_zero = false;
  }
  if (all_zero) {
    r.status = RateStatus::DegenerateZero;
    return r;
  }
  r.fit = scaling_exponent(r.n, r.mean);
  return r;
}

}  // namespace wmmd
