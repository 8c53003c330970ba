#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "wmmd/dataset_io.hpp"
#include "wmmd/error.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/network_simplex.hpp"
#include "wmmd/parallel.hpp"
#include "wmmd/slope.hpp"

namespace wmmd {

/// Sparse coupling between n source atoms and m target atoms.
struct TransportPlan {
  struct Entry {
    Eigen::Index i;
    Eigen::Index j;
    double mass;
  };
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double p = 1.0;
  double cost = 0.0;  // sum of mass * ground cost, before the p-th root
  std::vector<Entry> entries;

  Matrix dense() const {
    Matrix g = Matrix::Zero(n, m);
    for (const auto& e : entries) g(e.i, e.j) += e.mass;
    return g;
  }
};

inline void write_plan_csv(std::ostream& os, const TransportPlan& plan) {
  os << "i,j,mass\n";
  for (const auto& e : plan.entries) os << e.i << ',' << e.j << ',' << format_double(e.mass) << '\n';
}

inline constexpr double kDefaultMaxArcs = 1e6;

/// Exact transport for an arbitrary cost matrix (row-major n x m).
inline TransportPlan solve_transport(const Vector& a, const Vector& b, std::vector<double> cost,
                                     double max_arcs = kDefaultMaxArcs) {
  const auto n = a.size(), m = b.size();
  require(static_cast<double>(n) * static_cast<double>(m) <= max_arcs, Errc::SizeGuard,
          "transport problem has " + std::to_string(n * m) + " arcs, above the guard");
  TransportPlan plan;
  plan.n = n;
  plan.m = m;
  if (n == 1 || m == 1) {  // trivial couplings, no solver needed
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const double mass = a[i] * b[j];
        if (mass > 0.0) {
          plan.entries.push_back({i, j, mass});
          plan.cost += mass * cost[static_cast<std::size_t>(i * m + j)];
        }
      }
    return plan;
  }
  std::vector<double> sa(a.data(), a.data() + n), sb(b.data(), b.data() + m);
  NetworkSimplex ns(std::move(sa), std::move(sb), cost);
  const auto status = ns.run();
  require(status == NetworkSimplex::Status::Optimal, Errc::SolverFailure, "network simplex did not reach optimality");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      const double f = ns.flow(i, j);
      if (f > 0.0) {
        plan.entries.push_back({i, j, f});
        plan.cost += f * cost[static_cast<std::size_t>(i * m + j)];
      }
    }
  return plan;
}

inline std::vector<double> ground_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  std::vector<double> c(static_cast<std::size_t>(mu.size() * nu.size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
      const double r = std::sqrt(squared_distance(mu.point(i), nu.point(j)));
      c[static_cast<std::size_t>(i * nu.size() + j)] = p == 1.0 ? r : (p == 2.0 ? r * r : std::pow(r, p));
    }
  return c;
}

/// W_p by exact network simplex with the Euclidean ground metric.
inline std::pair<double, TransportPlan> w_exact(double p, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                               double max_arcs = kDefaultMaxArcs) {
  require(p >= 1.0, Errc::InvalidArgument, "W_p needs p >= 1");
  require(mu.dim() == nu.dim(), Errc::DimensionMismatch, "measures differ in dimension");
  TransportPlan plan = solve_transport(mu.weights(), nu.weights(), ground_cost(mu, nu, p), max_arcs);
  plan.p = p;
  return {std::pow(std::max(0.0, plan.cost), 1.0 / p), std::move(plan)};
}

/// Minimum over all n! matchings; uniform equal-size inputs, n <= 8.
inline double w_brute(double p, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(p >= 1.0, Errc::InvalidArgument, "W_p needs p >= 1");
  require(mu.size() == nu.size(), Errc::InvalidArgument, "brute force needs equal atom counts");
  require(mu.size() <= 8, Errc::SizeGuard, "brute force is limited to n <= 8");
  require(mu.has_uniform_weights() && nu.has_uniform_weights(), Errc::NonuniformWeights,
          "brute force needs uniform weights");
  const auto n = mu.size();
  const std::vector<double> c = ground_cost(mu, nu, p);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += c[static_cast<std::size_t>(i * n + perm[static_cast<std::size_t>(i)])];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / static_cast<double>(n), 1.0 / p);
}

namespace detail {

struct Sorted1D {
  std::vector<double> x;
  std::vector<double> w;
};

inline Sorted1D sorted_atoms(const DiscreteMeasure& mu) {
  require(mu.dim() == 1, Errc::DimensionMismatch, "1-D transport needs one-dimensional measures");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(mu.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return mu.points()(a, 0) < mu.points()(b, 0); });
  Sorted1D s;
  for (auto i : idx) {
    s.x.push_back(mu.points()(i, 0));
    s.w.push_back(mu.weight(i));
  }
  return s;
}

inline double pow_abs(double t, double p) {
  t = std::abs(t);
  return p == 1.0 ? t : (p == 2.0 ? t * t : std::pow(t, p));
}

/// sum over the monotone coupling of sorted atoms, walking merged CDF breakpoints.
inline double w1d_sorted_pp(double p, const Sorted1D& a, const Sorted1D& b) {
  std::size_t i = 0, j = 0;
  double ra = a.w[0], rb = b.w[0], acc = 0.0;
  while (i < a.x.size() && j < b.x.size()) {
    const double mass = std::min(ra, rb);
    acc += mass * pow_abs(a.x[i] - b.x[j], p);
    ra -= mass;  // at least one of the two hits exactly zero
    rb -= mass;
    if (ra <= 0.0 && ++i < a.x.size()) ra = a.w[i];
    if (rb <= 0.0 && ++j < b.x.size()) rb = b.w[j];
  }
  return acc;
}

inline double integrate_unit(const std::function<double(double, double)>& h, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts(12);
  return ts.integrate(h, a, b, 1e-10);
}

/// int_qa^qb h(q, 1 - q) dq, with 1 - q carried separately so tails keep precision.
inline double integrate_quantiles(const std::function<double(double, double)>& h, double qa, double qb) {
  auto g = [&](double t, double tc) {
    // tanh-sinh hands over the signed distance to the nearer endpoint
    if (tc < 0.0) return h(qa - tc, (1.0 - qa) + tc);
    return h(qb - tc, (1.0 - qb) + tc);
  };
  return integrate_unit(g, qa, qb);
}

inline double mixture_quantile(const GaussianMixture& g, double q, double qc) {
  return q <= 0.5 ? gmm_tail_quantile(g, q, false) : gmm_tail_quantile(g, qc, true);
}

/// Levels q where the two quantile functions cross, i.e. F(x) = G(x), sorted.
inline std::vector<double> crossing_levels(const GaussianMixture& mu, const GaussianMixture& nu) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const GaussianMixture* g : {&mu, &nu})
    for (Eigen::Index k = 0; k < g->components(); ++k) {
      lo = std::min(lo, g->means()(k, 0) - 10.0 * g->sigmas()[k]);
      hi = std::max(hi, g->means()(k, 0) + 10.0 * g->sigmas()[k]);
    }
  auto diff = [&](double x) { return mu.cdf(x) - nu.cdf(x); };
  constexpr int steps = 4000;
  std::vector<double> out;
  double x0 = lo, f0 = diff(lo);
  for (int i = 1; i <= steps; ++i) {
    const double x1 = lo + (hi - lo) * i / steps, f1 = diff(x1);
    if ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0)) {
      std::uintmax_t iters = 100;
      const auto r = boost::math::tools::toms748_solve(diff, x0, x1, f0, f1, boost::math::tools::eps_tolerance<double>(50), iters);
      const double q = mu.cdf(0.5 * (r.first + r.second));
      if (q > 0.0 && q < 1.0) out.push_back(q);
    }
    x0 = x1;
    f0 = f1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// W_p between 1-D discrete measures from the quantile coupling, exact.
inline double w1d(double p, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(p >= 1.0, Errc::InvalidArgument, "W_p needs p >= 1");
  const auto a = detail::sorted_atoms(mu), b = detail::sorted_atoms(nu);
  return std::pow(std::max(0.0, detail::w1d_sorted_pp(p, a, b)), 1.0 / p);
}

/// W_p between 1-D mixtures: int_0^1 |F^{-1}(q) - G^{-1}(q)|^p dq by tanh-sinh quadrature,
/// with tail quantiles solved on the survival function.
inline double w1d(double p, const GaussianMixture& mu, const GaussianMixture& nu) {
  require(p >= 1.0, Errc::InvalidArgument, "W_p needs p >= 1");
  require(mu.dim() == 1 && nu.dim() == 1, Errc::DimensionMismatch, "1-D transport needs one-dimensional measures");
  auto h = [&](double q, double qc) {
    return detail::pow_abs(detail::mixture_quantile(mu, q, qc) - detail::mixture_quantile(nu, q, qc), p);
  };
  // the integrand has a kink wherever the quantile functions cross
  std::vector<double> cuts = detail::crossing_levels(mu, nu);
  cuts.insert(cuts.begin(), 0.0);
  cuts.push_back(1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    if (cuts[i + 1] > cuts[i]) acc += detail::integrate_quantiles(h, cuts[i], cuts[i + 1]);
  return std::pow(std::max(0.0, acc), 1.0 / p);
}

/// Mixed case: the discrete quantile is a step function, so integrate piece by piece,
/// also splitting where the mixture quantile crosses the step value.
inline double w1d(double p, const DiscreteMeasure& mu, const GaussianMixture& nu) {
  require(p >= 1.0, Errc::InvalidArgument, "W_p needs p >= 1");
  require(nu.dim() == 1, Errc::DimensionMismatch, "1-D transport needs one-dimensional measures");
  const auto a = detail::sorted_atoms(mu);
  double acc = 0.0, lo = 0.0;
  for (std::size_t k = 0; k < a.x.size(); ++k) {
    const double hi = k + 1 == a.x.size() ? 1.0 : std::min(1.0, lo + a.w[k]);
    if (hi > lo) {
      const double x = a.x[k];
      // absolute q for points of the sub-interval, from tanh-sinh's (t, tc) pair
      auto piece = [&](double qa, double qb) {
        auto h = [&](double q, double qc) { return detail::pow_abs(x - detail::mixture_quantile(nu, q, qc), p); };
        return detail::integrate_quantiles(h, qa, qb);
      };
      const double qx = nu.cdf(x);
      if (qx > lo && qx < hi)
        acc += piece(lo, qx) + piece(qx, hi);
      else
        acc += piece(lo, hi);
    }
    lo = hi;
  }
  return std::pow(std::max(0.0, acc), 1.0 / p);
}

inline double w1d(double p, const GaussianMixture& mu, const DiscreteMeasure& nu) { return w1d(p, nu, mu); }

/// Average over directions of W_1 between the projections.
inline double sliced_w1(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Matrix& theta_set) {
  require(theta_set.rows() >= 1, Errc::EmptyInput, "empty direction set");
  require(mu.dim() == nu.dim() && theta_set.cols() == mu.dim(), Errc::DimensionMismatch,
          "direction and measure dimensions differ");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < theta_set.rows(); ++t) {
    const auto th = row(theta_set, t);
    acc += w1d(1.0, project(mu, th), project(nu, th));
  }
  return acc / static_cast<double>(theta_set.rows());
}

struct TranslationSplit {
  double centered_w2_sq = 0.0;
  double mean_gap_sq = 0.0;
};

/// W_2^2 = W_2^2(centered) + |m(mu) - m(nu)|^2.
inline TranslationSplit translation_split(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                          double max_arcs = kDefaultMaxArcs) {
  const double w = w_exact(2.0, centered(mu), centered(nu), max_arcs).first;
  return {w * w, (mean(mu) - mean(nu)).squaredNorm()};
}

/// W_p between two discrete measures, 1-D closed form when possible.
inline double w_discrete(double p, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         double max_arcs = kDefaultMaxArcs) {
  if (mu.dim() == 1) return w1d(p, mu, nu);
  return w_exact(p, mu, nu, max_arcs).first;
}

enum class WRateMode { ExactReference, ReferenceSample, TwoSample };

/// E W_p(pi, pi_n) over a geometric n grid.
///
/// Discrete pi is used as is. A continuous pi in 1-D is replaced by a fixed reference
/// sample of size ref_factor * max n; in higher dimension the exact solver cannot take
/// such a reference, so W_p(pi_n, pi'_n) between two independent samples is measured.
inline RateResult w_rate(const Measure& pi, double p, const std::vector<std::size_t>& n_grid, std::size_t trials,
                         std::uint64_t seed, unsigned threads = 1, std::size_t ref_factor = 64,
                         double max_arcs = 4.2e6, WRateMode* mode_out = nullptr) {
  validate_rate_grid(n_grid, trials);
  const auto d = dim(pi);
  WRateMode mode = WRateMode::ExactReference;
  std::optional<DiscreteMeasure> ref;
  if (const auto* disc = std::get_if<DiscreteMeasure>(&pi)) {
    ref = *disc;
  } else if (d == 1) {
    mode = WRateMode::ReferenceSample;
    Rng rr(seed, 0xFEEDull);
    ref = sample(pi, ref_factor * n_grid.back(), rr);
  } else {
    mode = WRateMode::TwoSample;
  }
  if (mode_out) *mode_out = mode;
  std::optional<detail::Sorted1D> ref_sorted;
  if (ref && d == 1) ref_sorted = detail::sorted_atoms(*ref);
  std::vector<std::vector<double>> values(n_grid.size(), std::vector<double>(trials));
  parallel_for(n_grid.size() * trials, threads, [&](std::size_t idx) {
    const std::size_t i = idx / trials, t = idx % trials;
    Rng rng(seed, idx);
    const DiscreteMeasure s = sample(pi, n_grid[i], rng);
    double v;
    if (mode == WRateMode::TwoSample) {
      const DiscreteMeasure s2 = sample(pi, n_grid[i], rng);
      v = w_exact(p, s, s2, max_arcs).first;
    } else if (d == 1) {
      v = std::pow(std::max(0.0, detail::w1d_sorted_pp(p, *ref_sorted, detail::sorted_atoms(s))), 1.0 / p);
    } else {
      v = w_exact(p, *ref, s, max_arcs).first;
    }
    values[i][t] = v;
  });
  return finish_rate(n_grid, values);
}

}  // namespace wmmd
