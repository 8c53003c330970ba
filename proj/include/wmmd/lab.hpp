#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "wmmd/discrepancy.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/report.hpp"
#include "wmmd/rng.hpp"
#include "wmmd/slope.hpp"
#include "wmmd/tasks.hpp"
#include "wmmd/transport.hpp"

namespace wmmd {

// ---------------------------------------------------------------------------
// Constructions
// ---------------------------------------------------------------------------

struct BinomialCoefficients {
  std::vector<std::int64_t> alpha;  // 1..k+1
  std::vector<std::int64_t> beta;   // (-1)^{i-1} C(k, i-1)
};

/// sum_i beta_i alpha_i^s in exact integer arithmetic.
inline boost::multiprecision::cpp_int binomial_moment(const BinomialCoefficients& c, int s) {
  boost::multiprecision::cpp_int acc = 0;
  for (std::size_t i = 0; i < c.alpha.size(); ++i) {
    boost::multiprecision::cpp_int term = c.beta[i];
    for (int e = 0; e < s; ++e) term *= c.alpha[i];
    acc += term;
  }
  return acc;
}

/// alpha_i = i, beta_i = (-1)^{i-1} C(k, i-1); moments 0..k-1 of beta vanish.
inline BinomialCoefficients binomial_construction(int k) {
  require(k >= 1, Errc::InvalidArgument, "k must be >= 1");
  require(k <= 60, Errc::InvalidArgument, "k above 60 overflows 64-bit binomials");
  BinomialCoefficients c;
  std::int64_t binom = 1;
  for (int i = 0; i <= k; ++i) {
    c.alpha.push_back(i + 1);
    c.beta.push_back(i % 2 == 0 ? binom : -binom);
    binom = binom * (k - i) / (i + 1);
  }
  for (int s = 0; s < k; ++s)
    require(binomial_moment(c, s) == 0, Errc::ConstraintViolation, "moment condition fails at s=" + std::to_string(s));
  return c;
}

struct BinomialDiracs {
  int k = 2;
  Vector x0 = Vector::Zero(1);
  double radius = 1.0;
  Vector direction = Vector::Ones(1);
};

/// Positive and negative parts of sum_i beta_i delta_{x0 + eps alpha_i u}, each normalized.
inline std::pair<DiscreteMeasure, DiscreteMeasure> dirac_pair(const BinomialDiracs& c, double eps) {
  require(c.x0.size() == c.direction.size(), Errc::DimensionMismatch, "x0 and direction differ in dimension");
  const BinomialCoefficients bc = binomial_construction(c.k);
  const double amax = static_cast<double>(bc.alpha.back());
  require(eps > 0.0 && eps < c.radius / (amax * c.direction.norm()), Errc::InvalidArgument, "eps out of range");
  const auto d = c.x0.size();
  std::vector<Eigen::Index> pos, neg;
  for (std::size_t i = 0; i < bc.beta.size(); ++i) (bc.beta[i] > 0 ? pos : neg).push_back(static_cast<Eigen::Index>(i));
  auto build = [&](const std::vector<Eigen::Index>& idx) {
    Matrix p(static_cast<Eigen::Index>(idx.size()), d);
    Vector w(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      const auto i = static_cast<std::size_t>(idx[r]);
      p.row(static_cast<Eigen::Index>(r)) = (c.x0 + eps * static_cast<double>(bc.alpha[i]) * c.direction).transpose();
      w[static_cast<Eigen::Index>(r)] = std::abs(static_cast<double>(bc.beta[i]));
    }
    return DiscreteMeasure(std::move(p), std::move(w));
  };
  return {build(pos), build(neg)};
}

/// (1/2)((1+l) pi0 + (1-l) pi1) and (1/2)((1-l) pi0 + (1+l) pi1).
inline std::pair<DiscreteMeasure, DiscreteMeasure> disjoint_segment(const DiscreteMeasure& pi0, const DiscreteMeasure& pi1,
                                                                    double lambda) {
  require(pi0.dim() == pi1.dim(), Errc::DimensionMismatch, "measures differ in dimension");
  require(lambda >= 0.0 && lambda <= 1.0, Errc::InvalidArgument, "lambda must lie in [0,1]");
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < pi0.size(); ++i)
    for (Eigen::Index j = 0; j < pi1.size(); ++j) gap = std::min(gap, std::sqrt(squared_distance(pi0.point(i), pi1.point(j))));
  require(gap >= 1e-9, Errc::OverlappingSupports, "supports are not disjoint");
  const auto n0 = pi0.size(), n1 = pi1.size();
  Matrix p(n0 + n1, pi0.dim());
  p.topRows(n0) = pi0.points();
  p.bottomRows(n1) = pi1.points();
  Vector a(n0 + n1), b(n0 + n1);
  a.head(n0) = 0.5 * (1.0 + lambda) * pi0.weights();
  a.tail(n1) = 0.5 * (1.0 - lambda) * pi1.weights();
  b.head(n0) = 0.5 * (1.0 - lambda) * pi0.weights();
  b.tail(n1) = 0.5 * (1.0 + lambda) * pi1.weights();
  return {DiscreteMeasure(p, a), DiscreteMeasure(p, b)};
}

/// max(1, sigma_min^{1-s}) sum_{n=1}^{s} sqrt(n!): Sobolev W^{s,1} radius of 1-D GMMs.
inline double gmm_sobolev_constant(double sigma_min, int s) {
  require(sigma_min > 0.0 && s >= 1, Errc::InvalidArgument, "need sigma_min > 0 and s >= 1");
  double acc = 0.0;
  for (int n = 1; n <= s; ++n) acc += std::exp(0.5 * std::lgamma(n + 1.0));
  return std::max(1.0, std::pow(sigma_min, 1.0 - s)) * acc;
}

// ---------------------------------------------------------------------------
// Model sets
// ---------------------------------------------------------------------------

namespace detail {

inline Vector dirichlet(Eigen::Index K, Rng& rng) {
  Vector w(K);
  for (Eigen::Index k = 0; k < K; ++k) w[k] = rng.gamma(1.0);
  if (w.sum() <= 0.0) w.setOnes();
  return w / w.sum();
}

}  // namespace detail

inline GaussianMixture sample_gmm(const Gmm1DModel& m, Rng& rng, bool centered = false) {
  Vector w = detail::dirichlet(m.K, rng);
  Matrix c(m.K, 1);
  Vector s(m.K);
  for (int k = 0; k < m.K; ++k) {
    c(k, 0) = rng.uniform(-m.mean_window, m.mean_window);
    s[k] = rng.uniform(m.sigma_min, m.sigma_max);
  }
  if (centered) c.array() -= w.dot(c.col(0));
  return GaussianMixture(w, c, s);
}

inline DiscreteMeasure sample_dirac_mixture(const DiracMixtureModel& m, Rng& rng) {
  const auto d = m.center.size();
  Matrix p(m.K, d);
  for (int k = 0; k < m.K; ++k) p.row(k) = (m.center + detail::random_in_ball(d, m.radius, rng)).transpose();
  return DiscreteMeasure(p, detail::dirichlet(m.K, rng));
}

/// Atoms drawn in a ball, then shrunk if needed so that E|x|^s <= M.
inline DiscreteMeasure sample_bounded_moment(const BoundedMomentModel& m, Rng& rng) {
  const double r = std::pow(m.M, 1.0 / m.s);
  Matrix p(m.atoms, m.d);
  for (int i = 0; i < m.atoms; ++i) p.row(i) = detail::random_in_ball(m.d, r, rng).transpose();
  DiscreteMeasure mu(p, detail::dirichlet(m.atoms, rng));
  const double ms = moment_s(mu, m.s);
  if (ms > m.M) return DiscreteMeasure(mu.points() * std::pow(m.M / ms, 1.0 / m.s), mu.weights());
  return mu;
}

inline std::pair<Measure, Measure> sample_model_pair(const ModelSetSpec& spec, Rng& rng, bool same_mean = false) {
  spec.validate();
  return std::visit(
      [&](const auto& m) -> std::pair<Measure, Measure> {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DiracMixtureModel>) {
          DiscreteMeasure a = sample_dirac_mixture(m, rng), b = sample_dirac_mixture(m, rng);
          if (same_mean) b = translated(b, mean(a) - mean(b));
          return {a, b};
        } else if constexpr (std::is_same_v<T, Gmm1DModel>) {
          return {sample_gmm(m, rng, same_mean), sample_gmm(m, rng, same_mean)};
        } else {
          DiscreteMeasure a = sample_bounded_moment(m, rng), b = sample_bounded_moment(m, rng);
          if (same_mean) b = translated(b, mean(a) - mean(b));
          return {a, b};
        }
      },
      spec.variant);
}

/// W_p by the cheapest exact route for the pair.
inline double w_between(double p, const Measure& a, const Measure& b) {
  require(dim(a) == dim(b), Errc::DimensionMismatch, "measures differ in dimension");
  if (dim(a) == 1) {
    return std::visit(
        [&](const auto& x, const auto& y) -> double {
          using X = std::decay_t<decltype(x)>;
          using Y = std::decay_t<decltype(y)>;
          if constexpr (std::is_same_v<X, UniformBox> || std::is_same_v<Y, UniformBox>) {
            throw Error(Errc::UnsupportedFamily, "W_p needs discrete or Gaussian-mixture inputs");
          } else {
            return w1d(p, x, y);
          }
        },
        a, b);
  }
  const auto* x = std::get_if<DiscreteMeasure>(&a);
  const auto* y = std::get_if<DiscreteMeasure>(&b);
  require(x && y, Errc::UnsupportedFamily, "W_p in d > 1 needs discrete inputs");
  return w_exact(p, *x, *y).first;
}

/// MMD by the closed form matching the pair and kernel.
inline double mmd_between(const KernelSpec& k, const Measure& a, const Measure& b) {
  const auto* x = std::get_if<DiscreteMeasure>(&a);
  const auto* y = std::get_if<DiscreteMeasure>(&b);
  if (x && y) return mmd_discrete(k, *x, *y).value;
  require(!std::holds_alternative<UniformBox>(a) && !std::holds_alternative<UniformBox>(b), Errc::UnsupportedFamily,
          "MMD needs discrete or Gaussian-mixture inputs");
  auto iso = [](const Measure& m) {
    return std::holds_alternative<DiscreteMeasure>(m) ? as_mixture(std::get<DiscreteMeasure>(m))
                                                      : as_mixture(std::get<GaussianMixture>(m));
  };
  if (detail::gaussian_spectrum(k)) return mmd_gmm_gaussian(k, iso(a), iso(b)).value;
  require(dim(a) == 1, Errc::UnsupportedKernel, "mixtures with this kernel need d = 1");
  return mmd_spectral_1d(k, iso(a), iso(b)).value;
}

// ---------------------------------------------------------------------------
// Bounds
// ---------------------------------------------------------------------------

struct FourierBound {
  double w2 = 0.0;
  double mmd = 0.0;
  double integral = 0.0;  // int |f^ - g^|^2 / (w^4 kappa0^) dw over R
  double rhs = 0.0;       // (2 pi)^{-1/4} integral^{1/4} mmd^{1/2}
  double cdf_l2 = 0.0;    // (int |F - G|^2 dx)^{1/2}, which the same chain bounds
  bool holds = true;
};

/// W_2 against the Fourier-quadrature bound for two same-mean 1-D mixtures.
inline FourierBound fourier_bound_1d(const KernelSpec& k, const GaussianMixture& mu, const GaussianMixture& nu) {
  require(mu.dim() == 1 && nu.dim() == 1, Errc::DimensionMismatch, "fourier bound is one-dimensional");
  require(k.d == 1 && k.translation_invariant(), Errc::UnsupportedKernel, "need a 1-D translation-invariant kernel");
  const double m = mean(mu)[0], m2 = mean(nu)[0];
  require(std::abs(m - m2) <= 1e-9 * std::max(1.0, std::abs(m)), Errc::MismatchedMeans, "means differ");

  struct Comp {
    double w, d, s2;
  };
  std::vector<Comp> comps;
  double dm2 = 0.0;  // difference of second central moments
  for (Eigen::Index i = 0; i < mu.components(); ++i) {
    const double d = mu.means()(i, 0) - m, s2 = mu.sigmas()[i] * mu.sigmas()[i];
    comps.push_back({mu.weights()[i], d, s2});
    dm2 += mu.weights()[i] * (d * d + s2);
  }
  for (Eigen::Index i = 0; i < nu.components(); ++i) {
    const double d = nu.means()(i, 0) - m, s2 = nu.sigmas()[i] * nu.sigmas()[i];
    comps.push_back({-nu.weights()[i], d, s2});
    dm2 -= nu.weights()[i] * (d * d + s2);
  }
  double spread = 0.0;
  for (const auto& c : comps) spread = std::max({spread, std::abs(c.d), std::sqrt(c.s2)});
  const double w0 = 1e-5 / std::max(1.0, spread);
  const double limit = 0.25 * dm2 * dm2 / fourier_kappa0(k, 0.0);

  // expm1(-i w d - s2 w^2 / 2) summed with signed weights; the constant terms cancel.
  auto integrand = [&](double w) -> double {
    if (w < w0) return limit;
    double re = 0.0, im = 0.0;
    for (const auto& c : comps) {
      const double a = -0.5 * c.s2 * w * w, b = -w * c.d;
      const double sh = std::sin(0.5 * b);
      re += c.w * (std::expm1(a) * std::cos(b) - 2.0 * sh * sh);
      im += c.w * std::exp(a) * std::sin(b);
    }
    const double w2 = w * w;
    return (re * re + im * im) / (w2 * w2 * fourier_kappa0(k, w));
  };

  FourierBound out;
  double err = 0.0, l1 = 0.0;
  try {
    boost::math::quadrature::exp_sinh<double> es(12);
    out.integral = 2.0 * es.integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), 1e-10, &err, &l1);
  } catch (const std::exception& e) {
    throw Error(Errc::DivergentIntegral, std::string("quadrature failed: ") + e.what());
  }
  require(std::isfinite(out.integral) && err <= 1e-6 * std::max(l1, 1e-300) + 1e-300, Errc::DivergentIntegral,
          "spectral weight integral does not converge");
  out.w2 = w1d(2.0, mu, nu);
  {
    const double half = 12.0 * spread + 1.0;
    auto diff2 = [&](double x) {
      const double v = mu.cdf(x) - nu.cdf(x);
      return v * v;
    };
    out.cdf_l2 = std::sqrt(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(diff2, m - half, m + half, 20, 1e-12));
  }
  out.mmd = mmd_between(k, mu, nu);
  out.rhs = std::pow(2.0 * std::numbers::pi, -0.25) * std::pow(out.integral, 0.25) * std::sqrt(out.mmd);
  out.holds = out.w2 <= out.rhs * (1.0 + 1e-3);
  return out;
}

/// pi^{d/2} Gamma(d/2 + 1), as the constant is written (not the unit-ball volume).
inline double vd_literal(int d) { return std::pow(std::numbers::pi, 0.5 * d) * std::tgamma(0.5 * d + 1.0); }

struct SmoothingTerms {
  double w = 0.0;            // W_p(mu, nu)
  double mmd = 0.0;          // MMD under the convolution-root kernel
  double c_dsp = 0.0;        // 2^{1/p+1-1/s} V_d^{(s-p)/((d+2s)p)}
  double c_prime = 0.0;      // c_dsp 2^{(s+1)(2p+d)/((d+2s)p)}
  double main = 0.0;         // c_dsp (M + m_s(alpha))^a mmd^b
  double main_prime = 0.0;   // same with c_prime
  double error = 0.0;        // 2 (int |z|^p alpha)^{1/p}
  double error_rbf = 0.0;    // 2 sigma sqrt(d), the Jensen bound of `error` for p = 1
  double rhs = 0.0;          // main_prime + error
  double rhs_plain = 0.0;    // main + error
  bool holds = true;
};

/// Smoothing chain W_p <= C (M + m_s(alpha))^a MMD^b + 2 (int |z|^p alpha)^{1/p}.
inline SmoothingTerms smoothing_bound(const RegularizerSpec& alpha, double p, const DiscreteMeasure& mu,
                                      const DiscreteMeasure& nu, double s, double M) {
  alpha.validate();
  require(mu.dim() == nu.dim(), Errc::DimensionMismatch, "measures differ in dimension");
  require(p >= 1.0 && s > p, Errc::InvalidArgument, "need 1 <= p < s");
  require(moment_s(mu, s) <= M * (1.0 + 1e-12) && moment_s(nu, s) <= M * (1.0 + 1e-12), Errc::MomentPrecondition,
          "s-th moment exceeds M");
  const int d = static_cast<int>(mu.dim());
  const double dd = d;
  const double a = (2.0 * p + dd) / ((dd + 2.0 * s) * p);
  const double b = 2.0 * (s - p) / ((dd + 2.0 * s) * p);
  SmoothingTerms t;
  t.w = w_discrete(p, mu, nu);
  t.mmd = mmd_discrete(KernelSpec::convroot(alpha.sigma, d), mu, nu).value;
  t.c_dsp = std::pow(2.0, 1.0 / p + 1.0 - 1.0 / s) * std::pow(vd_literal(d), (s - p) / ((dd + 2.0 * s) * p));
  t.c_prime = std::pow(2.0, (s + 1.0) * a) * t.c_dsp;
  const double base = std::pow(M + alpha.abs_moment(s, d), a) * std::pow(t.mmd, b);
  t.main = t.c_dsp * base;
  t.main_prime = t.c_prime * base;
  t.error = 2.0 * std::pow(alpha.abs_moment(p, d), 1.0 / p);
  t.error_rbf = 2.0 * alpha.sigma * std::sqrt(dd);
  t.rhs = t.main_prime + t.error;
  t.rhs_plain = t.main + t.error;
  t.holds = t.w <= t.rhs + 1e-12;
  return t;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> geometric_grid(double first, double ratio, int count) {
  std::vector<double> g;
  for (int i = 0; i < count; ++i) g.push_back(first * std::pow(ratio, i));
  return g;
}

inline DiscreteMeasure random_discrete(Eigen::Index n, Eigen::Index d, double radius, Rng& rng, bool uniform = false) {
  Matrix p(n, d);
  for (Eigen::Index i = 0; i < n; ++i) p.row(i) = random_in_ball(d, radius, rng).transpose();
  if (uniform) return DiscreteMeasure::uniform(std::move(p));
  return DiscreteMeasure(std::move(p), dirichlet(n, rng));
}

/// Ratio of the empirical sup over all trials to the sup over the first half.
inline double sup_growth(const std::vector<double>& v) {
  if (v.size() < 2) return 1.0;
  const double half = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2));
  const double all = *std::max_element(v.begin(), v.end());
  return half > 0.0 ? all / half : (all > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
}

}  // namespace detail

struct CounterexampleConfig {
  int k = 4;
  KernelSpec kernel = KernelSpec::gaussian(1.0, 1);
  double p = 1.0;
  double delta = 1.0;
  std::vector<double> eps = detail::geometric_grid(0.5, 0.5, 6);  // 2^-1 .. 2^-6
  double radius = 10.0;
};

/// Binomial Dirac path: W_p is linear in eps while the MMD decays like eps^{k/2} or faster,
/// so W / MMD^delta blows up for delta > 2/k.
inline Report run_counterexample(const CounterexampleConfig& c, std::uint64_t seed = 0) {
  Report r;
  r.experiment = "counterexample";
  r.seed = seed;
  r.columns = {"eps", "w", "mmd", "ratio"};
  const int d = c.kernel.d;
  Vector u = Vector::Zero(d);
  u[0] = 1.0;
  std::vector<double> ws, ms, ratios;
  for (double e : c.eps) {
    const auto [a, b] = dirac_pair(BinomialDiracs{c.k, Vector::Zero(d), c.radius, u}, e);
    const double w = w_discrete(c.p, a, b);
    const double m = mmd_discrete(c.kernel, a, b).value;
    const double ratio = w / std::pow(m, c.delta);
    r.add_row({e, w, m, ratio});
    ws.push_back(w);
    ms.push_back(m);
    ratios.push_back(ratio);
  }
  const SlopeFit fw = scaling_exponent(c.eps, ws), fm = scaling_exponent(c.eps, ms);
  const double growth = ratios.back() / ratios.front();
  r.slopes["w"] = slope_to_json(fw);
  r.slopes["mmd"] = slope_to_json(fm);
  r.extra["slope_w"] = fw.slope;
  r.extra["slope_mmd"] = fm.slope;
  r.extra["k"] = c.k;
  r.extra["delta"] = c.delta;
  r.extra["ratio_growth"] = growth;
  r.margins["slope_w"] = 1e-6 - std::abs(fw.slope - 1.0);
  r.margins["slope_mmd_vs_half_k"] = fm.slope - (0.5 * c.k - 0.05);
  // the theorem's claim: MMD = O(eps^{k/2}), W linear, ratio diverges when delta > 2/k
  const bool diverges = growth >= 10.0;
  r.pass = std::abs(fw.slope - 1.0) <= 1e-6 && fm.slope >= 0.5 * c.k - 0.05 &&
           (c.delta * c.k > 2.0 ? diverges : true);
  return r;
}

struct SegmentConfig {
  KernelSpec kernel = KernelSpec::gaussian(1.0, 1);
  double p = 2.0;
  std::vector<double> lambda = detail::geometric_grid(0.5, 0.5, 6);
};

/// delta_0 / delta_1 segment: W_p ~ lambda^{1/p}, MMD ~ lambda.
inline Report run_disjoint_segment(const SegmentConfig& c, std::uint64_t seed = 0) {
  Report r;
  r.experiment = "disjoint-segment";
  r.seed = seed;
  r.columns = {"lambda", "w", "mmd"};
  const int d = c.kernel.d;
  Vector x1 = Vector::Zero(d);
  x1[0] = 1.0;
  const DiscreteMeasure p0 = DiscreteMeasure::dirac(Vector::Zero(d)), p1 = DiscreteMeasure::dirac(x1);
  std::vector<double> ws, ms;
  for (double l : c.lambda) {
    const auto [a, b] = disjoint_segment(p0, p1, l);
    ws.push_back(w_discrete(c.p, a, b));
    ms.push_back(mmd_discrete(c.kernel, a, b).value);
    r.add_row({l, ws.back(), ms.back()});
  }
  const SlopeFit fw = scaling_exponent(c.lambda, ws), fm = scaling_exponent(c.lambda, ms);
  r.slopes["w"] = slope_to_json(fw);
  r.slopes["mmd"] = slope_to_json(fm);
  r.margins["slope_w"] = 0.02 - std::abs(fw.slope - 1.0 / c.p);
  r.margins["slope_mmd"] = 1e-6 - std::abs(fm.slope - 1.0);
  r.pass = r.margins["slope_w"].get<double>() >= 0.0 && r.margins["slope_mmd"].get<double>() >= 0.0;
  return r;
}

struct RatesConfig {
  std::vector<std::size_t> n_grid = {64, 128, 256, 512, 1024, 2048, 4096, 8192};
  std::size_t trials = 50;
  unsigned threads = 1;
  int d_mmd = 3;
  double sigma = 1.0;
  std::vector<int> w_dims = {1, 3};
  std::vector<std::size_t> w_grid_high_d = {64, 128, 256, 512, 1024};
};

inline void append_rate_rows(Report& r, double tag, const RateResult& rr) {
  for (std::size_t i = 0; i < rr.n.size(); ++i)
    r.add_row({tag, static_cast<double>(rr.n[i]), rr.mean[i], rr.stderr_mean[i],
               i < rr.bound.size() ? rr.bound[i] : std::numeric_limits<double>::quiet_NaN()});
}

/// MMD rate for N(0, I) under a Gaussian kernel and W_1 rates for uniform cubes.
/// Tag column: 0 for the MMD rate, d for the W_1 rate in dimension d.
inline Report run_rates(const RatesConfig& c, std::uint64_t seed) {
  Report r;
  r.experiment = "rates";
  r.seed = seed;
  r.columns = {"tag", "n", "mean", "stderr", "bound"};
  bool pass = true;
  {
    const Measure pi = GaussianMixture::isotropic(Vector::Zero(c.d_mmd), 1.0);
    const RateResult rr = mmd_rate(pi, KernelSpec::gaussian(c.sigma, c.d_mmd), c.n_grid, c.trials, seed, c.threads);
    append_rate_rows(r, 0.0, rr);
    r.slopes["mmd"] = slope_to_json(rr.fit);
    const double margin = 0.05 - std::abs(rr.fit.slope + 0.5);
    r.margins["mmd_slope"] = margin;
    bool under = true;
    for (std::size_t i = 0; i < rr.n.size(); ++i) under = under && rr.mean[i] <= rr.bound[i];
    r.extra["mmd_under_bound"] = under;
    pass = pass && margin >= 0.0 && under;
  }
  for (int d : c.w_dims) {
    const Measure pi = UniformBox{Vector::Zero(d), Vector::Ones(d)};
    const auto& grid = d == 1 ? c.n_grid : c.w_grid_high_d;
    WRateMode mode;
    const RateResult rr = w_rate(pi, 1.0, grid, c.trials, seed + static_cast<std::uint64_t>(d), c.threads, 64, 4.2e6, &mode);
    append_rate_rows(r, d, rr);
    const std::string key = "w1_d" + std::to_string(d);
    r.slopes[key] = slope_to_json(rr.fit);
    const double margin = 0.07 - std::abs(rr.fit.slope + 1.0 / d);
    r.margins[key] = margin;
    r.extra[key + "_mode"] = static_cast<int>(mode);
    pass = pass && margin >= 0.0;
  }
  r.pass = pass;
  return r;
}

struct FourierConfig {
  int pairs = 100;
  Gmm1DModel model{3, 0.5, 1.5, 2.0};
  KernelSpec kernel = KernelSpec::matern(0.5, 1.0, 1);
};

inline Report run_fourier_bound(const FourierConfig& c, std::uint64_t seed) {
  Report r;
  r.experiment = "fourier-bound";
  r.seed = seed;
  r.columns = {"pair", "w2", "mmd", "integral", "rhs", "ratio", "cdf_l2", "ok"};
  double worst = 0.0;
  for (int i = 0; i < c.pairs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const GaussianMixture a = sample_gmm(c.model, rng, true), b = sample_gmm(c.model, rng, true);
    const FourierBound f = fourier_bound_1d(c.kernel, a, b);
    const double ratio = f.rhs > 0.0 ? f.w2 / f.rhs : 0.0;
    worst = std::max(worst, ratio);
    r.add_row({static_cast<double>(i), f.w2, f.mmd, f.integral, f.rhs, ratio, f.cdf_l2, f.holds ? 1.0 : 0.0});
    r.pass = r.pass && f.holds;
  }
  r.margins["worst_ratio"] = worst;
  r.extra["sobolev_constant_s3"] = gmm_sobolev_constant(c.model.sigma_min, 3);
  return r;
}

struct SmoothingConfig {
  int pairs = 50;
  int atoms = 8;
  int d = 3;
  double s = 4.0;
  double p = 1.0;
  double M = 1.0;
  std::vector<double> sigmas = {0.1, 0.2, 0.4};
};

/// Pairs in the unit ball (so E|x|^s <= 1 = M) against the smoothing chain for each sigma.
inline Report run_smoothing(const SmoothingConfig& c, std::uint64_t seed) {
  Report r;
  r.experiment = "smoothing";
  r.seed = seed;
  r.columns = {"pair", "sigma", "w", "mmd", "main", "main_prime", "error", "error_rbf", "rhs", "ok"};
  const double radius = std::pow(c.M, 1.0 / c.s);
  for (int i = 0; i < c.pairs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const DiscreteMeasure a = detail::random_discrete(c.atoms, c.d, radius, rng);
    const DiscreteMeasure b = detail::random_discrete(c.atoms, c.d, radius, rng);
    for (double sg : c.sigmas) {
      const SmoothingTerms t = smoothing_bound(RegularizerSpec{sg}, c.p, a, b, c.s, c.M);
      r.add_row({static_cast<double>(i), sg, t.w, t.mmd, t.main, t.main_prime, t.error, t.error_rbf, t.rhs,
                 t.holds ? 1.0 : 0.0});
      r.pass = r.pass && t.holds;
    }
  }
  // error term against sigma: exactly proportional, checked through the fitted exponent and ratios
  std::vector<double> err, err_rbf;
  const int d = c.d;
  for (double sg : c.sigmas) {
    err.push_back(2.0 * std::pow(RegularizerSpec{sg}.abs_moment(c.p, d), 1.0 / c.p));
    err_rbf.push_back(2.0 * sg * std::sqrt(static_cast<double>(d)));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < c.sigmas.size(); ++i)
    worst = std::max(worst, std::abs((err_rbf[i] / c.sigmas[i]) / (err_rbf[0] / c.sigmas[0]) - 1.0));
  r.margins["rbf_linearity"] = 0.05 - worst;
  if (c.sigmas.size() >= 2) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < c.sigmas.size(); ++i) pts.emplace_back(std::log(c.sigmas[i]), std::log(err[i]));
    const SlopeFit f = fit_line(pts);
    r.slopes["error_vs_sigma"] = slope_to_json(f);
    r.margins["error_slope"] = 0.05 - std::abs(f.slope - 1.0);
    r.pass = r.pass && f.slope >= 0.95 && f.slope <= 1.05;
  }
  r.pass = r.pass && worst <= 0.05;
  return r;
}

struct DominanceConfig {
  int pairs = 1000;
  std::vector<double> sigmas = {0.5, 1.0, 2.0};
  double p = 1.0;
  int max_atoms = 8;
  int max_dim = 3;
};

/// MMD <= C W_p with C from the Hessian at zero, plus the pointwise condition on a grid.
inline Report mmd_dominance_check(const KernelSpec& k, const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs,
                                  double p = 1.0, double tol = 1e-9) {
  require(k.translation_invariant(), Errc::UnsupportedKernel, "dominance needs a translation-invariant kernel");
  const double C = hessian_constant(k);
  Report r;
  r.experiment = "dominance";
  r.columns = {"pair", "mmd", "w", "C", "ratio", "ok"};
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double m = mmd_discrete(k, pairs[i].first, pairs[i].second).value;
    const double w = w_discrete(p, pairs[i].first, pairs[i].second);
    const bool ok = m <= C * w + tol;
    const double ratio = w > 0.0 ? m / (C * w) : 0.0;
    worst = std::max(worst, ratio);
    r.add_row({static_cast<double>(i), m, w, C, ratio, ok ? 1.0 : 0.0});
    r.pass = r.pass && ok;
  }
  // kappa(x,x) + kappa(y,y) - 2 kappa(x,y) <= C^2 |x - y|^2 along the first axis
  bool pointwise = true;
  Vector z = Vector::Zero(k.d);
  for (int i = 1; i <= 200; ++i) {
    z[0] = 0.05 * i;
    const double lhs = -2.0 * k.kappa0_excess(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
    pointwise = pointwise && lhs <= C * C * z[0] * z[0] * (1.0 + 1e-12);
  }
  r.extra["pointwise"] = pointwise;
  r.extra["C"] = C;
  r.margins["worst_ratio"] = worst;
  r.pass = r.pass && pointwise;
  return r;
}

inline Report run_dominance(const DominanceConfig& c, std::uint64_t seed) {
  Report all;
  all.experiment = "dominance";
  all.seed = seed;
  all.columns = {"sigma", "pair", "mmd", "w", "C", "ratio", "ok"};
  double worst = 0.0;
  bool pointwise = true;
  for (std::size_t si = 0; si < c.sigmas.size(); ++si) {
    std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>> pairs;
    std::vector<int> dims;
    for (int i = 0; i < c.pairs; ++i) {
      Rng rng(seed, si * static_cast<std::size_t>(c.pairs) + static_cast<std::size_t>(i));
      const auto d = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c.max_dim)));
      const auto n = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c.max_atoms)));
      const auto m = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c.max_atoms)));
      pairs.emplace_back(detail::random_discrete(n, d, 2.0 * c.sigmas[si], rng),
                         detail::random_discrete(m, d, 2.0 * c.sigmas[si], rng));
      dims.push_back(static_cast<int>(d));
    }
    // one kernel per dimension; rows stay in pair order
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const KernelSpec k = KernelSpec::gaussian(c.sigmas[si], dims[i]);
      const Report one = mmd_dominance_check(k, {pairs[i]}, c.p);
      const auto& row = one.rows.front();
      all.add_row({c.sigmas[si], static_cast<double>(i), row[1], row[2], row[3], row[4], row[5]});
      all.pass = all.pass && one.pass;
      worst = std::max(worst, row[4]);
      pointwise = pointwise && one.extra["pointwise"].get<bool>();
    }
  }
  all.margins["worst_ratio"] = worst;
  all.extra["pointwise"] = pointwise;
  return all;
}

struct SlicedConfig {
  int pairs = 200;
  int d = 2;
  double R = 1.0;
  int atoms = 6;
  std::size_t directions = 64;
  KernelSpec base = KernelSpec::laplacian(1.0, 1);
};

/// Same-mean pairs in B(0, R): sliced identity, and stability of the empirical sups of
/// W_1 / SW_1^{1/(d+1)} and W_1 / MMD^{1/(2(d+1))} when the trial count doubles.
inline Report run_sliced(const SlicedConfig& c, std::uint64_t seed) {
  Report r;
  r.experiment = "sliced";
  r.seed = seed;
  r.columns = {"pair", "w1", "sw1", "mmd_sliced", "mmd_direct", "ratio_sw", "ratio_mmd", "w2", "w2_cap", "ok"};
  const Matrix theta = make_directions(c.d, c.directions, seed);
  const KernelSpec ks = KernelSpec::sliced(c.base, theta);
  std::vector<double> rs, rm;
  bool ok_all = true;
  for (int i = 0; i < c.pairs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    DiscreteMeasure a = detail::random_discrete(c.atoms, c.d, 0.5 * c.R, rng);
    DiscreteMeasure b = detail::random_discrete(c.atoms, c.d, 0.5 * c.R, rng);
    b = translated(b, mean(a) - mean(b));  // stays inside B(0, R)
    const double w1 = w_exact(1.0, a, b).first;
    const double w2 = w_exact(2.0, a, b).first;
    const double sw = sliced_w1(a, b, theta);
    const double ms = mmd_sliced(c.base, theta, a, b).value;
    const double md = mmd_discrete(ks, a, b).value;
    const double ratio_sw = sw > 0.0 ? w1 / std::pow(sw, 1.0 / (c.d + 1)) : 0.0;
    const double ratio_mmd = ms > 0.0 ? w1 / std::pow(ms, 1.0 / (2.0 * (c.d + 1))) : 0.0;
    const double cap = std::pow(2.0 * c.R, 0.5) * std::sqrt(w1);
    const bool ok = std::abs(ms * ms - md * md) <= 1e-10 && w2 <= cap + 1e-12;
    ok_all = ok_all && ok;
    rs.push_back(ratio_sw);
    rm.push_back(ratio_mmd);
    r.add_row({static_cast<double>(i), w1, sw, ms, md, ratio_sw, ratio_mmd, w2, cap, ok ? 1.0 : 0.0});
  }
  const double gs = detail::sup_growth(rs), gm = detail::sup_growth(rm);
  r.extra["sup_growth_sw"] = gs;
  r.extra["sup_growth_mmd"] = gm;
  r.extra["sup_ratio_sw"] = *std::max_element(rs.begin(), rs.end());
  r.extra["sup_ratio_mmd"] = *std::max_element(rm.begin(), rm.end());
  r.margins["sup_growth_sw"] = 1.5 - gs;
  r.margins["sup_growth_mmd"] = 1.5 - gm;
  r.pass = ok_all && gs < 1.5 && gm < 1.5;
  return r;
}

struct EmbeddabilityConfig {
  ModelSetSpec model{Gmm1DModel{3, 0.5, 1.5, 2.0}};
  KernelSpec kernel = KernelSpec::matern(0.5, 1.0, 1);
  double p = 2.0;
  double delta = 0.5;
  int trials = 500;
  bool same_mean = true;
};

/// Empirical sup of W_p / MMD^delta over sampled model pairs; stable when doubling the
/// trial count moves the sup by less than 50%.
inline Report embeddability_probe(const EmbeddabilityConfig& c, std::uint64_t seed) {
  require(c.trials >= 10, Errc::InvalidArgument, "embeddability probe needs at least 10 trials");
  require(c.delta > 0.0 && c.delta <= 1.0, Errc::InvalidArgument, "delta must lie in (0,1]");
  Report r;
  r.experiment = "embeddability";
  r.seed = seed;
  r.columns = {"trial", "w", "mmd", "ratio"};
  std::vector<double> ratios;
  for (int i = 0; i < c.trials; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const auto [a, b] = sample_model_pair(c.model, rng, c.same_mean);
    const double w = w_between(c.p, a, b);
    const double m = mmd_between(c.kernel, a, b);
    const double ratio = m > 0.0 ? w / std::pow(m, c.delta) : 0.0;
    ratios.push_back(ratio);
    r.add_row({static_cast<double>(i), w, m, ratio});
  }
  const double g = detail::sup_growth(ratios);
  r.extra["sup"] = *std::max_element(ratios.begin(), ratios.end());
  r.extra["sup_growth"] = g;
  r.margins["sup_growth"] = 1.5 - g;
  if (const auto* gm = std::get_if<Gmm1DModel>(&c.model.variant))
    r.extra["sobolev_constant_s3"] = gmm_sobolev_constant(gm->sigma_min, 3);
  r.pass = g < 1.5;
  return r;
}

/// W_p / MMD^delta along the binomial Dirac path; diverging when the last ratio is
/// at least 10x the first.
inline Report embeddability_path(int k, const KernelSpec& kernel, double p, double delta, std::uint64_t seed = 0) {
  CounterexampleConfig c;
  c.k = k;
  c.kernel = kernel;
  c.p = p;
  c.delta = delta;
  Report r = run_counterexample(c, seed);
  r.experiment = "embeddability-path";
  const double growth = r.extra["ratio_growth"].get<double>();
  r.extra["diverges"] = growth >= 10.0;
  r.pass = true;
  return r;
}

struct LearnabilityConfig {
  int pairs = 200;
  int max_atoms = 6;
  int d = 2;
  double R = 1.5;
  double L = 2.0;
  std::size_t hypotheses = 8;
};

/// K-means risk identity and the regression / classification learnability inequalities.
/// Column "kind": 0 k-means identity, 1 k-medians identity, 2 regression, 3 classification.
inline Report run_learnability(const LearnabilityConfig& c, std::uint64_t seed) {
  Report r;
  r.experiment = "learnability";
  r.seed = seed;
  r.columns = {"kind", "pair", "lhs", "rhs", "ok"};
  double worst_identity = 0.0, worst_ratio = 0.0;
  for (int i = 0; i < c.pairs; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const auto n = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c.max_atoms)));
    const auto m = static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(c.max_atoms)));
    {
      const DiscreteMeasure mu = detail::random_discrete(n, c.d, 2.0, rng);
      const int K = 1 + static_cast<int>(rng.index(3));
      Matrix cent(K, c.d);
      for (int kk = 0; kk < K; ++kk) cent.row(kk) = detail::random_in_ball(c.d, 2.0, rng).transpose();
      const DiscreteMeasure proj = kmeans_project(cent, mu);
      for (int kind = 0; kind < 2; ++kind) {
        const TaskSpec t = kind == 0 ? TaskSpec::kmeans(K) : TaskSpec::kmedians(K);
        const double rk = risk(t, mu, hyp::Centroids{cent});
        const double wp = std::pow(w_exact(t.p, mu, proj).first, t.p);
        const double gap = std::abs(rk - wp);
        worst_identity = std::max(worst_identity, gap);
        const bool ok = gap <= 1e-9;
        r.add_row({static_cast<double>(kind), static_cast<double>(i), rk, wp, ok ? 1.0 : 0.0});
        r.pass = r.pass && ok;
      }
    }
    {
      const TaskSpec t = TaskSpec::linear_regression(c.R);
      const DiscreteMeasure mu = detail::random_discrete(n, c.d + 1, 2.0, rng);
      const DiscreteMeasure nu = detail::random_discrete(m, c.d + 1, 2.0, rng);
      const double probe = task_metric_probe(t, mu, nu, c.hypotheses, rng);
      const double bound = learnability_constant(t) * w_exact(2.0, mu, nu).first;
      const bool ok = probe <= bound + 1e-9;
      worst_ratio = std::max(worst_ratio, bound > 0.0 ? probe / bound : 0.0);
      r.add_row({2.0, static_cast<double>(i), probe, bound, ok ? 1.0 : 0.0});
      r.pass = r.pass && ok;
    }
    {
      const TaskSpec t = TaskSpec::binary_classification(c.L);
      auto labelled = [&](Eigen::Index cnt) {
        DiscreteMeasure base = detail::random_discrete(cnt, c.d, 2.0, rng);
        Matrix p(cnt, c.d + 1);
        p.leftCols(c.d) = base.points();
        for (Eigen::Index a = 0; a < cnt; ++a) p(a, c.d) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        return DiscreteMeasure(p, base.weights());
      };
      const DiscreteMeasure mu = labelled(n), nu = labelled(m);
      const double probe = task_metric_probe(t, mu, nu, c.hypotheses, rng);
      std::vector<double> cost(static_cast<std::size_t>(mu.size() * nu.size()));
      for (Eigen::Index a = 0; a < mu.size(); ++a)
        for (Eigen::Index b = 0; b < nu.size(); ++b)
          cost[static_cast<std::size_t>(a * nu.size() + b)] = task_distance(t, mu.point(a), nu.point(b));
      const double w1 = solve_transport(mu.weights(), nu.weights(), std::move(cost)).cost;
      const double bound = learnability_constant(t) * w1;
      const bool ok = probe <= bound + 1e-9;
      worst_ratio = std::max(worst_ratio, bound > 0.0 ? probe / bound : 0.0);
      r.add_row({3.0, static_cast<double>(i), probe, bound, ok ? 1.0 : 0.0});
      r.pass = r.pass && ok;
    }
  }
  r.margins["identity_gap"] = worst_identity;
  r.margins["worst_probe_ratio"] = worst_ratio;
  return r;
}

}  // namespace wmmd
