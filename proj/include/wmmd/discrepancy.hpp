#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "wmmd/error.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/parallel.hpp"
#include "wmmd/slope.hpp"

namespace wmmd {

enum class MmdMethod { DoubleSum, GmmClosedForm, Spectral1D, Sliced, SmoothedL2 };

inline const char* to_string(MmdMethod m) {
  switch (m) {
    case MmdMethod::DoubleSum: return "DoubleSum";
    case MmdMethod::GmmClosedForm: return "GmmClosedForm";
    case MmdMethod::Spectral1D: return "Spectral1D";
    case MmdMethod::Sliced: return "Sliced";
    case MmdMethod::SmoothedL2: return "SmoothedL2";
  }
  return "?";
}

struct MmdValue {
  double value = 0.0;
  MmdMethod method = MmdMethod::DoubleSum;
};

/// Isotropic mixture where a component sigma of 0 stands for a Dirac atom.
struct IsoMixture {
  Vector weights;
  Matrix means;
  Vector sigmas;

  Eigen::Index dim() const { return means.cols(); }
  Eigen::Index size() const { return weights.size(); }
};

inline IsoMixture as_mixture(const DiscreteMeasure& mu) {
  return {mu.weights(), mu.points(), Vector::Zero(mu.size())};
}

inline IsoMixture as_mixture(const GaussianMixture& g) { return {g.weights(), g.means(), g.sigmas()}; }

inline IsoMixture as_mixture(const IsoMixture& m) { return m; }

namespace detail {

/// Turns a (possibly slightly negative) squared MMD into a distance.
inline double finish_mmd(double sq, double scale) {
  if (sq >= 0.0) return std::sqrt(sq);
  require(sq >= -1e-10 * scale, Errc::NonPsdKernel,
          "squared MMD is negative beyond round-off (" + std::to_string(sq) + ")");
  return 0.0;
}

/// sum_ij a_i b_j E(x_i - y_j) for a translation-invariant kernel, E = kappa0 - kappa0(0).
/// Dispatches on the family once so the inner loop is a plain radial profile.
inline double excess_cross_sum(const KernelSpec& k, const Matrix& x, const Vector& a, const Matrix& y, const Vector& b,
                               bool symmetric) {
  const Eigen::Index n = x.rows(), m = y.rows(), d = x.cols();
  auto run = [&](auto&& profile_of_r2) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double* xi = x.data() + i * d;
      double acc = 0.0;
      const Eigen::Index jend = symmetric ? i : m;
      for (Eigen::Index j = 0; j < jend; ++j) {
        const double* yj = y.data() + j * d;
        double r2 = 0.0;
        for (Eigen::Index t = 0; t < d; ++t) {
          const double u = xi[t] - yj[t];
          r2 += u * u;
        }
        acc += b[j] * profile_of_r2(r2);
      }
      total += a[i] * acc;
    }
    return symmetric ? 2.0 * total : total;  // diagonal terms are exactly zero
  };
  if (const auto* g = std::get_if<family::Gaussian>(&k.family)) {
    const double c = -0.5 / (g->sigma * g->sigma), s = g->scale;
    return run([=](double r2) { return s * std::expm1(c * r2); });
  }
  if (const auto* cr = std::get_if<family::ConvRoot>(&k.family)) {
    const double c = -0.25 / (cr->alpha.sigma * cr->alpha.sigma), s = k.peak();
    return run([=](double r2) { return s * std::expm1(c * r2); });
  }
  if (const auto* l = std::get_if<family::Laplacian>(&k.family)) {
    const double inv = 1.0 / l->sigma;
    return run([=](double r2) { return std::expm1(-std::sqrt(r2) * inv); });
  }
  if (const auto* mt = std::get_if<family::Matern>(&k.family)) {
    const double nu = mt->nu, inv = 1.0 / mt->sigma;
    return run([=](double r2) { return KernelSpec::matern_excess(nu, std::sqrt(r2) * inv); });
  }
  // generic fallback (sliced)
  std::vector<double> z(static_cast<std::size_t>(d));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    const Eigen::Index jend = symmetric ? i : m;
    for (Eigen::Index j = 0; j < jend; ++j) {
      for (Eigen::Index t = 0; t < d; ++t) z[static_cast<std::size_t>(t)] = x(i, t) - y(j, t);
      acc += b[j] * k.kappa0_excess(z);
    }
    total += a[i] * acc;
  }
  return symmetric ? 2.0 * total : total;
}

inline double raw_cross_sum(const KernelSpec& k, const Matrix& x, const Vector& a, const Matrix& y, const Vector& b) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) total += a[i] * b[j] * k.eval(row(x, i), row(y, j));
  return total;
}

}  // namespace detail

/// Squared MMD between two discrete measures by the double sum.
inline double mmd_squared_discrete(const KernelSpec& k, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(mu.dim() == k.d && nu.dim() == k.d, Errc::DimensionMismatch, "measure and kernel dimensions differ");
  if (!k.translation_invariant()) {
    return detail::raw_cross_sum(k, mu.points(), mu.weights(), mu.points(), mu.weights()) +
           detail::raw_cross_sum(k, nu.points(), nu.weights(), nu.points(), nu.weights()) -
           2.0 * detail::raw_cross_sum(k, mu.points(), mu.weights(), nu.points(), nu.weights());
  }
  // Total masses agree, so the kappa0(0) parts cancel and only excesses remain.
  return detail::excess_cross_sum(k, mu.points(), mu.weights(), mu.points(), mu.weights(), true) +
         detail::excess_cross_sum(k, nu.points(), nu.weights(), nu.points(), nu.weights(), true) -
         2.0 * detail::excess_cross_sum(k, mu.points(), mu.weights(), nu.points(), nu.weights(), false);
}

inline double gram_scale(const KernelSpec& k, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (k.translation_invariant()) return k.peak();
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) s = std::max(s, std::abs(k.eval(mu.point(i), mu.point(i))));
  for (Eigen::Index i = 0; i < nu.size(); ++i) s = std::max(s, std::abs(k.eval(nu.point(i), nu.point(i))));
  return std::max(s, 1.0);
}

inline MmdValue mmd_discrete(const KernelSpec& k, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const double sq = mmd_squared_discrete(k, mu, nu);
  return {detail::finish_mmd(sq, gram_scale(k, mu, nu)), MmdMethod::DoubleSum};
}

namespace detail {

/// Gaussian kernel parameters (sigma_k^2, scale) behind a Gaussian or ConvRoot kernel.
inline std::pair<double, double> gaussian_params(const KernelSpec& k) {
  if (const auto* g = std::get_if<family::Gaussian>(&k.family)) return {g->sigma * g->sigma, g->scale};
  if (const auto* c = std::get_if<family::ConvRoot>(&k.family)) return {2.0 * c->alpha.sigma * c->alpha.sigma, k.peak()};
  throw Error(Errc::UnsupportedFamily, "closed-form mixture MMD needs a gaussian or convroot kernel");
}

/// sum_ij a_i b_j (E[kappa(X_i, Y_j)] - kappa0(0)) for Gaussian components.
inline double mixture_excess_sum(double sk2, double scale, const IsoMixture& p, const IsoMixture& q, bool symmetric) {
  const Eigen::Index d = p.dim();
  const double half_d = 0.5 * static_cast<double>(d);
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double* xi = p.means.data() + i * d;
    const double si2 = p.sigmas[i] * p.sigmas[i];
    double acc = 0.0;
    const Eigen::Index jend = symmetric ? i + 1 : q.size();
    for (Eigen::Index j = 0; j < jend; ++j) {
      const double* yj = q.means.data() + j * d;
      double r2 = 0.0;
      for (Eigen::Index t = 0; t < d; ++t) {
        const double u = xi[t] - yj[t];
        r2 += u * u;
      }
      const double s2 = si2 + q.sigmas[j] * q.sigmas[j];
      double e;
      if (s2 == 0.0)
        e = std::expm1(-0.5 * r2 / sk2);
      else
        e = std::expm1(-half_d * std::log1p(s2 / sk2) - 0.5 * r2 / (sk2 + s2));
      if (symmetric && j != i) e *= 2.0;
      acc += q.weights[j] * e;
    }
    total += p.weights[i] * acc;
  }
  return scale * total;
}

}  // namespace detail

/// Closed-form MMD between isotropic Gaussian mixtures (atoms allowed) under a Gaussian kernel.
inline double mmd_squared_gmm_gaussian(const KernelSpec& k, const IsoMixture& mu, const IsoMixture& nu) {
  require(mu.dim() == k.d && nu.dim() == k.d, Errc::DimensionMismatch, "measure and kernel dimensions differ");
  const auto [sk2, scale] = detail::gaussian_params(k);
  return detail::mixture_excess_sum(sk2, scale, mu, mu, true) + detail::mixture_excess_sum(sk2, scale, nu, nu, true) -
         2.0 * detail::mixture_excess_sum(sk2, scale, mu, nu, false);
}

template <class A, class B>
MmdValue mmd_gmm_gaussian(const KernelSpec& k, const A& mu, const B& nu) {
  const double sq = mmd_squared_gmm_gaussian(k, as_mixture(mu), as_mixture(nu));
  return {detail::finish_mmd(sq, k.peak()), MmdMethod::GmmClosedForm};
}

/// ||alpha * mu - alpha * nu||_{L2} from products of Gaussian densities.
inline double smoothed_l2_squared(const RegularizerSpec& alpha, const IsoMixture& mu, const IsoMixture& nu) {
  alpha.validate();
  require(mu.dim() == nu.dim(), Errc::DimensionMismatch, "measures differ in dimension");
  const double d = static_cast<double>(mu.dim());
  const double v0 = 2.0 * alpha.sigma * alpha.sigma;
  const double p0 = std::pow(2.0 * std::numbers::pi * v0, -0.5 * d);
  // <N(m1, v1), N(m2, v2)>_{L2} = N(m1 - m2; 0, v1 + v2); each smoothed component has
  // variance s^2 + sigma^2, so the pair variance is v0 + s_i^2 + s_j^2.
  auto block = [&](const IsoMixture& p, const IsoMixture& q) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      for (Eigen::Index j = 0; j < q.size(); ++j) {
        const double extra = p.sigmas[i] * p.sigmas[i] + q.sigmas[j] * q.sigmas[j];
        const double v = v0 + extra;
        const double r2 = squared_distance(row(p.means, i), row(q.means, j));
        const double log_ratio = -0.5 * d * std::log1p(extra / v0);
        total += p.weights[i] * q.weights[j] * std::expm1(log_ratio - 0.5 * r2 / v);
      }
    return p0 * total;
  };
  return block(mu, mu) + block(nu, nu) - 2.0 * block(mu, nu);
}

template <class A, class B>
double smoothed_l2(const RegularizerSpec& alpha, const A& mu, const B& nu) {
  const double sq = smoothed_l2_squared(alpha, as_mixture(mu), as_mixture(nu));
  const double p0 = std::pow(4.0 * std::numbers::pi * alpha.sigma * alpha.sigma, -0.5 * static_cast<double>(as_mixture(mu).dim()));
  return detail::finish_mmd(sq, p0);
}

namespace detail {

inline std::complex<double> mixture_char_1d(const IsoMixture& m, double w) {
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    const double amp = m.weights[k] * std::exp(-0.5 * m.sigmas[k] * m.sigmas[k] * w * w);
    const double ph = w * m.means(k, 0);
    acc += amp * std::complex<double>(std::cos(ph), -std::sin(ph));
  }
  return acc;
}

inline bool gaussian_spectrum(const KernelSpec& k) {
  return std::holds_alternative<family::Gaussian>(k.family) || std::holds_alternative<family::ConvRoot>(k.family);
}

}  // namespace detail

/// (1/pi) int_0^inf kappa_hat(w) |phi_mu(w) - phi_nu(w)|^2 dw in one dimension.
///
/// When the integrand decays like a Gaussian it is integrated directly by adaptive
/// Gauss-Kronrod over panels. With Dirac atoms under a kernel whose transform decays
/// only algebraically, the square is expanded into pair terms, each an Ooura
/// Fourier-cosine integral of the transform.
inline double mmd_squared_spectral_1d(const KernelSpec& k, const IsoMixture& mu, const IsoMixture& nu) {
  require(k.d == 1 && mu.dim() == 1 && nu.dim() == 1, Errc::DimensionMismatch, "spectral MMD is one-dimensional");
  require(k.translation_invariant() && !std::holds_alternative<family::Sliced>(k.family), Errc::UnsupportedFamily,
          "spectral MMD needs a closed-form kernel transform");
  const double smin = std::min(mu.sigmas.minCoeff(), nu.sigmas.minCoeff());
  const double khat0 = fourier_kappa0(k, 0.0);
  const double lo = std::min(mu.means.minCoeff(), nu.means.minCoeff());
  const double hi = std::max(mu.means.maxCoeff(), nu.means.maxCoeff());
  const double spread = std::max(hi - lo, 1e-3);

  if (smin > 0.0 || detail::gaussian_spectrum(k)) {
    auto envelope = [&](double w) {
      double a = 0.0;
      for (Eigen::Index i = 0; i < mu.size(); ++i) a += mu.weights[i] * std::exp(-0.5 * mu.sigmas[i] * mu.sigmas[i] * w * w);
      for (Eigen::Index i = 0; i < nu.size(); ++i) a += nu.weights[i] * std::exp(-0.5 * nu.sigmas[i] * nu.sigmas[i] * w * w);
      return fourier_kappa0(k, w) * a * a;
    };
    double wmax = 1.0;
    while (envelope(wmax) * wmax > 1e-18 * khat0) {
      wmax *= 1.25;
      require(wmax < 1e8, Errc::DivergentIntegral, "spectral integrand does not decay");
    }
    auto f = [&](double w) {
      const std::complex<double> diff = detail::mixture_char_1d(mu, w) - detail::mixture_char_1d(nu, w);
      return fourier_kappa0(k, w) * std::norm(diff);
    };
    const double panel = std::min(wmax, std::numbers::pi / spread);
    const auto panels = static_cast<std::size_t>(std::ceil(wmax / panel));
    double total = 0.0;
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = wmax * static_cast<double>(p) / static_cast<double>(panels);
      const double b = wmax * static_cast<double>(p + 1) / static_cast<double>(panels);
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
    }
    return total / std::numbers::pi;
  }

  // pairwise route: signed weights c, variances v_ij = s_i^2 + s_j^2, gaps t_ij
  std::vector<double> c, m, s2;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    c.push_back(mu.weights[i]);
    m.push_back(mu.means(i, 0));
    s2.push_back(mu.sigmas[i] * mu.sigmas[i]);
  }
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    c.push_back(-nu.weights[i]);
    m.push_back(nu.means(i, 0));
    s2.push_back(nu.sigmas[i] * nu.sigmas[i]);
  }
  boost::math::quadrature::ooura_fourier_cos<double> ooura(1e-12);
  boost::math::quadrature::exp_sinh<double> es;
  auto pair_integral = [&](double v, double t) {
    auto g = [&](double w) { return fourier_kappa0(k, w) * (v > 0.0 ? std::exp(-0.5 * v * w * w) : 1.0); };
    if (t == 0.0) return es.integrate(g, 1e-13);
    return ooura.integrate(g, t).first;
  };
  // The diagonal pair terms c_i^2 * int kappa_hat are accumulated first; they cancel
  // against the off-diagonal ones.
  double total = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i; j < c.size(); ++j) {
      const double t = std::abs(m[i] - m[j]);
      const double term = c[i] * c[j] * pair_integral(s2[i] + s2[j], t);
      total += (i == j) ? term : 2.0 * term;
    }
  }
  return total / std::numbers::pi;
}

template <class A, class B>
MmdValue mmd_spectral_1d(const KernelSpec& k, const A& mu, const B& nu) {
  const double sq = mmd_squared_spectral_1d(k, as_mixture(mu), as_mixture(nu));
  return {detail::finish_mmd(sq, std::max(1e-6, fourier_kappa0(k, 0.0))), MmdMethod::Spectral1D};
}

/// sqrt of the average over directions of squared 1-D MMDs between projections.
inline MmdValue mmd_sliced(const KernelSpec& base, const Matrix& theta_set, const DiscreteMeasure& mu,
                           const DiscreteMeasure& nu) {
  require(theta_set.rows() >= 1, Errc::EmptyInput, "empty direction set");
  require(base.d == 1, Errc::InvalidArgument, "sliced base must be one-dimensional");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < theta_set.rows(); ++t) {
    const auto th = row(theta_set, t);
    acc += mmd_squared_discrete(base, project(mu, th), project(nu, th));
  }
  acc /= static_cast<double>(theta_set.rows());
  return {detail::finish_mmd(acc, base.peak()), MmdMethod::Sliced};
}

/// MMD between a reference measure and one empirical draw.
inline double mmd_to_reference(const KernelSpec& k, const Measure& pi, const DiscreteMeasure& sample) {
  if (const auto* d = std::get_if<DiscreteMeasure>(&pi)) return mmd_discrete(k, *d, sample).value;
  if (const auto* g = std::get_if<GaussianMixture>(&pi)) return mmd_gmm_gaussian(k, *g, sample).value;
  throw Error(Errc::UnsupportedFamily, "MMD rate needs a discrete or Gaussian-mixture reference");
}

/// E ||pi - pi_n||_kappa over trials for each n in a geometric grid, with the log-log slope.
/// Trial t at grid index i uses stream (seed, i * trials + t).
inline RateResult mmd_rate(const Measure& pi, const KernelSpec& k, const std::vector<std::size_t>& n_grid,
                           std::size_t trials, std::uint64_t seed, unsigned threads = 1) {
  validate_rate_grid(n_grid, trials);
  std::vector<std::vector<double>> values(n_grid.size(), std::vector<double>(trials));
  parallel_for(n_grid.size() * trials, threads, [&](std::size_t idx) {
    const std::size_t i = idx / trials, t = idx % trials;
    Rng rng(seed, idx);
    const DiscreteMeasure s = sample(pi, n_grid[i], rng);
    values[i][t] = mmd_to_reference(k, pi, s);
  });
  RateResult r = finish_rate(n_grid, values);
  for (std::size_t n : n_grid) r.bound.push_back(std::sqrt(2.0 * k.peak() / static_cast<double>(n)));
  return r;
}

}  // namespace wmmd
