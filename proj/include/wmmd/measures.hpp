#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "wmmd/error.hpp"
#include "wmmd/rng.hpp"

namespace wmmd {

/// Row-major so that each point is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double t = x[k] - y[k];
    s += t * t;
  }
  return s;
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * y[k];
  return s;
}

/// Weighted point cloud in R^d with weights normalized to one.
/// Duplicate atoms are allowed; nothing downstream needs them merged.
class DiscreteMeasure {
 public:
  DiscreteMeasure(Matrix points, Vector weights) : points_(std::move(points)), weights_(std::move(weights)) {
    require(points_.rows() >= 1 && points_.cols() >= 1, Errc::EmptyInput, "measure needs at least one atom");
    require(weights_.size() == points_.rows(), Errc::DimensionMismatch, "one weight per atom required");
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights_.size(); ++i) {
      require(std::isfinite(weights_[i]), Errc::InvalidArgument, "non-finite weight");
      require(weights_[i] >= 0.0, Errc::NegativeWeight, "weights must be nonnegative");
      total += weights_[i];
    }
    require(total > 0.0, Errc::InvalidArgument, "weights sum to zero");
    require(points_.allFinite(), Errc::InvalidArgument, "non-finite coordinate");
    weights_ /= total;
  }

  static DiscreteMeasure uniform(Matrix points) {
    const auto n = points.rows();
    require(n >= 1, Errc::EmptyInput, "measure needs at least one atom");
    return DiscreteMeasure(std::move(points), Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  static DiscreteMeasure dirac(const Vector& x) {
    Matrix p(1, x.size());
    p.row(0) = x.transpose();
    return DiscreteMeasure(std::move(p), Vector::Ones(1));
  }

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  std::span<const double> point(Eigen::Index i) const { return row(points_, i); }
  double weight(Eigen::Index i) const { return weights_[i]; }

  bool has_uniform_weights(double tol = 1e-12) const {
    const double w = 1.0 / static_cast<double>(size());
    return ((weights_.array() - w).abs() <= tol).all();
  }

 private:
  Matrix points_;
  Vector weights_;
};

inline DiscreteMeasure make_discrete(const std::vector<std::vector<double>>& points,
                                     const std::vector<double>& weights) {
  require(!points.empty(), Errc::EmptyInput, "empty point list");
  require(points.size() == weights.size(), Errc::DimensionMismatch, "one weight per atom required");
  const std::size_t d = points.front().size();
  require(d >= 1, Errc::EmptyInput, "zero-dimensional points");
  Matrix p(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(points[i].size() == d, Errc::RaggedDimensions, "points have different dimensions");
    for (std::size_t k = 0; k < d; ++k) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = points[i][k];
  }
  Vector w(static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) w[static_cast<Eigen::Index>(i)] = weights[i];
  return DiscreteMeasure(std::move(p), std::move(w));
}

/// Mixture of isotropic Gaussians N(mean_k, sigma_k^2 I).
class GaussianMixture {
 public:
  GaussianMixture(Vector weights, Matrix means, Vector sigmas)
      : weights_(std::move(weights)), means_(std::move(means)), sigmas_(std::move(sigmas)) {
    require(weights_.size() >= 1, Errc::EmptyInput, "mixture needs a component");
    require(means_.rows() == weights_.size() && sigmas_.size() == weights_.size(), Errc::DimensionMismatch,
            "weights, means and sigmas must agree in length");
    require(means_.cols() >= 1, Errc::EmptyInput, "zero-dimensional mixture");
    double total = 0.0;
    for (Eigen::Index k = 0; k < weights_.size(); ++k) {
      require(weights_[k] >= 0.0, Errc::NegativeWeight, "mixture weights must be nonnegative");
      require(sigmas_[k] > 0.0 && std::isfinite(sigmas_[k]), Errc::InvalidArgument, "component sigma must be > 0");
      total += weights_[k];
    }
    require(total > 0.0, Errc::InvalidArgument, "mixture weights sum to zero");
    weights_ /= total;
  }

  static GaussianMixture normal(double mean, double sigma) {
    Matrix m(1, 1);
    m(0, 0) = mean;
    return GaussianMixture(Vector::Ones(1), std::move(m), Vector::Constant(1, sigma));
  }

  static GaussianMixture isotropic(const Vector& mean, double sigma) {
    Matrix m(1, mean.size());
    m.row(0) = mean.transpose();
    return GaussianMixture(Vector::Ones(1), std::move(m), Vector::Constant(1, sigma));
  }

  Eigen::Index components() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.cols(); }
  const Vector& weights() const { return weights_; }
  const Matrix& means() const { return means_; }
  const Vector& sigmas() const { return sigmas_; }
  std::span<const double> mean_of(Eigen::Index k) const { return row(means_, k); }

  /// E[exp(-i <omega, x>)].
  std::complex<double> characteristic(std::span<const double> omega) const {
    double w2 = 0.0;
    for (double o : omega) w2 += o * o;
    std::complex<double> acc{0.0, 0.0};
    for (Eigen::Index k = 0; k < components(); ++k) {
      const double phase = dot(omega, mean_of(k));
      const double amp = weights_[k] * std::exp(-0.5 * sigmas_[k] * sigmas_[k] * w2);
      acc += amp * std::complex<double>(std::cos(phase), -std::sin(phase));
    }
    return acc;
  }

  double cdf(double x) const {
    require(dim() == 1, Errc::DimensionMismatch, "cdf needs a 1-D mixture");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < components(); ++k)
      acc += weights_[k] * 0.5 * std::erfc(-(x - means_(k, 0)) / (sigmas_[k] * std::numbers::sqrt2));
    return acc;
  }

  double survival(double x) const {
    require(dim() == 1, Errc::DimensionMismatch, "survival needs a 1-D mixture");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < components(); ++k)
      acc += weights_[k] * 0.5 * std::erfc((x - means_(k, 0)) / (sigmas_[k] * std::numbers::sqrt2));
    return acc;
  }

  double pdf(double x) const {
    require(dim() == 1, Errc::DimensionMismatch, "pdf needs a 1-D mixture");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < components(); ++k) {
      const double t = (x - means_(k, 0)) / sigmas_[k];
      acc += weights_[k] * std::exp(-0.5 * t * t) / (sigmas_[k] * std::sqrt(2.0 * std::numbers::pi));
    }
    return acc;
  }

 private:
  Vector weights_;
  Matrix means_;
  Vector sigmas_;
};

/// Uniform distribution on an axis-aligned box; used as a continuous reference
/// measure in convergence-rate experiments.
struct UniformBox {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
};

using Measure = std::variant<DiscreteMeasure, GaussianMixture, UniformBox>;

inline Eigen::Index dim(const Measure& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

/// Gaussian smoothing density alpha = N(0, sigma^2 I).
struct RegularizerSpec {
  double sigma = 1.0;

  void validate() const { require(sigma > 0.0 && std::isfinite(sigma), Errc::InvalidArgument, "regularizer sigma must be > 0"); }

  double density(std::span<const double> z) const {
    const double d = static_cast<double>(z.size());
    double r2 = 0.0;
    for (double v : z) r2 += v * v;
    return std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.5 * d) * std::exp(-0.5 * r2 / (sigma * sigma));
  }

  /// int ||z||^s alpha(z) dz = sigma^s 2^{s/2} Gamma((s+d)/2) / Gamma(d/2).
  double abs_moment(double s, int d) const {
    return std::pow(sigma, s) * std::exp(0.5 * s * std::log(2.0) + std::lgamma(0.5 * (s + d)) - std::lgamma(0.5 * d));
  }
};

struct DiracMixtureModel {
  int K = 1;
  Vector center;
  double radius = 1.0;
};

struct Gmm1DModel {
  int K = 1;
  double sigma_min = 0.5;
  double sigma_max = 1.5;
  double mean_window = 2.0;  // component means drawn in [-mean_window, mean_window]
};

struct BoundedMomentModel {
  double s = 2.0;
  double M = 1.0;
  int d = 1;
  int atoms = 8;
};

struct ModelSetSpec {
  std::variant<DiracMixtureModel, Gmm1DModel, BoundedMomentModel> variant;

  void validate() const {
    std::visit(
        [](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, DiracMixtureModel>) {
            require(v.K >= 1, Errc::InvalidArgument, "K must be >= 1");
            require(v.radius > 0.0, Errc::InvalidArgument, "radius must be > 0");
            require(v.center.size() >= 1, Errc::InvalidArgument, "center must have a dimension");
          } else if constexpr (std::is_same_v<T, Gmm1DModel>) {
            require(v.K >= 1, Errc::InvalidArgument, "K must be >= 1");
            require(v.sigma_min > 0.0 && v.sigma_max >= v.sigma_min, Errc::InvalidArgument, "need 0 < sigma_min <= sigma_max");
            require(v.mean_window >= 0.0, Errc::InvalidArgument, "mean window must be >= 0");
          } else {
            require(v.s > 1.0, Errc::InvalidArgument, "bounded-moment model needs s > 1");
            require(v.M > 0.0, Errc::InvalidArgument, "bounded-moment model needs M > 0");
            require(v.d >= 1 && v.atoms >= 1, Errc::InvalidArgument, "bad dimension or atom count");
          }
        },
        variant);
  }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Push-forward by x -> <x, theta>; weights are untouched.
inline DiscreteMeasure project(const DiscreteMeasure& mu, std::span<const double> theta) {
  require(static_cast<Eigen::Index>(theta.size()) == mu.dim(), Errc::DimensionMismatch, "direction dimension mismatch");
  double n2 = 0.0;
  for (double t : theta) n2 += t * t;
  require(std::abs(std::sqrt(n2) - 1.0) <= 1e-9, Errc::NonUnitDirection, "projection direction must be unit norm");
  Matrix p(mu.size(), 1);
  for (Eigen::Index i = 0; i < mu.size(); ++i) p(i, 0) = dot(mu.point(i), theta);
  return DiscreteMeasure(std::move(p), mu.weights());
}

inline Vector mean(const DiscreteMeasure& mu) { return mu.points().transpose() * mu.weights(); }

inline Vector mean(const GaussianMixture& g) { return g.means().transpose() * g.weights(); }

inline Vector mean(const UniformBox& b) { return 0.5 * (b.lower + b.upper); }

inline Vector mean(const Measure& m) {
  return std::visit([](const auto& x) { return mean(x); }, m);
}

/// Shifts every atom by -mean so the result is centered.
inline DiscreteMeasure centered(const DiscreteMeasure& mu) {
  const Vector m = mean(mu);
  Matrix p = mu.points();
  p.rowwise() -= m.transpose();
  return DiscreteMeasure(std::move(p), mu.weights());
}

inline DiscreteMeasure translated(const DiscreteMeasure& mu, const Vector& t) {
  Matrix p = mu.points();
  p.rowwise() += t.transpose();
  return DiscreteMeasure(std::move(p), mu.weights());
}

namespace detail {

/// E[Y^r] for Y ~ noncentral chi-square(dof, lambda), through the Poisson
/// mixture of central chi-squares, summed outward from the Poisson mode.
inline double noncentral_chi2_moment(double dof, double lambda, double r) {
  auto log_term = [&](double j) {
    const double log_pois = (lambda > 0.0 ? j * std::log(0.5 * lambda) - 0.5 * lambda : 0.0) - std::lgamma(j + 1.0);
    return log_pois + r * std::log(2.0) + std::lgamma(0.5 * dof + j + r) - std::lgamma(0.5 * dof + j);
  };
  if (lambda <= 0.0) return std::exp(log_term(0.0));
  const double mode = std::floor(0.5 * lambda);
  double sum = 0.0;
  for (double j = mode; j >= 0.0; j -= 1.0) {
    const double t = std::exp(log_term(j));
    sum += t;
    if (t < 1e-18 * sum && j < mode - 5.0) break;
  }
  for (double j = mode + 1.0;; j += 1.0) {
    const double t = std::exp(log_term(j));
    sum += t;
    if (t < 1e-18 * sum && j > mode + 5.0) break;
  }
  return sum;
}

}  // namespace detail

/// E ||x||^s, exact for discrete measures.
inline double moment_s(const DiscreteMeasure& mu, double s) {
  require(s >= 1.0, Errc::InvalidArgument, "moment order must be >= 1");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double r2 = dot(mu.point(i), mu.point(i));
    acc += mu.weight(i) * std::pow(r2, 0.5 * s);
  }
  return acc;
}

/// E ||x||^s for an isotropic mixture: ||x||^2 / sigma^2 is noncentral
/// chi-square per component, summed as a Poisson series.
inline double moment_s(const GaussianMixture& g, double s) {
  require(s >= 1.0, Errc::InvalidArgument, "moment order must be >= 1");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < g.components(); ++k) {
    const double sk = g.sigmas()[k];
    const double lambda = dot(g.mean_of(k), g.mean_of(k)) / (sk * sk);
    acc += g.weights()[k] * std::pow(sk, s) *
           detail::noncentral_chi2_moment(static_cast<double>(g.dim()), lambda, 0.5 * s);
  }
  return acc;
}

/// Convolution with a Gaussian regularizer: one component per atom.
inline GaussianMixture smooth(const DiscreteMeasure& mu, const RegularizerSpec& alpha) {
  alpha.validate();
  return GaussianMixture(mu.weights(), mu.points(), Vector::Constant(mu.size(), alpha.sigma));
}

namespace detail {

/// Solves F(x) = p (upper == false) or S(x) = p (upper == true) by bisection.
/// Working with the survival function keeps relative accuracy in the upper tail.
inline double gmm_tail_quantile(const GaussianMixture& g, double p, bool upper) {
  double lo_mean = g.means().col(0).minCoeff();
  double hi_mean = g.means().col(0).maxCoeff();
  const double smax = g.sigmas().maxCoeff();
  const double amax = g.means().col(0).cwiseAbs().maxCoeff();
  double lo = lo_mean - 12.0 * smax - amax;
  double hi = hi_mean + 12.0 * smax + amax;
  auto below = [&](double x) {  // true when the root lies to the right of x
    return upper ? g.survival(x) > p : g.cdf(x) < p;
  };
  double width = hi - lo + 1.0;
  while (!below(lo)) {
    lo -= width;
    width *= 2.0;
  }
  width = hi - lo + 1.0;
  while (below(hi)) {
    hi += width;
    width *= 2.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi || hi - lo <= 2e-16 * std::max(1.0, std::abs(mid))) break;
    if (below(mid))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Inverse CDF of a 1-D mixture.
inline double gmm_quantile(const GaussianMixture& g, double q) {
  require(g.dim() == 1, Errc::DimensionMismatch, "quantile needs a 1-D mixture");
  require(q > 0.0 && q < 1.0, Errc::InvalidArgument, "quantile level must lie in (0,1)");
  return q <= 0.5 ? detail::gmm_tail_quantile(g, q, false) : detail::gmm_tail_quantile(g, 1.0 - q, true);
}

/// Uniform-weight empirical measure of n draws.
inline DiscreteMeasure sample(const DiscreteMeasure& mu, std::size_t n, Rng& rng) {
  require(n >= 1, Errc::InvalidArgument, "sample size must be >= 1");
  std::vector<double> cumulative(static_cast<std::size_t>(mu.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) cumulative[static_cast<std::size_t>(i)] = (acc += mu.weight(i));
  Matrix p(static_cast<Eigen::Index>(n), mu.dim());
  for (std::size_t s = 0; s < n; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(it - cumulative.begin()), mu.size() - 1);
    p.row(static_cast<Eigen::Index>(s)) = mu.points().row(i);
  }
  return DiscreteMeasure::uniform(std::move(p));
}

inline DiscreteMeasure sample(const GaussianMixture& g, std::size_t n, Rng& rng) {
  require(n >= 1, Errc::InvalidArgument, "sample size must be >= 1");
  std::vector<double> cumulative(static_cast<std::size_t>(g.components()));
  double acc = 0.0;
  for (Eigen::Index k = 0; k < g.components(); ++k) cumulative[static_cast<std::size_t>(k)] = (acc += g.weights()[k]);
  Matrix p(static_cast<Eigen::Index>(n), g.dim());
  for (std::size_t s = 0; s < n; ++s) {
    Eigen::Index k = 0;
    if (g.components() > 1) {
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      k = std::min<Eigen::Index>(static_cast<Eigen::Index>(it - cumulative.begin()), g.components() - 1);
    }
    for (Eigen::Index j = 0; j < g.dim(); ++j)
      p(static_cast<Eigen::Index>(s), j) = g.means()(k, j) + g.sigmas()[k] * rng.normal();
  }
  return DiscreteMeasure::uniform(std::move(p));
}

inline DiscreteMeasure sample(const UniformBox& b, std::size_t n, Rng& rng) {
  require(n >= 1, Errc::InvalidArgument, "sample size must be >= 1");
  require(b.lower.size() == b.upper.size() && b.lower.size() >= 1, Errc::DimensionMismatch, "bad box");
  Matrix p(static_cast<Eigen::Index>(n), b.dim());
  for (std::size_t s = 0; s < n; ++s)
    for (Eigen::Index j = 0; j < b.dim(); ++j) p(static_cast<Eigen::Index>(s), j) = rng.uniform(b.lower[j], b.upper[j]);
  return DiscreteMeasure::uniform(std::move(p));
}

inline DiscreteMeasure sample(const Measure& m, std::size_t n, Rng& rng) {
  return std::visit([&](const auto& x) { return sample(x, n, rng); }, m);
}

}  // namespace wmmd
