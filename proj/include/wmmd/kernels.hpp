#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "wmmd/error.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/rng.hpp"

namespace wmmd {

struct KernelSpec;

namespace family {

/// scale * exp(-|z|^2 / (2 sigma^2))
struct Gaussian {
  double sigma = 1.0;
  double scale = 1.0;
};

/// exp(-|z| / sigma)
struct Laplacian {
  double sigma = 1.0;
};

/// Normalized so that kappa0(0) = 1; nu = 1/2 is the Laplacian.
struct Matern {
  double nu = 1.5;
  double sigma = 1.0;
};

/// alpha * alpha for a Gaussian alpha: (4 pi sigma^2)^{-d/2} exp(-|z|^2 / (4 sigma^2)).
struct ConvRoot {
  RegularizerSpec alpha;
};

/// Average of a 1-D kernel over a fixed set of unit directions.
struct Sliced {
  std::shared_ptr<const KernelSpec> base;
  Matrix directions;  // T x d, unit rows
};

/// base(x, y) + mean_weight * <x, y>; not translation invariant.
struct Modified {
  std::shared_ptr<const KernelSpec> base;
  double mean_weight = 1.0;
};

}  // namespace family

struct KernelSpec {
  std::variant<family::Gaussian, family::Laplacian, family::Matern, family::ConvRoot, family::Sliced,
               family::Modified>
      family;
  int d = 1;

  static KernelSpec gaussian(double sigma, int d = 1, double scale = 1.0) {
    KernelSpec k{family::Gaussian{sigma, scale}, d};
    k.validate();
    return k;
  }
  static KernelSpec laplacian(double sigma, int d = 1) {
    KernelSpec k{family::Laplacian{sigma}, d};
    k.validate();
    return k;
  }
  static KernelSpec matern(double nu, double sigma, int d = 1) {
    KernelSpec k{family::Matern{nu, sigma}, d};
    k.validate();
    return k;
  }
  static KernelSpec convroot(double sigma, int d = 1) {
    KernelSpec k{family::ConvRoot{RegularizerSpec{sigma}}, d};
    k.validate();
    return k;
  }
  static KernelSpec sliced(const KernelSpec& base, Matrix directions) {
    KernelSpec k{family::Sliced{std::make_shared<const KernelSpec>(base), std::move(directions)},
                 0};
    k.d = static_cast<int>(std::get<family::Sliced>(k.family).directions.cols());
    k.validate();
    return k;
  }
  static KernelSpec modified(const KernelSpec& base, double mean_weight) {
    KernelSpec k{family::Modified{std::make_shared<const KernelSpec>(base), mean_weight}, base.d};
    k.validate();
    return k;
  }

  std::string name() const {
    static constexpr const char* names[] = {"gaussian", "laplacian", "matern", "convroot", "sliced", "modified"};
    return names[family.index()];
  }

  bool translation_invariant() const { return !std::holds_alternative<family::Modified>(family); }

  void validate() const {
    require(d >= 1, Errc::InvalidArgument, "kernel dimension must be >= 1");
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, family::Gaussian>) {
            require(f.sigma > 0.0 && f.scale > 0.0, Errc::InvalidArgument, "gaussian needs sigma, scale > 0");
          } else if constexpr (std::is_same_v<T, family::Laplacian>) {
            require(f.sigma > 0.0, Errc::InvalidArgument, "laplacian needs sigma > 0");
          } else if constexpr (std::is_same_v<T, family::Matern>) {
            require(f.sigma > 0.0 && f.nu > 0.0, Errc::InvalidArgument, "matern needs nu, sigma > 0");
          } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
            f.alpha.validate();
          } else if constexpr (std::is_same_v<T, family::Sliced>) {
            require(f.base != nullptr, Errc::InvalidArgument, "sliced kernel needs a base");
            require(f.base->d == 1 && f.base->translation_invariant(), Errc::InvalidArgument,
                    "sliced base must be a 1-D translation-invariant kernel");
            require(f.directions.rows() >= 1, Errc::EmptyInput, "empty direction set");
            require(f.directions.cols() == d, Errc::DimensionMismatch, "direction dimension mismatch");
            for (Eigen::Index t = 0; t < f.directions.rows(); ++t)
              require(std::abs(f.directions.row(t).norm() - 1.0) <= 1e-9, Errc::NonUnitDirection,
                      "sliced directions must be unit vectors");
          } else {
            require(f.base != nullptr && f.base->translation_invariant(), Errc::InvalidArgument,
                    "modified kernel needs a translation-invariant base");
            require(f.base->d == d, Errc::DimensionMismatch, "modified kernel dimension mismatch");
          }
        },
        family);
  }

  /// kappa0(0), the diagonal value.
  double peak() const {
    return std::visit(
        [&](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, family::Gaussian>) {
            return f.scale;
          } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
            return std::pow(4.0 * std::numbers::pi * f.alpha.sigma * f.alpha.sigma, -0.5 * d);
          } else if constexpr (std::is_same_v<T, family::Sliced>) {
            return f.base->peak();
          } else if constexpr (std::is_same_v<T, family::Modified>) {
            throw Error(Errc::UnsupportedKernel, "modified kernel is not translation invariant");
          } else {
            return 1.0;
          }
        },
        family);
  }

  /// kappa0(z) - kappa0(0), accurate for small |z| where the difference cancels.
  double kappa0_excess(std::span<const double> z) const {
    require(static_cast<int>(z.size()) == d, Errc::DimensionMismatch, "kernel argument dimension mismatch");
    return std::visit(
        [&](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          double r2 = 0.0;
          for (double v : z) r2 += v * v;
          const double r = std::sqrt(r2);
          if constexpr (std::is_same_v<T, family::Gaussian>) {
            return f.scale * std::expm1(-0.5 * r2 / (f.sigma * f.sigma));
          } else if constexpr (std::is_same_v<T, family::Laplacian>) {
            return std::expm1(-r / f.sigma);
          } else if constexpr (std::is_same_v<T, family::Matern>) {
            return matern_excess(f.nu, r / f.sigma);
          } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
            return peak() * std::expm1(-0.25 * r2 / (f.alpha.sigma * f.alpha.sigma));
          } else if constexpr (std::is_same_v<T, family::Sliced>) {
            double acc = 0.0;
            for (Eigen::Index t = 0; t < f.directions.rows(); ++t) {
              double u = 0.0;
              for (int k = 0; k < d; ++k) u += f.directions(t, k) * z[static_cast<std::size_t>(k)];
              acc += f.base->kappa0_excess(std::span<const double>(&u, 1));
            }
            return acc / static_cast<double>(f.directions.rows());
          } else {
            throw Error(Errc::UnsupportedKernel, "modified kernel is not translation invariant");
          }
        },
        family);
  }

  double kappa0(std::span<const double> z) const { return peak() + kappa0_excess(z); }

  double kappa0(double z) const { return kappa0(std::span<const double>(&z, 1)); }

  double eval(std::span<const double> x, std::span<const double> y) const {
    require(static_cast<int>(x.size()) == d && static_cast<int>(y.size()) == d, Errc::DimensionMismatch,
            "kernel argument dimension mismatch");
    if (const auto* m = std::get_if<family::Modified>(&family))
      return m->base->eval(x, y) + m->mean_weight * dot(x, y);
    double buf[16];
    std::vector<double> heap;
    double* z = buf;
    if (d > 16) {
      heap.resize(static_cast<std::size_t>(d));
      z = heap.data();
    }
    for (int k = 0; k < d; ++k) z[k] = x[static_cast<std::size_t>(k)] - y[static_cast<std::size_t>(k)];
    return kappa0(std::span<const double>(z, static_cast<std::size_t>(d)));
  }

  /// Matern profile minus one at t = r / sigma.
  static double matern_excess(double nu, double t) {
    if (t == 0.0) return 0.0;
    if (nu == 0.5) return std::expm1(-t);
    if (nu == 1.5) {
      const double a = std::sqrt(3.0) * t;
      return std::expm1(-a) + a * std::exp(-a);
    }
    if (nu == 2.5) {
      const double a = std::sqrt(5.0) * t;
      return std::expm1(-a) + (a + a * a / 3.0) * std::exp(-a);
    }
    const double a = std::sqrt(2.0 * nu) * t;
    if (a > 700.0) return -1.0;
    const double log_v = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(a);
    return std::exp(log_v) * std::cyl_bessel_k(nu, a) - 1.0;
  }
};

inline double kappa0(const KernelSpec& k, std::span<const double> z) { return k.kappa0(z); }

inline double eval(const KernelSpec& k, std::span<const double> x, std::span<const double> y) { return k.eval(x, y); }

/// Closed-form Fourier transform int kappa0(z) exp(-i <omega, z>) dz.
inline double fourier_kappa0(const KernelSpec& k, std::span<const double> omega) {
  require(static_cast<int>(omega.size()) == k.d, Errc::DimensionMismatch, "frequency dimension mismatch");
  double w2 = 0.0;
  for (double v : omega) w2 += v * v;
  const double d = static_cast<double>(k.d);
  const double pi = std::numbers::pi;
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::Gaussian>) {
          return f.scale * std::pow(2.0 * pi * f.sigma * f.sigma, 0.5 * d) * std::exp(-0.5 * f.sigma * f.sigma * w2);
        } else if constexpr (std::is_same_v<T, family::Laplacian>) {
          const double s = f.sigma;
          return std::exp(d * std::log(2.0) + 0.5 * (d - 1.0) * std::log(pi) + std::lgamma(0.5 * (d + 1.0)) +
                          d * std::log(s) - 0.5 * (d + 1.0) * std::log1p(s * s * w2));
        } else if constexpr (std::is_same_v<T, family::Matern>) {
          const double nu = f.nu, s = f.sigma;
          const double c = 2.0 * nu / (s * s);
          return std::exp(d * std::log(2.0) + 0.5 * d * std::log(pi) + std::lgamma(nu + 0.5 * d) - std::lgamma(nu) +
                          nu * std::log(c) - (nu + 0.5 * d) * std::log(c + w2));
        } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
          return std::exp(-f.alpha.sigma * f.alpha.sigma * w2);
        } else if constexpr (std::is_same_v<T, family::Sliced>) {
          throw Error(Errc::UnsupportedFamily, "sliced kernels have a singular spectral measure");
        } else {
          throw Error(Errc::UnsupportedKernel, "modified kernel is not translation invariant");
        }
      },
      k.family);
}

inline double fourier_kappa0(const KernelSpec& k, double omega) {
  return fourier_kappa0(k, std::span<const double>(&omega, 1));
}

/// One frequency from the normalized spectral measure kappa_hat / ((2 pi)^d kappa0(0)).
inline Vector sample_frequency(const KernelSpec& k, Rng& rng) {
  Vector w(k.d);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::Gaussian>) {
          for (int j = 0; j < k.d; ++j) w[j] = rng.normal() / f.sigma;
        } else if constexpr (std::is_same_v<T, family::Laplacian> || std::is_same_v<T, family::Matern>) {
          double nu_t = 1.0, sigma = 0.0;
          if constexpr (std::is_same_v<T, family::Laplacian>) {
            sigma = f.sigma;
          } else {
            nu_t = 2.0 * f.nu;
            sigma = f.sigma;
          }
          // multivariate Student-t: Gaussian over the root of a scaled chi-square
          for (int j = 0; j < k.d; ++j) w[j] = rng.normal();
          const double chi = rng.chi_squared(nu_t);
          w /= sigma * std::sqrt(chi / nu_t);
        } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
          const double sd = 1.0 / (std::numbers::sqrt2 * f.alpha.sigma);
          for (int j = 0; j < k.d; ++j) w[j] = sd * rng.normal();
        } else if constexpr (std::is_same_v<T, family::Sliced>) {
          const auto t = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(f.directions.rows())));
          const Vector s = sample_frequency(*f.base, rng);
          w = s[0] * f.directions.row(t).transpose();
        } else {
          throw Error(Errc::UnsupportedKernel, "modified kernel has no spectral measure");
        }
      },
      k.family);
  return w;
}

/// m i.i.d. frequencies drawn from one stream.
inline Matrix spectral_sample(const KernelSpec& k, std::size_t m, Rng& rng) {
  require(m >= 1, Errc::InvalidArgument, "need at least one frequency");
  require(k.translation_invariant(), Errc::UnsupportedKernel, "modified kernel has no spectral measure");
  Matrix out(static_cast<Eigen::Index>(m), k.d);
  for (std::size_t j = 0; j < m; ++j) out.row(static_cast<Eigen::Index>(j)) = sample_frequency(k, rng).transpose();
  return out;
}

/// Frequency j comes from stream (seed, j), so growing m keeps earlier rows.
inline Matrix spectral_sample(const KernelSpec& k, std::size_t m, std::uint64_t seed) {
  require(m >= 1, Errc::InvalidArgument, "need at least one frequency");
  require(k.translation_invariant(), Errc::UnsupportedKernel, "modified kernel has no spectral measure");
  Matrix out(static_cast<Eigen::Index>(m), k.d);
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(seed, j);
    out.row(static_cast<Eigen::Index>(j)) = sample_frequency(k, rng).transpose();
  }
  return out;
}

/// -Hessian of kappa0 at zero, analytic.
inline Matrix neg_hessian_at_zero(const KernelSpec& k) {
  const Matrix eye = Matrix::Identity(k.d, k.d);
  return std::visit(
      [&](const auto& f) -> Matrix {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::Gaussian>) {
          return eye * (f.scale / (f.sigma * f.sigma));
        } else if constexpr (std::is_same_v<T, family::Laplacian>) {
          throw Error(Errc::NonSmoothAtZero, "laplacian kernel has a kink at zero");
        } else if constexpr (std::is_same_v<T, family::Matern>) {
          require(f.nu > 1.0, Errc::NonSmoothAtZero, "matern kernel needs nu > 1 to be twice differentiable");
          return eye * (f.nu / ((f.nu - 1.0) * f.sigma * f.sigma));
        } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
          return eye * (k.peak() / (2.0 * f.alpha.sigma * f.alpha.sigma));
        } else if constexpr (std::is_same_v<T, family::Sliced>) {
          const double c = neg_hessian_at_zero(*f.base)(0, 0);
          const Matrix& th = f.directions;
          return (th.transpose() * th) * (c / static_cast<double>(th.rows()));
        } else {
          throw Error(Errc::UnsupportedKernel, "modified kernel is not translation invariant");
        }
      },
      k.family);
}

/// Central differences of kappa0 at zero with one Richardson step.
inline Matrix neg_hessian_fd(const KernelSpec& k, double h = 1e-4) {
  require(k.translation_invariant(), Errc::UnsupportedKernel, "modified kernel is not translation invariant");
  const int d = k.d;
  auto second = [&](int i, int j, double step) {
    Vector z = Vector::Zero(d);
    auto f = [&](double a, double b) {
      z.setZero();
      z[i] += a;
      z[j] += b;
      return k.kappa0_excess(std::span<const double>(z.data(), static_cast<std::size_t>(d)));
    };
    if (i == j) return (f(step, 0) - 2.0 * f(0, 0) + f(-step, 0)) / (step * step);
    return (f(step, step) - f(step, -step) - f(-step, step) + f(-step, -step)) / (4.0 * step * step);
  };
  Matrix H(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) H(i, j) = -(4.0 * second(i, j, h / 2.0) - second(i, j, h)) / 3.0;
  return H;
}

inline double lambda_max(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(sym), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// Lipschitz constant of the feature embedding: MMD <= C * W_p for every p >= 1.
inline double hessian_constant(const KernelSpec& k) {
  return std::sqrt(std::max(0.0, lambda_max(neg_hessian_at_zero(k))));
}

inline double hessian_constant_fd(const KernelSpec& k, double h = 1e-4) {
  // NonSmoothAtZero families are refused before differencing a kink.
  (void)neg_hessian_at_zero(k);
  return std::sqrt(std::max(0.0, lambda_max(neg_hessian_fd(k, h))));
}

/// Quasi-uniform unit directions on S^{d-1}: {+1} in 1-D, equispaced angles with a seeded
/// offset in 2-D, a randomly rotated spherical Fibonacci lattice in 3-D, normalized Gaussians above.
inline Matrix make_directions(int d, std::size_t T, std::uint64_t seed) {
  require(d >= 1 && T >= 1, Errc::InvalidArgument, "need d >= 1 and T >= 1");
  Rng rng(seed, 0x5eedd1ull);
  if (d == 1) {
    Matrix m(1, 1);
    m(0, 0) = 1.0;
    return m;
  }
  Matrix m(static_cast<Eigen::Index>(T), d);
  if (d == 2) {
    const double offset = rng.uniform(0.0, 2.0 * std::numbers::pi / static_cast<double>(T));
    for (std::size_t t = 0; t < T; ++t) {
      const double a = offset + 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(T);
      m(static_cast<Eigen::Index>(t), 0) = std::cos(a);
      m(static_cast<Eigen::Index>(t), 1) = std::sin(a);
    }
    return m;
  }
  if (d == 3) {
    Eigen::Matrix3d g;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
    const Eigen::Matrix3d rot = qr.householderQ();
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t t = 0; t < T; ++t) {
      const double z = 1.0 - (2.0 * static_cast<double>(t) + 1.0) / static_cast<double>(T);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(t);
      Eigen::Vector3d p(r * std::cos(a), r * std::sin(a), z);
      p = rot * p;
      m.row(static_cast<Eigen::Index>(t)) = p.normalized().transpose();
    }
    return m;
  }
  for (std::size_t t = 0; t < T; ++t) {
    Vector v(d);
    do {
      for (int j = 0; j < d; ++j) v[j] = rng.normal();
    } while (v.norm() < 1e-12);
    m.row(static_cast<Eigen::Index>(t)) = v.normalized().transpose();
  }
  return m;
}

/// Gram matrix of a point set under k.
inline Eigen::MatrixXd gram(const KernelSpec& k, const Matrix& x) {
  Eigen::MatrixXd g(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j <= i; ++j) g(i, j) = g(j, i) = k.eval(row(x, i), row(x, j));
  return g;
}

}  // namespace wmmd
