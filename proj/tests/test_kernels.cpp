#include <algorithm>
#include <cmath>
#include <numbers>

#include "common.hpp"
#include "wmmd/kernel_json.hpp"
#include "wmmd/kernels.hpp"

using namespace wmmd;

namespace {

double k0(const KernelSpec& k, std::initializer_list<double> z) {
  std::vector<double> v(z);
  return k.kappa0(std::span<const double>(v));
}

// largest gap between two empirical CDFs
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return best;
}

}  // namespace

TEST(Eval, Diagonal) {
  const auto g = KernelSpec::gaussian(1.0, 2);
  const double x[] = {0.3, -2.0};
  EXPECT_EQ(g.eval(x, x), 1.0);
}

TEST(Eval, LaplacianAtOne) { EXPECT_NEAR(k0(KernelSpec::laplacian(1.0), {1.0}), 0.3678794, 1e-7); }

TEST(Eval, ConvRootMatchesGridConvolution) {
  for (double sigma : {0.3, 1.0}) {
    const auto k = KernelSpec::convroot(sigma, 1);
    const RegularizerSpec a{sigma};
    for (double z : {0.0, 0.4, 1.7}) {
      // trapezoid over a wide grid; exponentially accurate for Gaussians
      const double h = sigma / 200.0, L = 20.0 * sigma;
      double acc = 0.0;
      for (double t = -L; t <= L; t += h) {
        const double u = z - t;
        acc += a.density(std::span<const double>(&t, 1)) * a.density(std::span<const double>(&u, 1));
      }
      acc *= h;
      const double closed = std::pow(4.0 * std::numbers::pi * sigma * sigma, -0.5) * std::exp(-z * z / (4.0 * sigma * sigma));
      EXPECT_NEAR(k.kappa0(z), acc, 1e-6);
      EXPECT_NEAR(k.kappa0(z), closed, 1e-14);
    }
  }
}

TEST(Eval, MaternHalfIsLaplacian) {
  const auto m = KernelSpec::matern(0.5, 1.3), l = KernelSpec::laplacian(1.3);
  for (double z : {0.0, 0.1, 1.0, 5.0}) EXPECT_NEAR(m.kappa0(z), l.kappa0(z), 1e-15);
}

TEST(Eval, MaternGeneralNuMatchesClosedForms) {
  // nu = 1.5 and 2.5 have closed forms; nudging nu tests the Bessel branch
  const auto a = KernelSpec::matern(1.5, 0.8), b = KernelSpec::matern(1.5 + 1e-9, 0.8);
  for (double z : {0.05, 0.5, 2.0}) EXPECT_NEAR(a.kappa0(z), b.kappa0(z), 1e-7);
}

TEST(Spectral, GaussianVariance) {
  const auto k = KernelSpec::gaussian(1.0, 1);
  Rng rng(1, 0);
  const Matrix w = spectral_sample(k, 100000, rng);
  const double m = w.mean();
  const double var = (w.array() - m).square().sum() / static_cast<double>(w.rows() - 1);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Spectral, BochnerReconstruction) {
  const std::size_t m = 20000;
  const std::vector<KernelSpec> ks = {KernelSpec::gaussian(0.7, 2), KernelSpec::laplacian(1.0, 2),
                                      KernelSpec::matern(1.5, 1.0, 2), KernelSpec::matern(2.5, 0.5, 2),
                                      KernelSpec::convroot(0.4, 2),
                                      KernelSpec::sliced(KernelSpec::laplacian(1.0, 1), make_directions(2, 16, 3))};
  for (const auto& k : ks) {
    const Matrix w = spectral_sample(k, m, 77);
    for (double r : {0.0, 0.3, 1.0, 2.5}) {
      const double z[] = {r, -0.5 * r};
      double acc = 0.0;
      for (Eigen::Index j = 0; j < w.rows(); ++j) acc += std::cos(w(j, 0) * z[0] + w(j, 1) * z[1]);
      acc /= static_cast<double>(m);
      EXPECT_NEAR(acc, k.kappa0(z) / k.peak(), 4.0 / std::sqrt(static_cast<double>(m))) << k.name() << " r=" << r;
    }
  }
}

TEST(Spectral, MaternHalfAndLaplacianSamplersAgree) {
  const std::size_t n = 20000;
  const Matrix a = spectral_sample(KernelSpec::matern(0.5, 1.0), n, 5);
  const Matrix b = spectral_sample(KernelSpec::laplacian(1.0), n, 6);
  std::vector<double> va(a.data(), a.data() + n), vb(b.data(), b.data() + n);
  // 0.1% two-sample Kolmogorov-Smirnov critical value
  EXPECT_LT(ks_statistic(va, vb), 1.95 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(Spectral, PrefixStable) {
  const auto k = KernelSpec::gaussian(1.0, 3);
  const Matrix a = spectral_sample(k, 8, 9), b = spectral_sample(k, 16, 9);
  EXPECT_EQ(a, b.topRows(8));
  EXPECT_ERRC(spectral_sample(KernelSpec::modified(k, 1.0), 4, 1), Errc::UnsupportedKernel);
}

TEST(Fourier, ClosedForms) {
  EXPECT_NEAR(fourier_kappa0(KernelSpec::laplacian(1.0), 0.0), 2.0, 1e-14);
  EXPECT_NEAR(fourier_kappa0(KernelSpec::matern(0.5, 1.0), 1.0), 1.0, 1e-14);
  EXPECT_NEAR(fourier_kappa0(KernelSpec::laplacian(1.0), 1.0), 1.0, 1e-14);
  const double sigma = 0.6;
  const double w[] = {0.7, -1.1};
  EXPECT_NEAR(fourier_kappa0(KernelSpec::convroot(sigma, 2), w), std::exp(-sigma * sigma * (0.49 + 1.21)), 1e-15);
  EXPECT_NEAR(fourier_kappa0(KernelSpec::gaussian(1.0), 0.0), std::sqrt(2.0 * std::numbers::pi), 1e-14);
}

TEST(Fourier, MatchesNumericalTransform) {
  // int kappa0(z) cos(w z) dz by trapezoid for the 1-D families
  for (const auto& k : {KernelSpec::gaussian(0.8), KernelSpec::matern(1.5, 1.0), KernelSpec::matern(2.5, 0.7)}) {
    for (double w : {0.0, 0.5, 2.0}) {
      const double h = 1e-3, L = 60.0;
      double acc = 0.0;
      for (double z = -L; z <= L; z += h) acc += k.kappa0(z) * std::cos(w * z);
      EXPECT_NEAR(acc * h, fourier_kappa0(k, w), 1e-6) << k.name() << " w=" << w;
    }
  }
}

TEST(Hessian, GaussianConstant) {
  for (double s : {0.5, 1.0, 2.0}) {
    const auto k = KernelSpec::gaussian(s, 2);
    EXPECT_NEAR(hessian_constant(k), 1.0 / s, 1e-15);
    EXPECT_NEAR(hessian_constant_fd(k), 1.0 / s, 1e-6);
  }
  EXPECT_NEAR(hessian_constant_fd(KernelSpec::gaussian(2.0, 1)), 0.5, 1e-6);
}

TEST(Hessian, OtherFamiliesMatchFiniteDifferences) {
  for (const auto& k : {KernelSpec::matern(2.5, 0.7, 3), KernelSpec::convroot(0.5, 2)})
    EXPECT_NEAR(hessian_constant(k), hessian_constant_fd(k), 1e-5) << k.name();
  // Matern 3/2 has an |x|^3 term, so the difference quotient is only first order in h
  const auto m32 = KernelSpec::matern(1.5, 1.0, 2);
  EXPECT_NEAR(hessian_constant(m32), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(hessian_constant(m32), hessian_constant_fd(m32, 1e-4), 1e-3);
  EXPECT_NEAR(hessian_constant(m32), hessian_constant_fd(m32, 1e-5), 1e-4);
  const auto s = KernelSpec::sliced(KernelSpec::gaussian(1.0, 1), make_directions(2, 8, 1));
  EXPECT_NEAR(hessian_constant(s), hessian_constant_fd(s), 1e-5);
}

TEST(Hessian, NonSmooth) {
  EXPECT_ERRC(hessian_constant(KernelSpec::laplacian(1.0)), Errc::NonSmoothAtZero);
  EXPECT_ERRC(hessian_constant(KernelSpec::matern(0.5, 1.0)), Errc::NonSmoothAtZero);
}

TEST(SlicedModified, Evaluation) {
  const Vector x = (Vector(2) << 0.5, 2.0).finished(), y = (Vector(2) << -1.0, 7.0).finished();
  const auto base = KernelSpec::gaussian(1.0, 1);
  Matrix e1(1, 2);
  e1 << 1.0, 0.0;
  const auto s = KernelSpec::sliced(base, e1);
  const double u = x[0], v = y[0];
  EXPECT_NEAR(s.eval(std::span<const double>(x.data(), 2), std::span<const double>(y.data(), 2)), base.eval(std::span<const double>(&u, 1), std::span<const double>(&v, 1)), 1e-15);

  const auto m = KernelSpec::modified(KernelSpec::gaussian(1.0, 2), 0.5);
  EXPECT_NEAR(m.eval(std::span<const double>(x.data(), 2), std::span<const double>(x.data(), 2)), 1.0 + 0.5 * x.squaredNorm(), 1e-15);
  EXPECT_FALSE(m.translation_invariant());
}

TEST(SlicedModified, GramIsPsd) {
  const auto s = KernelSpec::sliced(KernelSpec::laplacian(1.0, 1), make_directions(2, 64, 4));
  Rng rng(8, 0);
  Matrix x(40, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2.0, 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(s, x));
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(SlicedModified, Rejects) {
  Matrix bad(1, 2);
  bad << 1.0, 1.0;
  EXPECT_ERRC(KernelSpec::sliced(KernelSpec::gaussian(1.0, 1), bad), Errc::NonUnitDirection);
  EXPECT_ERRC(KernelSpec::sliced(KernelSpec::gaussian(1.0, 2), make_directions(2, 4, 0)), Errc::InvalidArgument);
}

TEST(Directions, UnitRows) {
  for (int d : {1, 2, 3, 5}) {
    const Matrix th = make_directions(d, 32, 2);
    for (Eigen::Index t = 0; t < th.rows(); ++t) EXPECT_NEAR(th.row(t).norm(), 1.0, 1e-14);
  }
}

TEST(KernelJson, RoundTrip) {
  const std::vector<KernelSpec> ks = {KernelSpec::gaussian(0.3, 2, 1.5), KernelSpec::laplacian(2.0, 3),
                                      KernelSpec::matern(2.5, 0.1, 1), KernelSpec::convroot(0.25, 2),
                                      KernelSpec::sliced(KernelSpec::matern(1.5, 1.0, 1), make_directions(3, 5, 1)),
                                      KernelSpec::modified(KernelSpec::gaussian(1.0, 2), 0.5)};
  for (const auto& k : ks) {
    const json j = kernel_to_json(k);
    const json again = kernel_to_json(kernel_from_json(j));
    EXPECT_EQ(j, again) << j.dump();
    EXPECT_EQ(json::parse(j.dump()), j);
  }
}

TEST(KernelJson, Defaults) {
  const auto k = kernel_from_json(json{{"family", "gaussian"}});
  EXPECT_EQ(k.d, 1);
  EXPECT_EQ(k.peak(), 1.0);
  EXPECT_ERRC(kernel_from_json(json{{"family", "gaussian"}, {"sgima", 1}}), Errc::Parse);
  EXPECT_ERRC(kernel_from_json(json{{"family", "cauchy"}}), Errc::UnsupportedFamily);
  EXPECT_ERRC(kernel_from_json(json{{"family", "gaussian"}, {"sigma", -1}}), Errc::InvalidArgument);
}
