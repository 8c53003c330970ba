#include <cmath>
#include <filesystem>

#include "common.hpp"
#include "wmmd/discrepancy.hpp"
#include "wmmd/sketch.hpp"
#include "wmmd/sketch_io.hpp"
#include "wmmd/transport.hpp"

using namespace wmmd;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-2.0, 2.0);
  return x;
}

double max_gap(const Sketch& a, const Sketch& b) {
  return std::max((a.re - b.re).cwiseAbs().maxCoeff(), (a.im - b.im).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Features, Deterministic) {
  const auto k = KernelSpec::gaussian(1.0, 3);
  EXPECT_TRUE(draw_features(k, 16, 4).same_as(draw_features(k, 16, 4)));
  EXPECT_FALSE(draw_features(k, 16, 4).same_as(draw_features(k, 16, 5)));
  EXPECT_ERRC(draw_features(k, 0, 4), Errc::InvalidArgument);
  EXPECT_ERRC(draw_features(KernelSpec::modified(k, 1.0), 4, 4), Errc::UnsupportedKernel);
}

TEST(Features, WideKernelConcentrates) {
  const auto f = draw_features(KernelSpec::gaussian(1e6, 1), 1, 3);
  EXPECT_LT(std::abs(f.omega(0, 0)), 1e-5);
}

TEST(Features, Bochner) {
  const std::size_t m = 4096;
  const auto k = KernelSpec::matern(1.5, 1.0, 2);
  const auto f = draw_features(k, m, 8);
  Rng rng(1, 0);
  double acc = 0.0;
  const int probes = 50;
  for (int t = 0; t < probes; ++t) {
    const Vector x = random_points(1, 2, rng).transpose(), y = random_points(1, 2, rng).transpose();
    const std::span<const double> sx(x.data(), 2), sy(y.data(), 2);
    const std::complex<double> ip = f.feature(sx).dot(f.feature(sy));  // conj(Phi(x)) . Phi(y)
    acc += std::abs(ip.real() - k.eval(sx, sy) / k.peak());
  }
  EXPECT_LT(acc / probes, 4.0 / std::sqrt(static_cast<double>(m)));
}

TEST(SketchSamples, OriginSample) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 8, 1);
  const Sketch s = sketch_samples(f, Matrix::Zero(1, 2));
  for (Eigen::Index j = 0; j < 8; ++j) {
    EXPECT_DOUBLE_EQ(s.re[j], 1.0 / std::sqrt(8.0));
    EXPECT_EQ(s.im[j], 0.0);
  }
}

TEST(SketchSamples, ConcatenationAverages) {
  Rng rng(2, 0);
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 64, 2);
  const Matrix a = random_points(30, 2, rng), b = random_points(70, 2, rng);
  Matrix ab(100, 2);
  ab << a, b;
  const Sketch sa = sketch_samples(f, a), sb = sketch_samples(f, b), sab = sketch_samples(f, ab);
  Sketch avg = sa;
  avg.re = 0.3 * sa.re + 0.7 * sb.re;
  avg.im = 0.3 * sa.im + 0.7 * sb.im;
  EXPECT_LT(max_gap(avg, sab), 1e-12);
  EXPECT_LT(max_gap(merge({sa, sb}), sab), 1e-12);
  EXPECT_LT(max_gap(merge({sb, sa}), merge({sa, sb})), 1e-12);
  EXPECT_EQ(merge({sa, sb}).n_samples, 100u);
  EXPECT_LT(max_gap(sketch_measure(f, DiscreteMeasure::uniform(ab)), sab), 1e-15);
}

TEST(SketchSamples, Mismatch) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 8, 1);
  EXPECT_ERRC(sketch_samples(f, Matrix::Zero(3, 3)), Errc::DimensionMismatch);
  const auto g = draw_features(KernelSpec::gaussian(1.0, 2), 8, 2);
  EXPECT_ERRC(merge({sketch_samples(f, Matrix::Zero(1, 2)), sketch_samples(g, Matrix::Zero(1, 2))}),
              Errc::MismatchedFeatureMap);
}

TEST(Merge, EmptyPart) {
  Rng rng(3, 0);
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 16, 3);
  const Sketch s = sketch_samples(f, random_points(10, 2, rng));
  const Sketch empty = SketchAccumulator(f).finish();
  EXPECT_EQ(empty.n_samples, 0u);
  EXPECT_EQ(max_gap(merge({s, empty}), s), 0.0);
}

TEST(SketchMeasure, Dirac) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 16, 4);
  const double x[] = {0.3, -1.2};
  const Sketch s = sketch_measure(f, make_discrete({{0.3, -1.2}}, {1.0}));
  const Eigen::VectorXcd phi = f.feature(x);
  EXPECT_LT((s.re - phi.real()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((s.im - phi.imag()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SketchMeasure, NormalCharacteristic) {
  const double sigma = 0.7;
  const auto f = draw_features(KernelSpec::gaussian(1.0, 1), 32, 5);
  const Sketch s = sketch_measure(f, GaussianMixture::normal(0.0, sigma));
  for (Eigen::Index j = 0; j < f.m(); ++j) {
    const double w = f.omega(j, 0);
    EXPECT_NEAR(s.re[j], std::exp(-0.5 * sigma * sigma * w * w) / std::sqrt(32.0), 1e-15);
    EXPECT_NEAR(s.im[j], 0.0, 1e-15);
  }
}

TEST(SketchMeasure, GmmAgainstSampling) {
  Matrix means(2, 2);
  means << -1.0, 0.5, 2.0, 0.0;
  const GaussianMixture g(Vector::Constant(2, 0.5), means, (Vector(2) << 0.5, 1.0).finished());
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 16, 6);
  Rng rng(6, 1);
  const auto x = sample(g, 1000000, rng);
  EXPECT_LE(sketch_distance(sketch_measure(f, g), sketch_samples(f, x.points())), 3.0 / std::sqrt(1e6));
}

TEST(SketchDistance, EmpiricalKernelIdentity) {
  Rng rng(7, 0);
  const auto f = draw_features(KernelSpec::laplacian(1.0, 2), 50, 7);
  for (int t = 0; t < 20; ++t) {
    const auto mu = DiscreteMeasure::uniform(random_points(5, 2, rng));
    const auto nu = DiscreteMeasure::uniform(random_points(3, 2, rng));
    const Sketch a = sketch_measure(f, mu), b = sketch_measure(f, nu);
    EXPECT_EQ(sketch_distance(a, a), 0.0);
    auto cross = [&](const DiscreteMeasure& p, const DiscreteMeasure& q) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i)
        for (Eigen::Index j = 0; j < q.size(); ++j) s += p.weight(i) * q.weight(j) * f.empirical_kernel(p.point(i), q.point(j));
      return s;
    };
    const double sq = cross(mu, mu) + cross(nu, nu) - 2.0 * cross(mu, nu);
    EXPECT_NEAR(std::pow(sketch_distance(a, b), 2), sq, 1e-10);
  }
}

TEST(SketchDistance, LipschitzBound) {
  Rng rng(8, 0);
  const auto f = draw_features(KernelSpec::gaussian(0.5, 3), 128, 8);
  const double L = rkhs_lipschitz(f);
  EXPECT_NEAR(L, std::sqrt(f.omega.squaredNorm() / 128.0), 1e-14);
  for (int t = 0; t < 50; ++t) {
    const auto mu = DiscreteMeasure::uniform(random_points(4, 3, rng));
    const auto nu = DiscreteMeasure::uniform(random_points(6, 3, rng));
    EXPECT_LE(sketch_distance(sketch_measure(f, mu), sketch_measure(f, nu)), L * w_exact(1.0, mu, nu).first + 1e-12);
  }
}

TEST(SketchIo, RoundTripExact) {
  Rng rng(9, 0);
  const auto f = draw_features(KernelSpec::matern(2.5, 0.3, 2), 12, 9);
  const Sketch s = sketch_samples(f, random_points(17, 2, rng));
  const auto path = (std::filesystem::temp_directory_path() / "wmmd_sketch_rt.json").string();
  write_sketch(path, s);
  const Sketch back = read_sketch(path);
  EXPECT_TRUE(back.features.same_as(f));
  EXPECT_EQ(back.re, s.re);
  EXPECT_EQ(back.im, s.im);
  EXPECT_EQ(back.n_samples, 17u);
  EXPECT_EQ(sketch_to_json(back).dump(), sketch_to_json(s).dump());
  std::filesystem::remove(path);
}

TEST(SketchIo, Rejects) {
  json j = sketch_to_json(sketch_samples(draw_features(KernelSpec::gaussian(1.0, 1), 2, 1), Matrix::Zero(1, 1)));
  json bad = j;
  bad["format"] = "other";
  EXPECT_ERRC(sketch_from_json(bad), Errc::UnknownFormat);
  bad = j;
  bad["extra"] = 1;
  EXPECT_ERRC(sketch_from_json(bad), Errc::Parse);
  bad = j;
  bad["m"] = 3;
  EXPECT_ERRC(sketch_from_json(bad), Errc::DimensionMismatch);
}
