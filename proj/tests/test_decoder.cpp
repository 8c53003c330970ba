#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "wmmd/compressive.hpp"
#include "wmmd/decoder.hpp"

using namespace wmmd;

TEST(Nnls, MatchesEnumeratedActiveSets) {
  Rng rng(1, 0);
  for (int t = 0; t < 30; ++t) {
    Eigen::MatrixXd A(8, 4);
    Eigen::VectorXd b(8);
    for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.normal();
    // brute force: best feasible unconstrained solve over all 2^4 supports
    double best = (b).squaredNorm();
    for (int mask = 1; mask < 16; ++mask) {
      std::vector<Eigen::Index> cols;
      for (int j = 0; j < 4; ++j)
        if (mask & (1 << j)) cols.push_back(j);
      Eigen::MatrixXd As(8, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) As.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
      const Eigen::VectorXd z = As.colPivHouseholderQr().solve(b);
      if (z.minCoeff() < 0.0) continue;
      best = std::min(best, (As * z - b).squaredNorm());
    }
    const Vector x = nnls(A, b);
    EXPECT_GE(x.minCoeff(), 0.0);
    EXPECT_NEAR((A * x - b).squaredNorm(), best, 1e-10);
  }
}

TEST(Simplex, Projection) {
  const Vector v = (Vector(3) << 0.2, 0.3, 0.5).finished();
  EXPECT_LT((project_simplex(v) - v).norm(), 1e-15);
  const Vector p = project_simplex((Vector(3) << 2.0, -1.0, 0.5).finished());
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_NEAR(p[0], 1.0, 1e-15);
  const Vector q = project_simplex((Vector(2) << 0.0, 0.0).finished());
  EXPECT_NEAR(q[0], 0.5, 1e-15);
}

TEST(Decode, SingleDirac) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 64, 3);
  const Vector c = (Vector(2) << 0.7, -1.4).finished();
  const Sketch s = sketch_measure(f, DiscreteMeasure::dirac(c));
  DecoderOptions o;
  o.seed = 1;
  const auto r = decode_diracs(s, 1, Ball{Vector::Zero(2), 3.0}, o);
  EXPECT_LT((r.measure.points().row(0).transpose() - c).norm(), 1e-3);
  EXPECT_NEAR(r.measure.weight(0), 1.0, 1e-12);
}

TEST(Decode, TwoFarDiracs) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 128, 4);
  const auto mu = make_discrete({{-5.0, 0.0}, {5.0, 1.0}}, {1.0, 1.0});
  DecoderOptions o;
  o.seed = 2;
  const auto r = decode_diracs(sketch_measure(f, mu), 2, Ball{Vector::Zero(2), 8.0}, o);
  ASSERT_EQ(r.measure.size(), 2);
  for (Eigen::Index i = 0; i < 2; ++i) {
    double best = 1e300;
    Eigen::Index arg = 0;
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double dd = (r.measure.points().row(j) - mu.points().row(i)).norm();
      if (dd < best) {
        best = dd;
        arg = j;
      }
    }
    EXPECT_LT(best, 1e-2);
    EXPECT_NEAR(r.measure.weight(arg), 0.5, 1e-2);
  }
}

TEST(Decode, ResidualMonotoneInK) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 64, 5);
  const auto mu = make_discrete({{-3.0, 0.0}, {3.0, 0.0}}, {1.0, 2.0});
  DecoderOptions o;
  o.seed = 3;
  const auto r = decode_diracs(sketch_measure(f, mu), 5, Ball{Vector::Zero(2), 5.0}, o);
  ASSERT_EQ(r.residual_history.size(), 6u);
  for (std::size_t k = 1; k < r.residual_history.size(); ++k)
    EXPECT_LE(r.residual_history[k], r.residual_history[k - 1]);
  EXPECT_LE(r.residual_history[5], r.residual_history[2]);
}

TEST(Decode, DeterministicAcrossThreads) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 32, 6);
  const auto mu = make_discrete({{-1.0, 0.0}, {2.0, 1.0}}, {1.0, 1.0});
  DecoderOptions a, b;
  a.seed = b.seed = 7;
  b.threads = 4;
  const auto ra = decode_diracs(sketch_measure(f, mu), 2, Ball{Vector::Zero(2), 4.0}, a);
  const auto rb = decode_diracs(sketch_measure(f, mu), 2, Ball{Vector::Zero(2), 4.0}, b);
  EXPECT_EQ(ra.measure.points(), rb.measure.points());
  EXPECT_EQ(ra.measure.weights(), rb.measure.weights());
}

TEST(Decode, Rejects) {
  const auto f = draw_features(KernelSpec::gaussian(1.0, 2), 8, 1);
  const Sketch s = sketch_measure(f, DiscreteMeasure::dirac(Vector::Zero(2)));
  EXPECT_ERRC(decode_diracs(s, 0, Ball{Vector::Zero(2), 1.0}), Errc::InvalidArgument);
  EXPECT_ERRC(decode_diracs(s, 1, Ball{Vector::Zero(3), 1.0}), Errc::DimensionMismatch);
  EXPECT_ERRC(decode_diracs(s, 1, Ball{Vector::Zero(2), 0.0}), Errc::InvalidArgument);
}

TEST(Compressive, ExactAtomsGiveZeroRisk) {
  Matrix x(6, 2);
  x << -4, 0, -4, 0, 4, 0, 4, 0, 0, 5, 0, 5;
  SketchOptions o;
  o.m = 128;
  o.seed = 2;
  const auto r = compressive_kmeans(x, 3, o);
  EXPECT_NEAR(r.risk_lloyd, 0.0, 1e-12);
  EXPECT_NEAR(r.risk_sketch, 0.0, 1e-6);
}

TEST(Compressive, SmallClusters) {
  Rng rng(8, 0);
  const int n = 3000;
  Matrix x(n, 2);
  const double cx[] = {10.0, -10.0, 0.0}, cy[] = {0.0, 0.0, 10.0};
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    x(i, 0) = cx[c] + rng.normal();
    x(i, 1) = cy[c] + rng.normal();
  }
  SketchOptions o;
  o.m = 256;
  o.seed = 5;
  const Report rep = excess_risk_report(x, 3, o);
  EXPECT_TRUE(rep.pass) << report_summary(rep).dump();
  EXPECT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0][rep.column("ok")], 1.0);
}

TEST(Compressive, BoundingBall) {
  Matrix x(2, 1);
  x << -1.0, 3.0;
  const Ball b = bounding_ball(x);
  EXPECT_DOUBLE_EQ(b.center[0], 1.0);
  EXPECT_DOUBLE_EQ(b.radius, 2.0);
}
