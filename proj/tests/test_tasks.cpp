#include <cmath>

#include "common.hpp"
#include "wmmd/tasks.hpp"
#include "wmmd/transport.hpp"

using namespace wmmd;

namespace {

DiscreteMeasure random_measure(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Matrix p(n, d);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) p(i, k) = rng.uniform(-1.5, 1.5);
    w[i] = rng.uniform(0.1, 1.0);
  }
  return {p, w};
}

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

TEST(Risk, KMeansHandSum) {
  const auto mu = DiscreteMeasure::uniform(col({0.0, 1.0, 10.0}));
  EXPECT_NEAR(risk(TaskSpec::kmeans(2), mu, hyp::Centroids{col({0.0, 10.0})}), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(risk(TaskSpec::kmeans(3), mu, hyp::Centroids{col({0.0, 1.0, 10.0})}), 0.0);
  EXPECT_NEAR(risk(TaskSpec::kmedians(2), mu, hyp::Centroids{col({0.0, 10.0})}), 1.0 / 3.0, 1e-15);
}

TEST(Risk, RegressionAtZero) {
  Matrix p(3, 2);
  p << 0.5, 1.0, -1.0, 2.0, 3.0, -0.5;
  const auto mu = DiscreteMeasure::uniform(p);
  EXPECT_NEAR(risk(TaskSpec::linear_regression(1.0), mu, hyp::Linear{Vector::Zero(1)}), (1.0 + 4.0 + 0.25) / 3.0, 1e-15);
}

TEST(Risk, RejectsBadHypotheses) {
  const auto mu = DiscreteMeasure::uniform(col({0.0, 1.0}));
  EXPECT_ERRC(risk(TaskSpec::kmeans(2), mu, hyp::Centroids{col({0.0})}), Errc::DimensionMismatch);
  Matrix p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  EXPECT_ERRC(risk(TaskSpec::linear_regression(1.0), DiscreteMeasure::uniform(p), hyp::Linear{Vector::Constant(1, 2.0)}),
              Errc::ConstraintViolation);
}

TEST(KMeansProject, HandExample) {
  const auto mu = DiscreteMeasure::uniform(col({0.0, 1.0, 10.0}));
  const auto pj = kmeans_project(col({0.0, 10.0}), mu);
  ASSERT_EQ(pj.size(), 2);
  EXPECT_EQ(pj.point(0)[0], 0.0);
  EXPECT_NEAR(pj.weight(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(pj.weight(1), 1.0 / 3.0, 1e-15);
  const auto same = kmeans_project(col({10.0, 1.0, 0.0, 5.0}), mu);
  EXPECT_EQ(same.size(), 3);
  EXPECT_NEAR(w_exact(2.0, same, mu).first, 0.0, 1e-15);
}

TEST(KMeansProject, RiskIdentity) {
  Rng rng(1, 0);
  for (int t = 0; t < 100; ++t) {
    const auto mu = random_measure(6, 2, rng);
    const int K = 1 + static_cast<int>(rng.index(3));
    Matrix c(K, 2);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1.5, 1.5);
    const auto pj = kmeans_project(c, mu);
    EXPECT_NEAR(risk(TaskSpec::kmeans(K), mu, hyp::Centroids{c}), std::pow(w_exact(2.0, mu, pj).first, 2), 1e-9);
    EXPECT_NEAR(risk(TaskSpec::kmedians(K), mu, hyp::Centroids{c}), w_exact(1.0, mu, pj).first, 1e-9);
  }
}

TEST(Probe, IdenticalIsZero) {
  Rng rng(2, 0);
  const auto mu = random_measure(5, 3, rng);
  EXPECT_EQ(task_metric_probe(TaskSpec::linear_regression(1.0), mu, mu, 4, rng), 0.0);
}

TEST(Probe, BelowWassersteinBound) {
  Rng rng(3, 0);
  for (int t = 0; t < 30; ++t) {
    {
      const TaskSpec task = TaskSpec::linear_regression(1.5);
      const auto mu = random_measure(4, 3, rng), nu = random_measure(5, 3, rng);
      EXPECT_LE(task_metric_probe(task, mu, nu, 6, rng), learnability_constant(task) * w_exact(2.0, mu, nu).first + 1e-9);
    }
    {
      const TaskSpec task = TaskSpec::kmeans(2);
      const auto mu = random_measure(4, 2, rng), nu = random_measure(3, 2, rng);
      EXPECT_LE(task_metric_probe(task, mu, nu, 6, rng), w_exact(2.0, mu, nu).first + 1e-9);
    }
    {
      const TaskSpec task = TaskSpec::multi_output_regression(1.0, 2);
      const auto mu = random_measure(4, 4, rng), nu = random_measure(3, 4, rng);
      EXPECT_LE(task_metric_probe(task, mu, nu, 4, rng), learnability_constant(task) * w_exact(2.0, mu, nu).first + 1e-9);
    }
  }
}

TEST(Probe, SingleCentroidShift) {
  Rng rng(4, 0);
  const Vector tvec = (Vector(2) << 1.2, -0.4).finished();
  const auto mu = DiscreteMeasure::dirac(Vector::Zero(2)), nu = DiscreteMeasure::dirac(tvec);
  const double probe = task_metric_probe(TaskSpec::kmeans(1), mu, nu, 8, rng);
  EXPECT_LE(probe, tvec.norm() + 1e-12);
  EXPECT_GT(probe, 0.5 * tvec.norm());
}

TEST(Constants, PerTask) {
  EXPECT_DOUBLE_EQ(learnability_constant(TaskSpec::kmeans(3)), 1.0);
  EXPECT_DOUBLE_EQ(learnability_constant(TaskSpec::linear_regression(2.0)), std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(learnability_constant(TaskSpec::binary_classification(0.5)), 1.0);
  EXPECT_DOUBLE_EQ(learnability_constant(TaskSpec::binary_classification(3.0)), 3.0);
  const double x[] = {0.0, 0.0, 1.0}, y[] = {3.0, 4.0, -1.0};
  EXPECT_DOUBLE_EQ(task_distance(TaskSpec::binary_classification(1.0), x, y), 7.0);
  EXPECT_DOUBLE_EQ(task_distance(TaskSpec::kmeans(1), x, y), std::sqrt(29.0));
}

TEST(Lloyd, RecoversSeparatedAtoms) {
  Matrix p(6, 1);
  p << -10.0, -10.0, 0.0, 0.0, 10.0, 10.0;
  Rng rng(5, 0);
  const auto r = lloyd(DiscreteMeasure::uniform(p), 3, 5, rng);
  EXPECT_NEAR(r.risk, 0.0, 1e-15);
  EXPECT_ERRC(lloyd(DiscreteMeasure::uniform(p), 4, 5, rng), Errc::InvalidArgument);
}

TEST(Lloyd, NotWorseThanRandomCentroids) {
  Rng rng(6, 0);
  const auto mu = random_measure(60, 2, rng);
  const auto r = lloyd(mu, 3, 10, rng);
  for (int t = 0; t < 20; ++t) {
    Matrix c(3, 2);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.uniform(-1.5, 1.5);
    EXPECT_LE(r.risk, risk(TaskSpec::kmeans(3), mu, hyp::Centroids{c}) + 1e-12);
  }
}
