#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "wmmd/error.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/rng.hpp"

namespace wmmd {

namespace task {

/// min_k |x - c_k|^2
struct KMeans {
  int K = 1;
};
/// min_k |x - c_k|
struct KMedians {
  int K = 1;
};
/// (y - theta^T z)^2 with |theta| <= R; the label y is the last coordinate.
struct LinearRegression {
  double R = 1.0;
};
/// |y - M z|^2 with operator norm |M| <= R; the last K_out coordinates are y.
struct MultiOutputRegression {
  double R = 1.0;
  int K_out = 1;
};
/// hinge(y * tanh(w^T z + b)) with |w| <= L, labels +-1 in the last coordinate.
struct BinaryClassification {
  double L = 1.0;
};

}  // namespace task

struct TaskSpec {
  std::variant<task::KMeans, task::KMedians, task::LinearRegression, task::MultiOutputRegression,
               task::BinaryClassification>
      variant;
  double p = 2.0;

  static TaskSpec kmeans(int K) { return {task::KMeans{K}, 2.0}; }
  static TaskSpec kmedians(int K) { return {task::KMedians{K}, 1.0}; }
  static TaskSpec linear_regression(double R) { return {task::LinearRegression{R}, 2.0}; }
  static TaskSpec multi_output_regression(double R, int K_out) { return {task::MultiOutputRegression{R, K_out}, 2.0}; }
  static TaskSpec binary_classification(double L) { return {task::BinaryClassification{L}, 1.0}; }

  void validate() const {
    require(p >= 1.0, Errc::InvalidArgument, "loss exponent must be >= 1");
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, task::KMeans>) {
            require(t.K >= 1 && p == 2.0, Errc::InvalidArgument, "k-means needs K >= 1 and p = 2");
          } else if constexpr (std::is_same_v<T, task::KMedians>) {
            require(t.K >= 1 && p == 1.0, Errc::InvalidArgument, "k-medians needs K >= 1 and p = 1");
          } else if constexpr (std::is_same_v<T, task::LinearRegression>) {
            require(t.R > 0.0, Errc::InvalidArgument, "regression bound must be > 0");
          } else if constexpr (std::is_same_v<T, task::MultiOutputRegression>) {
            require(t.R > 0.0 && t.K_out >= 1, Errc::InvalidArgument, "bad multi-output regression parameters");
          } else {
            require(t.L > 0.0, Errc::InvalidArgument, "classifier Lipschitz bound must be > 0");
          }
        },
        variant);
  }

  bool compression() const {
    return std::holds_alternative<task::KMeans>(variant) || std::holds_alternative<task::KMedians>(variant);
  }
};

namespace hyp {

struct Centroids {
  Matrix c;  // K x d
};
struct Linear {
  Vector theta;
};
struct LinearMap {
  Matrix M;  // K_out x (d - K_out)
};
struct Classifier {
  Vector w;
  double b = 0.0;
};

}  // namespace hyp

using Hypothesis = std::variant<hyp::Centroids, hyp::Linear, hyp::LinearMap, hyp::Classifier>;

inline double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(M)};
  return svd.singularValues()(0);
}

/// Throws ConstraintViolation when h is outside the task's hypothesis class.
inline void check_hypothesis(const TaskSpec& t, const Hypothesis& h, Eigen::Index d) {
  std::visit(
      [&](const auto& tk) {
        using T = std::decay_t<decltype(tk)>;
        if constexpr (std::is_same_v<T, task::KMeans> || std::is_same_v<T, task::KMedians>) {
          const auto* c = std::get_if<hyp::Centroids>(&h);
          require(c != nullptr, Errc::ConstraintViolation, "compression task needs centroids");
          require(c->c.rows() >= 1, Errc::EmptyInput, "empty centroid list");
          require(c->c.cols() == d, Errc::DimensionMismatch, "centroid dimension mismatch");
          require(c->c.rows() == tk.K, Errc::DimensionMismatch, "expected K centroids");
        } else if constexpr (std::is_same_v<T, task::LinearRegression>) {
          const auto* l = std::get_if<hyp::Linear>(&h);
          require(l != nullptr, Errc::ConstraintViolation, "regression needs a weight vector");
          require(l->theta.size() == d - 1, Errc::DimensionMismatch, "theta must have d - 1 entries");
          require(l->theta.norm() <= tk.R + 1e-9, Errc::ConstraintViolation, "|theta| exceeds R");
        } else if constexpr (std::is_same_v<T, task::MultiOutputRegression>) {
          const auto* l = std::get_if<hyp::LinearMap>(&h);
          require(l != nullptr, Errc::ConstraintViolation, "multi-output regression needs a matrix");
          require(l->M.rows() == tk.K_out && l->M.cols() == d - tk.K_out, Errc::DimensionMismatch,
                  "M must be K_out x (d - K_out)");
          require(operator_norm(l->M) <= tk.R + 1e-9, Errc::ConstraintViolation, "operator norm exceeds R");
        } else {
          const auto* c = std::get_if<hyp::Classifier>(&h);
          require(c != nullptr, Errc::ConstraintViolation, "classification needs a classifier");
          require(c->w.size() == d - 1, Errc::DimensionMismatch, "w must have d - 1 entries");
          require(c->w.norm() <= tk.L + 1e-9, Errc::ConstraintViolation, "|w| exceeds L");
        }
      },
      t.variant);
}

/// Index of the nearest centroid, lowest index on ties.
inline Eigen::Index nearest_centroid(const Matrix& c, std::span<const double> x, double* dist2 = nullptr) {
  Eigen::Index best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    const double r = squared_distance(row(c, k), x);
    if (r < bd) {
      bd = r;
      best = k;
    }
  }
  if (dist2) *dist2 = bd;
  return best;
}

/// Loss of one data point.
inline double loss(const TaskSpec& t, std::span<const double> x, const Hypothesis& h) {
  const auto d = static_cast<Eigen::Index>(x.size());
  return std::visit(
      [&](const auto& tk) -> double {
        using T = std::decay_t<decltype(tk)>;
        if constexpr (std::is_same_v<T, task::KMeans>) {
          double r2;
          nearest_centroid(std::get<hyp::Centroids>(h).c, x, &r2);
          return r2;
        } else if constexpr (std::is_same_v<T, task::KMedians>) {
          double r2;
          nearest_centroid(std::get<hyp::Centroids>(h).c, x, &r2);
          return std::sqrt(r2);
        } else if constexpr (std::is_same_v<T, task::LinearRegression>) {
          const Vector& th = std::get<hyp::Linear>(h).theta;
          double pred = 0.0;
          for (Eigen::Index k = 0; k < d - 1; ++k) pred += th[k] * x[static_cast<std::size_t>(k)];
          const double e = x[static_cast<std::size_t>(d - 1)] - pred;
          return e * e;
        } else if constexpr (std::is_same_v<T, task::MultiOutputRegression>) {
          const Matrix& M = std::get<hyp::LinearMap>(h).M;
          const Eigen::Index dz = d - tk.K_out;
          double s = 0.0;
          for (Eigen::Index o = 0; o < tk.K_out; ++o) {
            double pred = 0.0;
            for (Eigen::Index k = 0; k < dz; ++k) pred += M(o, k) * x[static_cast<std::size_t>(k)];
            const double e = x[static_cast<std::size_t>(dz + o)] - pred;
            s += e * e;
          }
          return s;
        } else {
          const auto& c = std::get<hyp::Classifier>(h);
          double a = c.b;
          for (Eigen::Index k = 0; k < d - 1; ++k) a += c.w[k] * x[static_cast<std::size_t>(k)];
          const double margin = x[static_cast<std::size_t>(d - 1)] * std::tanh(a);
          return std::max(0.0, 1.0 - margin);
        }
      },
      t.variant);
}

/// E_{x ~ mu} loss(x, h).
inline double risk(const TaskSpec& t, const DiscreteMeasure& mu, const Hypothesis& h) {
  t.validate();
  check_hypothesis(t, h, mu.dim());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) acc += mu.weight(i) * loss(t, mu.point(i), h);
  return acc;
}

/// Push-forward by the nearest-centroid map.
inline DiscreteMeasure kmeans_project(const Matrix& centroids, const DiscreteMeasure& mu) {
  require(centroids.rows() >= 1, Errc::EmptyInput, "empty centroid list");
  require(centroids.cols() == mu.dim(), Errc::DimensionMismatch, "centroid dimension mismatch");
  Vector mass = Vector::Zero(centroids.rows());
  for (Eigen::Index i = 0; i < mu.size(); ++i) mass[nearest_centroid(centroids, mu.point(i))] += mu.weight(i);
  std::vector<Eigen::Index> used;
  for (Eigen::Index k = 0; k < centroids.rows(); ++k)
    if (mass[k] > 0.0) used.push_back(k);
  Matrix p(static_cast<Eigen::Index>(used.size()), centroids.cols());
  Vector w(static_cast<Eigen::Index>(used.size()));
  for (std::size_t r = 0; r < used.size(); ++r) {
    p.row(static_cast<Eigen::Index>(r)) = centroids.row(used[r]);
    w[static_cast<Eigen::Index>(r)] = mass[used[r]];
  }
  return DiscreteMeasure(std::move(p), std::move(w));
}

/// Constant C with |R^{1/p}(mu, h) - R^{1/p}(nu, h)| <= C W_p(mu, nu) for every h.
/// Classification uses the product metric |z - z'| + |y - y'| and a 1-Lipschitz hinge.
inline double learnability_constant(const TaskSpec& t) {
  return std::visit(
      [](const auto& tk) -> double {
        using T = std::decay_t<decltype(tk)>;
        if constexpr (std::is_same_v<T, task::LinearRegression> || std::is_same_v<T, task::MultiOutputRegression>) {
          return std::sqrt(tk.R * tk.R + 1.0);
        } else if constexpr (std::is_same_v<T, task::BinaryClassification>) {
          return 1.0 * std::max(tk.L, 1.0);
        } else {
          return 1.0;
        }
      },
      t.variant);
}

/// Ground cost for the task's metric: Euclidean, or |z - z'| + |y - y'| for classification.
inline double task_distance(const TaskSpec& t, std::span<const double> x, std::span<const double> y) {
  if (std::holds_alternative<task::BinaryClassification>(t.variant)) {
    const std::size_t d = x.size();
    return std::sqrt(squared_distance(x.subspan(0, d - 1), y.subspan(0, d - 1))) + std::abs(x[d - 1] - y[d - 1]);
  }
  return std::sqrt(squared_distance(x, y));
}

namespace detail {

inline Vector random_in_ball(Eigen::Index d, double radius, Rng& rng) {
  Vector v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = rng.normal();
  const double n = v.norm();
  if (n == 0.0) return Vector::Zero(d);
  return v * (radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / n);
}

inline void project_hypothesis(const TaskSpec& t, Hypothesis& h) {
  if (auto* l = std::get_if<hyp::Linear>(&h)) {
    const double R = std::get<task::LinearRegression>(t.variant).R;
    if (l->theta.norm() > R) l->theta *= R / l->theta.norm();
  } else if (auto* m = std::get_if<hyp::LinearMap>(&h)) {
    const double R = std::get<task::MultiOutputRegression>(t.variant).R;
    const double on = operator_norm(m->M);
    if (on > R) m->M *= R / on;
  } else if (auto* c = std::get_if<hyp::Classifier>(&h)) {
    const double L = std::get<task::BinaryClassification>(t.variant).L;
    if (c->w.norm() > L) c->w *= L / c->w.norm();
  }
}

inline std::vector<double*> hypothesis_coordinates(Hypothesis& h) {
  std::vector<double*> out;
  std::visit(
      [&](auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, hyp::Centroids>) {
          for (Eigen::Index i = 0; i < x.c.size(); ++i) out.push_back(x.c.data() + i);
        } else if constexpr (std::is_same_v<T, hyp::Linear>) {
          for (Eigen::Index i = 0; i < x.theta.size(); ++i) out.push_back(x.theta.data() + i);
        } else if constexpr (std::is_same_v<T, hyp::LinearMap>) {
          for (Eigen::Index i = 0; i < x.M.size(); ++i) out.push_back(x.M.data() + i);
        } else {
          for (Eigen::Index i = 0; i < x.w.size(); ++i) out.push_back(x.w.data() + i);
          out.push_back(&x.b);
        }
      },
      h);
  return out;
}

}  // namespace detail

/// Random hypothesis in the task's class; centroids land near the atoms of mu or nu.
inline Hypothesis random_hypothesis(const TaskSpec& t, const DiscreteMeasure& mu, const DiscreteMeasure& nu, Rng& rng) {
  const Eigen::Index d = mu.dim();
  return std::visit(
      [&](const auto& tk) -> Hypothesis {
        using T = std::decay_t<decltype(tk)>;
        if constexpr (std::is_same_v<T, task::KMeans> || std::is_same_v<T, task::KMedians>) {
          Matrix c(tk.K, d);
          for (int k = 0; k < tk.K; ++k) {
            const DiscreteMeasure& src = rng.uniform() < 0.5 ? mu : nu;
            const auto i = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(src.size())));
            for (Eigen::Index j = 0; j < d; ++j) c(k, j) = src.points()(i, j) + rng.normal();
          }
          return hyp::Centroids{c};
        } else if constexpr (std::is_same_v<T, task::LinearRegression>) {
          return hyp::Linear{detail::random_in_ball(d - 1, tk.R, rng)};
        } else if constexpr (std::is_same_v<T, task::MultiOutputRegression>) {
          Matrix M(tk.K_out, d - tk.K_out);
          for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = rng.normal();
          const double on = operator_norm(M);
          if (on > 0.0) M *= tk.R * rng.uniform() / on;
          return hyp::LinearMap{M};
        } else {
          return hyp::Classifier{detail::random_in_ball(d - 1, tk.L, rng), rng.uniform(-2.0, 2.0)};
        }
      },
      t.variant);
}

/// max over sampled hypotheses of |R^{1/p}(mu, h) - R^{1/p}(nu, h)|, each refined by
/// coordinate ascent. Only a lower bound on the supremum.
inline double task_metric_probe(const TaskSpec& t, const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                std::size_t n_hypotheses, Rng& rng, int refine_passes = 10) {
  require(n_hypotheses >= 1, Errc::InvalidArgument, "need at least one hypothesis");
  require(mu.dim() == nu.dim(), Errc::DimensionMismatch, "measures differ in dimension");
  t.validate();
  auto gap = [&](const Hypothesis& h) {
    return std::abs(std::pow(risk(t, mu, h), 1.0 / t.p) - std::pow(risk(t, nu, h), 1.0 / t.p));
  };
  double best = 0.0;
  for (std::size_t s = 0; s < n_hypotheses; ++s) {
    Hypothesis h = random_hypothesis(t, mu, nu, rng);
    double g = gap(h);
    double step = 0.5;
    for (int pass = 0; pass < refine_passes; ++pass) {
      bool improved = false;
      const std::size_t ncoord = detail::hypothesis_coordinates(h).size();
      for (std::size_t c = 0; c < ncoord; ++c) {
        for (double dir : {1.0, -1.0}) {
          Hypothesis trial = h;
          *detail::hypothesis_coordinates(trial)[c] += dir * step;
          detail::project_hypothesis(t, trial);
          const double gt = gap(trial);
          if (gt > g) {
            h = std::move(trial);
            g = gt;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::max(best, g);
  }
  return best;
}

namespace detail {

inline Eigen::Index count_distinct_rows(const Matrix& x) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index k = 0; k < x.cols(); ++k)
      if (x(a, k) != x(b, k)) return x(a, k) < x(b, k);
    return false;
  };
  std::sort(idx.begin(), idx.end(), less);
  Eigen::Index distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (less(idx[i - 1], idx[i])) ++distinct;
  return distinct;
}

}  // namespace detail

struct LloydResult {
  Matrix centroids;
  double risk = 0.0;
  int iterations = 0;
};

/// Best of `inits` k-means++ seeded Lloyd runs; each stops when no centroid moves by 1e-9.
inline LloydResult lloyd(const DiscreteMeasure& mu, int K, int inits, Rng& rng, int max_iter = 1000) {
  require(K >= 1 && inits >= 1, Errc::InvalidArgument, "need K >= 1 and inits >= 1");
  require(K <= detail::count_distinct_rows(mu.points()), Errc::InvalidArgument, "K exceeds the number of distinct atoms");
  const Eigen::Index n = mu.size(), d = mu.dim();
  const TaskSpec t = TaskSpec::kmeans(K);
  LloydResult best;
  best.risk = std::numeric_limits<double>::infinity();
  for (int run = 0; run < inits; ++run) {
    Rng r = rng.split(static_cast<std::uint64_t>(run));
    Matrix c(K, d);
    // k-means++ with the measure's weights
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    auto pick = [&](const std::vector<double>& score) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) total += score[static_cast<std::size_t>(i)];
      double u = r.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= score[static_cast<std::size_t>(i)];
        if (u <= 0.0 && score[static_cast<std::size_t>(i)] > 0.0) return i;
      }
      for (Eigen::Index i = n - 1; i >= 0; --i)
        if (score[static_cast<std::size_t>(i)] > 0.0) return i;
      return Eigen::Index{0};
    };
    std::vector<double> score(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) score[static_cast<std::size_t>(i)] = mu.weight(i);
    c.row(0) = mu.points().row(pick(score));
    for (int k = 1; k < K; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], squared_distance(mu.point(i), row(c, k - 1)));
        score[static_cast<std::size_t>(i)] = mu.weight(i) * d2[static_cast<std::size_t>(i)];
      }
      c.row(k) = mu.points().row(pick(score));
    }
    int it = 0;
    for (; it < max_iter; ++it) {
      Matrix sum = Matrix::Zero(K, d);
      Vector mass = Vector::Zero(K);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = nearest_centroid(c, mu.point(i));
        sum.row(k) += mu.weight(i) * mu.points().row(i);
        mass[k] += mu.weight(i);
      }
      double shift = 0.0;
      for (int k = 0; k < K; ++k) {
        if (mass[k] <= 0.0) continue;  // empty cluster keeps its centroid
        const Eigen::RowVectorXd next = sum.row(k) / mass[k];
        shift = std::max(shift, (next - c.row(k)).norm());
        c.row(k) = next;
      }
      if (shift < 1e-9) break;
    }
    const double rk = risk(t, mu, hyp::Centroids{c});
    if (rk < best.risk) {
      best.centroids = c;
      best.risk = rk;
      best.iterations = it;
    }
  }
  return best;
}

}  // namespace wmmd
