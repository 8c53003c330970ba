#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "wmmd/error.hpp"
#include "wmmd/measures.hpp"
#include "wmmd/parallel.hpp"
#include "wmmd/rng.hpp"
#include "wmmd/sketch.hpp"

namespace wmmd {

struct Ball {
  Vector center;
  double radius = 1.0;
};

struct DecoderOptions {
  std::uint64_t seed = 0;
  int starts = 16;         // ascent starts kept from the candidate pool
  int pool = 1024;         // random candidates scored before ascent
  int ascent_iters = 200;
  int refine_iters = 500;
  double refine_tol = 1e-10;
  unsigned threads = 1;
};

struct DecodeResult {
  DiscreteMeasure measure;
  double residual = 0.0;
  std::vector<double> residual_history;  // entry 0 is |s|, entry k after k atoms
};

/// Least squares with x >= 0 (Lawson-Hanson active set).
inline Vector nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter = 0) {
  const Eigen::Index n = A.cols();
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 10);
  Vector x = Vector::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());
  for (int outer = 0; outer < max_iter; ++outer) {
    const Vector w = A.transpose() * (b - A * x);
    Eigen::Index t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        t = j;
      }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    for (int inner = 0; inner < max_iter; ++inner) {
      std::vector<Eigen::Index> P;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)]) P.push_back(j);
      Eigen::MatrixXd AP(A.rows(), static_cast<Eigen::Index>(P.size()));
      for (std::size_t k = 0; k < P.size(); ++k) AP.col(static_cast<Eigen::Index>(k)) = A.col(P[k]);
      const Vector zP = AP.colPivHouseholderQr().solve(b);
      bool feasible = true;
      for (Eigen::Index k = 0; k < zP.size(); ++k)
        if (zP[k] <= 0.0) feasible = false;
      if (feasible) {
        x.setZero();
        for (std::size_t k = 0; k < P.size(); ++k) x[P[k]] = zP[static_cast<Eigen::Index>(k)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < P.size(); ++k) {
        const double z = zP[static_cast<Eigen::Index>(k)];
        if (z <= 0.0) alpha = std::min(alpha, x[P[k]] / (x[P[k]] - z));
      }
      for (std::size_t k = 0; k < P.size(); ++k) x[P[k]] += alpha * (zP[static_cast<Eigen::Index>(k)] - x[P[k]]);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
    }
  }
  return x;
}

/// Euclidean projection onto the probability simplex.
inline Vector project_simplex(const Vector& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    css += u[static_cast<std::size_t>(j)];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

namespace detail {

inline Vector project_ball(const Vector& x, const Ball& b) {
  const Vector d = x - b.center;
  const double n = d.norm();
  if (n <= b.radius) return x;
  return b.center + d * (b.radius / n);
}

/// Complex sketch of sum_k w_k delta_{atoms_k}, as (re, im).
inline void dirac_sketch(const FeatureMap& f, const Matrix& atoms, const Vector& w, Vector& re, Vector& im) {
  re = Vector::Zero(f.m());
  im = Vector::Zero(f.m());
  for (Eigen::Index k = 0; k < atoms.rows(); ++k) {
    if (w[k] == 0.0) continue;
    for (Eigen::Index j = 0; j < f.m(); ++j) {
      const double ph = dot(row(f.omega, j), row(atoms, k));
      re[j] += w[k] * std::cos(ph);
      im[j] -= w[k] * std::sin(ph);
    }
  }
  re *= f.scale();
  im *= f.scale();
}

inline double residual_norm(const FeatureMap& f, const Sketch& s, const Matrix& atoms, const Vector& w) {
  Vector re, im;
  dirac_sketch(f, atoms, w, re, im);
  return std::sqrt((re - s.re).squaredNorm() + (im - s.im).squaredNorm());
}

/// Re <r, Phi(theta)> = (1/sqrt m) sum_j Re(r_j exp(i <theta, omega_j>)), with its gradient.
inline double correlation(const FeatureMap& f, const Vector& rre, const Vector& rim, const Vector& theta,
                          Vector* grad) {
  double val = 0.0;
  if (grad) grad->setZero(theta.size());
  for (Eigen::Index j = 0; j < f.m(); ++j) {
    const double ph = dot(row(f.omega, j), std::span<const double>(theta.data(), static_cast<std::size_t>(theta.size())));
    const double c = std::cos(ph), s = std::sin(ph);
    val += rre[j] * c - rim[j] * s;
    if (grad) {
      const double im_part = rre[j] * s + rim[j] * c;
      *grad -= im_part * f.omega.row(j).transpose();
    }
  }
  if (grad) *grad *= f.scale();
  return val * f.scale();
}

/// Stacked [Re; Im] columns of Phi at each atom.
inline Eigen::MatrixXd feature_columns(const FeatureMap& f, const Matrix& atoms) {
  Eigen::MatrixXd A(2 * f.m(), atoms.rows());
  for (Eigen::Index k = 0; k < atoms.rows(); ++k)
    for (Eigen::Index j = 0; j < f.m(); ++j) {
      const double ph = dot(row(f.omega, j), row(atoms, k));
      A(j, k) = f.scale() * std::cos(ph);
      A(f.m() + j, k) = -f.scale() * std::sin(ph);
    }
  return A;
}

/// Value and gradients of |sum_k w_k Phi(theta_k) - s|^2.
inline double objective(const FeatureMap& f, const Sketch& s, const Matrix& atoms, const Vector& w, Matrix* gatoms,
                        Vector* gw) {
  Vector re, im;
  dirac_sketch(f, atoms, w, re, im);
  const Vector rre = re - s.re, rim = im - s.im;
  if (gatoms) {
    gatoms->setZero(atoms.rows(), atoms.cols());
    gw->setZero(atoms.rows());
    for (Eigen::Index k = 0; k < atoms.rows(); ++k)
      for (Eigen::Index j = 0; j < f.m(); ++j) {
        const double ph = dot(row(f.omega, j), row(atoms, k));
        const double pre = f.scale() * std::cos(ph), pim = -f.scale() * std::sin(ph);
        // d/dw_k: 2 Re(conj(r) Phi_k); d/dtheta_k: 2 w_k sum_j omega_j Im(conj(r_j) Phi_jk)
        (*gw)[k] += 2.0 * (rre[j] * pre + rim[j] * pim);
        const double imag = rre[j] * pim - rim[j] * pre;
        gatoms->row(k) += (2.0 * w[k] * imag) * f.omega.row(j);
      }
  }
  return rre.squaredNorm() + rim.squaredNorm();
}

}  // namespace detail

/// Greedy Dirac-mixture decoder in the style of compressive orthogonal matching pursuit.
///
/// Iteration k draws from stream (seed, k): it adds the atom maximizing the real
/// correlation with the residual, refits weights by NNLS, then refines atoms and
/// weights jointly (ball and simplex constraints). An iteration that would raise
/// the residual is undone and its atom kept at weight zero, so the residual is
/// non-increasing in K.
inline DecodeResult decode_diracs(const Sketch& s, int K, const Ball& domain, const DecoderOptions& opt = {}) {
  require(K >= 1, Errc::InvalidArgument, "K must be >= 1");
  require(domain.radius > 0.0 && std::isfinite(domain.radius), Errc::InvalidArgument, "degenerate decoding domain");
  const FeatureMap& f = s.features;
  const Eigen::Index d = f.dim();
  require(domain.center.size() == d, Errc::DimensionMismatch, "domain center dimension mismatch");

  Matrix atoms(0, d);
  Vector w(0);
  DecodeResult out{DiscreteMeasure::dirac(domain.center), 0.0, {}};
  double current = std::sqrt(s.re.squaredNorm() + s.im.squaredNorm());
  out.residual_history.push_back(current);

  for (int k = 0; k < K; ++k) {
    Rng rng(opt.seed, static_cast<std::uint64_t>(k));
    Vector rre = s.re, rim = s.im;
    if (atoms.rows() > 0) {
      Vector re, im;
      detail::dirac_sketch(f, atoms, w, re, im);
      rre -= re;
      rim -= im;
    }
    // candidate pool, best `starts` kept
    std::vector<Vector> pool(static_cast<std::size_t>(opt.pool));
    std::vector<double> score(pool.size());
    for (auto& c : pool) {
      Vector v(d);
      for (Eigen::Index t = 0; t < d; ++t) v[t] = rng.normal();
      const double n = v.norm();
      c = domain.center + (n > 0 ? v / n : v) * domain.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    }
    parallel_for(pool.size(), opt.threads,
                 [&](std::size_t i) { score[i] = detail::correlation(f, rre, rim, pool[i], nullptr); });
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    const auto nstart = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, opt.starts)), pool.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nstart), order.end(),
                      [&](auto a, auto b) { return score[a] > score[b]; });
    std::vector<Vector> best_theta(nstart);
    std::vector<double> best_val(nstart);
    parallel_for(nstart, opt.threads, [&](std::size_t si) {
      Vector th = pool[order[si]];
      Vector g;
      double val = detail::correlation(f, rre, rim, th, &g);
      double step = 0.5 * domain.radius;
      for (int it = 0; it < opt.ascent_iters && step > 1e-10 * domain.radius; ++it) {
        const double gn = g.norm();
        if (gn == 0.0) break;
        bool moved = false;
        while (step > 1e-10 * domain.radius) {
          const Vector cand = detail::project_ball(th + (step / gn) * g, domain);
          Vector gc;
          const double vc = detail::correlation(f, rre, rim, cand, &gc);
          if (vc > val) {
            th = cand;
            val = vc;
            g = gc;
            step = std::min(2.0 * step, domain.radius);
            moved = true;
            break;
          }
          step *= 0.5;
        }
        if (!moved) break;
      }
      best_theta[si] = th;
      best_val[si] = val;
    });
    const auto pick = static_cast<std::size_t>(std::max_element(best_val.begin(), best_val.end()) - best_val.begin());

    Matrix new_atoms(atoms.rows() + 1, d);
    new_atoms.topRows(atoms.rows()) = atoms;
    new_atoms.row(atoms.rows()) = best_theta[pick].transpose();

    const Eigen::VectorXd b = (Eigen::VectorXd(2 * f.m()) << s.re, s.im).finished();
    Vector nw = nnls(detail::feature_columns(f, new_atoms), b);
    nw = nw.sum() > 0.0 ? project_simplex(nw) : Vector::Constant(nw.size(), 1.0 / static_cast<double>(nw.size()));

    // alternating projected gradient on atoms (ball) and weights (simplex)
    double obj = detail::objective(f, s, new_atoms, nw, nullptr, nullptr);
    double step_a = 0.1 * domain.radius, step_w = 0.1;
    for (int it = 0; it < opt.refine_iters; ++it) {
      const double before = obj;
      Matrix ga;
      Vector gw;
      detail::objective(f, s, new_atoms, nw, &ga, &gw);
      const double gan = ga.norm();
      if (gan > 0.0) {
        for (int bt = 0; bt < 40; ++bt) {
          Matrix cand = new_atoms;
          for (Eigen::Index r = 0; r < cand.rows(); ++r)
            cand.row(r) = detail::project_ball(Vector(new_atoms.row(r).transpose() - (step_a / gan) * ga.row(r).transpose()),
                                               domain)
                              .transpose();
          const double oc = detail::objective(f, s, cand, nw, nullptr, nullptr);
          if (oc < obj) {
            new_atoms = cand;
            obj = oc;
            step_a *= 2.0;
            break;
          }
          step_a *= 0.5;
        }
      }
      detail::objective(f, s, new_atoms, nw, &ga, &gw);
      const double gwn = gw.norm();
      if (gwn > 0.0) {
        for (int bt = 0; bt < 40; ++bt) {
          const Vector cand = project_simplex(nw - (step_w / gwn) * gw);
          const double oc = detail::objective(f, s, new_atoms, cand, nullptr, nullptr);
          if (oc < obj) {
            nw = cand;
            obj = oc;
            step_w *= 2.0;
            break;
          }
          step_w *= 0.5;
        }
      }
      if (before - obj <= opt.refine_tol * before) break;
    }

    const double res = std::sqrt(std::max(0.0, obj));
    if (res <= current) {
      atoms = std::move(new_atoms);
      w = std::move(nw);
      current = res;
    } else {
      Matrix keep(atoms.rows() + 1, d);
      keep.topRows(atoms.rows()) = atoms;
      keep.row(atoms.rows()) = best_theta[pick].transpose();
      atoms = std::move(keep);
      Vector kw = Vector::Zero(w.size() + 1);
      kw.head(w.size()) = w;
      if (w.size() == 0) kw[0] = 1.0;  // first atom: a lone Dirac must carry all the mass
      w = std::move(kw);
      current = detail::residual_norm(f, s, atoms, w);
    }
    out.residual_history.push_back(current);
  }
  out.measure = DiscreteMeasure(atoms, w);
  out.residual = current;
  return out;
}

}  // namespace wmmd
