#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "wmmd/error.hpp"
#include "wmmd/kernels.hpp"
#include "wmmd/measures.hpp"

namespace wmmd {

/// Phi(x) = (1/sqrt(m)) (exp(-i <x, omega_j>))_j.
struct FeatureMap {
  KernelSpec kernel;
  Matrix omega;  // m x d
  std::uint64_t seed = 0;

  Eigen::Index m() const { return omega.rows(); }
  Eigen::Index dim() const { return omega.cols(); }
  double scale() const { return 1.0 / std::sqrt(static_cast<double>(m())); }

  Eigen::VectorXcd feature(std::span<const double> x) const {
    require(static_cast<Eigen::Index>(x.size()) == dim(), Errc::DimensionMismatch, "feature input dimension mismatch");
    Eigen::VectorXcd out(m());
    for (Eigen::Index j = 0; j < m(); ++j) {
      const double ph = dot(row(omega, j), x);
      out[j] = scale() * std::complex<double>(std::cos(ph), -std::sin(ph));
    }
    return out;
  }

  /// (1/m) sum_j cos(<omega_j, x - y>): the kernel the features realize exactly.
  double empirical_kernel(std::span<const double> x, std::span<const double> y) const {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m(); ++j) acc += std::cos(dot(row(omega, j), x) - dot(row(omega, j), y));
    return acc / static_cast<double>(m());
  }

  bool same_as(const FeatureMap& o) const {
    return seed == o.seed && omega.rows() == o.omega.rows() && omega.cols() == o.omega.cols() && omega == o.omega;
  }
};

/// Frequencies drawn from the kernel's spectral measure; row j depends only on (seed, j).
inline FeatureMap draw_features(const KernelSpec& k, std::size_t m, std::uint64_t seed) {
  require(m >= 1, Errc::InvalidArgument, "need at least one feature");
  require(k.translation_invariant(), Errc::UnsupportedKernel, "features need a translation-invariant kernel");
  return FeatureMap{k, spectral_sample(k, m, seed), seed};
}

/// Normalized sketch values plus the number of samples behind them.
struct Sketch {
  FeatureMap features;
  Vector re;
  Vector im;
  std::uint64_t n_samples = 0;

  Eigen::Index m() const { return re.size(); }
  std::complex<double> value(Eigen::Index j) const { return {re[j], im[j]}; }
};

/// Streaming accumulator: unnormalized phase sums and a count, normalized on read.
class SketchAccumulator {
 public:
  explicit SketchAccumulator(FeatureMap f)
      : f_(std::move(f)), sum_re_(Vector::Zero(f_.m())), sum_im_(Vector::Zero(f_.m())) {}

  void add(std::span<const double> x, double weight = 1.0) {
    require(static_cast<Eigen::Index>(x.size()) == f_.dim(), Errc::DimensionMismatch, "sample dimension mismatch");
    for (Eigen::Index j = 0; j < f_.m(); ++j) {
      const double ph = dot(row(f_.omega, j), x);
      sum_re_[j] += weight * std::cos(ph);
      sum_im_[j] -= weight * std::sin(ph);
    }
    mass_ += weight;
    ++count_;
  }

  void add_rows(const Matrix& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) add(row(x, i));
  }

  Sketch finish() const {
    Sketch s{f_, Vector::Zero(f_.m()), Vector::Zero(f_.m()), count_};
    if (mass_ > 0.0) {
      const double c = f_.scale() / mass_;
      s.re = sum_re_ * c;
      s.im = sum_im_ * c;
    }
    return s;
  }

 private:
  FeatureMap f_;
  Vector sum_re_, sum_im_;
  double mass_ = 0.0;
  std::uint64_t count_ = 0;
};

/// (1/(n sqrt(m))) sum_i exp(-i <x_i, omega_j>).
inline Sketch sketch_samples(const FeatureMap& f, const Matrix& x) {
  require(x.rows() >= 1, Errc::EmptyInput, "cannot sketch an empty dataset");
  require(x.cols() == f.dim(), Errc::DimensionMismatch, "dataset and features differ in dimension");
  SketchAccumulator acc(f);
  acc.add_rows(x);
  return acc.finish();
}

/// Exact expectation of Phi: weighted phases for atoms, characteristic function for mixtures.
inline Sketch sketch_measure(const FeatureMap& f, const DiscreteMeasure& mu) {
  require(mu.dim() == f.dim(), Errc::DimensionMismatch, "measure and features differ in dimension");
  SketchAccumulator acc(f);
  for (Eigen::Index i = 0; i < mu.size(); ++i) acc.add(mu.point(i), mu.weight(i));
  Sketch s = acc.finish();
  s.n_samples = static_cast<std::uint64_t>(mu.size());
  return s;
}

inline Sketch sketch_measure(const FeatureMap& f, const GaussianMixture& g) {
  require(g.dim() == f.dim(), Errc::DimensionMismatch, "measure and features differ in dimension");
  Sketch s{f, Vector(f.m()), Vector(f.m()), 0};
  for (Eigen::Index j = 0; j < f.m(); ++j) {
    const std::complex<double> c = g.characteristic(row(f.omega, j)) * f.scale();
    s.re[j] = c.real();
    s.im[j] = c.imag();
  }
  return s;
}

/// Count-weighted average of sketches sharing one feature map; zero-count sketches drop out.
inline Sketch merge(const std::vector<Sketch>& parts) {
  require(!parts.empty(), Errc::EmptyInput, "nothing to merge");
  const FeatureMap& f = parts.front().features;
  std::uint64_t total = 0;
  for (const auto& s : parts) {
    require(s.features.same_as(f), Errc::MismatchedFeatureMap, "sketches use different feature maps");
    total += s.n_samples;
  }
  Sketch out{f, Vector::Zero(f.m()), Vector::Zero(f.m()), total};
  if (total == 0) return out;
  for (const auto& s : parts) {
    if (s.n_samples == 0) continue;
    const double w = static_cast<double>(s.n_samples) / static_cast<double>(total);
    out.re += w * s.re;
    out.im += w * s.im;
  }
  return out;
}

inline double sketch_distance(const Sketch& a, const Sketch& b) {
  require(a.features.same_as(b.features), Errc::MismatchedFeatureMap, "sketches use different feature maps");
  return std::sqrt((a.re - b.re).squaredNorm() + (a.im - b.im).squaredNorm());
}

/// sqrt(sum_j |omega_j|^2) / sqrt(m), the Lipschitz constant of x -> Phi(x).
inline double rkhs_lipschitz(const FeatureMap& f) {
  return std::sqrt(f.omega.squaredNorm()) * f.scale();
}

}  // namespace wmmd
