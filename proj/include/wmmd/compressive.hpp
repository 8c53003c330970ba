#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "wmmd/decoder.hpp"
#include "wmmd/report.hpp"
#include "wmmd/sketch.hpp"
#include "wmmd/tasks.hpp"

namespace wmmd {

struct SketchOptions {
  KernelSpec kernel = KernelSpec::gaussian(1.0, 2);
  std::size_t m = 1024;
  std::uint64_t seed = 0;
  DecoderOptions decoder{};
  int lloyd_inits = 10;
};

struct CompressiveResult {
  Matrix centroids_sketch;
  Matrix centroids_lloyd;
  double risk_sketch = 0.0;
  double risk_lloyd = 0.0;
  double sketch_gap = std::numeric_limits<double>::quiet_NaN();  // |A(pi_ref) - A(pi_n)|
  double ratio = 0.0;
  double residual = 0.0;
};

/// Decoding domain: ball around the sample mean reaching the farthest sample.
inline Ball bounding_ball(const Matrix& x) {
  require(x.rows() >= 1, Errc::EmptyInput, "empty dataset");
  Vector c = x.colwise().mean().transpose();
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) r = std::max(r, (x.row(i).transpose() - c).norm());
  return {c, r > 0.0 ? r : 1.0};
}

/// Compressive k-means next to the Lloyd baseline.
///
/// Risks are measured on `test` when given, otherwise on the training sample.
/// The bias term of the excess-risk bound has no computational handle and is not reported.
inline CompressiveResult compressive_kmeans(const Matrix& x, int K, const SketchOptions& opt,
                                            const Matrix* test = nullptr, const GaussianMixture* reference = nullptr) {
  const TaskSpec t = TaskSpec::kmeans(K);
  t.validate();
  const FeatureMap f = draw_features(opt.kernel, opt.m, opt.seed);
  const Sketch s = sketch_samples(f, x);
  const DecodeResult dec = decode_diracs(s, K, bounding_ball(x), opt.decoder);

  const DiscreteMeasure train = DiscreteMeasure::uniform(x);
  Rng lr(opt.seed, 0x11051d);
  const LloydResult ll = lloyd(train, K, opt.lloyd_inits, lr);

  const DiscreteMeasure eval_on = test ? DiscreteMeasure::uniform(*test) : train;
  CompressiveResult out;
  out.centroids_sketch = dec.measure.points();
  out.centroids_lloyd = ll.centroids;
  out.risk_sketch = risk(t, eval_on, hyp::Centroids{out.centroids_sketch});
  out.risk_lloyd = risk(t, eval_on, hyp::Centroids{out.centroids_lloyd});
  out.ratio = out.risk_lloyd > 0.0 ? out.risk_sketch / out.risk_lloyd
                                   : (out.risk_sketch == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  out.residual = dec.residual;
  if (reference) out.sketch_gap = sketch_distance(sketch_measure(f, *reference), s);
  return out;
}

/// One-row report of the compressive pipeline.
inline Report excess_risk_report(const Matrix& x, int K, const SketchOptions& opt, const Matrix* test = nullptr,
                                 const GaussianMixture* reference = nullptr, double max_ratio = 1.2) {
  const CompressiveResult r = compressive_kmeans(x, K, opt, test, reference);
  Report rep;
  rep.experiment = "ckmeans";
  rep.seed = opt.seed;
  rep.columns = {"n", "m", "K", "risk_sketch", "risk_lloyd", "ratio", "sketch_gap", "residual", "max_ratio", "ok"};
  const bool ok = r.ratio <= max_ratio;
  rep.add_row({static_cast<double>(x.rows()), static_cast<double>(opt.m), static_cast<double>(K), r.risk_sketch,
               r.risk_lloyd, r.ratio, r.sketch_gap, r.residual, max_ratio, ok ? 1.0 : 0.0});
  rep.pass = ok;
  rep.margins["ratio"] = max_ratio - r.ratio;
  rep.extra["centroids_sketch"] = matrix_to_json(r.centroids_sketch);
  rep.extra["centroids_lloyd"] = matrix_to_json(r.centroids_lloyd);
  return rep;
}

}  // namespace wmmd
