// Acceptance checks: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "wmmd/compressive.hpp"
#include "wmmd/lab.hpp"
#include "wmmd/parallel.hpp"

using namespace wmmd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DiscreteMeasure random_measure(Eigen::Index n, Eigen::Index d, double r, Rng& rng, bool uniform_weights) {
  Matrix p(n, d);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) p(i, k) = rng.uniform(-r, r);
    w[i] = uniform_weights ? 1.0 : rng.uniform(0.05, 1.0);
  }
  return {p, w};
}

Eigen::Index draw(Rng& rng, int hi) { return static_cast<Eigen::Index>(1 + rng.index(static_cast<std::size_t>(hi))); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// 1
Outcome exact_ot() {
  constexpr double kBruteRel = 1e-12, kOneDRel = 1e-10, kSeconds = 60.0;
  const auto t0 = std::chrono::steady_clock::now();
  double worst_b = 0.0, worst_1 = 0.0;
  for (int i = 0; i < 500; ++i) {
    Rng rng(101, static_cast<std::uint64_t>(i));
    const auto n = draw(rng, 8), d = draw(rng, 3);
    const double p = i % 2 ? 2.0 : 1.0;
    const auto a = random_measure(n, d, 1.0, rng, true), b = random_measure(n, d, 1.0, rng, true);
    worst_b = std::max(worst_b, rel(w_exact(p, a, b).first, w_brute(p, a, b)));
  }
  for (int i = 0; i < 500; ++i) {
    Rng rng(102, static_cast<std::uint64_t>(i));
    const double p = 1.0 + (i % 3) * 0.5;
    const auto a = random_measure(draw(rng, 8), 1, 2.0, rng, false), b = random_measure(draw(rng, 8), 1, 2.0, rng, false);
    worst_1 = std::max(worst_1, rel(w1d(p, a, b), w_exact(p, a, b).first));
  }
  const double secs = seconds_since(t0);
  return {worst_b <= kBruteRel && worst_1 <= kOneDRel && secs < kSeconds,
          fmt("max rel brute %.2e (<= %.0e), max rel 1-D %.2e (<= %.0e), %.1f s (< %.0f)", worst_b, kBruteRel, worst_1,
              kOneDRel, secs, kSeconds)};
}

// 2
Outcome mmd_agreement() {
  constexpr double kRel = 1e-6;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(201, static_cast<std::uint64_t>(i));
    const double sg = rng.uniform(0.3, 1.5);
    const KernelSpec k = KernelSpec::convroot(sg, 1);
    const auto a = random_measure(draw(rng, 6), 1, 2.0, rng, false), b = random_measure(draw(rng, 6), 1, 2.0, rng, false);
    const double ds = mmd_discrete(k, a, b).value;
    for (double v : {mmd_spectral_1d(k, a, b).value, smoothed_l2(RegularizerSpec{sg}, a, b), mmd_gmm_gaussian(k, a, b).value})
      worst = std::max(worst, rel(v, ds));
  }
  // mixtures with positive widths: the three mixture routes
  for (int i = 0; i < 200; ++i) {
    Rng rng(202, static_cast<std::uint64_t>(i));
    const double sg = rng.uniform(0.3, 1.5);
    const KernelSpec k = KernelSpec::convroot(sg, 1);
    const GaussianMixture a = sample_gmm(Gmm1DModel{3, 0.3, 1.2, 2.0}, rng), b = sample_gmm(Gmm1DModel{2, 0.3, 1.2, 2.0}, rng);
    const double cf = mmd_gmm_gaussian(k, a, b).value;
    for (double v : {mmd_spectral_1d(k, a, b).value, smoothed_l2(RegularizerSpec{sg}, a, b)}) worst = std::max(worst, rel(v, cf));
  }
  return {worst <= kRel, fmt("max rel disagreement %.2e over 400 pairs (<= %.0e)", worst, kRel)};
}

// 3
Outcome dominance() {
  const Report r = run_dominance(DominanceConfig{}, 301);
  std::size_t bad = 0;
  const auto ok = r.column("ok");
  for (const auto& row : r.rows) bad += row[ok] == 0.0;
  return {r.pass && bad == 0, fmt("%zu pairs, %zu violations, worst MMD/(C W1) %.4f, pointwise %s", r.rows.size(), bad,
                                  r.margins["worst_ratio"].get<double>(), r.extra["pointwise"].get<bool>() ? "ok" : "bad")};
}

// 4
Outcome counterexample() {
  constexpr double kMmdTol = 0.05, kWTol = 1e-6, kGrowth = 10.0;
  bool pass = true;
  std::string d;
  for (int k : {2, 4}) {
    CounterexampleConfig c;
    c.k = k;
    c.delta = 1.0;
    const Report r = run_counterexample(c);
    const double sm = r.extra["slope_mmd"].get<double>(), sw = r.extra["slope_w"].get<double>();
    const double g = r.extra["ratio_growth"].get<double>();
    const bool ok = std::abs(sm - 0.5 * k) <= kMmdTol && std::abs(sw - 1.0) <= kWTol && g >= kGrowth;
    pass = pass && ok;
    d += fmt("k=%d: MMD slope %.4f (want %.2f +- %.2f), W slope %.8f, growth %.3g; ", k, sm, 0.5 * k, kMmdTol, sw, g);
  }
  return {pass, d};
}

// 5
Outcome segment() {
  const Report r = run_disjoint_segment(SegmentConfig{});
  return {r.pass, fmt("W slope %.6f (0.5 +- 0.02), MMD slope %.9f (1 +- 1e-6)", r.slopes["w"]["slope"].get<double>(),
                      r.slopes["mmd"]["slope"].get<double>())};
}

// 6
Outcome fourier() {
  FourierConfig c;
  c.pairs = 100;
  c.model.sigma_min = 0.5;
  const Report r = run_fourier_bound(c, 601);
  std::size_t bad = 0, cdf_bad = 0;
  const auto ok = r.column("ok"), cdf = r.column("cdf_l2"), rhs = r.column("rhs");
  for (const auto& row : r.rows) {
    bad += row[ok] == 0.0;
    cdf_bad += row[cdf] > row[rhs] * (1.0 + 1e-3);
  }
  return {r.pass && bad == 0, fmt("%zu/%zu pairs violate W2 <= rhs (1+1e-3); worst W2/rhs %.3f; CDF L2 distance "
                                  "exceeds rhs in %zu pairs",
                                  bad, r.rows.size(), r.margins["worst_ratio"].get<double>(), cdf_bad)};
}

// 7
Outcome identities() {
  constexpr double kTol = 1e-10;
  double worst_mod = 0.0, worst_sl = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(701, static_cast<std::uint64_t>(i));
    const auto d = draw(rng, 3);
    const KernelSpec base = i % 2 ? KernelSpec::gaussian(1.0, static_cast<int>(d)) : KernelSpec::matern(1.5, 1.0, static_cast<int>(d));
    const auto a = random_measure(draw(rng, 6), d, 1.0, rng, false), b = random_measure(draw(rng, 6), d, 1.0, rng, false);
    const double lhs = std::pow(mmd_discrete(KernelSpec::modified(base, 1.0), a, b).value, 2);
    const double rhs = std::pow(mmd_discrete(base, a, b).value, 2) + (mean(a) - mean(b)).squaredNorm();
    worst_mod = std::max(worst_mod, std::abs(lhs - rhs));
  }
  for (int i = 0; i < 200; ++i) {
    Rng rng(702, static_cast<std::uint64_t>(i));
    const auto d = 1 + draw(rng, 3);
    const Matrix th = make_directions(static_cast<int>(d), 32, 700 + static_cast<std::uint64_t>(i));
    const KernelSpec base = KernelSpec::laplacian(1.0, 1);
    const auto a = random_measure(draw(rng, 6), d, 1.0, rng, false), b = random_measure(draw(rng, 6), d, 1.0, rng, false);
    const double s = mmd_sliced(base, th, a, b).value, m = mmd_discrete(KernelSpec::sliced(base, th), a, b).value;
    worst_sl = std::max(worst_sl, std::abs(s * s - m * m));
  }
  return {worst_mod <= kTol && worst_sl <= kTol,
          fmt("modified max gap %.2e, sliced max gap %.2e (<= %.0e)", worst_mod, worst_sl, kTol)};
}

// 8
Outcome translation() {
  constexpr double kTol = 1e-8;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(801, static_cast<std::uint64_t>(i));
    const auto d = draw(rng, 3);
    const auto a = random_measure(draw(rng, 8), d, 2.0, rng, false), b = random_measure(draw(rng, 8), d, 2.0, rng, false);
    const double w = w_exact(2.0, a, b).first;
    const TranslationSplit t = translation_split(a, b);
    worst = std::max(worst, std::abs(w * w - t.centered_w2_sq - t.mean_gap_sq));
  }
  return {worst <= kTol, fmt("max |W2^2 - centered - gap| %.2e (<= %.0e)", worst, kTol)};
}

// 9
Outcome rates() {
  constexpr double kSeconds = 600.0;
  const auto t0 = std::chrono::steady_clock::now();
  RatesConfig c;
  c.threads = default_threads();
  const Report r = run_rates(c, 901);
  const double secs = seconds_since(t0);
  return {r.pass && secs < kSeconds,
          fmt("MMD slope %.4f (-0.5 +- 0.05), W1 slope d=1 %.4f (-1 +- 0.07), d=3 %.4f (-0.333 +- 0.07), %.0f s (< %.0f)",
              r.slopes["mmd"]["slope"].get<double>(), r.slopes["w1_d1"]["slope"].get<double>(),
              r.slopes["w1_d3"]["slope"].get<double>(), secs, kSeconds)};
}

// 10
Outcome learnability() {
  const Report r = run_learnability(LearnabilityConfig{}, 1001);
  std::size_t bad = 0;
  const auto ok = r.column("ok");
  for (const auto& row : r.rows) bad += row[ok] == 0.0;
  return {r.pass && bad == 0, fmt("identity gap %.2e (<= 1e-9), %zu violations over 200 pairs, worst probe/bound %.3f",
                                  r.margins["identity_gap"].get<double>(), bad, r.margins["worst_probe_ratio"].get<double>())};
}

// 11
Outcome compressive() {
  constexpr double kRatio = 1.2, kMerge = 1e-12;
  constexpr Eigen::Index n = 10000;
  const double centers[3][2] = {{10.0, 0.0}, {-10.0, 0.0}, {0.0, 10.0}};
  std::vector<double> ratios;
  double merge_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(1100 + seed, 0);
    Matrix x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto c = rng.index(3);
      x(i, 0) = centers[c][0] + rng.normal();
      x(i, 1) = centers[c][1] + rng.normal();
    }
    SketchOptions opt;
    opt.m = 1024;
    opt.seed = seed;
    ratios.push_back(compressive_kmeans(x, 3, opt).ratio);
    if (seed == 1) {
      const FeatureMap f = draw_features(opt.kernel, opt.m, seed);
      std::vector<Sketch> shards;
      for (int s = 0; s < 4; ++s) shards.push_back(sketch_samples(f, x.middleRows(s * n / 4, n / 4)));
      merge_gap = sketch_distance(merge(shards), sketch_samples(f, x));
    }
  }
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[4] + sorted[5]);
  return {median <= kRatio && merge_gap <= kMerge,
          fmt("median risk ratio %.4f (<= %.1f), range [%.4f, %.4f]; 4-shard merge gap %.2e (<= %.0e)", median, kRatio,
              sorted.front(), sorted.back(), merge_gap, kMerge)};
}

// 12
Outcome sketch_lipschitz() {
  constexpr double kSlack = 1e-12;
  std::size_t bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    Rng rng(1201, static_cast<std::uint64_t>(i));
    const auto d = draw(rng, 3);
    const FeatureMap f = draw_features(KernelSpec::gaussian(rng.uniform(0.3, 2.0), static_cast<int>(d)), 64, 1200 + i);
    const auto a = random_measure(draw(rng, 8), d, 2.0, rng, false), b = random_measure(draw(rng, 8), d, 2.0, rng, false);
    const double lhs = sketch_distance(sketch_measure(f, a), sketch_measure(f, b));
    const double rhs = rkhs_lipschitz(f) * w_exact(1.0, a, b).first;
    bad += lhs > rhs + kSlack;
    worst = std::max(worst, lhs / rhs);
  }
  return {bad == 0, fmt("%zu violations over 200 pairs, worst ratio %.4f", bad, worst)};
}

// 13
Outcome smoothing() {
  const Report r = run_smoothing(SmoothingConfig{}, 1301);
  std::size_t bad = 0;
  const auto ok = r.column("ok");
  for (const auto& row : r.rows) bad += row[ok] == 0.0;
  return {r.pass && bad == 0, fmt("%zu (sigma, pair) rows, %zu violations; RBF linearity deviation %.2e (<= 0.05)",
                                  r.rows.size(), bad, 0.05 - r.margins["rbf_linearity"].get<double>())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"exact OT matches brute force and 1-D quantiles", exact_ot},
      {"MMD routes agree", mmd_agreement},
      {"MMD <= C W_1 for Gaussian kernels", dominance},
      {"binomial counterexample slopes", counterexample},
      {"disjoint segment slopes", segment},
      {"same-mean 1-D Fourier bound on W_2", fourier},
      {"modified and sliced kernel identities", identities},
      {"W_2 translation split", translation},
      {"MMD and W_1 sample rates", rates},
      {"learnability identity and inequalities", learnability},
      {"compressive k-means and sketch merge", compressive},
      {"sketch Lipschitz bound", sketch_lipschitz},
      {"smoothing chain", smoothing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
