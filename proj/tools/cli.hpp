#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmmd/wmmd.hpp"

namespace wmmd::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

/// Settings shared by every subcommand. Config files use the same key names;
/// command-line flags win over file values.
struct RunConfig {
  std::string command;
  std::string experiment;
  std::vector<std::string> inputs;
  std::string output;
  std::optional<json> kernel;
  std::optional<json> task;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> pairs;
  std::optional<std::vector<std::size_t>> grid;
  std::optional<int> k;
  std::optional<double> p;
  std::optional<double> delta;
  std::optional<int> m;
  std::optional<int> K;
  std::optional<double> radius;
  std::optional<std::vector<double>> center;
  std::optional<double> max_ratio;
  std::optional<json> decoder;
  std::optional<std::string> test;
  std::optional<std::string> plan;
  std::optional<unsigned> threads;
  bool binary = false;
};

inline json to_json(const RunConfig& c) {
  json j = json::object();
  if (!c.command.empty()) j["command"] = c.command;
  if (!c.experiment.empty()) j["experiment"] = c.experiment;
  if (!c.inputs.empty()) j["inputs"] = c.inputs;
  if (!c.output.empty()) j["output"] = c.output;
  if (c.kernel) j["kernel"] = *c.kernel;
  if (c.task) j["task"] = *c.task;
  if (c.seed) j["seed"] = *c.seed;
  if (c.trials) j["trials"] = *c.trials;
  if (c.pairs) j["pairs"] = *c.pairs;
  if (c.grid) j["grid"] = *c.grid;
  if (c.k) j["k"] = *c.k;
  if (c.p) j["p"] = *c.p;
  if (c.delta) j["delta"] = *c.delta;
  if (c.m) j["m"] = *c.m;
  if (c.K) j["K"] = *c.K;
  if (c.radius) j["radius"] = *c.radius;
  if (c.center) j["center"] = *c.center;
  if (c.max_ratio) j["max_ratio"] = *c.max_ratio;
  if (c.decoder) j["decoder"] = *c.decoder;
  if (c.test) j["test"] = *c.test;
  if (c.plan) j["plan"] = *c.plan;
  if (c.threads) j["threads"] = *c.threads;
  if (c.binary) j["binary"] = true;
  return j;
}

inline RunConfig config_from_json(const json& j) {
  require(j.is_object(), Errc::Parse, "config must be a JSON object");
  wmmd::detail::reject_unknown_keys(j,
                                    {"command", "experiment", "inputs", "output", "kernel", "task", "seed", "trials",
                                     "pairs", "grid", "k", "p", "delta", "m", "K", "radius", "center", "max_ratio",
                                     "decoder", "test", "plan", "threads", "binary"},
                                    "config");
  RunConfig c;
  try {
    if (j.contains("command")) c.command = j.at("command").get<std::string>();
    if (j.contains("experiment")) c.experiment = j.at("experiment").get<std::string>();
    if (j.contains("inputs")) c.inputs = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("kernel")) c.kernel = j.at("kernel");
    if (j.contains("task")) c.task = j.at("task");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("trials")) c.trials = j.at("trials").get<int>();
    if (j.contains("pairs")) c.pairs = j.at("pairs").get<int>();
    if (j.contains("grid")) c.grid = j.at("grid").get<std::vector<std::size_t>>();
    if (j.contains("k")) c.k = j.at("k").get<int>();
    if (j.contains("p")) c.p = j.at("p").get<double>();
    if (j.contains("delta")) c.delta = j.at("delta").get<double>();
    if (j.contains("m")) c.m = j.at("m").get<int>();
    if (j.contains("K")) c.K = j.at("K").get<int>();
    if (j.contains("radius")) c.radius = j.at("radius").get<double>();
    if (j.contains("center")) c.center = j.at("center").get<std::vector<double>>();
    if (j.contains("max_ratio")) c.max_ratio = j.at("max_ratio").get<double>();
    if (j.contains("decoder")) c.decoder = j.at("decoder");
    if (j.contains("test")) c.test = j.at("test").get<std::string>();
    if (j.contains("plan")) c.plan = j.at("plan").get<std::string>();
    if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
    if (j.contains("binary")) c.binary = j.at("binary").get<bool>();
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("config: ") + e.what());
  }
  return c;
}

/// Fields set in `over` replace those in `base`.
inline RunConfig overlay(RunConfig base, const RunConfig& over) {
  json b = to_json(base);
  const json o = to_json(over);
  for (auto it = o.begin(); it != o.end(); ++it) b[it.key()] = it.value();
  return config_from_json(b);
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, what + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

/// Kernel from a JSON object or a bare family name; a missing "d" takes the data dimension.
inline KernelSpec resolve_kernel(const std::optional<json>& spec, int d, const KernelSpec& fallback) {
  if (!spec) return fallback;
  json j = *spec;
  if (j.is_string()) j = json{{"family", j.get<std::string>()}};
  if (j.is_object() && !j.contains("d") && j.value("family", "") != "sliced" && d > 0) j["d"] = d;
  return kernel_from_json(j);
}

inline json kernel_arg(const std::string& text) {
  if (!text.empty() && (text.front() == '{' || text.front() == '"')) return parse_json_text(text, "--kernel");
  return json(text);
}

inline unsigned thread_count(const RunConfig& c) { return c.threads ? std::max(1u, *c.threads) : default_threads(); }

inline std::uint64_t need_seed(const RunConfig& c) {
  require(c.seed.has_value(), Errc::InvalidArgument, "--seed is required for " + c.command);
  return *c.seed;
}

inline DecoderOptions decoder_options(const RunConfig& c, std::uint64_t seed) {
  DecoderOptions o;
  o.seed = seed;
  o.threads = thread_count(c);
  if (c.decoder) {
    const json& j = *c.decoder;
    wmmd::detail::reject_unknown_keys(j, {"starts", "pool", "ascent_iters", "refine_iters", "refine_tol"}, "decoder");
    o.starts = j.value("starts", o.starts);
    o.pool = j.value("pool", o.pool);
    o.ascent_iters = j.value("ascent_iters", o.ascent_iters);
    o.refine_iters = j.value("refine_iters", o.refine_iters);
    o.refine_tol = j.value("refine_tol", o.refine_tol);
  }
  return o;
}

inline int finish_report(const Report& r, const RunConfig& c, std::ostream& out) {
  if (!c.output.empty()) emit_report(r, c.output);
  out << report_summary(r).dump(2) << '\n';
  return r.pass ? kExitPass : kExitViolation;
}

inline int run_lab(const RunConfig& c, std::ostream& out) {
  const std::string& e = c.experiment;
  const std::uint64_t seed = c.seed.value_or(0);
  if (e == "counterexample") {
    CounterexampleConfig cc;
    if (c.k) cc.k = *c.k;
    if (c.p) cc.p = *c.p;
    if (c.delta) cc.delta = *c.delta;
    cc.kernel = resolve_kernel(c.kernel, 1, cc.kernel);
    return finish_report(run_counterexample(cc, seed), c, out);
  }
  if (e == "segment") {
    SegmentConfig sc;
    if (c.p) sc.p = *c.p;
    sc.kernel = resolve_kernel(c.kernel, 1, sc.kernel);
    return finish_report(run_disjoint_segment(sc, seed), c, out);
  }
  const std::uint64_t s = need_seed(c);
  if (e == "rates") {
    RatesConfig rc;
    rc.threads = thread_count(c);
    if (c.trials) rc.trials = static_cast<std::size_t>(*c.trials);
    if (c.grid) rc.n_grid = *c.grid;
    return finish_report(run_rates(rc, s), c, out);
  }
  if (e == "fourier-bound") {
    FourierConfig fc;
    if (c.pairs) fc.pairs = *c.pairs;
    fc.kernel = resolve_kernel(c.kernel, 1, fc.kernel);
    return finish_report(run_fourier_bound(fc, s), c, out);
  }
  if (e == "smoothing") {
    SmoothingConfig sc;
    if (c.pairs) sc.pairs = *c.pairs;
    if (c.p) sc.p = *c.p;
    return finish_report(run_smoothing(sc, s), c, out);
  }
  if (e == "dominance") {
    DominanceConfig dc;
    if (c.pairs) dc.pairs = *c.pairs;
    if (c.p) dc.p = *c.p;
    return finish_report(run_dominance(dc, s), c, out);
  }
  if (e == "sliced") {
    SlicedConfig sc;
    if (c.pairs) sc.pairs = *c.pairs;
    sc.base = resolve_kernel(c.kernel, 1, sc.base);
    return finish_report(run_sliced(sc, s), c, out);
  }
  if (e == "embeddability") {
    EmbeddabilityConfig ec;
    if (c.trials) ec.trials = *c.trials;
    if (c.p) ec.p = *c.p;
    if (c.delta) ec.delta = *c.delta;
    ec.kernel = resolve_kernel(c.kernel, 1, ec.kernel);
    return finish_report(embeddability_probe(ec, s), c, out);
  }
  if (e == "learnability") {
    LearnabilityConfig lc;
    if (c.pairs) lc.pairs = *c.pairs;
    return finish_report(run_learnability(lc, s), c, out);
  }
  throw Error(Errc::InvalidArgument, "unknown lab experiment '" + e + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), Errc::Io, "cannot write " + path);
  os << text;
  require(static_cast<bool>(os), Errc::Io, "write failed for " + path);
}

inline int run_command(const RunConfig& c, std::ostream& out) {
  const std::string& cmd = c.command;
  if (cmd == "sketch") {
    require(c.inputs.size() == 1, Errc::InvalidArgument, "sketch takes one dataset");
    require(!c.output.empty(), Errc::InvalidArgument, "sketch needs -o");
    const Matrix x = read_dataset(c.inputs[0]);
    const int d = static_cast<int>(x.cols());
    const KernelSpec k = resolve_kernel(c.kernel, d, KernelSpec::gaussian(1.0, d));
    const FeatureMap f = draw_features(k, static_cast<std::size_t>(c.m.value_or(64)), need_seed(c));
    write_sketch(c.output, sketch_samples(f, x));
    return kExitPass;
  }
  if (cmd == "merge") {
    require(!c.inputs.empty(), Errc::InvalidArgument, "merge needs sketch files");
    require(!c.output.empty(), Errc::InvalidArgument, "merge needs -o");
    std::vector<Sketch> parts;
    for (const auto& p : c.inputs) parts.push_back(read_sketch(p));
    write_sketch(c.output, merge(parts));
    return kExitPass;
  }
  if (cmd == "decode") {
    require(c.inputs.size() == 1, Errc::InvalidArgument, "decode takes one sketch");
    const Sketch s = read_sketch(c.inputs[0]);
    const auto d = s.features.dim();
    Ball b{Vector::Zero(d), c.radius.value_or(1.0)};
    if (c.center) {
      require(static_cast<Eigen::Index>(c.center->size()) == d, Errc::DimensionMismatch, "center dimension mismatch");
      b.center = Eigen::Map<const Vector>(c.center->data(), d);
    }
    const DecodeResult r = decode_diracs(s, c.K.value_or(1), b, decoder_options(c, need_seed(c)));
    Matrix table(r.measure.size(), d + 1);
    table.leftCols(d) = r.measure.points();
    table.col(d) = r.measure.weights();
    std::ostringstream os;
    for (Eigen::Index j = 0; j < d; ++j) os << "x" << j << ',';
    os << "weight\n";
    write_csv(os, table);
    if (c.output.empty())
      out << os.str();
    else
      write_text(c.output, os.str());
    return kExitPass;
  }
  if (cmd == "mmd" || cmd == "wass") {
    require(c.inputs.size() == 2, Errc::InvalidArgument, cmd + " takes two datasets");
    const DiscreteMeasure a = DiscreteMeasure::uniform(read_dataset(c.inputs[0]));
    const DiscreteMeasure b = DiscreteMeasure::uniform(read_dataset(c.inputs[1]));
    require(a.dim() == b.dim(), Errc::DimensionMismatch, "datasets differ in dimension");
    double v;
    if (cmd == "mmd") {
      const int d = static_cast<int>(a.dim());
      v = mmd_discrete(resolve_kernel(c.kernel, d, KernelSpec::gaussian(1.0, d)), a, b).value;
    } else {
      const double p = c.p.value_or(1.0);
      if (c.plan) {
        const auto [w, plan] = w_exact(p, a, b);
        std::ostringstream os;
        write_plan_csv(os, plan);
        write_text(*c.plan, os.str());
        v = w;
      } else {
        v = w_discrete(p, a, b);
      }
    }
    out << format_double(v) << '\n';
    return kExitPass;
  }
  if (cmd == "ckmeans") {
    require(c.inputs.size() == 1, Errc::InvalidArgument, "ckmeans takes one dataset");
    const Matrix x = read_dataset(c.inputs[0]);
    const int d = static_cast<int>(x.cols());
    SketchOptions o;
    o.seed = need_seed(c);
    o.kernel = resolve_kernel(c.kernel, d, KernelSpec::gaussian(1.0, d));
    o.m = static_cast<std::size_t>(c.m.value_or(1024));
    o.decoder = decoder_options(c, o.seed);
    std::optional<Matrix> test;
    if (c.test) test = read_dataset(*c.test);
    const Report r = excess_risk_report(x, c.K.value_or(2), o, test ? &*test : nullptr, nullptr, c.max_ratio.value_or(1.2));
    return finish_report(r, c, out);
  }
  if (cmd == "lab") return run_lab(c, out);
  throw Error(Errc::InvalidArgument, "unknown command '" + cmd + "'");
}

/// Parses argv and runs the command. 0 pass, 2 bound violation, 1 usage or I/O error.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Wasserstein and MMD discrepancies, sketches and bound checks", "wmmd"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path, kernel_text, task_text, decoder_text;
  std::uint64_t seed = 0;
  int trials = 0, pairs = 0, k = 0, m = 0, K = 0;
  double p = 0, delta = 0, radius = 0, max_ratio = 0;
  std::vector<double> center;
  std::vector<std::size_t> grid;
  std::string test, plan;
  unsigned threads = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--threads", threads, "worker threads (default WMMD_THREADS)");
    sub->add_option("-o,--output", flags.output, "output path");
  };
  auto kernel_opt = [&](CLI::App* sub) { sub->add_option("--kernel", kernel_text, "kernel JSON or family name"); };

  CLI::App* sk = app.add_subcommand("sketch", "dataset -> sketch file");
  common(sk);
  kernel_opt(sk);
  sk->add_option("--m", m, "number of frequencies");
  sk->add_option("input", flags.inputs, "dataset (CSV or WMMD1 binary)");

  CLI::App* mg = app.add_subcommand("merge", "sketch files -> merged sketch");
  common(mg);
  mg->add_option("inputs", flags.inputs, "sketch files");

  CLI::App* dc = app.add_subcommand("decode", "sketch -> centroids CSV");
  common(dc);
  dc->add_option("--K", K, "number of atoms");
  dc->add_option("--radius", radius, "decoding ball radius");
  dc->add_option("--center", center, "decoding ball center")->delimiter(',');
  dc->add_option("--decoder", decoder_text, "decoder options JSON");
  dc->add_option("input", flags.inputs, "sketch file");

  CLI::App* mm = app.add_subcommand("mmd", "MMD between two datasets");
  common(mm);
  kernel_opt(mm);
  mm->add_option("inputs", flags.inputs, "two datasets")->expected(2);

  CLI::App* ws = app.add_subcommand("wass", "W_p between two datasets");
  common(ws);
  ws->add_option("--p", p, "order p >= 1");
  ws->add_option("--plan", plan, "write the optimal plan as CSV triples");
  ws->add_option("inputs", flags.inputs, "two datasets")->expected(2);

  CLI::App* ck = app.add_subcommand("ckmeans", "compressive k-means report");
  common(ck);
  kernel_opt(ck);
  ck->add_option("--m", m, "number of frequencies");
  ck->add_option("--K", K, "number of clusters");
  ck->add_option("--test", test, "held-out dataset for risks");
  ck->add_option("--max-ratio", max_ratio, "pass threshold on risk ratio");
  ck->add_option("--decoder", decoder_text, "decoder options JSON");
  ck->add_option("input", flags.inputs, "dataset");

  CLI::App* lb = app.add_subcommand("lab", "bound-checking experiments");
  common(lb);
  kernel_opt(lb);
  lb->add_option("experiment", flags.experiment,
                 "counterexample | segment | rates | fourier-bound | smoothing | dominance | sliced | embeddability | "
                 "learnability");
  lb->add_option("--k", k, "binomial order");
  lb->add_option("--p", p, "Wasserstein order");
  lb->add_option("--delta", delta, "embedding exponent");
  lb->add_option("--trials", trials, "trials");
  lb->add_option("--pairs", pairs, "random pairs");
  lb->add_option("--grid", grid, "sample-size grid")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "E: Usage: " << e.what() << '\n';
    return kExitError;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    flags.command = active->get_name();
    auto given = [&](const char* name) {
      const CLI::Option* o = active->get_option_no_throw(name);
      return o != nullptr && o->count() > 0;
    };
    if (given("--seed")) flags.seed = seed;
    if (given("--threads")) flags.threads = threads;
    if (given("--kernel")) flags.kernel = kernel_arg(kernel_text);
    if (given("--m")) flags.m = m;
    if (given("--K")) flags.K = K;
    if (given("--radius")) flags.radius = radius;
    if (given("--center")) flags.center = center;
    if (given("--decoder")) flags.decoder = parse_json_text(decoder_text, "--decoder");
    if (given("--p")) flags.p = p;
    if (given("--plan")) flags.plan = plan;
    if (given("--test")) flags.test = test;
    if (given("--max-ratio")) flags.max_ratio = max_ratio;
    if (given("--k")) flags.k = k;
    if (given("--delta")) flags.delta = delta;
    if (given("--trials")) flags.trials = trials;
    if (given("--pairs")) flags.pairs = pairs;
    if (given("--grid")) flags.grid = grid;
    if (!task_text.empty()) flags.task = parse_json_text(task_text, "--task");

    RunConfig cfg = flags;
    if (!config_path.empty()) {
      RunConfig file = config_from_json(read_json_file(config_path));
      require(file.command.empty() || file.command == flags.command, Errc::InvalidArgument,
              "config is for command '" + file.command + "'");
      cfg = overlay(file, flags);
    }
    if (cfg.command == "lab")
      require(!cfg.experiment.empty(), Errc::InvalidArgument, "lab needs an experiment name");
    return run_command(cfg, out);
  } catch (const Error& e) {
    err << "E: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "E: Internal: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace wmmd::cli
