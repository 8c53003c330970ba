#pragma once

#include <fstream>
#include <string>

#include "wmmd/kernel_json.hpp"
#include "wmmd/sketch.hpp"

namespace wmmd {

inline constexpr const char* kSketchFormat = "wmmd-sketch-v1";

inline json sketch_to_json(const Sketch& s) {
  json j;
  j["format"] = kSketchFormat;
  j["kernel"] = kernel_to_json(s.features.kernel);
  j["d"] = s.features.dim();
  j["m"] = s.features.m();
  j["seed"] = s.features.seed;
  j["n_samples"] = s.n_samples;
  j["omega"] = matrix_to_json(s.features.omega);
  j["re"] = std::vector<double>(s.re.data(), s.re.data() + s.re.size());
  j["im"] = std::vector<double>(s.im.data(), s.im.data() + s.im.size());
  return j;
}

inline Sketch sketch_from_json(const json& j) {
  require(j.is_object(), Errc::Parse, "sketch file must hold a JSON object");
  require(j.contains("format") && j.at("format").is_string(), Errc::UnknownFormat, "sketch file has no format tag");
  const std::string fmt = j.at("format").get<std::string>();
  require(fmt == kSketchFormat, Errc::UnknownFormat, "unsupported sketch format '" + fmt + "'");
  detail::reject_unknown_keys(j, {"format", "kernel", "d", "m", "seed", "n_samples", "omega", "re", "im"}, "sketch");
  for (const char* key : {"kernel", "d", "m", "seed", "n_samples", "omega", "re", "im"})
    require(j.contains(key), Errc::Parse, std::string("sketch is missing '") + key + "'");
  FeatureMap f{kernel_from_json(j.at("kernel")), matrix_from_json(j.at("omega"), "omega"),
               j.at("seed").get<std::uint64_t>()};
  const auto m = j.at("m").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  require(f.omega.rows() == m && f.omega.cols() == d, Errc::DimensionMismatch, "omega does not match m x d");
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(re.size()) == m && static_cast<Eigen::Index>(im.size()) == m,
          Errc::DimensionMismatch, "sketch values do not match m");
  Sketch s{std::move(f), Eigen::Map<const Vector>(re.data(), m), Eigen::Map<const Vector>(im.data(), m),
           j.at("n_samples").get<std::uint64_t>()};
  return s;
}

inline void write_sketch(const std::string& path, const Sketch& s) {
  std::ofstream out(path);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path);
  out << sketch_to_json(s).dump() << '\n';
  require(static_cast<bool>(out), Errc::Io, "write failed for " + path);
}

inline Sketch read_sketch(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, path + ": " + e.what());
  }
  return sketch_from_json(j);
}

}  // namespace wmmd
