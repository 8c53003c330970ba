#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "wmmd/error.hpp"
#include "wmmd/kernels.hpp"

namespace wmmd {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), Errc::Parse, where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items())
    require(ok.count(item.key()) > 0, Errc::Parse, "unknown key '" + item.key() + "' in " + where);
}

inline double get_number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  require(j.at(key).is_number(), Errc::Parse, std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace detail

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& where) {
  require(j.is_array() && !j.empty(), Errc::Parse, where + " must be a non-empty array of rows");
  const std::size_t cols = j.front().size();
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_array() && j[i].size() == cols, Errc::RaggedDimensions, where + " rows differ in length");
    for (std::size_t k = 0; k < cols; ++k) {
      require(j[i][k].is_number(), Errc::Parse, where + " entries must be numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

inline json kernel_to_json(const KernelSpec& k) {
  json j;
  j["family"] = k.name();
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, family::Gaussian>) {
          j["sigma"] = f.sigma;
          j["scale"] = f.scale;
        } else if constexpr (std::is_same_v<T, family::Laplacian>) {
          j["sigma"] = f.sigma;
        } else if constexpr (std::is_same_v<T, family::Matern>) {
          j["nu"] = f.nu;
          j["sigma"] = f.sigma;
        } else if constexpr (std::is_same_v<T, family::ConvRoot>) {
          j["regularizer"] = {{"family", "gaussian"}, {"sigma", f.alpha.sigma}};
        } else if constexpr (std::is_same_v<T, family::Sliced>) {
          j["base"] = kernel_to_json(*f.base);
          j["directions"] = matrix_to_json(f.directions);
        } else {
          j["base"] = kernel_to_json(*f.base);
          j["mean_weight"] = f.mean_weight;
        }
      },
      k.family);
  j["d"] = k.d;
  return j;
}

/// Inverse of kernel_to_json. "d" defaults to 1 (or the direction width for sliced kernels).
inline KernelSpec kernel_from_json(const json& j) {
  require(j.is_object() && j.contains("family") && j.at("family").is_string(), Errc::Parse,
          "kernel needs a string 'family'");
  const std::string fam = j.at("family").get<std::string>();
  auto dim = [&](int fallback) {
    if (!j.contains("d")) return fallback;
    require(j.at("d").is_number_integer(), Errc::Parse, "'d' must be an integer");
    return j.at("d").get<int>();
  };
  if (fam == "gaussian") {
    detail::reject_unknown_keys(j, {"family", "sigma", "scale", "d"}, "gaussian kernel");
    return KernelSpec::gaussian(detail::get_number(j, "sigma", 1.0), dim(1), detail::get_number(j, "scale", 1.0));
  }
  if (fam == "laplacian") {
    detail::reject_unknown_keys(j, {"family", "sigma", "d"}, "laplacian kernel");
    return KernelSpec::laplacian(detail::get_number(j, "sigma", 1.0), dim(1));
  }
  if (fam == "matern") {
    detail::reject_unknown_keys(j, {"family", "nu", "sigma", "d"}, "matern kernel");
    return KernelSpec::matern(detail::get_number(j, "nu", 1.5), detail::get_number(j, "sigma", 1.0), dim(1));
  }
  if (fam == "convroot") {
    detail::reject_unknown_keys(j, {"family", "regularizer", "sigma", "d"}, "convroot kernel");
    double sigma = detail::get_number(j, "sigma", 1.0);
    if (j.contains("regularizer")) {
      const json& r = j.at("regularizer");
      detail::reject_unknown_keys(r, {"family", "sigma"}, "regularizer");
      require(!r.contains("family") || r.at("family") == "gaussian", Errc::UnsupportedFamily,
              "only gaussian regularizers are supported");
      sigma = detail::get_number(r, "sigma", sigma);
    }
    return KernelSpec::convroot(sigma, dim(1));
  }
  if (fam == "sliced") {
    detail::reject_unknown_keys(j, {"family", "base", "directions", "d"}, "sliced kernel");
    require(j.contains("base") && j.contains("directions"), Errc::Parse, "sliced kernel needs base and directions");
    KernelSpec k = KernelSpec::sliced(kernel_from_json(j.at("base")), matrix_from_json(j.at("directions"), "directions"));
    require(k.d == dim(k.d), Errc::DimensionMismatch, "'d' disagrees with the direction matrix");
    return k;
  }
  if (fam == "modified") {
    detail::reject_unknown_keys(j, {"family", "base", "mean_weight", "d"}, "modified kernel");
    require(j.contains("base"), Errc::Parse, "modified kernel needs a base");
    KernelSpec base = kernel_from_json(j.at("base"));
    KernelSpec k = KernelSpec::modified(base, detail::get_number(j, "mean_weight", 1.0));
    require(k.d == dim(k.d), Errc::DimensionMismatch, "'d' disagrees with the base kernel");
    return k;
  }
  throw Error(Errc::UnsupportedFamily, "unknown kernel family '" + fam + "'");
}

}  // namespace wmmd
