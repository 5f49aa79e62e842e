#pragma once

// JSON encodings of games, profiles, generator parameters and run summaries.
// Doubles are written in shortest round-trip form, so save/load is bit-exact.

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mineseek/errors.hpp"
#include "mineseek/game.hpp"
#include "mineseek/icrf.hpp"

namespace mineseek {

using Json = nlohmann::json;

namespace io_detail {

inline Json vec_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

inline Eigen::VectorXd vec_from_json(const Json& a, const std::string& what) {
  if (!a.is_array()) throw ArgumentError(what + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].is_number()) throw ArgumentError(what + ": expected numbers");
    v[static_cast<Eigen::Index>(k)] = a[k].get<double>();
  }
  return v;
}

inline Json mat_to_json(const Eigen::MatrixXd& M) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) data.push_back(M(r, c));
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

inline Eigen::MatrixXd mat_from_json(const Json& j, const std::string& what) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || data.size() != static_cast<std::size_t>(rows * cols))
    throw ArgumentError(what + ": data length does not match rows x cols");
  Eigen::MatrixXd M(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = data[k++].get<double>();
  return M;
}

inline Json family_to_json(const FamilyParams& f) {
  return {{"family", std::string(family_name(f.family))}, {"alpha", f.alpha}, {"q", f.q}};
}

inline FamilyParams family_from_json(const Json& j) {
  FamilyParams f;
  f.family = parse_family(j.value("family", std::string("exponential")));
  f.alpha = j.value("alpha", f.alpha);
  f.q = j.value("q", f.q);
  return f;
}

/// Runs fn and converts JSON access errors into ArgumentError.
template <class F>
auto guarded(const std::string& what, F&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw ArgumentError(what + ": " + e.what());
  }
}

}  // namespace io_detail

inline Json icrf_to_json(const IcrfSpec& s) {
  using namespace io_detail;
  return std::visit(
      [](const auto& k) -> Json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, L1Norm>) {
          return {{"kind", "l1"}};
        } else if constexpr (std::is_same_v<K, PiecewiseAffine>) {
          return {{"kind", "piecewise_affine"},
                  {"breakpoints", k.breakpoints},
                  {"values", k.values},
                  {"tail_slope", k.tail_slope}};
        } else {
          Json j = family_to_json(k.family);
          j["kind"] = std::is_same_v<K, Decomposable> ? "decomposable" : "binary_min";
          return j;
        }
      },
      s.kind());
}

inline IcrfSpec icrf_from_json(const Json& j, std::size_t dimension) {
  using namespace io_detail;
  return guarded("icrf", [&] {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "l1") return IcrfSpec::l1(dimension);
    if (kind == "decomposable") return IcrfSpec::decomposable(family_from_json(j), dimension);
    if (kind == "binary_min") return IcrfSpec::binary_min(family_from_json(j), dimension);
    if (kind == "piecewise_affine") {
      PiecewiseAffine pa;
      pa.breakpoints = j.at("breakpoints").get<std::vector<double>>();
      pa.values = j.at("values").get<std::vector<double>>();
      pa.tail_slope = j.at("tail_slope").get<double>();
      return IcrfSpec(pa, dimension);
    }
    throw ArgumentError("unknown ICRF kind '" + kind + "'");
  });
}

inline Json params_to_json(const CournotParams& p) {
  return {{"N", p.N},
          {"n_d", p.n_d},
          {"n_c", p.n_c},
          {"price", {p.price_lo, p.price_hi}},
          {"cost", {p.cost_lo, p.cost_hi}},
          {"ud", {p.ud_lo, p.ud_hi}},
          {"uc", {p.uc_lo, p.uc_hi}},
          {"coupling", p.coupling},
          {"icrf", p.icrf},
          {"family", io_detail::family_to_json(p.family)},
          {"icrf_range", p.icrf_range},
          {"icrf_segments", p.icrf_segments}};
}

/// Missing keys keep their defaults, so a params file may override only a few.
inline CournotParams params_from_json(const Json& j) {
  using namespace io_detail;
  return guarded("params", [&] {
    if (!j.is_object()) throw ArgumentError("params: expected an object");
    static const char* known[] = {"N",  "n_d",      "n_c",  "price",  "cost",       "ud",
                                  "uc", "coupling", "icrf", "family", "icrf_range", "icrf_segments"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* k : known) ok = ok || it.key() == k;
      if (!ok) throw ArgumentError("params: unknown key '" + it.key() + "'");
    }
    CournotParams p;
    p.N = j.value("N", p.N);
    p.n_d = j.value("n_d", p.n_d);
    p.n_c = j.value("n_c", p.n_c);
    auto range = [&](const char* key, double& lo, double& hi) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw ArgumentError(std::string("params: '") + key + "' must be [lo, hi]");
      lo = v[0];
      hi = v[1];
    };
    range("price", p.price_lo, p.price_hi);
    range("cost", p.cost_lo, p.cost_hi);
    range("ud", p.ud_lo, p.ud_hi);
    range("uc", p.uc_lo, p.uc_hi);
    p.coupling = j.value("coupling", p.coupling);
    p.icrf = j.value("icrf", p.icrf);
    if (j.contains("family")) p.family = family_from_json(j.at("family"));
    p.icrf_range = j.value("icrf_range", p.icrf_range);
    p.icrf_segments = j.value("icrf_segments", p.icrf_segments);
    return p;
  });
}

inline Json game_to_json(const QuadraticMiGame& g) {
  using namespace io_detail;
  g.validate();
  Json agents = Json::array();
  for (std::size_t i = 0; i < g.agents(); ++i) {
    agents.push_back({{"n_d", g.sets[i].n_d()},
                      {"n_c", g.sets[i].n_c()},
                      {"domains", g.sets[i].discrete_domains},
                      {"lower", vec_to_json(g.sets[i].lower)},
                      {"upper", vec_to_json(g.sets[i].upper)},
                      {"m", vec_to_json(g.m[i])},
                      {"p", vec_to_json(g.p[i])},
                      {"icrf", icrf_to_json(g.icrf[i])}});
  }
  Json C = Json::array();
  for (std::size_t i = 0; i < g.agents(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < g.agents(); ++j) row.push_back(mat_to_json(g.C[i][j]));
    C.push_back(row);
  }
  Json out = {{"format", "mineseek-instance"}, {"version", 1}, {"N", g.agents()}, {"agents", agents}, {"C", C}};
  if (g.generation)
    out["generation"] = {{"seed", g.generation->seed}, {"params", params_to_json(g.generation->params)}};
  return out;
}

inline QuadraticMiGame game_from_json(const Json& j) {
  using namespace io_detail;
  return guarded("instance", [&] {
    if (j.value("format", std::string()) != "mineseek-instance")
      throw ArgumentError("instance: missing or wrong 'format' tag");
    if (j.at("version").get<int>() != 1) throw ArgumentError("instance: unsupported version");
    const auto N = j.at("N").get<std::size_t>();
    const Json& agents = j.at("agents");
    if (!agents.is_array() || agents.size() != N) throw ArgumentError("instance: agent list length != N");
    QuadraticMiGame g;
    for (std::size_t i = 0; i < N; ++i) {
      const Json& a = agents[i];
      MixedIntegerBox box;
      box.discrete_domains = a.at("domains").get<std::vector<std::vector<double>>>();
      box.lower = vec_from_json(a.at("lower"), "lower");
      box.upper = vec_from_json(a.at("upper"), "upper");
      if (a.at("n_d").get<std::size_t>() != box.n_d() || a.at("n_c").get<std::size_t>() != box.n_c())
        throw ArgumentError("instance: agent " + std::to_string(i) + " dimension fields disagree with data");
      const std::size_t n = box.size();
      g.sets.push_back(std::move(box));
      g.m.push_back(vec_from_json(a.at("m"), "m"));
      g.p.push_back(vec_from_json(a.at("p"), "p"));
      g.icrf.push_back(icrf_from_json(a.at("icrf"), n));
    }
    const Json& C = j.at("C");
    if (!C.is_array() || C.size() != N) throw ArgumentError("instance: C must be N x N blocks");
    g.C.assign(N, std::vector<Eigen::MatrixXd>(N));
    for (std::size_t r = 0; r < N; ++r) {
      if (!C[r].is_array() || C[r].size() != N) throw ArgumentError("instance: C must be N x N blocks");
      for (std::size_t c = 0; c < N; ++c)
        g.C[r][c] = mat_from_json(C[r][c], "C[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    if (j.contains("generation")) {
      const Json& gen = j.at("generation");
      g.generation = GenerationInfo{params_from_json(gen.at("params")), gen.at("seed").get<std::uint64_t>()};
    }
    g.validate();
    return g;
  });
}

inline Json profile_to_json(const StrategyProfile& x) {
  Json a = Json::array();
  for (const auto& xi : x) a.push_back(io_detail::vec_to_json(xi));
  return {{"format", "mineseek-profile"}, {"profile", a}};
}

inline StrategyProfile profile_from_json(const Json& j) {
  return io_detail::guarded("profile", [&] {
    const Json& a = j.is_array() ? j : j.at("profile");
    if (!a.is_array()) throw ArgumentError("profile: expected an array of strategies");
    StrategyProfile x;
    for (const auto& s : a) x.push_back(io_detail::vec_from_json(s, "profile"));
    return x;
  });
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ArgumentError("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Writes text to path; throws ArgumentError when the file cannot be written.
inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ArgumentError("write to '" + path + "' failed");
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace mineseek
