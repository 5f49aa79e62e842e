// mineseek: generate Cournot instances, run the proximal best-response
// dynamics in batches, and verify equilibria.
//
// Exit codes: 0 ok, 1 not verified, 2 usage, 3 non-converged,
// 4 assumption gate, 5 infeasible profile, 6 solver capacity/structure.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <mineseek.hpp>

namespace fs = std::filesystem;
using namespace mineseek;

namespace {

enum Exit : int {
  kOk = 0,
  kNotVerified = 1,
  kUsage = 2,
  kNonConverged = 3,
  kAssumption = 4,
  kInfeasible = 5,
  kSolver = 6,
};

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", md[k]);
    hex += buf;
  }
  return hex;
}

struct DimOverrides {
  std::optional<int> N, nd, nc;
  void apply(CournotParams& p) const {
    if (N) p.N = *N;
    if (nd) p.n_d = *nd;
    if (nc) p.n_c = *nc;
  }
};

CournotParams load_params(const std::optional<std::string>& file, const DimOverrides& dims) {
  CournotParams p;
  if (file) p = params_from_json(read_json_file(*file));
  dims.apply(p);
  if (p.N <= 0 || p.n_d < 0 || p.n_c < 0 || p.n_d + p.n_c <= 0)
    throw ArgumentError("dimensions must be positive (N=" + std::to_string(p.N) + ", n_d=" + std::to_string(p.n_d) +
                        ", n_c=" + std::to_string(p.n_c) + ")");
  return p;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::optional<std::string> params;
  DimOverrides dims;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto prm = load_params(a.params, a.dims);
  const std::string text = dump_json(game_to_json(cournot_generate(prm, a.seed)));
  write_text_file(a.out, text);
  std::cout << "sha256 " << sha256_hex(text) << "  " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::optional<std::string> manifest;
  std::optional<std::string> instance;
  std::optional<std::string> params;
  DimOverrides dims;
  std::optional<int> alg;
  std::optional<double> tau0, omega, tau_min, inner_tol;
  std::optional<std::string> delta_seq;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<std::size_t> max_iter;
  std::optional<std::string> out;
  bool force = false;
  bool timing = false;
  bool literal_stop = false;
  bool random_order = false;
};

struct RunPlan {
  std::optional<std::string> instance;
  CournotParams params;
  std::vector<std::uint64_t> seeds;
  int alg = 1;
  SeekConfig cfg;
  std::string delta_text = "tableI";
  std::string out = "mineseek_out";
  bool force = false;
};

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? p : (base / q).lexically_normal().string();
}

RunPlan make_plan(const RunArgs& a) {
  RunPlan plan;
  Json m = Json::object();
  fs::path base = fs::current_path();
  if (a.manifest) {
    m = read_json_file(*a.manifest);
    if (!m.is_object()) throw ArgumentError("manifest must be a JSON object");
    base = fs::absolute(*a.manifest).parent_path();
    static const std::set<std::string> known = {"instance", "params", "seeds", "seed", "reps", "algorithm",
                                                "tau0", "omega", "delta_seq", "max_iter", "tau_min", "out",
                                                "force", "verify_on_stall", "inner_tol", "random_order", "timing"};
    for (auto it = m.begin(); it != m.end(); ++it)
      if (!known.count(it.key())) throw ArgumentError("manifest: unknown key '" + it.key() + "'");
  }
  try {
    if (a.instance) plan.instance = *a.instance;
    else if (m.contains("instance")) plan.instance = resolve(base, m["instance"].get<std::string>());

    if (a.params) plan.params = params_from_json(read_json_file(*a.params));
    else if (m.contains("params")) {
      const Json& pj = m["params"];
      plan.params = pj.is_string() ? params_from_json(read_json_file(resolve(base, pj.get<std::string>())))
                                   : params_from_json(pj);
    }
    a.dims.apply(plan.params);

    const int reps = a.reps ? *a.reps : m.value("reps", 1);
    if (reps <= 0) throw ArgumentError("--reps must be positive");
    if (!a.seed && !a.reps && m.contains("seeds")) {
      plan.seeds = m["seeds"].get<std::vector<std::uint64_t>>();
    } else {
      const std::uint64_t s0 = a.seed ? *a.seed : m.value("seed", std::uint64_t{1});
      for (int r = 0; r < reps; ++r) plan.seeds.push_back(s0 + static_cast<std::uint64_t>(r));
    }
    if (plan.seeds.empty()) throw ArgumentError("no seeds to run");
    if (std::set<std::uint64_t>(plan.seeds.begin(), plan.seeds.end()).size() != plan.seeds.size())
      throw ArgumentError("seeds within a batch must be distinct");

    plan.alg = a.alg ? *a.alg : m.value("algorithm", 1);
    if (plan.alg != 1 && plan.alg != 2) throw ArgumentError("--alg must be 1 or 2");
    plan.cfg.tau0 = a.tau0 ? *a.tau0 : m.value("tau0", plan.cfg.tau0);
    plan.cfg.omega = a.omega ? *a.omega : m.value("omega", plan.cfg.omega);
    plan.cfg.tau_min = a.tau_min ? *a.tau_min : m.value("tau_min", plan.cfg.tau_min);
    plan.cfg.max_iterations = a.max_iter ? *a.max_iter : m.value("max_iter", plan.cfg.max_iterations);
    plan.cfg.br.inner_tol = a.inner_tol ? *a.inner_tol : m.value("inner_tol", plan.cfg.br.inner_tol);
    plan.cfg.verify_on_stall = a.literal_stop ? false : m.value("verify_on_stall", true);
    plan.cfg.randomize_order = a.random_order || m.value("random_order", false);
    plan.cfg.record_timing = a.timing || m.value("timing", false);
    plan.delta_text = a.delta_seq ? *a.delta_seq : m.value("delta_seq", std::string("tableI"));
    if (plan.delta_text.rfind("file:", 0) == 0 && a.manifest && !a.delta_seq)
      plan.delta_text = "file:" + resolve(base, plan.delta_text.substr(5));
    plan.cfg.delta = DeltaSequence::parse(plan.delta_text);
    plan.out = a.out ? *a.out : (m.contains("out") ? resolve(base, m["out"].get<std::string>()) : plan.out);
    plan.force = a.force || m.value("force", false);
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("manifest: ") + e.what());
  }
  plan.cfg.force_potential_gate = plan.force;
  plan.cfg.validate();
  return plan;
}

struct RunOutcome {
  std::string tag;
  std::uint64_t seed = 0;
  std::optional<SeekResult> result;
  std::string error;
  int error_code = kOk;
  double mean_br_time = 0.0;
};

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MINESEEK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return std::min(n, jobs);
}

int cmd_run(const RunArgs& a) {
  const RunPlan plan = make_plan(a);
  std::optional<QuadraticMiGame> shared;
  if (plan.instance) shared = game_from_json(read_json_file(*plan.instance));

  // The gate is checked once up front so a refused batch writes nothing.
  if (plan.alg == 2 && !plan.force) {
    auto gate = [&](const QuadraticMiGame& g) {
      if (!g.has_symmetric_coupling() || !potential_check_exact(g, plan.cfg.potential_gate_samples, 0x9e37).passed())
        throw AssumptionError("game fails the exact-potential check required by algorithm 2 (use --force to override)");
    };
    if (shared) gate(*shared);
  }

  std::vector<RunOutcome> outcomes(plan.seeds.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next++) < plan.seeds.size();) {
      RunOutcome& o = outcomes[k];
      o.seed = plan.seeds[k];
      o.tag = (shared ? "rep" + std::to_string(k) : "seed" + std::to_string(o.seed));
      try {
        const QuadraticMiGame g = shared ? *shared : cournot_generate(plan.params, o.seed);
        SeekConfig cfg = plan.cfg;
        cfg.order_seed = o.seed;
        o.result = plan.alg == 1 ? run_algorithm1(g, cfg) : run_algorithm2(g, cfg);
        std::size_t calls = 0;
        double total = 0.0;
        for (const auto& r : o.result->trace.rounds)
          for (const auto& s : r.steps) total += s.br_time_s, ++calls;
        o.mean_br_time = calls ? total / static_cast<double>(calls) : 0.0;
      } catch (const AssumptionError& e) {
        o.error = e.what();
        o.error_code = kAssumption;
      } catch (const CapacityError& e) {
        o.error = e.what();
        o.error_code = kSolver;
      } catch (const UnsupportedStructure& e) {
        o.error = e.what();
        o.error_code = kSolver;
      } catch (const std::exception& e) {
        o.error = e.what();
        o.error_code = kUsage;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = worker_count(plan.seeds.size());
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::error_code ec;
  fs::create_directories(plan.out, ec);
  if (ec) throw ArgumentError("cannot create output directory '" + plan.out + "': " + ec.message());

  Json runs = Json::array();
  int code = kOk;
  std::size_t verified = 0, iter_sum = 0, iter_max = 0, finished = 0;
  double worst = 0.0, time_sum = 0.0;
  for (const auto& o : outcomes) {
    Json r = {{"tag", o.tag}, {"seed", o.seed}};
    if (!o.result) {
      r["error"] = o.error;
      std::cerr << o.tag << ": " << o.error << "\n";
      code = std::max(code, o.error_code);
      runs.push_back(r);
      continue;
    }
    const SeekResult& res = *o.result;
    const std::string trace_path = (fs::path(plan.out) / ("trace_" + o.tag + ".csv")).string();
    const std::string profile_path = (fs::path(plan.out) / ("profile_" + o.tag + ".json")).string();
    write_text_file(trace_path, trace_csv(res.trace));
    write_text_file(profile_path, dump_json(profile_to_json(res.final_profile)));
    const double achieved = res.verdict ? res.verdict->max_violation() : std::numeric_limits<double>::quiet_NaN();
    r["converged"] = res.converged;
    r["reason"] = stop_reason_name(res.reason);
    r["iterations"] = res.iterations;
    r["epsilon"] = res.epsilon;
    r["final_violation"] = achieved;
    r["final_potential"] = res.trace.final_potential;
    r["mean_br_time_s"] = o.mean_br_time;
    r["trace"] = fs::path(trace_path).filename().string();
    r["profile"] = fs::path(profile_path).filename().string();
    if (!res.detail.empty()) r["detail"] = res.detail;
    runs.push_back(r);
    ++finished;
    iter_sum += res.iterations;
    iter_max = std::max(iter_max, res.iterations);
    worst = std::max(worst, achieved);
    time_sum += o.mean_br_time;
    if (res.converged) ++verified;
    else {
      code = std::max(code, static_cast<int>(kNonConverged));
      std::cerr << o.tag << ": not converged (" << stop_reason_name(res.reason) << ") " << res.detail << "\n";
    }
  }
  const double nf = finished ? static_cast<double>(finished) : 1.0;
  Json summary = {{"algorithm", plan.alg},
                  {"instance", plan.instance ? Json(*plan.instance) : Json(nullptr)},
                  {"params", plan.instance ? Json(nullptr) : params_to_json(plan.params)},
                  {"config",
                   {{"tau0", plan.cfg.tau0},
                    {"omega", plan.cfg.omega},
                    {"delta_seq", plan.delta_text},
                    {"max_iter", plan.cfg.max_iterations},
                    {"tau_min", plan.cfg.tau_min},
                    {"inner_tol", plan.cfg.br.inner_tol},
                    {"verify_on_stall", plan.cfg.verify_on_stall}}},
                  {"runs", runs},
                  {"aggregate",
                   {{"runs", outcomes.size()},
                    {"verified", verified},
                    {"mean_iterations", static_cast<double>(iter_sum) / nf},
                    {"max_iterations", iter_max},
                    {"max_final_violation", worst},
                    {"mean_br_time_s", time_sum / nf}}}};
  write_text_file((fs::path(plan.out) / "summary.json").string(), dump_json(summary));
  std::printf("runs %zu  verified %zu  mean_iterations %.3f  max_iterations %zu  max_final_violation %.3g\n",
              outcomes.size(), verified, static_cast<double>(iter_sum) / nf, iter_max, worst);
  return code;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string instance, profile;
  double eps = 0.0;
  double tol = 0.0;
};

int cmd_verify(const VerifyArgs& a) {
  const auto g = game_from_json(read_json_file(a.instance));
  const auto x = profile_from_json(read_json_file(a.profile));
  if (x.size() != g.agents()) {
    std::cerr << "profile has " << x.size() << " agents, instance has " << g.agents() << "\n";
    return kInfeasible;
  }
  bool feasible = true;
  for (std::size_t i = 0; i < g.agents(); ++i)
    for (const auto& v : feasibility_violations(g.sets[i], x[i])) {
      std::cerr << "agent " << i << ": " << v << "\n";
      feasible = false;
    }
  if (!feasible) return kInfeasible;
  const auto verdict = check_epsilon_mine(g, x, a.eps, a.tol);
  Json rep = {{"is_equilibrium", verdict.is_equilibrium},
              {"epsilon", verdict.epsilon},
              {"tolerance", verdict.tolerance},
              {"violations", verdict.violations},
              {"max_violation", verdict.max_violation()}};
  std::cout << rep.dump(2) << "\n";
  return verdict.is_equilibrium ? kOk : kNotVerified;
}

// ---------------------------------------------------------------------------
// validate-icrf

int cmd_validate_icrf(const std::string& instance, std::size_t samples, std::uint64_t seed) {
  const auto g = game_from_json(read_json_file(instance));
  bool ok = true;
  for (std::size_t i = 0; i < g.agents(); ++i) {
    const auto rep = icrf_validate(g.icrf[i], samples, seed + i);
    std::printf("agent %zu  %s  points %zu  violations %zu\n", i, g.icrf[i].kind_name().c_str(), rep.points_checked,
                rep.violations.size());
    for (const auto& v : rep.violations) std::printf("  axiom %d: %s\n", v.axiom, v.detail.c_str());
    ok = ok && rep.passed();
  }
  return ok ? kOk : kAssumption;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equilibrium seeking for mixed-integer potential games"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write a seeded Cournot instance");
  g->add_option("--params", gen.params, "JSON file with generator parameters")->check(CLI::ExistingFile);
  g->add_option("--N", gen.dims.N, "number of firms");
  g->add_option("--nd", gen.dims.nd, "discrete goods per firm");
  g->add_option("--nc", gen.dims.nc, "continuous goods per firm");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--out", gen.out, "instance file to write")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "run algorithm 1 or 2 over a batch of seeds");
  r->add_option("--manifest", run.manifest, "JSON run manifest")->check(CLI::ExistingFile);
  r->add_option("--instance", run.instance, "instance file (otherwise instances are generated per seed)")
      ->check(CLI::ExistingFile);
  r->add_option("--params", run.params, "generator parameter file")->check(CLI::ExistingFile);
  r->add_option("--N", run.dims.N, "number of firms");
  r->add_option("--nd", run.dims.nd, "discrete goods per firm");
  r->add_option("--nc", run.dims.nc, "continuous goods per firm");
  r->add_option("--alg", run.alg, "1 (exact responses) or 2 (inexact responses)");
  r->add_option("--tau0", run.tau0, "initial regularization weight");
  r->add_option("--omega", run.omega, "decay factor in (0,1)");
  r->add_option("--delta-seq", run.delta_seq, "tableI | const:<v> | file:<path>");
  r->add_option("--seed", run.seed, "first seed");
  r->add_option("--reps", run.reps, "number of runs (seeds seed, seed+1, ...)");
  r->add_option("--max-iter", run.max_iter, "outer iteration limit");
  r->add_option("--tau-min", run.tau_min, "tau threshold of the literal stopping rule");
  r->add_option("--inner-tol", run.inner_tol, "best-response certificate tolerance");
  r->add_option("--out", run.out, "output directory");
  r->add_flag("--force", run.force, "run algorithm 2 even if the exact-potential check fails");
  r->add_flag("--timing", run.timing, "record best-response wall times in the traces");
  r->add_flag("--literal-stop", run.literal_stop, "verify only once tau <= tau-min");
  r->add_flag("--random-order", run.random_order, "shuffle the agent order each round");

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "check a profile for the epsilon-equilibrium property");
  v->add_option("--instance", ver.instance, "instance file")->required()->check(CLI::ExistingFile);
  v->add_option("--profile", ver.profile, "profile file")->required()->check(CLI::ExistingFile);
  v->add_option("--eps", ver.eps, "epsilon")->check(CLI::NonNegativeNumber);
  v->add_option("--tol", ver.tol, "additional tolerance")->check(CLI::NonNegativeNumber);

  std::string vi_instance;
  std::size_t vi_samples = 10000;
  std::uint64_t vi_seed = 1;
  auto* vi = app.add_subcommand("validate-icrf", "sample the regularizer axioms of every agent");
  vi->add_option("--instance", vi_instance, "instance file")->required()->check(CLI::ExistingFile);
  vi->add_option("--samples", vi_samples, "samples per agent");
  vi->add_option("--seed", vi_seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*r) return cmd_run(run);
    if (*v) return cmd_verify(ver);
    if (*vi) return cmd_validate_icrf(vi_instance, vi_samples, vi_seed);
  } catch (const AssumptionError& e) {
    std::cerr << "assumption: " << e.what() << "\n";
    return kAssumption;
  } catch (const CapacityError& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return kSolver;
  } catch (const UnsupportedStructure& e) {
    std::cerr << "solver: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
