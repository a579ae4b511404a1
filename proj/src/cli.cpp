#include "ffm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ffm/coupling.hpp"
#include "ffm/errors.hpp"
#include "ffm/finite_model.hpp"
#include "ffm/json_io.hpp"
#include "ffm/kinetics.hpp"
#include "ffm/limit_process.hpp"
#include "ffm/parallel.hpp"
#include "ffm/stats.hpp"

namespace ffm {

namespace {

constexpr const char* kVersion = "ffm 0.1.0";

namespace fs = std::filesystem;

Json stamp(Json j, const Json& config, std::uint64_t seed) {
  j["provenance"] = {{"version", kVersion}, {"seed", seed}, {"config_hash", config_hash(config)}};
  return j;
}

MassDistribution load_init(const std::string& spec) {
  if (spec.empty() || spec == "mono" || spec == "monodisperse")
    return MassDistribution::monodisperse();
  return mass_distribution_from_json(read_json_file(spec));
}

std::string dirname_of(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

Environment load_env(const std::string& path) {
  return environment_from_json(read_json_file(path), dirname_of(path));
}

CurveFamily load_curves(const std::string& path, const Environment& env) {
  const Json j = read_json_file(path);
  std::vector<CharacteristicCurve> curves;
  for (const auto& cj : j.at("curves")) curves.push_back(curve_from_json(cj));
  return CurveFamily(env, std::move(curves));
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::int64_t n = 10000;
  double lambda = 0.0;
  double horizon = 1.0;
  std::vector<double> snapshots;
  std::int64_t replicas = 4;
  std::uint64_t seed = 0;
  bool dagger = false;
  std::string init = "mono";
  std::string out = "sim.json";
};

int cmd_simulate(const SimulateArgs& args) {
  if (args.snapshots.empty()) fail(Errc::usage_error, "simulate: need at least one snapshot time");
  std::vector<double> snaps = args.snapshots;
  std::sort(snaps.begin(), snaps.end());
  if (snaps.back() > args.horizon) fail(Errc::usage_error, "simulate: snapshot beyond horizon");
  const MassDistribution init = load_init(args.init);

  struct ReplicaOut {
    std::vector<MassDistribution> dists;
    JumpPath path;
  };
  std::vector<ReplicaOut> outs(static_cast<std::size_t>(args.replicas));
  parallel_for(static_cast<std::size_t>(args.replicas), [&](std::size_t r) {
    SimConfig cfg;
    cfg.n = args.n;
    cfg.lambda = args.lambda;
    cfg.dagger = args.dagger;
    cfg.horizon = args.horizon;
    cfg.init = init;
    cfg.seed = args.seed;
    cfg.stream = r;
    ForestFireModel model(cfg);
    for (const double t : snaps) {
      model.run_until(t);
      outs[r].dists.push_back(model.snapshot());
    }
    outs[r].path = model.tagged_path();
  });

  const Json config{{"command", "simulate"}, {"n", args.n},        {"lambda", args.lambda},
                    {"horizon", args.horizon}, {"snapshots", snaps}, {"replicas", args.replicas},
                    {"seed", args.seed},       {"dagger", args.dagger}};
  Json j;
  j["n"] = args.n;
  j["lambda"] = args.lambda;
  j["dagger"] = args.dagger;
  j["snapshots"] = snaps;
  Json replicas = Json::array();
  for (const auto& rep : outs) {
    Json jr;
    jr["dists"] = Json::array();
    for (const auto& d : rep.dists) jr["dists"].push_back(to_json(d));
    jr["tagged_path"] = to_json(rep.path);
    replicas.push_back(std::move(jr));
  }
  j["replicas"] = std::move(replicas);
  // bucket-wise mean distribution per snapshot
  Json means = Json::array();
  for (std::size_t si = 0; si < snaps.size(); ++si) {
    std::size_t width = 1;
    for (const auto& rep : outs) width = std::max(width, rep.dists[si].masses().size());
    std::vector<double> mean(width, 0.0);
    for (const auto& rep : outs) {
      const auto ms = rep.dists[si].masses();
      for (std::size_t k = 0; k < ms.size(); ++k) mean[k] += ms[k];
    }
    for (auto& x : mean) x /= static_cast<double>(args.replicas);
    means.push_back(to_json(MassDistribution(std::move(mean), std::nullopt, snaps[si])));
  }
  j["mean"] = std::move(means);
  write_json_file(stamp(std::move(j), config, args.seed), args.out);
  std::printf("simulate: %lld replicas of n=%lld to t=%g -> %s\n",
              static_cast<long long>(args.replicas), static_cast<long long>(args.n), args.horizon,
              args.out.c_str());
  return 0;
}

// ------------------------------------------------------------------- solve

struct SolveArgs {
  std::string model = "cffe";
  std::string init = "mono";
  std::int64_t K = 4096;
  double grid_step = 1e-3;
  double post_step = 5e-4;
  double post_window = 0.5;
  double late_step = 1e-3;
  double horizon = 3.0;
  std::string out = "env.json";
  std::string bin;
};

int cmd_solve(const SolveArgs& args) {
  const MassDistribution init = load_init(args.init);
  GridSpec grid;
  grid.horizon = args.horizon;
  grid.pre_step = args.grid_step;
  grid.post_step = args.post_step;
  grid.post_window = args.post_window;
  grid.late_step = args.late_step;
  Environment env = args.model == "smoluchowski" ? solve_smoluchowski(init, args.K, grid)
                    : args.model == "cffe"
                        ? solve_cffe(init, args.K, grid)
                        : (fail(Errc::usage_error, "solve: unknown model " + args.model),
                           Environment{});
  std::string bin = args.bin;
  if (bin.empty()) bin = fs::path(args.out).replace_extension(".bin").string();
  write_environment_sidecar(env, bin);
  const Json config{{"command", "solve"},   {"model", args.model},
                    {"K", args.K},          {"grid_step", args.grid_step},
                    {"post_step", args.post_step}, {"post_window", args.post_window},
                    {"late_step", args.late_step}, {"horizon", args.horizon}};
  Json j = environment_to_json(env, fs::path(bin).filename().string());
  double max_defect = 0.0;
  for (std::size_t i = 0; i < env.size(); ++i)
    max_defect = std::max(max_defect, std::fabs(env.conservation_defect(i)));
  j["diagnostics"] = {{"max_conservation_defect", max_defect},
                      {"phi_at_horizon", env.phi(env.size() - 1)},
                      {"phi_integral_at_horizon", env.phi_integral(env.size() - 1)}};
  write_json_file(stamp(std::move(j), config, 0), args.out);
  std::printf("solve: %s K=%lld on [0,%g], t_gel=%g, max defect %.3g -> %s (+%s)\n",
              args.model.c_str(), static_cast<long long>(args.K), args.horizon, env.t_gel(),
              max_defect, args.out.c_str(), bin.c_str());
  return 0;
}

// --------------------------------------------------------- characteristics

struct CurvesArgs {
  std::string env = "env.json";
  std::vector<double> horizons;
  std::size_t family = 0;  // when set, build a geometric family of this size
  std::string out = "curves.json";
};

int cmd_characteristics(const CurvesArgs& args) {
  const Environment env = load_env(args.env);
  std::vector<double> ys = args.horizons;
  if (args.family > 0) {
    CurveFamily family(env, env.horizon(), args.family);
    for (const auto& c : family.curves()) ys.push_back(c.horizon());
    Json j;
    j["t_gel"] = env.t_gel();
    j["curves"] = Json::array();
    for (const auto& c : family.curves())
      j["curves"].push_back(curve_to_json(c, c.ode_residual(env), blend_width(env)));
    const Json config{{"command", "characteristics"}, {"family", args.family}, {"env", args.env}};
    write_json_file(stamp(std::move(j), config, 0), args.out);
    std::printf("characteristics: %zu-curve family up to y=%g -> %s\n", args.family,
                env.horizon(), args.out.c_str());
    return 0;
  }
  if (ys.empty()) fail(Errc::usage_error, "characteristics: need --horizons or --family");
  std::sort(ys.begin(), ys.end());
  std::vector<CharacteristicCurve> curves(ys.size());
  parallel_for(ys.size(), [&](std::size_t i) { curves[i] = solve_characteristic(env, ys[i]); });
  Json j;
  j["t_gel"] = env.t_gel();
  j["curves"] = Json::array();
  for (const auto& c : curves)
    j["curves"].push_back(curve_to_json(c, c.ode_residual(env), blend_width(env)));
  const Json config{{"command", "characteristics"}, {"horizons", ys}, {"env", args.env}};
  write_json_file(stamp(std::move(j), config, 0), args.out);
  std::printf("characteristics: %zu curves -> %s\n", ys.size(), args.out.c_str());
  return 0;
}

// ------------------------------------------------------------ sample-limit

struct SampleArgs {
  std::string env = "env.json";
  std::string curves = "curves.json";
  std::vector<double> times;
  std::size_t n_paths = 10000;
  std::int64_t threshold = 100000;
  std::uint64_t seed = 0;
  std::string out = "law.json";
};

int cmd_sample_limit(const SampleArgs& args) {
  if (args.times.empty()) fail(Errc::usage_error, "sample-limit: need --t");
  const Environment env = load_env(args.env);
  const CurveFamily curves = load_curves(args.curves, env);
  LimitSampler sampler(env, &curves, args.threshold);
  Json laws = Json::array();
  for (const double t : args.times)
    laws.push_back(to_json(empirical_law(sampler, t, args.n_paths, args.seed)));
  const double t_max = *std::max_element(args.times.begin(), args.times.end());
  const auto explosions = explosion_count_stats(sampler, t_max, args.n_paths, args.seed + 1);
  const Json config{{"command", "sample-limit"}, {"t", args.times},
                    {"n_paths", args.n_paths},   {"threshold", args.threshold},
                    {"seed", args.seed},         {"env", args.env}};
  Json j;
  j["laws"] = std::move(laws);
  j["explosions"] = {{"horizon", t_max},
                     {"mean", explosions.count.mean},
                     {"std_error", explosions.count.std_error},
                     {"predicted_phi_integral", explosions.predicted},
                     {"pre_gel_explosions", explosions.pre_gel_explosions},
                     {"bound", explosions.bound}};
  write_json_file(stamp(std::move(j), config, args.seed), args.out);
  std::printf("sample-limit: %zu paths at %zu times -> %s\n", args.n_paths, args.times.size(),
              args.out.c_str());
  return 0;
}

// ------------------------------------------------------------------ couple

struct CoupleArgs {
  std::int64_t n = 10000;
  double lambda = -1.0;  // default n^{-0.3}
  std::int64_t K = 64;
  double horizon = 2.0;
  std::size_t replicas = 100;
  std::string env = "env.json";
  std::string curves = "curves.json";
  std::uint64_t seed = 0;
  double eps = 0.1;
  std::string out = "coupling.json";
};

int cmd_couple(const CoupleArgs& args) {
  const Environment env = load_env(args.env);
  const CurveFamily curves = load_curves(args.curves, env);
  CouplingConfig cfg;
  cfg.n = args.n;
  cfg.lambda = args.lambda < 0.0 ? std::pow(static_cast<double>(args.n), -0.3) : args.lambda;
  cfg.K = args.K;
  cfg.horizon = args.horizon;
  cfg.seed = args.seed;

  std::vector<CouplingResult> results(args.replicas);
  parallel_for(args.replicas, [&](std::size_t i) {
    CouplingConfig local = cfg;
    local.stream = i;
    results[i] = run_coupling(local, env, curves);
  });
  const FailureStats stats = aggregate_failure_stats(results, args.eps);

  const Json config{{"command", "couple"}, {"n", args.n},     {"lambda", cfg.lambda},
                    {"K", args.K},         {"T", args.horizon}, {"replicas", args.replicas},
                    {"seed", args.seed},   {"eps", args.eps}};
  Json j;
  j["n"] = args.n;
  j["lambda"] = cfg.lambda;
  j["K"] = args.K;
  j["T"] = args.horizon;
  j["aggregate"] = to_json(stats);
  Json reps = Json::array();
  for (const auto& r : results) reps.push_back(to_json(r));
  j["replicas"] = std::move(reps);
  write_json_file(stamp(std::move(j), config, args.seed), args.out);
  std::printf("couple: n=%lld lambda=%.4g K=%lld T=%g replicas=%zu: P[tau<=T]=%.3f -> %s\n",
              static_cast<long long>(args.n), cfg.lambda, static_cast<long long>(args.K),
              args.horizon, args.replicas, stats.p_failed, args.out.c_str());
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string env;
  std::vector<std::string> sims;
  std::vector<std::string> laws;
  std::vector<std::string> couplings;
  std::string out_prefix = "report";
  double tol_cons = 5e-3;
  double tol_burn_rate = 5e-3;
  double z_bound = 4.0;
  double sup_bound = 0.02;
};

int cmd_report(const ReportArgs& args) {
  if (args.env.empty()) fail(Errc::usage_error, "report: --env is required");
  const Environment env = load_env(args.env);
  Json report;
  std::vector<std::string> failures;
  std::ofstream csv(args.out_prefix + ".csv");
  if (!csv) fail(Errc::stage_failure, "report: cannot open csv output");
  csv << "table,artifact,seed,key,value\n";

  // (d) phi diagnostics from the environment itself
  {
    double max_defect = 0.0;
    for (std::size_t i = 0; i < env.size(); ++i)
      max_defect = std::max(max_defect, std::fabs(env.conservation_defect(i)));
    const double T = env.horizon();
    const double run_avg = env.t_gel() < T
                               ? env.phi_integral_at(T) / (T - env.t_gel())
                               : 0.0;
    const double burn_resid = burn_rate_residual(env, T);
    bool phi_zero_pre_gel = true;
    for (std::size_t i = 0; i < env.gel_index(); ++i) phi_zero_pre_gel &= env.phi(i) == 0.0;
    report["phi_diagnostics"] = {{"artifact", args.env},
                                 {"max_conservation_defect", max_defect},
                                 {"running_average_phi", run_avg},
                                 {"burn_rate_residual_at_horizon", burn_resid},
                                 {"phi_zero_pre_gel", phi_zero_pre_gel}};
    csv << "phi_diagnostics," << args.env << ",-,max_conservation_defect," << max_defect << "\n";
    csv << "phi_diagnostics," << args.env << ",-,running_average_phi," << run_avg << "\n";
    csv << "phi_diagnostics," << args.env << ",-,burn_rate_residual," << burn_resid << "\n";
    if (env.conservative() && max_defect > args.tol_cons)
      failures.push_back("conservation defect above tolerance");
    if (env.conservative() && burn_resid > args.tol_burn_rate)
      failures.push_back("burn-rate identity residual above tolerance");
    if (!phi_zero_pre_gel) failures.push_back("phi nonzero before gelation");
  }

  // (a) finite-model snapshots vs the solved environment
  Json sim_blocks = Json::array();
  for (const auto& sim_path : args.sims) {
    const Json sim = read_json_file(sim_path);
    const auto seed = sim.at("provenance").at("seed").get<std::uint64_t>();
    const auto snaps = sim.at("snapshots").get<std::vector<double>>();
    const auto n = sim.at("n").get<std::int64_t>();
    double sup_all = 0.0;
    Json rows = Json::array();
    for (std::size_t si = 0; si < snaps.size(); ++si) {
      const MassDistribution mean = mass_distribution_from_json(sim.at("mean")[si]);
      const auto row = env.row(env.locate(snaps[si]));
      double sup = 0.0;
      for (std::int64_t k = 1; k <= env.truncation(); ++k) {
        const double vn = mean.mass(k);
        const double v = row[static_cast<std::size_t>(k - 1)];
        sup = std::max(sup, std::fabs(vn - v));
      }
      sup_all = std::max(sup_all, sup);
      rows.push_back({{"t", snaps[si]}, {"sup_l", sup}});
      csv << "sim_vs_env," << sim_path << "," << seed << ",sup_l@t=" << snaps[si] << "," << sup
          << "\n";
    }
    sim_blocks.push_back(
        {{"artifact", sim_path}, {"seed", seed}, {"n", n}, {"rows", rows}, {"sup", sup_all}});
    if (sup_all > args.sup_bound)
      failures.push_back("sim " + sim_path + ": sup |v^n - v| above bound");
  }
  if (!sim_blocks.empty()) report["sim_vs_env"] = std::move(sim_blocks);

  // (b) empirical laws vs the solver
  Json law_blocks = Json::array();
  for (const auto& law_path : args.laws) {
    const Json law_file = read_json_file(law_path);
    const auto seed = law_file.at("provenance").at("seed").get<std::uint64_t>();
    for (const auto& law_json : law_file.at("laws")) {
      const auto t = law_json.at("t").get<double>();
      const auto masses = law_json.at("masses").get<std::vector<double>>();
      const auto errs = law_json.at("std_error").get<std::vector<double>>();
      const auto row = env.row(env.locate(t));
      Json zrows = Json::array();
      double worst = 0.0;
      for (std::int64_t k = 1; k <= 20 && k <= static_cast<std::int64_t>(masses.size()); ++k) {
        const double expect = row[static_cast<std::size_t>(k - 1)];
        const double se = std::max(errs[static_cast<std::size_t>(k - 1)], 1e-12);
        const double z = (masses[static_cast<std::size_t>(k - 1)] - expect) / se;
        zrows.push_back({{"k", k}, {"z", z}});
        csv << "law_vs_env," << law_path << "," << seed << ",z@t=" << t << ";k=" << k << "," << z
            << "\n";
        if (expect * static_cast<double>(law_json.at("n_paths").get<std::size_t>()) >= 10.0)
          worst = std::max(worst, std::fabs(z));
      }
      law_blocks.push_back({{"artifact", law_path}, {"seed", seed}, {"t", t}, {"z", zrows}});
      if (worst > args.z_bound)
        failures.push_back("law " + law_path + ": |z| above bound at t=" + std::to_string(t));
    }
  }
  if (!law_blocks.empty()) report["law_vs_env"] = std::move(law_blocks);

  // (c) coupling failure tables
  Json coupling_blocks = Json::array();
  for (const auto& cpath : args.couplings) {
    const Json c = read_json_file(cpath);
    const auto seed = c.at("provenance").at("seed").get<std::uint64_t>();
    coupling_blocks.push_back({{"artifact", cpath},
                               {"seed", seed},
                               {"n", c.at("n")},
                               {"aggregate", c.at("aggregate")}});
    csv << "coupling," << cpath << "," << seed << ",p_failed,"
        << c.at("aggregate").at("p_failed").get<double>() << "\n";
    csv << "coupling," << cpath << "," << seed << ",p_sup_exceeds,"
        << c.at("aggregate").at("p_sup_exceeds").get<double>() << "\n";
  }
  if (!coupling_blocks.empty()) {
    // monotone-in-n diagnostic, tolerating CI overlap
    std::vector<std::pair<std::int64_t, std::pair<double, double>>> byn;
    for (const auto& b : coupling_blocks) {
      byn.push_back({b.at("n").get<std::int64_t>(),
                     {b.at("aggregate").at("p_sup_exceeds").get<double>(),
                      b.at("aggregate").at("p_sup_se").get<double>()}});
    }
    std::sort(byn.begin(), byn.end());
    for (std::size_t i = 0; i + 1 < byn.size(); ++i) {
      const auto [p0, s0] = byn[i].second;
      const auto [p1, s1] = byn[i + 1].second;
      if (p1 - p0 > 3.0 * (s0 + s1))
        failures.push_back("coupling: P[sup d_E > eps] increases significantly in n");
    }
    report["coupling"] = std::move(coupling_blocks);
  }

  report["failures"] = failures;
  report["pass"] = failures.empty();
  write_json_file(stamp(std::move(report), Json{{"command", "report"}}, 0),
                  args.out_prefix + ".json");
  if (!failures.empty()) {
    for (const auto& f : failures) std::fprintf(stderr, "tolerance failure: %s\n", f.c_str());
    fail(Errc::tolerance_failure, "report: " + std::to_string(failures.size()) + " check(s) failed");
  }
  std::printf("report: all checks passed -> %s.json / %s.csv\n", args.out_prefix.c_str(),
              args.out_prefix.c_str());
  return 0;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(const std::string& config_path, bool dry_run) {
  const Json cfg = read_json_file(config_path);
  const std::string workdir = cfg.value("workdir", ".");
  fs::create_directories(workdir);
  auto path = [&](const std::string& name) { return (fs::path(workdir) / name).string(); };

  const Json solver = cfg.value("solver", Json::object());
  const Json curves = cfg.value("curves", Json::object());
  const Json model = cfg.value("model", Json::object());
  const Json sampler = cfg.value("sampler", Json::object());
  const Json coupling = cfg.value("coupling", Json::object());
  const Json report = cfg.value("report", Json::object());
  const auto seed = cfg.value("seed", std::uint64_t{0});

  const std::vector<std::string> plan = {"solve", "characteristics", "simulate",
                                         "sample-limit", "couple", "report"};
  if (dry_run) {
    std::printf("pipeline plan (workdir %s):\n", workdir.c_str());
    for (const auto& stage : plan) std::printf("  %s\n", stage.c_str());
    return 0;
  }

  auto run_stage = [&](const char* stage, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == Errc::region_e6_reached) throw;
      fail(Errc::stage_failure, std::string("stage ") + stage + ": " + e.what());
    } catch (const std::exception& e) {
      fail(Errc::stage_failure, std::string("stage ") + stage + ": " + e.what());
    }
  };

  run_stage("solve", [&] {
    SolveArgs a;
    a.K = solver.value("K", std::int64_t{1024});
    a.horizon = solver.value("horizon", 2.5);
    a.grid_step = solver.value("grid_step", 1e-3);
    a.post_step = solver.value("post_step", 5e-4);
    a.init = solver.value("init", std::string("mono"));
    a.out = path("env.json");
    a.bin = path("env.bin");
    cmd_solve(a);
  });
  run_stage("characteristics", [&] {
    CurvesArgs a;
    a.env = path("env.json");
    a.family = curves.value("family", std::size_t{64});
    a.out = path("curves.json");
    cmd_characteristics(a);
  });
  run_stage("simulate", [&] {
    SimulateArgs a;
    a.n = model.value("n", std::int64_t{20000});
    a.lambda = model.value("lambda", 0.0);
    a.dagger = model.value("dagger", false);
    a.replicas = model.value("replicas", std::int64_t{8});
    a.seed = seed;
    a.snapshots = model.value("snapshots", std::vector<double>{0.25, 0.5, 0.75});
    a.horizon = a.snapshots.empty() ? 1.0 : *std::max_element(a.snapshots.begin(),
                                                              a.snapshots.end());
    a.out = path("sim.json");
    cmd_simulate(a);
  });
  run_stage("sample-limit", [&] {
    SampleArgs a;
    a.env = path("env.json");
    a.curves = path("curves.json");
    a.times = sampler.value("t", std::vector<double>{0.5, 2.0});
    a.n_paths = sampler.value("n_paths", std::size_t{20000});
    a.threshold = sampler.value("threshold", std::int64_t{100000});
    a.seed = seed + 1;
    a.out = path("law.json");
    cmd_sample_limit(a);
  });
  run_stage("couple", [&] {
    CoupleArgs a;
    a.env = path("env.json");
    a.curves = path("curves.json");
    a.n = coupling.value("n", std::int64_t{10000});
    a.lambda = coupling.value("lambda", -1.0);
    a.K = coupling.value("K", std::int64_t{64});
    a.horizon = coupling.value("T", 2.0);
    a.replicas = coupling.value("replicas", std::size_t{100});
    a.seed = seed + 2;
    a.out = path("coupling.json");
    cmd_couple(a);
  });
  int rc = 0;
  run_stage("report", [&] {
    ReportArgs a;
    a.env = path("env.json");
    a.sims = {path("sim.json")};
    a.laws = {path("law.json")};
    a.couplings = {path("coupling.json")};
    a.out_prefix = path("report");
    a.tol_cons = report.value("tol_cons", 5e-3);
    a.z_bound = report.value("z_bound", 4.0);
    a.sup_bound = report.value("sup_bound", 0.02);
    rc = cmd_report(a);
  });
  return rc;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Mean-field forest-fire toolkit: simulator, kinetic solver, "
               "characteristic curves, limit sampler, and coupling checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run the finite-n forest-fire model");
  simulate->add_option("--n", sim.n, "vertex count");
  simulate->add_option("--lambda", sim.lambda, "fire rate per vertex");
  simulate->add_option("--horizon", sim.horizon, "time horizon");
  simulate->add_option("--snapshots", sim.snapshots, "snapshot times")->delimiter(',');
  simulate->add_option("--replicas", sim.replicas, "independent replicas");
  simulate->add_option("--seed", sim.seed, "base seed");
  simulate->add_flag("--dagger", sim.dagger, "double within-cluster growth clocks");
  simulate->add_option("--init", sim.init, "initial distribution (mono or a json file)");
  simulate->add_option("--out", sim.out, "output json");

  SolveArgs solve;
  auto* solve_cmd = app.add_subcommand("solve", "solve the limiting kinetics");
  solve_cmd->add_option("--model", solve.model, "cffe or smoluchowski");
  solve_cmd->add_option("--init", solve.init, "initial distribution (mono or a json file)");
  solve_cmd->add_option("--K", solve.K, "truncation");
  solve_cmd->add_option("--grid-step", solve.grid_step, "pre-gel output step");
  solve_cmd->add_option("--post-step", solve.post_step, "post-gel output step");
  solve_cmd->add_option("--post-window", solve.post_window, "fine window width after t_gel");
  solve_cmd->add_option("--late-step", solve.late_step, "late output step");
  solve_cmd->add_option("--horizon", solve.horizon, "time horizon");
  solve_cmd->add_option("--out", solve.out, "output json");
  solve_cmd->add_option("--bin", solve.bin, "binary sidecar path (default: out with .bin)");

  CurvesArgs curves;
  auto* curves_cmd = app.add_subcommand("characteristics", "solve characteristic curves");
  curves_cmd->add_option("--env", curves.env, "environment json");
  curves_cmd->add_option("--horizons", curves.horizons, "curve horizons y")->delimiter(',');
  curves_cmd->add_option("--family", curves.family, "geometric family size (overrides list)");
  curves_cmd->add_option("--out", curves.out, "output json");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample-limit", "sample the limiting tagged process");
  sample_cmd->add_option("--env", sample.env, "environment json");
  sample_cmd->add_option("--curves", sample.curves, "curves json");
  sample_cmd->add_option("--t", sample.times, "law evaluation times")->delimiter(',');
  sample_cmd->add_option("--n-paths", sample.n_paths, "paths per time");
  sample_cmd->add_option("--threshold", sample.threshold, "explosion threshold M");
  sample_cmd->add_option("--seed", sample.seed, "base seed");
  sample_cmd->add_option("--out", sample.out, "output json");

  CoupleArgs couple;
  auto* couple_cmd = app.add_subcommand("couple", "run the finite/limit coupling");
  couple_cmd->add_option("--n", couple.n, "vertex count");
  couple_cmd->add_option("--lambda", couple.lambda, "fire rate (default n^-0.3)");
  couple_cmd->add_option("--K", couple.K, "region size threshold");
  couple_cmd->add_option("--T", couple.horizon, "time horizon");
  couple_cmd->add_option("--replicas", couple.replicas, "replicas");
  couple_cmd->add_option("--env", couple.env, "environment json");
  couple_cmd->add_option("--curves", couple.curves, "curves json");
  couple_cmd->add_option("--seed", couple.seed, "base seed");
  couple_cmd->add_option("--eps", couple.eps, "distance threshold for sup d_E");
  couple_cmd->add_option("--out", couple.out, "output json");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "cross-validation report");
  report_cmd->add_option("--env", report.env, "environment json");
  report_cmd->add_option("--sim", report.sims, "simulate artifacts");
  report_cmd->add_option("--law", report.laws, "sample-limit artifacts");
  report_cmd->add_option("--coupling", report.couplings, "couple artifacts");
  report_cmd->add_option("--out-prefix", report.out_prefix, "output prefix");
  report_cmd->add_option("--tol-cons", report.tol_cons, "conservation tolerance");
  report_cmd->add_option("--tol-burn-rate", report.tol_burn_rate, "burn-rate residual tolerance");
  report_cmd->add_option("--z-bound", report.z_bound, "per-bucket z bound");
  report_cmd->add_option("--sup-bound", report.sup_bound, "sup |v^n - v| bound");

  std::string pipeline_config;
  bool dry_run = false;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run all stages from a config file");
  pipeline_cmd->add_option("--config", pipeline_config, "pipeline config json")->required();
  pipeline_cmd->add_flag("--dry-run", dry_run, "print the plan and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help / --version
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (solve_cmd->parsed()) return cmd_solve(solve);
    if (curves_cmd->parsed()) return cmd_characteristics(curves);
    if (sample_cmd->parsed()) return cmd_sample_limit(sample);
    if (couple_cmd->parsed()) return cmd_couple(couple);
    if (report_cmd->parsed()) return cmd_report(report);
    if (pipeline_cmd->parsed()) return cmd_pipeline(pipeline_config, dry_run);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", errc_name(e.code()), e.what());
    switch (e.code()) {
      case Errc::usage_error: return 2;
      case Errc::region_e6_reached: return 3;
      default: return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace ffm
