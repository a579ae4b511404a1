#include "ffm/json_io.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ffm/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary sidecars are little-endian; big-endian hosts need byte swaps");

namespace ffm {

Json to_json(const MassDistribution& dist) {
  Json j;
  j["as_of"] = dist.as_of();
  j["masses"] = std::vector<double>(dist.masses().begin(), dist.masses().end());
  if (dist.tail() && dist.tail()->amplitude > 0.0) {
    j["tail"] = {{"cutoff", dist.tail()->cutoff}, {"amplitude", dist.tail()->amplitude}};
  } else {
    j["tail"] = nullptr;
  }
  return j;
}

MassDistribution mass_distribution_from_json(const Json& j) {
  try {
    std::vector<double> masses = j.at("masses").get<std::vector<double>>();
    std::optional<TailModel> tail;
    if (j.contains("tail") && !j.at("tail").is_null()) {
      tail = TailModel{j.at("tail").at("cutoff").get<std::int64_t>(),
                       j.at("tail").at("amplitude").get<double>()};
    }
    const double as_of = j.value("as_of", 0.0);
    return MassDistribution(std::move(masses), tail, as_of);
  } catch (const Json::exception& e) {
    fail(Errc::schema_mismatch, std::string("mass distribution json: ") + e.what());
  }
}

Json to_json(const JumpPath& path) {
  Json events = Json::array();
  for (const auto& e : path.events) {
    const char* kind = e.kind == EventKind::growth   ? "growth"
                       : e.kind == EventKind::burn   ? "burn"
                                                     : "explosion";
    events.push_back({{"time", e.time}, {"new_size", e.new_size}, {"kind", kind}});
  }
  return Json{{"start_time", path.start_time},
              {"initial_size", path.initial_size},
              {"events", std::move(events)}};
}

Json to_json(const EmpiricalLaw& law) {
  return Json{{"t", law.t},
              {"n_paths", law.n_paths},
              {"masses", law.masses},
              {"std_error", law.std_error},
              {"overflow", law.overflow}};
}

Json to_json(const CouplingResult& r) {
  Json j;
  j["tau"] = std::isfinite(r.tau) ? Json(r.tau) : Json(nullptr);
  j["failure_cause"] = failure_cause_name(r.cause);
  j["sup_dE"] = r.sup_distance;
  j["region_time"] = {{"E1", r.region_time[0]},
                      {"E2", r.region_time[1]},
                      {"E3", r.region_time[2]},
                      {"E4", r.region_time[3]},
                      {"E5", r.region_time[4]}};
  j["events"] = r.events;
  j["cn_at_horizon"] = r.cn_at_horizon;
  j["ctilde_at_horizon"] = r.ctilde_at_horizon;
  return j;
}

Json to_json(const FailureStats& s) {
  Json causes;
  for (std::size_t c = 0; c < s.cause_counts.size(); ++c)
    causes[failure_cause_name(static_cast<FailureCause>(c))] = s.cause_counts[c];
  return Json{{"replicas", s.replicas},
              {"p_failed", s.p_failed},
              {"p_failed_se", s.p_failed_se},
              {"eps", s.eps},
              {"p_sup_exceeds", s.p_sup_exceeds},
              {"p_sup_se", s.p_sup_se},
              {"mean_region_time",
               {{"E1", s.mean_region_time[0]},
                {"E2", s.mean_region_time[1]},
                {"E3", s.mean_region_time[2]},
                {"E4", s.mean_region_time[3]},
                {"E5", s.mean_region_time[4]}}},
              {"failure_causes", std::move(causes)}};
}

void write_environment_sidecar(const Environment& env, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::stage_failure, "cannot open sidecar for writing: " + path);
  const std::int64_t K = env.truncation();
  const double T = env.horizon();
  const auto steps = static_cast<std::int64_t>(env.size());
  out.write(reinterpret_cast<const char*>(&K), sizeof(K));
  out.write(reinterpret_cast<const char*>(&T), sizeof(T));
  out.write(reinterpret_cast<const char*>(&steps), sizeof(steps));
  for (std::size_t i = 0; i < env.size(); ++i) {
    const auto row = env.row(i);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  for (std::size_t i = 0; i < env.size(); ++i) {
    const double phi = env.phi(i);
    out.write(reinterpret_cast<const char*>(&phi), sizeof(phi));
  }
  if (!out) fail(Errc::stage_failure, "sidecar write failed: " + path);
}

Json environment_to_json(const Environment& env, const std::string& sidecar_path) {
  Json j;
  j["t_gel"] = env.t_gel();
  j["gel_index"] = env.gel_index();
  j["K"] = env.truncation();
  j["conservative"] = env.conservative();
  j["times"] = env.times();
  std::vector<double> phi(env.size()), phi_int(env.size()), amp(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) {
    phi[i] = env.phi(i);
    phi_int[i] = env.phi_integral(i);
    amp[i] = env.tail_amplitude(i);
  }
  j["phi"] = std::move(phi);
  j["phi_integral"] = std::move(phi_int);
  j["tail_amplitude"] = std::move(amp);
  j["sidecar"] = sidecar_path;

  // Decimated preview of the masses: small sizes densely, then geometric.
  std::vector<std::int64_t> sizes;
  for (std::int64_t k = 1; k <= std::min<std::int64_t>(32, env.truncation()); ++k)
    sizes.push_back(k);
  for (std::int64_t k = 48; k <= env.truncation(); k = (k * 3) / 2) sizes.push_back(k);
  Json rows = Json::array();
  for (std::size_t i = 0; i < env.size(); ++i) {
    const auto row = env.row(i);
    std::vector<double> picked;
    picked.reserve(sizes.size());
    for (const auto k : sizes) picked.push_back(row[static_cast<std::size_t>(k - 1)]);
    rows.push_back(std::move(picked));
  }
  j["preview_sizes"] = std::move(sizes);
  j["preview_masses"] = std::move(rows);
  return j;
}

Environment environment_from_json(const Json& j, const std::string& json_dir) {
  try {
    const auto times = j.at("times").get<std::vector<double>>();
    const auto phi = j.at("phi").get<std::vector<double>>();
    const auto phi_int = j.at("phi_integral").get<std::vector<double>>();
    const auto amp = j.at("tail_amplitude").get<std::vector<double>>();
    const auto t_gel = j.at("t_gel").get<double>();
    const auto gel_index = j.at("gel_index").get<std::size_t>();
    const auto K = j.at("K").get<std::int64_t>();
    const bool conservative = j.at("conservative").get<bool>();
    std::filesystem::path sidecar = j.at("sidecar").get<std::string>();
    if (sidecar.is_relative()) sidecar = std::filesystem::path(json_dir) / sidecar;

    std::ifstream in(sidecar, std::ios::binary);
    if (!in) fail(Errc::schema_mismatch, "missing environment sidecar: " + sidecar.string());
    std::int64_t k_file = 0, steps = 0;
    double horizon = 0.0;
    in.read(reinterpret_cast<char*>(&k_file), sizeof(k_file));
    in.read(reinterpret_cast<char*>(&horizon), sizeof(horizon));
    in.read(reinterpret_cast<char*>(&steps), sizeof(steps));
    if (!in || k_file != K || steps != static_cast<std::int64_t>(times.size()))
      fail(Errc::schema_mismatch, "environment sidecar header disagrees with json");
    std::vector<double> flat(static_cast<std::size_t>(steps) * static_cast<std::size_t>(K));
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!in) fail(Errc::schema_mismatch, "environment sidecar truncated");
    return Environment(times, gel_index, t_gel, K, std::move(flat), phi, phi_int, amp,
                       conservative);
  } catch (const Json::exception& e) {
    fail(Errc::schema_mismatch, std::string("environment json: ") + e.what());
  }
}

Json curve_to_json(const CharacteristicCurve& curve, double residual, double blend_width) {
  return Json{{"y", curve.horizon()},
              {"t_gel", curve.t_gel()},
              {"grid", curve.grid()},
              {"psi", curve.psi()},
              {"upsilon", curve.upsilon()},
              {"gel_offset", curve.gel_offset()},
              {"residual_stats", {{"ode_residual", residual}, {"blend_width", blend_width}}}};
}

CharacteristicCurve curve_from_json(const Json& j) {
  try {
    return CharacteristicCurve::from_parts(
        j.at("y").get<double>(), j.at("t_gel").get<double>(),
        j.at("grid").get<std::vector<double>>(), j.at("psi").get<std::vector<double>>(),
        j.at("upsilon").get<std::vector<double>>(), j.at("gel_offset").get<std::size_t>());
  } catch (const Json::exception& e) {
    fail(Errc::schema_mismatch, std::string("curve json: ") + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::stage_failure, "cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) fail(Errc::stage_failure, "write failed: " + path);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::schema_mismatch, "cannot open: " + path);
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::exception& e) {
    fail(Errc::schema_mismatch, path + ": " + e.what());
  }
}

std::uint64_t config_hash(const Json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ffm
