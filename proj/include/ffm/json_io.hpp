#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "ffm/coupling.hpp"
#include "ffm/environment.hpp"
#include "ffm/jump_path.hpp"
#include "ffm/limit_process.hpp"
#include "ffm/mass_distribution.hpp"

namespace ffm {

using Json = nlohmann::json;

// MassDistribution wire format:
// {"as_of": t, "masses": [...], "tail": {"cutoff": K, "amplitude": c} | null}
Json to_json(const MassDistribution& dist);
MassDistribution mass_distribution_from_json(const Json& j);

Json to_json(const JumpPath& path);

Json to_json(const EmpiricalLaw& law);

Json to_json(const CouplingResult& result);
Json to_json(const FailureStats& stats);

/// Environment JSON carries the grid, phi, its running integral, the tail
/// amplitudes, and a decimated preview of the masses; the full mass table
/// lives in a binary sidecar: header {K, T, steps} as little-endian int64/
/// f64/int64, then the row-major v table, then phi.
Json environment_to_json(const Environment& env, const std::string& sidecar_path);
void write_environment_sidecar(const Environment& env, const std::string& path);
Environment environment_from_json(const Json& j, const std::string& json_dir);

Json curve_to_json(const CharacteristicCurve& curve, double residual, double blend_width);
CharacteristicCurve curve_from_json(const Json& j);

void write_json_file(const Json& j, const std::string& path);
Json read_json_file(const std::string& path);

/// FNV-1a of the canonical (sorted-key, compact) dump; stamps artifacts.
std::uint64_t config_hash(const Json& j);

}  // namespace ffm
