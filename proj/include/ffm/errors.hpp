#pragma once

#include <stdexcept>
#include <string>

namespace ffm {

// Failure classes used across the toolkit. The CLI maps these onto exit
// codes: usage errors -> 2, internal invariant violations -> 3, tolerance
// failures -> 1, everything else -> 1.
enum class Errc {
  non_conservative,
  zero_moment,
  step_rejected,
  negative_mass,
  non_converged_phi,
  grid_too_coarse,
  horizon_before_gel,
  env_too_short,
  curve_family_too_sparse,
  region_e6_reached,
  infeasible_init,
  hypothesis_unmet,
  schema_mismatch,
  tolerance_failure,
  stage_failure,
  usage_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::non_conservative: return "NonConservative";
    case Errc::zero_moment: return "ZeroMoment";
    case Errc::step_rejected: return "StepRejected";
    case Errc::negative_mass: return "NegativeMass";
    case Errc::non_converged_phi: return "NonConvergedPhi";
    case Errc::grid_too_coarse: return "GridTooCoarse";
    case Errc::horizon_before_gel: return "HorizonBeforeGel";
    case Errc::env_too_short: return "EnvTooShort";
    case Errc::curve_family_too_sparse: return "CurveFamilyTooSparse";
    case Errc::region_e6_reached: return "RegionE6Reached";
    case Errc::infeasible_init: return "InfeasibleInit";
    case Errc::hypothesis_unmet: return "HypothesisUnmet";
    case Errc::schema_mismatch: return "SchemaMismatch";
    case Errc::tolerance_failure: return "ToleranceFailure";
    case Errc::stage_failure: return "StageFailure";
    case Errc::usage_error: return "UsageError";
  }
  return "Unknown";
}

}  // namespace ffm
