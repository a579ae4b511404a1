#pragma once

namespace ffm {

/// Command-line entry point. Exit codes: 0 all checks pass, 1 tolerance
/// failure (or any runtime error), 2 usage error, 3 internal invariant
/// violation (e.g. the coupling reaching E6).
int run_cli(int argc, const char* const* argv);

}  // namespace ffm
