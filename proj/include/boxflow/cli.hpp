#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "boxflow/core.hpp"
#include "boxflow/pde_ident.hpp"
#include "boxflow/report.hpp"

namespace boxflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSolverFailure = 3;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1.5" (scaled identity), "diag:a,b,...", "dense:a,b;c,d" (rows split by ';').
GainMatrix parse_gain(const std::string& spec, Index n);

/// "a,b,...", "const:c", "uniform" (the box), "uniform:lo,hi".
/// Uniform draws come from an RNG seeded by (seed, run).
Vec parse_init(const std::string& spec, const BoxProblem& problem, std::uint64_t seed,
               std::uint64_t run);

Method parse_method(const std::string& name);
IntegratorKind parse_integrator(const std::string& name);

/// Flat "key = value" text, '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path);

/// Builds an identification config from flat keys. Throws ArgumentError
/// naming the first missing required key.
pde::IdentConfig ident_config_from_keys(const std::map<std::string, std::string>& keys);

void write_trajectory_csv(std::ostream& os, const SolveReport& rep);
std::string report_json(const SolveReport& rep, int indent = 2);

} // namespace boxflow::cli
