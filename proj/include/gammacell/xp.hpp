#pragma once

#include "gammacell/cell.hpp"
#include "gammacell/config.hpp"
#include "gammacell/report.hpp"

#include <span>
#include <string>
#include <vector>

namespace gammacell {

enum class Command { Cell, Homog, Envelope, Korn, Rigidity, Commute, Equiv, Diagonal, Addition };
std::string to_string(Command c);
Command command_from_string(const std::string& name);

// |w - v| / (|v| + 1e-12)
double rel_err(double w, double v);

// Least-squares slope of log y against log x over the points with x, y > 0.
// NaN when fewer than two such points exist.
double loglog_slope(std::span<const double> x, std::span<const double> y);

// V for a nonlinear elastic family: same phases and exponent, wells U_i (or 0 for one well).
DensitySpec linearization_of(const DensitySpec& nonlinear);

// Empty report stamped with config hash, version and seed.
SweepReport new_report(const Config& c);

SweepReport run_cell(const Config& c, const RunContext& ctx);
SweepReport run_homog(const Config& c, const RunContext& ctx);
SweepReport run_envelope(const Config& c, const RunContext& ctx);
SweepReport run_korn(const Config& c, const RunContext& ctx);
SweepReport run_rigidity(const Config& c, const RunContext& ctx);
SweepReport run_commutability(const Config& c, const RunContext& ctx);
SweepReport run_equivalence_profile(const Config& c, const RunContext& ctx);
SweepReport run_diagonal(const Config& c, const RunContext& ctx);
SweepReport run_addition(const Config& c, const RunContext& ctx);

SweepReport run(Command cmd, const Config& c, const RunContext& ctx);

// Resolved job list of a command, one human-readable line per job; nothing is computed.
std::vector<std::string> describe_jobs(Command cmd, const Config& c);

}  // namespace gammacell
