#pragma once

// Command-line front end: `test`, `tables` and `experiment`.
//
// Exit codes: 0 success, 2 usage or data error, 3 an experiment's statistical
// assertion failed, 1 internal numerical failure.

#include <iosfwd>
#include <string>

#include "conetest/mcengine.hpp"

namespace conetest {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitStatFailure = 3;

/// Numeric matrix from CSV text. A first row with any non-numeric cell is taken as a
/// header. Cells are decimal with '.' radix, scientific notation allowed. Throws
/// DomainError naming the source, line and column on bad cells or ragged rows.
Matrix read_csv_matrix(std::istream& in, const std::string& source);

/// Covariance from a name: identity, random, random:<seed>, rho=<r> (equicorrelation),
/// concentrating:<k>, mmatrix. `random` draws from the given stream.
LabeledSigma parse_sigma(const std::string& text, int p, const SeedSpec& seed);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace conetest
