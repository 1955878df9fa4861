#pragma once

#include <string>
#include <string_view>

#include "conetest/matkit.hpp"

namespace conetest {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Canonical decimal serialization of a matrix: "p=<rows>x<cols>;" followed by
/// column-major 17-significant-digit entries separated by commas.
std::string canonical_matrix(const Matrix& m);

/// SHA-256 of canonical_matrix(m).
std::string matrix_fingerprint(const Matrix& m);

}  // namespace conetest
