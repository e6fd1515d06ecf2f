#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "polyfactor/model.hpp"

namespace polyfactor {

/// JSON with fields kind, loss, penalty, lambda, d, m, k, H, V (row lists),
/// label_map, bias_augmented. Doubles keep 17 significant digits, so a
/// save/load round trip is exact.
void save_model(std::ostream& out, const Model& model);
void save_model(const std::string& path, const Model& model);
Model load_model(std::istream& in);
Model load_model(const std::string& path);

/// Shortest round-trip-safe text for a double (17 significant digits).
std::string format_double(double v);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_fingerprint(const std::string& path);

}  // namespace polyfactor
