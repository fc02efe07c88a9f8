#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "permlab/measures.hpp"

namespace permlab {

// Free parameters of the builtin permutons.
struct BuiltinParams {
  double ell = 0.5;
  double z = 0.5;
  std::string eta = "2143";
};

// Builtin names: lebesgue, xi, xi11, xi22, mu_ell, rect_z, sstar.
Permuton builtin_permuton(std::string_view name, const BuiltinParams& p = {});

// Parse a JSON permuton spec (grid, segments, mixture or builtin).
Permuton parse_permuton_json(std::string_view text);

// Canonical JSON text for a spec, the thing that gets hashed.
std::string canonical_spec(std::string_view text);
std::string builtin_spec(std::string_view name, const BuiltinParams& p);

// Serialize a permuton to the JSON spec format.
std::string to_json(const Permuton& mu);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

}  // namespace permlab
