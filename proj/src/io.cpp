#include "permlab/io.hpp"

#include <cstdio>

#include <json.hpp>

#include "permlab/error.hpp"
#include "permlab/models.hpp"

namespace permlab {

namespace {

using json = nlohmann::json;

double number(const json& j, const char* what) {
  if (!j.is_number()) throw ValidationError(std::string("expected a number for ") + what);
  return j.get<double>();
}

Point point(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("segment endpoints must be [x, y]");
  return {number(j[0], "x"), number(j[1], "y")};
}

json params_of(const json& spec) {
  return spec.contains("params") ? spec.at("params") : json::object();
}

Permuton from_json(const json& spec);

Permuton builtin_from_json(const json& spec) {
  if (!spec.contains("name") || !spec.at("name").is_string())
    throw ValidationError("builtin spec needs a name");
  const json p = params_of(spec);
  if (!p.is_object()) throw ValidationError("builtin params must be an object");
  BuiltinParams bp;
  if (p.contains("ell")) bp.ell = number(p.at("ell"), "ell");
  if (p.contains("z")) bp.z = number(p.at("z"), "z");
  if (p.contains("eta")) {
    if (!p.at("eta").is_string()) throw ValidationError("eta must be a string");
    bp.eta = p.at("eta").get<std::string>();
  }
  return builtin_permuton(spec.at("name").get<std::string>(), bp);
}

Permuton from_json(const json& spec) {
  if (!spec.is_object() || !spec.contains("type") || !spec.at("type").is_string())
    throw ValidationError("permuton spec needs a string field \"type\"");
  const std::string type = spec.at("type").get<std::string>();
  if (type == "grid") {
    if (!spec.contains("density") || !spec.at("density").is_array())
      throw ValidationError("grid spec needs a density array");
    const json& d = spec.at("density");
    const auto m = static_cast<Eigen::Index>(d.size());
    if (spec.contains("m") && number(spec.at("m"), "m") != static_cast<double>(m))
      throw ValidationError("grid m does not match the density rows");
    Eigen::MatrixXd dens(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const json& row = d[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m)
        throw ValidationError("grid density must be square");
      for (Eigen::Index j = 0; j < m; ++j)
        dens(i, j) = number(row[static_cast<std::size_t>(j)], "density");
    }
    return Permuton::grid(std::move(dens));
  }
  if (type == "segments") {
    if (!spec.contains("segments") || !spec.at("segments").is_array())
      throw ValidationError("segments spec needs a segments array");
    std::vector<Segment> segs;
    for (const json& s : spec.at("segments")) {
      if (!s.is_object() || !s.contains("from") || !s.contains("to") || !s.contains("weight"))
        throw ValidationError("each segment needs from, to and weight");
      segs.push_back(make_segment(point(s.at("from")), point(s.at("to")),
                                  number(s.at("weight"), "weight")));
    }
    return Permuton::segments(std::move(segs));
  }
  if (type == "mixture") {
    if (!spec.contains("weights") || !spec.contains("components") ||
        !spec.at("weights").is_array() || !spec.at("components").is_array())
      throw ValidationError("mixture spec needs weights and components arrays");
    std::vector<double> w;
    for (const json& x : spec.at("weights")) w.push_back(number(x, "weight"));
    std::vector<Permuton> parts;
    for (const json& c : spec.at("components")) parts.push_back(from_json(c));
    return Permuton::mixture(std::move(parts), std::move(w));
  }
  if (type == "builtin") return builtin_from_json(spec);
  throw ValidationError("unknown permuton type \"" + type + "\"");
}

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

json to_json_value(const Permuton& mu) {
  switch (mu.kind()) {
    case Permuton::Kind::Grid: {
      const auto& d = mu.as_grid().density;
      json rows = json::array();
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < d.cols(); ++j) row.push_back(d(i, j));
        rows.push_back(std::move(row));
      }
      return {{"type", "grid"}, {"m", d.rows()}, {"density", std::move(rows)}};
    }
    case Permuton::Kind::Segments: {
      json segs = json::array();
      for (const Segment& s : mu.as_segments().segments)
        segs.push_back({{"from", {s.from.x, s.from.y}}, {"to", {s.to.x, s.to.y}}, {"weight", s.weight}});
      return {{"type", "segments"}, {"segments", std::move(segs)}};
    }
    case Permuton::Kind::Mixture: {
      const auto& mx = mu.as_mixture();
      json comps = json::array();
      for (const Permuton& c : mx.components) comps.push_back(to_json_value(c));
      return {{"type", "mixture"}, {"weights", mx.weights}, {"components", std::move(comps)}};
    }
  }
  return {};
}

}  // namespace

Permuton builtin_permuton(std::string_view name, const BuiltinParams& p) {
  if (name == "lebesgue") return lebesgue();
  if (name == "xi") return xi();
  if (name == "xi11") return xi11();
  if (name == "xi22") return xi22();
  if (name == "mu_ell") return mu_ell(p.ell);
  if (name == "rect_z") return rect_permuton(p.z);
  if (name == "sstar") return sstar_inflate(parse_permutation(p.eta), p.z);
  throw ValidationError("unknown builtin permuton \"" + std::string(name) + "\"");
}

Permuton parse_permuton_json(std::string_view text) { return from_json(parse(text)); }

std::string canonical_spec(std::string_view text) { return parse(text).dump(); }

std::string builtin_spec(std::string_view name, const BuiltinParams& p) {
  json params = json::object();
  if (name == "mu_ell") params["ell"] = p.ell;
  if (name == "rect_z" || name == "sstar") params["z"] = p.z;
  if (name == "sstar") params["eta"] = p.eta;
  return json{{"type", "builtin"}, {"name", std::string(name)}, {"params", params}}.dump();
}

std::string to_json(const Permuton& mu) { return to_json_value(mu).dump(); }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace permlab
