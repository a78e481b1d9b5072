#pragma once

#include <string>
#include <string_view>

#include "json.hpp"
#include "normsep/space.hpp"

namespace normsep {

// Keys: kind, n, p, blocks, beta, base, r. p is a number or "inf".
nlohmann::json descriptor_to_json(const SpaceDescriptor& d);
SpaceDescriptor descriptor_from_json(const nlohmann::json& j, const std::string& path = "$");
SpaceDescriptor parse_descriptor(std::string_view text);
std::string dump_descriptor(const SpaceDescriptor& d);

nlohmann::json exponent_to_json(const Exponent& p);
Exponent exponent_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace normsep
