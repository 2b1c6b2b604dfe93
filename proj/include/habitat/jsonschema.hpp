#pragma once
// Minimal JSON Schema checker covering the subset used by the shipped
// report schema: type, properties, required, items, enum, minimum/maximum,
// minItems/maxItems, additionalProperties (boolean form).

#include <string>
#include <vector>

#include "habitat/json.hpp"

namespace habitat {

// Returns human-readable violations ("$.effects[0].ate: ..."); empty means valid.
std::vector<std::string> schema_violations(const json& instance, const json& schema);

inline bool schema_valid(const json& instance, const json& schema) {
    return schema_violations(instance, schema).empty();
}

}  // namespace habitat
