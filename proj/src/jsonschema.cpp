#include "habitat/jsonschema.hpp"

namespace habitat {

namespace {

bool type_matches(const json& value, const std::string& type) {
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "number") return value.is_number();
    if (type == "integer") return value.is_number_integer();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    return false;
}

void check(const json& value, const json& schema, const std::string& path,
           std::vector<std::string>& out) {
    if (!schema.is_object()) return;

    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(value, t.get<std::string>());
        } else if (t.is_array()) {
            for (const auto& alt : t)
                if (type_matches(value, alt.get<std::string>())) {
                    ok = true;
                    break;
                }
        }
        if (!ok) {
            out.push_back(path + ": expected type " + t.dump() + ", got " +
                          std::string(value.type_name()));
            return;  // further checks assume the right type
        }
    }

    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& allowed : schema["enum"])
            if (value == allowed) {
                ok = true;
                break;
            }
        if (!ok) out.push_back(path + ": value " + value.dump() + " not in enum");
    }

    if (value.is_number()) {
        if (schema.contains("minimum") && value.get<double>() < schema["minimum"].get<double>())
            out.push_back(path + ": " + value.dump() + " below minimum " + schema["minimum"].dump());
        if (schema.contains("maximum") && value.get<double>() > schema["maximum"].get<double>())
            out.push_back(path + ": " + value.dump() + " above maximum " + schema["maximum"].dump());
    }

    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& req : schema["required"]) {
                const auto key = req.get<std::string>();
                if (!value.contains(key)) out.push_back(path + ": missing required property " + key);
            }
        const json props = schema.value("properties", json::object());
        for (const auto& [key, sub] : value.items()) {
            if (props.contains(key)) {
                check(sub, props[key], path + "." + key, out);
            } else if (schema.contains("additionalProperties") &&
                       schema["additionalProperties"].is_boolean() &&
                       !schema["additionalProperties"].get<bool>()) {
                out.push_back(path + ": unexpected property " + key);
            }
        }
    }

    if (value.is_array()) {
        if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>())
            out.push_back(path + ": fewer than " + schema["minItems"].dump() + " items");
        if (schema.contains("maxItems") && value.size() > schema["maxItems"].get<std::size_t>())
            out.push_back(path + ": more than " + schema["maxItems"].dump() + " items");
        if (schema.contains("items")) {
            std::size_t i = 0;
            for (const auto& el : value) {
                check(el, schema["items"], path + "[" + std::to_string(i) + "]", out);
                ++i;
            }
        }
    }
}

}  // namespace

std::vector<std::string> schema_violations(const json& instance, const json& schema) {
    std::vector<std::string> out;
    check(instance, schema, "$", out);
    return out;
}

}  // namespace habitat
