#include "habitat/recognition.hpp"

#include "habitat/errors.hpp"
#include "habitat/util.hpp"
#include "habitat/json.hpp"

#include <httplib.h>

#include <cmath>
#include <cstring>

namespace habitat {

namespace {

bool looks_like_png(const std::string& bytes) {
    static const unsigned char magic[4] = {0x89, 'P', 'N', 'G'};
    return bytes.size() >= 4 && std::memcmp(bytes.data(), magic, 4) == 0;
}

Identification parse_identification(const std::string& body, const std::string& backend_id) {
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        throw MalformedResponse(std::string("identifier returned invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("scientific_name") || !doc.contains("confidence"))
        throw MalformedResponse("identifier response missing scientific_name or confidence");
    Identification id;
    try {
        id.scientific_name = doc["scientific_name"].get<std::string>();
        id.confidence = doc["confidence"].get<double>();
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("identifier response has wrong field types: ") + e.what());
    }
    id.backend_id = backend_id;
    return id;
}

void validate(const Identification& id) {
    if (id.scientific_name.empty())
        throw MalformedResponse("identifier returned an empty scientific name");
    if (!std::isfinite(id.confidence) || id.confidence < 0.0 || id.confidence > 1.0)
        throw MalformedResponse("identifier confidence outside [0, 1]: " +
                                std::to_string(id.confidence));
}

}  // namespace

Identification HttpIdentifier::identify_image(const std::string& image_bytes) {
    if (image_bytes.empty()) throw ConfigError("identify: empty image");
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_s_, 0);
    client.set_read_timeout(timeout_s_, 0);
    const char* content_type = looks_like_png(image_bytes) ? "image/png" : "image/jpeg";

    httplib::Result res;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        res = client.Post("/identify", image_bytes, content_type);
        if (res && res->status < 500) break;
    }
    if (!res) throw BackendUnavailable("identifier backend unreachable: " + base_url_);
    if (res->status != 200)
        throw BackendUnavailable("identifier backend returned HTTP " + std::to_string(res->status));
    return parse_identification(res->body, id());
}

void FixtureIdentifier::add(const std::string& content_hash, Identification result) {
    by_hash_[content_hash] = std::move(result);
}

FixtureIdentifier FixtureIdentifier::from_json_file(const std::filesystem::path& path) {
    FixtureIdentifier fixture;
    const json doc = json::parse(read_file(path));
    for (const auto& [hash, entry] : doc.items()) {
        Identification id;
        id.scientific_name = entry.at("scientific_name").get<std::string>();
        id.confidence = entry.at("confidence").get<double>();
        id.backend_id = "fixture";
        fixture.add(hash, std::move(id));
    }
    return fixture;
}

Identification FixtureIdentifier::identify_image(const std::string& image_bytes) {
    const std::string hash = sha256_hex(image_bytes);
    const auto it = by_hash_.find(hash);
    if (it == by_hash_.end())
        throw BackendUnavailable("fixture identifier has no entry for image hash " + hash);
    return it->second;
}

Identification identify(const std::string& image_bytes, IdentifierBackend& backend) {
    if (image_bytes.empty()) throw ConfigError("identify: empty image");
    Identification id = backend.identify_image(image_bytes);
    validate(id);
    return id;
}

GateResult gate(const Identification& id, double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ConfigError("gate threshold must be in [0, 1]");
    return {id.confidence > threshold, id.scientific_name, id.confidence};
}

}  // namespace habitat
