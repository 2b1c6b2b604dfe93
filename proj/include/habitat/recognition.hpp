#pragma once
// Species identification via a pluggable backend (remote HTTP service or a
// content-hash-keyed fixture) plus the confidence gate.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace habitat {

struct Identification {
    std::string scientific_name;
    double confidence = 0.0;  // in [0, 1]
    std::string backend_id;
};

class IdentifierBackend {
public:
    virtual ~IdentifierBackend() = default;
    virtual Identification identify_image(const std::string& image_bytes) = 0;
    virtual std::string id() const = 0;
};

// POST {base_url}/identify with the raw image bytes; expects JSON
// {"scientific_name": text, "confidence": number}. 10 s timeout, 2 retries.
class HttpIdentifier : public IdentifierBackend {
public:
    explicit HttpIdentifier(std::string base_url, int timeout_s = 10, int retries = 2)
        : base_url_(std::move(base_url)), timeout_s_(timeout_s), retries_(retries) {}

    Identification identify_image(const std::string& image_bytes) override;
    std::string id() const override { return "http:" + base_url_; }

private:
    std::string base_url_;
    int timeout_s_;
    int retries_;
};

// Hermetic backend keyed by sha256 of the image content.
class FixtureIdentifier : public IdentifierBackend {
public:
    void add(const std::string& content_hash, Identification result);
    static FixtureIdentifier from_json_file(const std::filesystem::path& path);

    Identification identify_image(const std::string& image_bytes) override;
    std::string id() const override { return "fixture"; }

private:
    std::map<std::string, Identification> by_hash_;
};

// Pass-through of the backend's top-1 response, validated against the
// contract (non-empty name, confidence in [0, 1]).
Identification identify(const std::string& image_bytes, IdentifierBackend& backend);

struct GateResult {
    bool accepted = false;
    std::string scientific_name;
    double confidence = 0.0;
};

// Accepted iff confidence is strictly above the threshold.
GateResult gate(const Identification& id, double threshold = 0.80);

}  // namespace habitat
