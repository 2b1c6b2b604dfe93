#pragma once
// Deterministic RNG, SHA-256, and small file helpers shared across modules.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace habitat {

// Seeded RNG with platform-stable value mapping. std::mt19937_64's stream is
// standard-defined; the distributions are not, so mapping is done by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // integer in [0, n), n > 0
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    // standard normal via Box-Muller (cosine branch only)
    double normal() {
        double u1 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Deterministic independent stream for replicate `index`.
    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

private:
    std::mt19937_64 gen_;
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);

std::string read_file(const std::filesystem::path& path);
// write-temp-then-rename so concurrent readers never see partial content
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string iso8601_now();
std::string url_encode(const std::string& s);
int current_utc_year();

}  // namespace habitat
