#pragma once
// Shared helpers for tests that need a local HTTP fixture server or a
// scratch directory.

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>

#include "habitat/util.hpp"

namespace habitat_test {

// Runs an httplib server on a free localhost port for the lifetime of the
// object.
class FixtureServer {
public:
    explicit FixtureServer(const std::function<void(httplib::Server&)>& configure) {
        configure(server_);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~FixtureServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const { return port_; }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

inline std::filesystem::path fresh_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("habitat_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

// Seeds a GBIF-style response cache: the client keys files by sha256(url).
inline void seed_cache(const std::filesystem::path& cache_dir, const std::string& url,
                       const std::string& body) {
    habitat::atomic_write_file(cache_dir / "gbif" / (habitat::sha256_hex(url) + ".json"), body);
}

}  // namespace habitat_test
