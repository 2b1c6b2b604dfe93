#pragma once
// Error hierarchy for the habitat pipeline. Categories map to CLI exit codes:
// config/input -> 2, upstream data -> 3, numerical -> 4.

#include <stdexcept>
#include <string>
#include <vector>

namespace habitat {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- configuration / user input -------------------------------------------
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// -- upstream data (network, APIs, caches) --------------------------------
struct NetworkError : Error { using Error::Error; };
struct BackendUnavailable : NetworkError { using NetworkError::NetworkError; };
struct MalformedResponse : Error { using Error::Error; };
struct NoTaxonMatch : Error { using Error::Error; };
struct EmptyResult : Error { using Error::Error; };

struct CacheMiss : NetworkError {
    explicit CacheMiss(const std::string& url)
        : NetworkError("offline mode: no cached response for " + url), url(url) {}
    std::string url;
};

// confidence at or below the gate threshold; normal outcome, but fatal to a run
struct IdentificationRejected : Error { using Error::Error; };

// -- sampling ---------------------------------------------------------------
struct EmptyPresences : Error { using Error::Error; };
struct InsufficientLand : Error { using Error::Error; };

// -- rasters ----------------------------------------------------------------
struct UnsupportedFormat : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct OutOfExtent : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };

// -- structure discovery ------------------------------------------------------
struct NonSquare : Error { using Error::Error; };
struct DidNotConverge : Error { using Error::Error; };
struct DegenerateData : Error { using Error::Error; };

struct CycleDetected : Error {
    CycleDetected(const std::string& msg, std::vector<int> cycle_nodes)
        : Error(msg), cycle(std::move(cycle_nodes)) {}
    std::vector<int> cycle;
};

// -- causal inference ---------------------------------------------------------
struct ConstantOutcome : Error { using Error::Error; };
struct UnknownNode : Error { using Error::Error; };
struct BackdoorViolation : Error { using Error::Error; };
struct NoVariation : Error { using Error::Error; };
struct Separation : Error { using Error::Error; };
struct AllStrataDropped : Error { using Error::Error; };

// -- explanation -----------------------------------------------------------
struct OutOfRange : Error { using Error::Error; };
struct UnknownVariable : Error { using Error::Error; };
struct LlmUnavailable : Error { using Error::Error; };
struct LlmMalformed : Error { using Error::Error; };

// Exit code for the CLI given an exception category.
int exit_code_for(const std::exception& e);

}  // namespace habitat
