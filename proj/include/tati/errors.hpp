#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace tati {

// Base class for every failure raised by the pipeline. Callers that only
// want a stage boundary can catch this type.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegenerateBox : Error {
    using Error::Error;
};

struct BadAnnotation : Error {
    using Error::Error;
};

// Transport failure after the retry budget. Carries whatever the transport
// layer reported for diagnostics.
struct BackendUnreachable : Error {
    std::string payload;
    BackendUnreachable(const std::string& msg, std::string payload_ = {})
        : Error(msg), payload(std::move(payload_)) {}
};

// Response arrived but violates the wire schema. Carries the raw body.
struct BackendMalformed : Error {
    std::string payload;
    BackendMalformed(const std::string& msg, std::string payload_ = {})
        : Error(msg), payload(std::move(payload_)) {}
};

struct InsufficientDemos : Error {
    std::string pair;
    int have = 0;
    int need = 0;
    InsufficientDemos(std::string pair_, int have_, int need_)
        : Error("insufficient demonstrations for " + pair_ + ": have " +
                std::to_string(have_) + ", need " + std::to_string(need_)),
          pair(std::move(pair_)), have(have_), need(need_) {}
};

struct EmptySource : Error {
    using Error::Error;
};

struct BadRatio : Error {
    using Error::Error;
};

struct UnsplittableUnit : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct EmptyCorpus : Error {
    using Error::Error;
};

struct DegenerateInput : Error {
    using Error::Error;
};

struct AlignmentError : Error {
    using Error::Error;
};

struct SchemaViolation : Error {
    using Error::Error;
};

struct MissingImage : Error {
    using Error::Error;
};

struct UnrenderableScript : Error {
    using Error::Error;
};

// Whole-context translation failed and the per-box fallback also failed for
// at least one index. Carries whatever was recovered.
struct FallbackExhausted : Error {
    std::map<int, std::string> partial_texts;
    FallbackExhausted(const std::string& msg, std::map<int, std::string> partial)
        : Error(msg), partial_texts(std::move(partial)) {}
};

struct ConfigError : Error {
    using Error::Error;
};

// Wraps any stage failure with the stage name so the CLI can report it.
struct StageError : Error {
    std::string stage;
    StageError(std::string stage_, const std::string& msg)
        : Error("[" + stage_ + "] " + msg), stage(std::move(stage_)) {}
};

}  // namespace tati
