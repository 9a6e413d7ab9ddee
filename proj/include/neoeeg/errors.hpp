#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace neoeeg {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define NEOEEG_DEFINE_ERROR(Name)          \
    class Name : public Error {            \
    public:                                \
        using Error::Error;                \
    }

// eeg-io
NEOEEG_DEFINE_ERROR(UnsupportedFormat);
NEOEEG_DEFINE_ERROR(MontageError);
NEOEEG_DEFINE_ERROR(LabelError);
NEOEEG_DEFINE_ERROR(SplitError);

// dsp
NEOEEG_DEFINE_ERROR(DspError);
NEOEEG_DEFINE_ERROR(FilterDesignError);
NEOEEG_DEFINE_ERROR(ResampleError);
NEOEEG_DEFINE_ERROR(SegmentError);

// features
NEOEEG_DEFINE_ERROR(FeatureError);
NEOEEG_DEFINE_ERROR(SpectralError);
NEOEEG_DEFINE_ERROR(CopulaError);

// grader
NEOEEG_DEFINE_ERROR(TrainError);
NEOEEG_DEFINE_ERROR(PredictError);

// metrics
NEOEEG_DEFINE_ERROR(MetricError);
NEOEEG_DEFINE_ERROR(CiError);
NEOEEG_DEFINE_ERROR(ConfigError);

// competition
NEOEEG_DEFINE_ERROR(NotFound);
NEOEEG_DEFINE_ERROR(Conflict);
NEOEEG_DEFINE_ERROR(WindowClosed);

#undef NEOEEG_DEFINE_ERROR

/// Train and test label sets share epoch ids.
class EpochOverlapError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Malformed input file; carries the byte offset where parsing stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Journal corruption that is not a torn trailing write.
class RecoveryError : public Error {
public:
    RecoveryError(const std::string& what, std::uint64_t offset)
        : Error(what + " (journal offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// One problem found in a submission file. line == 0 means the problem is not tied to a line.
struct LineIssue {
    std::size_t line = 0;
    std::string message;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<LineIssue> issues)
        : Error(summarize(issues)), issues_(std::move(issues)) {}

    const std::vector<LineIssue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<LineIssue>& issues) {
        std::string out = "submission rejected: " + std::to_string(issues.size()) + " problem(s)";
        if (!issues.empty()) {
            out += "; first: ";
            if (issues.front().line > 0) out += "line " + std::to_string(issues.front().line) + ": ";
            out += issues.front().message;
        }
        return out;
    }

    std::vector<LineIssue> issues_;
};

/// Daily submission quota exhausted; next_allowed is a unix timestamp in seconds.
class RateLimited : public Error {
public:
    explicit RateLimited(std::int64_t next_allowed)
        : Error("daily submission limit reached"), next_allowed_(next_allowed) {}

    std::int64_t next_allowed() const noexcept { return next_allowed_; }

private:
    std::int64_t next_allowed_;
};

}  // namespace neoeeg
