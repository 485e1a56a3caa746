#pragma once

#include <stdexcept>
#include <string>

namespace mplan {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration values or unusable config files.
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Missing, malformed or lineage-mismatched input artifacts.
struct InputError : Error {
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// A documented precondition was violated.
struct DomainError : Error {
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// Joint value outside the configured limit interval.
struct JointLimitError : DomainError {
    JointLimitError(int joint_index, double value, double lo, double hi)
        : DomainError("joint " + std::to_string(joint_index) + " value " + std::to_string(value) +
                      " outside limits [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
          joint(joint_index) {}
    int joint;
};

/// Iterative numerical routine failed to converge.
struct NumericalError : Error {
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Training diverged (non-finite loss).
struct TrainingError : Error {
    TrainingError(int epoch_index, const std::string& msg)
        : Error("epoch " + std::to_string(epoch_index) + ": " + msg), epoch(epoch_index) {}
    int epoch;
};

/// Text format parse failure with location.
struct ParseError : InputError {
    ParseError(const std::string& file, int line_no, const std::string& msg)
        : InputError(file + ":" + std::to_string(line_no) + ": " + msg), line(line_no) {}
    int line;
};

}  // namespace mplan
