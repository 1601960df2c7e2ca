#pragma once

#include <stdexcept>
#include <string>

namespace vitaltext {

// Error taxonomy shared by all modules. Each class maps to one CLI exit
// code family: MissingFileError -> 2, ConfigError -> 3, everything else -> 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape disagreement between tensors (names both shapes in the message).
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Input value outside the operation's domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Malformed input data (bad record, BIO violation, negative timestamp...).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Invalid configuration value; carries the offending field name.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& field, const std::string& msg)
        : Error("config field '" + field + "': " + msg), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Training-time failure (non-finite gradient / loss), names the slot.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& msg) : Error(msg) {}
};

// Metric undefined for the given labels (single class, no positives...).
class MetricError : public Error {
public:
    explicit MetricError(const std::string& msg) : Error(msg) {}
};

// Referenced file does not exist or cannot be opened.
class MissingFileError : public Error {
public:
    explicit MissingFileError(const std::string& path)
        : Error("missing file: " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Whole-protocol failure (e.g. every seeded run diverged).
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

}  // namespace vitaltext
