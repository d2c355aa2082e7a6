#pragma once

#include <stdexcept>
#include <string>

namespace pastagen {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violated by caller-supplied data (bad shape, unknown option, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A file could not be read, parsed or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A statistic is undefined for the given data (single-class AUC, all-zero Wilcoxon).
class UndefinedStatistic : public Error {
public:
    using Error::Error;
};

/// Template selection produced nothing usable.
class CurationError : public Error {
public:
    using Error::Error;
};

/// Failure inside one stage of lesion synthesis; `stage()` names it.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace pastagen
