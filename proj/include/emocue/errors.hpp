#pragma once

#include <stdexcept>
#include <string>

namespace emocue {

// Base error for everything raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed corpus lines, duplicate ids, invalid
// configuration values. Maps to exit code 2 at the CLI boundary.
class DataError : public Error {
public:
    using Error::Error;
};

// Command-line / configuration misuse. Exit code 1.
class UsageError : public Error {
public:
    using Error::Error;
};

// Remote service failure (LLM or embedding endpoint). Exit code 3.
class RemoteError : public Error {
public:
    explicit RemoteError(const std::string& msg, bool retryable = true)
        : Error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

}  // namespace emocue
