#pragma once

#include <stdexcept>
#include <string>

namespace sonifw {

// Inconsistent or out-of-range configuration (sample rates, band edges, carriers).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an operation's precondition (wrong frame length, too-narrow band).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// The background model has not been built yet.
class NotReadyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StorageError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace sonifw
