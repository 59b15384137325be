#pragma once

#include <stdexcept>
#include <string>

namespace deconvdec {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shapes do not satisfy an operation's contract.
struct DimensionError : Error {
    using Error::Error;
};

// Input values outside an operation's domain (empty input, all-masked, ...).
struct DomainError : Error {
    using Error::Error;
};

// Invalid configuration, detected at load/construction time.
struct ConfigError : Error {
    using Error::Error;
};

// Out-of-range token id or element index.
struct IndexError : Error {
    using Error::Error;
};

// Malformed input file.
struct FormatError : Error {
    using Error::Error;
};

// API misuse (e.g. backward on a tensor that is not on the tape).
struct ContractError : Error {
    using Error::Error;
};

// Checkpoint incompatible with the requested model/vocabulary.
struct CheckpointError : Error {
    using Error::Error;
};

// Training aborted (non-finite loss).
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace deconvdec
