#pragma once

#include <stdexcept>
#include <string>

namespace qkshots {

// Invalid sizes, repetition counts, qubit caps and similar user-facing settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mismatched vector lengths or matrix dimensions.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Probabilities outside [0,1], non-positive values where a logarithm is taken, etc.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IndexError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// A bound that the formulas deliberately leave unimposed (e.g. E[M] == mu).
class BoundNotImposed : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qkshots
