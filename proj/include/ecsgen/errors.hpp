#pragma once

#include <stdexcept>
#include <string>

namespace ecsgen {

// Structural invariant violated (bad matrix, bad config, non-physical input).
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// A projected branch has zero norm (e.g. the odd superposition at t = 0).
class degenerate_state_error : public std::domain_error {
public:
    explicit degenerate_state_error(const std::string& msg) : std::domain_error(msg) {}
};

// Two coherent labels coincide in one mode, so the qubit basis does not exist.
class degenerate_mode_error : public std::domain_error {
public:
    explicit degenerate_mode_error(const std::string& msg) : std::domain_error(msg) {}
};

// Fock-space cutoff too small for the requested amplitude or evolution.
class truncation_error : public std::runtime_error {
public:
    explicit truncation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Measurement outcome has (numerically) zero probability.
class zero_probability_error : public std::domain_error {
public:
    explicit zero_probability_error(const std::string& msg) : std::domain_error(msg) {}
};

// kappa == 0 requested from the dissipative solution; the closed forms for the
// unitary case live in lossless.hpp.
class zero_kappa_error : public std::domain_error {
public:
    explicit zero_kappa_error(const std::string& msg) : std::domain_error(msg) {}
};

// File could not be opened or written; the message carries the path.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ecsgen
