#pragma once

#include <stdexcept>
#include <string>

namespace cfidd {

// Violated precondition (dimension mismatch, bad argument range, ...).
struct contract_error : std::invalid_argument {
    explicit contract_error(const std::string& what) : std::invalid_argument(what) {}
};

// Factorization broke down (non-positive-definite matrix, zero pivot, ...).
struct solver_error : std::runtime_error {
    int pivot_index;
    solver_error(const std::string& what, int pivot) : std::runtime_error(what), pivot_index(pivot) {}
};

// Code construction could not satisfy its constraints (degrees, rank).
struct construction_error : std::runtime_error {
    explicit construction_error(const std::string& what) : std::runtime_error(what) {}
};

// A quantity that must be (near-)real or inside a known range came out wrong.
struct consistency_error : std::runtime_error {
    explicit consistency_error(const std::string& what) : std::runtime_error(what) {}
};

// Channel unusable for the requested operation (e.g. all-zero gain matrix).
struct degenerate_error : std::runtime_error {
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

// Bad configuration file / command line.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem trouble; the message names the path.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cfidd
