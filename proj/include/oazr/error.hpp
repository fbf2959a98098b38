#pragma once

#include <stdexcept>
#include <string>

namespace oazr {

// Input data that is structurally valid but unusable (coincident hips,
// all-invisible skeletons, zero-norm vectors).
struct DegenerateInput : std::runtime_error {
    explicit DegenerateInput(const std::string& msg) : std::runtime_error(msg) {}
};

// Structured-file parse failure; line is 1-based.
struct ParseError : std::runtime_error {
    int line;
    ParseError(const std::string& msg, int line_)
        : std::runtime_error(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}
};

}  // namespace oazr
