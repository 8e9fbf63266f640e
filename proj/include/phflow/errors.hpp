#pragma once

#include <stdexcept>
#include <string>

namespace phflow {

// Base class for every error thrown by the library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid user-facing parameter (dimension out of range, non-positive rate, ...).
class parameter_error : public error {
public:
    explicit parameter_error(const std::string& what) : error(what) {}
};

// A documented API contract was violated (asymmetric input, dimension mismatch).
class contract_violation : public error {
public:
    explicit contract_violation(const std::string& what) : error(what) {}
};

// Numerical breakdown: overflow, non-finite values, solver failure.
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& what) : error(what) {}
};

// A precondition of a higher-level routine does not hold (e.g. base criterion fails).
class precondition_error : public error {
public:
    explicit precondition_error(const std::string& what) : error(what) {}
};

// Config-text parsing failure; carries a 1-based line number (0 = whole file).
class parse_error : public error {
public:
    parse_error(const std::string& what, int line)
        : error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

} // namespace phflow
