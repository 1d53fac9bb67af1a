#pragma once

#include <stdexcept>
#include <string>

namespace tdn {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_delta, int iterations)
        : Error(what), last_delta_(last_delta), iterations_(iterations) {}
    double last_delta() const noexcept { return last_delta_; }
    int iterations() const noexcept { return iterations_; }

private:
    double last_delta_;
    int iterations_;
};

}  // namespace tdn
