#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace deqcert {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// A parameter set violates the admissibility conditions of its family
// (step size interval, norm of W, conditioning floor).
class CertificationError : public Error {
public:
    using Error::Error;
};

class ContractionViolation : public CertificationError {
public:
    ContractionViolation(const std::string& what, double factor)
        : CertificationError(what), factor_(factor) {}
    double factor() const noexcept { return factor_; }

private:
    double factor_;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> last_iterate, double update_norm)
        : Error(what), last_iterate_(std::move(last_iterate)), update_norm_(update_norm) {}
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
    double update_norm() const noexcept { return update_norm_; }

private:
    std::vector<double> last_iterate_;
    double update_norm_;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace deqcert
