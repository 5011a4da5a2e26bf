#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace paneitz {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a standing hypothesis (finiteness, positivity, kernel).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A field is not in the zero-Q-mean subspace, or the Q-mean is undefined.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// Operation requested outside its admissible regime (e.g. t*kappa > 8 pi^2).
class ScopeError : public Error {
public:
    using Error::Error;
};

/// Iterative solver stopped without meeting its tolerance. Carries the best
/// iterate so callers can inspect or resume.
class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> best, int iterations)
        : Error(what), best_iterate(std::move(best)), iterations(iterations) {}
    std::vector<double> best_iterate;
    int iterations = 0;
};

/// A computed certificate contradicts an identity that must hold exactly in
/// finite dimensions; indicates an implementation defect.
class CertificateError : public Error {
public:
    using Error::Error;
};

}  // namespace paneitz
