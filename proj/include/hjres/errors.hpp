#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjres {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
public:
    using Error::Error;
};

class NotInteriorError : public Error {
public:
    using Error::Error;
};

class IncompleteStencilError : public Error {
public:
    using Error::Error;
};

/// Vector sizes do not match the graph they are evaluated on.
class IndexingError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InapplicableBoundError : public Error {
public:
    using Error::Error;
};

/// A loss or residual became non-finite. Carries the last finite iterate.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t iteration, std::vector<double> last_finite)
        : Error(what), iteration_(iteration), last_finite_(std::move(last_finite)) {}

    std::size_t iteration() const noexcept { return iteration_; }
    const std::vector<double>& last_finite() const noexcept { return last_finite_; }

private:
    std::size_t iteration_;
    std::vector<double> last_finite_;
};

/// Newton (or marching) failed to reach the requested residual.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, std::size_t iterations, double residual_inf,
                        std::vector<double> best)
        : Error(what), iterations_(iterations), residual_inf_(residual_inf), best_(std::move(best)) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual_inf() const noexcept { return residual_inf_; }
    const std::vector<double>& best() const noexcept { return best_; }

private:
    std::size_t iterations_;
    double residual_inf_;
    std::vector<double> best_;
};

/// Eigen-iteration budget exhausted; the best estimate is kept.
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, double best_value)
        : Error(what), best_value_(best_value) {}
    double best_value() const noexcept { return best_value_; }

private:
    double best_value_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace hjres
