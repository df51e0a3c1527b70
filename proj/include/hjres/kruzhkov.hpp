#pragma once

#include <span>
#include <vector>

namespace hjres::kruzhkov {

/// v = (1 - exp(-lambda u)) / lambda. Strictly increasing, bounded above by 1/lambda.
double forward(double u, double lambda);
std::vector<double> forward(std::span<const double> u, double lambda);

enum class InverseMode { Strict, Diagnostic };

struct InverseOptions {
    InverseMode mode = InverseMode::Strict;
    /// Diagnostic mode clamps 1 - lambda v to at least this value.
    double floor = 1e-30;
};

/// u = -log(1 - lambda v) / lambda. Strict mode throws DomainError when lambda v >= 1.
double inverse(double v, double lambda, const InverseOptions& opt = {});
std::vector<double> inverse(std::span<const double> v, double lambda, const InverseOptions& opt = {});

/// exp(lambda u): how much an error in v is magnified after inversion.
double amplification(double u, double lambda);

} // namespace hjres::kruzhkov
