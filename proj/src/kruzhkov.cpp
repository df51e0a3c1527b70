#include "hjres/kruzhkov.hpp"

#include "hjres/errors.hpp"

#include <cmath>

namespace hjres::kruzhkov {

namespace {

void check_lambda(double lambda) {
    if (!(lambda > 0.0)) throw PreconditionError("Kruzhkov transform needs lambda > 0");
}

} // namespace

double forward(double u, double lambda) {
    check_lambda(lambda);
    return -std::expm1(-lambda * u) / lambda;
}

std::vector<double> forward(std::span<const double> u, double lambda) {
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = forward(u[i], lambda);
    return v;
}

double inverse(double v, double lambda, const InverseOptions& opt) {
    check_lambda(lambda);
    const double lv = lambda * v;
    if (lv >= 1.0 || std::isnan(lv)) {
        if (opt.mode == InverseMode::Strict)
            throw DomainError("Kruzhkov inverse needs lambda * v < 1 (value crowds the asymptote 1/lambda)");
        return -std::log(opt.floor) / lambda;
    }
    if (opt.mode == InverseMode::Diagnostic && 1.0 - lv < opt.floor) return -std::log(opt.floor) / lambda;
    return -std::log1p(-lv) / lambda;
}

std::vector<double> inverse(std::span<const double> v, double lambda, const InverseOptions& opt) {
    std::vector<double> u(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) u[i] = inverse(v[i], lambda, opt);
    return u;
}

double amplification(double u, double lambda) { return std::exp(lambda * u); }

} // namespace hjres::kruzhkov
