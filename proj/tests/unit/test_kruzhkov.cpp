#include "hjres/errors.hpp"
#include "hjres/kruzhkov.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

namespace kz = hjres::kruzhkov;

TEST_CASE("forward transform") {
    CHECK(kz::forward(0.0, 1.0) == 0.0);
    CHECK(kz::forward(std::log(2.0), 1.0) == doctest::Approx(0.5));
    const double v = kz::forward(1.0, 1e-6);
    CHECK(std::abs(v - 1.0) <= 1e-6 / 2 + 1e-15);
    // increasing and bounded by 1/lambda
    double prev = -1e300;
    for (double u = -5; u <= 30; u += 0.25) {
        const double w = kz::forward(u, 0.5);
        CHECK(w > prev);
        CHECK(w < 2.0);
        prev = w;
    }
    const std::vector<double> us{0.0, std::log(2.0)};
    const auto vs = kz::forward(us, 1.0);
    CHECK(vs[1] == doctest::Approx(0.5));
}

TEST_CASE("inverse transform") {
    CHECK(kz::inverse(0.0, 1.0) == 0.0);
    CHECK(kz::inverse(0.5, 1.0) == doctest::Approx(std::log(2.0)));
    for (double lambda : {0.1, 1.0})
        for (double u = -5; u <= 5; u += 0.125)
            CHECK(std::abs(kz::inverse(kz::forward(u, lambda), lambda) - u) <= 1e-12);
    CHECK_THROWS_AS(kz::inverse(1.0, 1.0), hjres::DomainError);
    CHECK_THROWS_AS(kz::inverse(20.0, 0.1), hjres::DomainError);
    const kz::InverseOptions diag{kz::InverseMode::Diagnostic, 1e-30};
    CHECK(kz::inverse(1.0, 1.0, diag) == doctest::Approx(-std::log(1e-30)));
}

TEST_CASE("error amplification") {
    CHECK(kz::amplification(0.0, 3.0) == 1.0);
    CHECK(kz::amplification(10.0, 0.1) == doctest::Approx(std::exp(1.0)));
    const double lambda = 0.7, u = 2.0, eps = 1e-6;
    const double v = kz::forward(u, lambda);
    const double slope = (kz::inverse(v + eps, lambda) - kz::inverse(v, lambda)) / eps;
    CHECK(slope == doctest::Approx(kz::amplification(u, lambda)).epsilon(1e-4));
}
