#include "hjres/errors.hpp"
#include "hjres/hamiltonians.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <vector>

using namespace hjres;

TEST_CASE("Lax-Friedrichs 1D pointwise") {
    CHECK(eval_lax_friedrichs_1d(0, 0, 0, 0.3, 1, 1, 1) == doctest::Approx(-1.0));
    const double h = 0.05;
    CHECK(eval_lax_friedrichs_1d(h, 0, 2 * h, h, 1, 1, 1) == doctest::Approx(h));
    CHECK(eval_lax_friedrichs_1d(0.05, 0, 0, 0.05, 1, 1, 1) == doctest::Approx(0.05));
}

TEST_CASE("Lax-Friedrichs on graph stencils") {
    const EikonalBase base(0.0, constant_source(1.0));
    const double x[] = {0.3, 0.4};
    const double flat[] = {2.0, 2.0, 2.0, 2.0};
    CHECK(eval_lax_friedrichs_graph(x, 2.0, flat, 0.1, 1.0, base) == doctest::Approx(-1.0));

    const double h = 0.1;
    const double lin[] = {x[0] - h, x[0] + h, x[0], x[0]};  // u = x_1
    CHECK(eval_lax_friedrichs_graph(x, x[0], lin, h, 1.0, base) == doctest::Approx(0.0));

    const double delta = 0.03, alpha = 0.7;
    const double zeros[] = {0, 0, 0, 0};
    const double v = base.value(x, delta, std::vector<double>{0.0, 0.0});
    CHECK(eval_lax_friedrichs_graph(x, delta, zeros, h, alpha, base) ==
          doctest::Approx(v + 4 * alpha * delta / (2 * h)));

    const double odd[] = {1, 2, 3};
    CHECK_THROWS_AS(eval_lax_friedrichs_graph(x, 0.0, odd, h, 1.0, base), IncompleteStencilError);
}

TEST_CASE("upwind eikonal pointwise") {
    const double len[] = {0.1, 0.1};
    const double above[] = {0.5, 0.7};
    CHECK(eval_upwind_eikonal(0.2, above, len, 1.3) == doctest::Approx(-1.3));
    const double nb[] = {0.0, 0.2};
    CHECK(eval_upwind_eikonal(0.1, nb, len, 1.0) == doctest::Approx(0.0));
    const double zero[] = {0.0, 0.0};
    CHECK(eval_upwind_eikonal(0.2, zero, len, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("Godunov ext over intervals") {
    auto sq = [](double p) { return p * p; };
    CHECK(eval_godunov_ext_1d(sq, -1, 2) == doctest::Approx(0.0));
    CHECK(eval_godunov_ext_1d(sq, 0.7, 0.7) == doctest::Approx(0.49));
    CHECK(eval_godunov_ext_1d(sq, 2, -1) == doctest::Approx(4.0));
    CHECK(godunov_ext_square(-1, 2) == doctest::Approx(0.0));
    CHECK(godunov_ext_square(2, -1) == doctest::Approx(4.0));
    CHECK(godunov_ext_abs(0.5, 3.0) == doctest::Approx(0.5));
    CHECK(godunov_ext_abs(3.0, -0.5) == doctest::Approx(3.0));

    // interior minimum of a non-convex function found by refinement
    auto bumpy = [](double p) { return std::cos(3 * p) + 0.1 * p; };
    double brute = 1e300;
    for (int i = 0; i <= 200000; ++i) brute = std::min(brute, bumpy(-2.0 + 4.0 * i / 200000));
    CHECK(eval_godunov_ext_1d(bumpy, -2, 2) == doctest::Approx(brute).epsilon(1e-8));
}

TEST_CASE("Isaacs pointwise") {
    IsaacsParams prm;
    const double c[] = {0.3, 0.3, 0.3, 0.3};
    CHECK(eval_isaacs(0.3, c, 0.8, 0.2, prm, 0.05) == doctest::Approx(-1.0));

    IsaacsParams bare = prm;
    bare.sigma_x = bare.sigma_y = bare.kappa = bare.vs = bare.a = 0.0;
    const double h = 0.05, x = 0.8, y = 0.3;
    const double lin[] = {x - h, x + h, x, x};
    CHECK(eval_isaacs(x, lin, x, y, bare, h) == doctest::Approx(-2.0));

    CHECK(isaacs_wind(prm.R, 0.0, prm) == doctest::Approx(1.0));
    CHECK(isaacs_wind(0.0, prm.r, prm) == doctest::Approx(1.0));
    const double mid = std::sqrt((prm.r * prm.r + prm.R * prm.R) / 2);
    CHECK(isaacs_wind(mid, 0.0, prm) == doctest::Approx(1.0 - prm.a));
}

TEST_CASE("central Isaacs stencil spacing limit") {
    IsaacsParams prm;
    const double lim = IsaacsHamiltonian::central_spacing_limit(prm);
    CHECK(lim == doctest::Approx(std::min(0.25 / 1.8, 0.04 / 0.6)));
    CHECK_NOTHROW(IsaacsHamiltonian(prm, 0.02, IsaacsStencil::Central));
    CHECK_THROWS_AS(IsaacsHamiltonian(prm, 0.1, IsaacsStencil::Central), PreconditionError);

    // monotone below the limit
    const double lo[] = {-2, -2}, hi[] = {2, 2};
    const auto g = build_box_grid(lo, hi, 0.04);
    const IsaacsHamiltonian H(prm, 0.04, IsaacsStencil::Central);
    CHECK(check_hypotheses(H, g, 2000, 1e-7).h2_ok);
}

namespace {
void check_derivatives(const Hamiltonian& H, std::size_t K, std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(dim), p(K), dp(K);
        for (auto& v : x) v = 0.6 + 0.3 * std::abs(U(rng));
        for (auto& v : p) v = 2.0 * U(rng);
        const double u = U(rng);
        const NodeContext c{kNoNode, x};
        const double du = H.derivatives(c, u, p, dp);
        const double e = 1e-6;
        CHECK(du == doctest::Approx((H.value(c, u + e, p) - H.value(c, u - e, p)) / (2 * e)).epsilon(1e-5));
        for (std::size_t k = 0; k < K; ++k) {
            auto pp = p, pm = p;
            pp[k] += e;
            pm[k] -= e;
            CHECK(dp[k] == doctest::Approx((H.value(c, u, pp) - H.value(c, u, pm)) / (2 * e)).epsilon(1e-5));
        }
    }
}
} // namespace

TEST_CASE("analytic derivatives match finite differences") {
    std::mt19937_64 rng(7);
    check_derivatives(*make_lax_friedrichs_eikonal(1.0, 0.5), 2, 1, rng);
    check_derivatives(*make_lax_friedrichs_eikonal(1.0, 0.5), 4, 2, rng);
    check_derivatives(UpwindEikonalHamiltonian(0.3, constant_source(1.0)), 2, 1, rng);
    check_derivatives(IsaacsHamiltonian(IsaacsParams{}, 0.04), 4, 2, rng);
    check_derivatives(IsaacsHamiltonian(IsaacsParams{}, 0.04, IsaacsStencil::Central), 4, 2, rng);
}

TEST_CASE("hypothesis checks") {
    const auto g = build_interval_grid(20);
    const auto good = check_hypotheses(*make_lax_friedrichs_eikonal(1.0, 1.0), g, 2000, 1e-6);
    CHECK(good.h2_ok);
    CHECK(good.h3_margin >= 1.0 - 1e-7);

    const auto bad = check_hypotheses(*make_lax_friedrichs_eikonal(0.0, 1.0), g, 2000, 1e-6);
    CHECK_FALSE(bad.h2_ok);
    CHECK(bad.worst_h2 < 0.0);

    const auto up = check_hypotheses(UpwindEikonalHamiltonian(0.0, constant_source(1.0)), g, 2000, 1e-6);
    CHECK(up.h2_ok);
    CHECK(std::abs(up.h3_margin) < 1e-9);

    // monotone Isaacs stencil passes at any spacing
    const double lo[] = {-2, -2}, hi[] = {2, 2};
    const auto g2 = build_box_grid(lo, hi, 0.2);
    CHECK(check_hypotheses(IsaacsHamiltonian(IsaacsParams{}, 0.2), g2, 2000, 1e-7).h2_ok);
}
