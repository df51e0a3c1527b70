#include "hjres/errors.hpp"
#include "hjres/hamiltonians.hpp"
#include "hjres/time_dependent.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <memory>
#include <random>
#include <vector>

using namespace hjres;

namespace {

// F = c0 + c1 u, no gradient dependence.
class AffineF final : public Hamiltonian {
public:
    AffineF(double c0, double c1) : Hamiltonian(HamiltonianInfo{"affine", 0, 0, {}}), c0_(c0), c1_(c1) {}
    double value(const NodeContext&, double u, std::span<const double>) const override { return c0_ + c1_ * u; }
    double derivatives(const NodeContext&, double, std::span<const double>, std::span<double> dp) const override {
        std::fill(dp.begin(), dp.end(), 0.0);
        return c1_;
    }

private:
    double c0_, c1_;
};

SpaceTimeProblem interval_problem(std::size_t n, std::size_t steps, double dt, std::shared_ptr<const Hamiltonian> F,
                                  double boundary = 0.0, double initial = 0.0) {
    SpaceTimeProblem pb;
    pb.graph = std::make_shared<GridGraph>(build_interval_grid(n));
    pb.F = std::move(F);
    pb.initial.assign(n + 1, initial);
    pb.boundary = SpaceTimeField(n + 1, steps, dt, boundary);
    return pb;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

TEST_CASE("implicit residual toy values") {
    auto pb = interval_problem(2, 1, 1.0, std::make_shared<AffineF>(0, 0));
    SpaceTimeField U(3, 1, 1.0);
    U.at(1, 1) = 1.0;
    const auto R = residual_spacetime_implicit(U, pb);
    CHECK(R.at(1, 1) == doctest::Approx(1.0));
    CHECK(R.at(0, 1) == 0.0);

    // constant in time and matching all data
    auto pc = interval_problem(4, 3, 0.2, std::make_shared<AffineF>(0, 0), 0.7, 0.7);
    SpaceTimeField C(5, 3, 0.2, 0.7);
    CHECK(max_abs(residual_spacetime_implicit(C, pc).flat()) == 0.0);
    CHECK(loss_spacetime(C, pc) == 0.0);

    SpaceTimeField wrong(5, 2, 0.2);
    CHECK_THROWS_AS(residual_spacetime_implicit(wrong, pc), IndexingError);
}

TEST_CASE("explicit residual toy values") {
    auto pb = interval_problem(2, 1, 0.5, std::make_shared<AffineF>(1, 0));
    SpaceTimeField U(3, 1, 0.5);
    U.at(1, 1) = -0.5;
    CHECK(residual_spacetime_explicit(U, pb).at(1, 1) == doctest::Approx(0.0));
    U.at(1, 1) = 0.0;
    const double entry = residual_spacetime_explicit(U, pb).at(1, 1);
    CHECK(entry == doctest::Approx(1.0));

    // forward substitution solves the explicit scheme exactly
    auto pe = interval_problem(20, 10, 0.01, make_lax_friedrichs_eikonal(1.0, 0.3), 0.0, 0.0);
    for (std::size_t j = 0; j <= 20; ++j) pe.initial[j] = std::sin(M_PI * j / 20.0);
    const auto X = march_explicit(pe);
    const auto Rx = residual_spacetime_explicit(X, pe);
    for (std::size_t n = 0; n <= 10; ++n)
        for (auto j : pe.graph->interior()) CHECK(std::abs(Rx.at(n, j)) <= 1e-13);
}

TEST_CASE("space-time loss and its gradient") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> Ud(-1, 1);
    for (auto scheme : {TimeScheme::Implicit, TimeScheme::Explicit}) {
        auto pb = interval_problem(10, 4, 0.05, make_lax_friedrichs_eikonal(1.0, 0.5));
        SpaceTimeField U(11, 4, 0.05);
        for (auto& v : U.flat()) v = Ud(rng);
        const auto R = residual_spacetime(U, pb, scheme).flat();
        double half_sq = 0;
        for (double r : R) half_sq += 0.5 * r * r;
        CHECK(loss_spacetime(U, pb, scheme) == doctest::Approx(half_sq).epsilon(1e-13));

        const auto G = loss_spacetime_gradient(U, pb, scheme).flat();
        std::vector<double> fd(G.size());
        const double e = 1e-6;
        for (std::size_t k = 0; k < G.size(); ++k) {
            const double s = U.flat()[k];
            U.flat()[k] = s + e;
            const double lp = loss_spacetime(U, pb, scheme);
            U.flat()[k] = s - e;
            const double lm = loss_spacetime(U, pb, scheme);
            U.flat()[k] = s;
            fd[k] = (lp - lm) / (2 * e);
        }
        double num = 0, den = 0;
        for (std::size_t k = 0; k < G.size(); ++k) {
            num += (G[k] - fd[k]) * (G[k] - fd[k]);
            den += fd[k] * fd[k];
        }
        CHECK(std::sqrt(num / den) <= 1e-6);
    }
}

TEST_CASE("F3 time-step check") {
    const auto g = build_interval_grid(10);
    const auto free = check_f3(*make_lax_friedrichs_eikonal(1.0, 0.0), g, 100.0, 500);
    CHECK(free.ok);
    CHECK(free.worst_lambda == doctest::Approx(0.0).scale(1.0));

    const AffineF neg(0, -2);
    CHECK_FALSE(check_f3(neg, g, 1.0, 50).ok);
    const auto small = check_f3(neg, g, 0.4, 50);
    CHECK(small.ok);
    CHECK(small.worst_lambda == doctest::Approx(0.8));
}

TEST_CASE("implicit marching") {
    // zero data with F(0) = 0 stays at zero
    auto pz = interval_problem(20, 5, 0.05, make_lax_friedrichs_eikonal(1.0, 0.0, constant_source(0.0)));
    const auto Z = march_implicit(pz);
    CHECK(max_abs(Z.flat()) <= 1e-12);

    // marched fields solve the implicit scheme, for steps far beyond the CFL limit
    for (double ratio : {1.0, 5.0, 10.0}) {
        const std::size_t n = 40;
        const double h = 1.0 / n;
        auto pb = interval_problem(n, 10, ratio * h, make_lax_friedrichs_eikonal(1.0, 0.0));
        const auto U = march_implicit(pb);
        CHECK(max_abs(residual_spacetime_implicit(U, pb).flat()) <= 1e-10);
        for (double v : U.flat()) {
            CHECK(v >= -1e-12);
            CHECK(v <= 0.5 + 1e-12);
        }

        // a second march from shifted boundary data stays within the stability bound
        const double delta = 0.01;
        auto pv = interval_problem(n, 10, ratio * h, make_lax_friedrichs_eikonal(1.0, 0.0), delta);
        const auto V = march_implicit(pv);
        const auto Rinf = slab_residual_inf(U, pb);
        const std::vector<double> bdiff(Rinf.size(), delta);
        const auto bound = cumulative_time_bound(delta, Rinf, bdiff, pb.dt());
        for (std::size_t s = 0; s <= 10; ++s) {
            double d = 0;
            for (std::size_t j = 0; j <= n; ++j) d = std::max(d, std::abs(U.at(s, j) - V.at(s, j)));
            CHECK(d <= bound[s] + 1e-10);
        }
    }
}

TEST_CASE("explicit residual recurrence") {
    auto pb = interval_problem(20, 8, 0.01, make_lax_friedrichs_eikonal(1.0, 0.5));
    for (std::size_t j = 0; j <= 20; ++j) pb.initial[j] = 0.1 * std::sin(M_PI * j / 20.0);
    const auto X = march_explicit(pb);
    const auto W = explicit_residual_recurrence(X, pb);
    CHECK(max_abs(W.flat()) == 0.0);
    const auto R = residual_spacetime_explicit(X, pb);
    const auto direct = residual_weights(R.flat(), pb.loss.q);
    for (std::size_t n = 0; n <= 8; ++n)
        for (auto j : pb.graph->interior()) CHECK(std::abs(W.at(n, j) - direct[n * 21 + j]) <= 1e-12);

    // one interior node and F = 0: the weights are carried back unchanged
    auto single = interval_problem(2, 5, 0.1, std::make_shared<AffineF>(0, 0));
    SpaceTimeField S(3, 5, 0.1);
    const std::vector<double> wN{0.0, 0.3, 0.0};
    const auto Ws = explicit_residual_recurrence(S, single, wN);
    for (std::size_t n = 0; n <= 5; ++n) CHECK(Ws.at(n, 1) == doctest::Approx(0.3));
}

TEST_CASE("time stability bound") {
    CHECK(stability_time_bound(0, 0, 0, 0.1) == 0.0);
    const std::vector<double> R(101, 1e-3), b(101, 0.0);
    CHECK(cumulative_time_bound(0, R, b, 0.1).back() == doctest::Approx(1e-2));
    CHECK(stability_time_bound(0.2, 1e-3, 0.05, 0.1) == doctest::Approx(0.25));
}

TEST_CASE("obstacle pieces") {
    const double x[] = {0.3, 0.4};
    CHECK(obstacle_psi(x) == doctest::Approx(0.0));
    const double a0[] = {1, 1};
    const auto a = unit_drift(a0);
    CHECK(a[0] == doctest::Approx(1 / std::sqrt(2.0)));
    const double o[] = {0.0, 0.0};
    CHECK(obstacle_initial(o, a0) == doctest::Approx(std::max(std::sqrt(2.0) - 1, -0.5)));

    // one-sided falls back to first order when the second neighbor is missing
    const double minus[] = {0.0}, plus[] = {0.0}, nan2[] = {NAN}, m2[] = {-0.1};
    const double one[] = {1.0};
    CHECK(obstacle_transport(ObstacleScheme::OneSided, one, 0.1, 0.1, minus, plus, nan2) == doctest::Approx(1.0));
    CHECK(obstacle_transport(ObstacleScheme::OneSided, one, 0.1, 0.1, minus, plus, m2) ==
          doctest::Approx((0.3 - 0.0 - 0.1) / 0.2));
    CHECK(obstacle_transport(ObstacleScheme::LaxFriedrichs, one, 0.1, 0.0, minus, plus, nan2) == 0.0);
}

TEST_CASE("obstacle residual and complementarity") {
    const double lo[] = {-2, -2}, hi[] = {2, 2};
    auto g = std::make_shared<GridGraph>(build_box_grid(lo, hi, 0.2));
    const double a0[] = {1, 1};
    const auto a = unit_drift(a0);
    std::vector<double> psi(g->size()), g0(g->size());
    for (std::size_t j = 0; j < g->size(); ++j) {
        psi[j] = obstacle_psi(g->point(j));
        g0[j] = obstacle_initial(g->point(j), a0);
    }

    SpaceTimeField P(g->size(), 2, 0.1);
    for (std::size_t n = 0; n <= 2; ++n) std::copy(psi.begin(), psi.end(), P.slab(n).begin());
    std::copy(g0.begin(), g0.end(), P.slab(0).begin());
    const auto R = obstacle_residual(P, *g, a, psi, g0, ObstacleScheme::OneSided);
    for (auto j : g->interior()) CHECK(R.at(0, j) == 0.0);
    for (std::size_t n = 2; n <= 2; ++n)
        for (auto j : g->interior()) CHECK(R.at(n, j) == doctest::Approx(0.0));

    SpaceTimeProblem pb;
    pb.graph = g;
    pb.F = std::make_shared<ObstacleLaxFriedrichs>(a);
    pb.initial = g0;
    pb.boundary = SpaceTimeField(g->size(), 4, 0.1);
    for (std::size_t n = 0; n <= 4; ++n) std::copy(g0.begin(), g0.end(), pb.boundary.slab(n).begin());
    const auto U = march_implicit(pb, NewtonOptions{1e-11, 100, 0x1p-30}, psi);
    const auto RU = obstacle_residual(U, *g, a, psi, g0, ObstacleScheme::LaxFriedrichs);
    for (std::size_t n = 0; n <= 4; ++n)
        for (auto j : g->interior()) {
            CHECK(std::abs(RU.at(n, j)) <= 1e-9);
            CHECK(U.at(n, j) >= psi[j] - 1e-9);
        }
}

TEST_CASE("space-time field dump") {
    const auto dir = std::filesystem::temp_directory_path() / "hjres_fields_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto g = build_interval_grid(4);
    SpaceTimeField U(5, 2, 0.1, 1.0);
    write_spacetime_fields(dir.string(), g, U);
    for (int n = 0; n <= 2; ++n) CHECK(std::filesystem::exists(dir / ("field_t" + std::to_string(n) + ".txt")));
    std::filesystem::remove_all(dir);
}
