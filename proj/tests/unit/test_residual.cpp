#include "hjres/errors.hpp"
#include "hjres/experiments.hpp"
#include "hjres/jacobian.hpp"
#include "hjres/residual.hpp"
#include "hjres/steady_solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace hjres;
namespace ex = hjres::experiments;

namespace {
std::vector<double> random_field(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> u(n);
    for (auto& v : u) v = U(rng);
    return u;
}

double norm2(const std::vector<double>& v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}
} // namespace

TEST_CASE("residual of the zero field") {
    const auto pb = ex::eikonal1d(20, 1, 1);
    const std::vector<double> u(21, 0.0);
    const auto r = residual_steady(u, pb);
    CHECK(r.M == 19);
    CHECK(r.N == 2);
    for (auto j : pb.graph->interior()) CHECK(r.values[j] == doctest::Approx(-1.0 / std::sqrt(19.0)));
    for (auto b : pb.graph->boundary()) CHECK(r.values[b] == 0.0);
    CHECK(loss(u, pb) == doctest::Approx(0.5));
}

TEST_CASE("boundary residual entry") {
    auto pb = ex::eikonal1d(20, 1, 1);
    std::vector<double> u(21, 0.0);
    u[0] = 0.3;
    CHECK(residual_steady(u, pb).values[0] == doctest::Approx(std::sqrt(5.0) * 0.3));
    CHECK(boundary_scale(2, 10, 2) == doctest::Approx(std::sqrt(5.0)));
    CHECK(interior_scale(19, 2) == doctest::Approx(1 / std::sqrt(19.0)));
}

TEST_CASE("residual vanishes at the Newton solution") {
    const auto pb = ex::eikonal1d(20, 1, 1);
    const auto sol = newton_solve(std::vector<double>(21, 0.0), pb);
    CHECK(residual_steady(sol.u, pb).norm_inf() <= 1e-12);
    CHECK(loss(sol.u, pb) <= 1e-24);
    for (double g : loss_gradient(sol.u, pb)) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("loss is invariant under node relabeling") {
    std::mt19937_64 rng(3);
    const auto pb = ex::eikonal1d(20, 1, 1);
    const auto u = random_field(21, rng);
    const auto r = residual_steady(u, pb).values;
    auto shuffled = r;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(loss_from_residual(shuffled, 2.0) == doctest::Approx(loss_from_residual(r, 2.0)).epsilon(1e-14));
}

TEST_CASE("loss gradient matches finite differences") {
    std::mt19937_64 rng(11);
    for (double q : {2.0, 3.0}) {
        auto pb = ex::eikonal1d(20, 1, 1, 10, q);
        for (int trial = 0; trial < 10; ++trial) {
            auto u = random_field(21, rng);
            const auto g = loss_gradient(u, pb);
            std::vector<double> fd(u.size());
            const double e = 1e-6;
            for (std::size_t k = 0; k < u.size(); ++k) {
                const double s = u[k];
                u[k] = s + e;
                const double lp = loss(u, pb);
                u[k] = s - e;
                const double lm = loss(u, pb);
                u[k] = s;
                fd[k] = (lp - lm) / (2 * e);
            }
            std::vector<double> diff(u.size());
            for (std::size_t k = 0; k < u.size(); ++k) diff[k] = g[k] - fd[k];
            CHECK(norm2(diff) / norm2(fd) <= 1e-6);
        }
    }
}

TEST_CASE("q = 2 gradient is J^T R") {
    std::mt19937_64 rng(5);
    const auto pb = ex::eikonal2d(6, 1, 1);
    const auto u = random_field(pb.size(), rng);
    const auto r = residual_steady(u, pb);
    const Eigen::MatrixXd J = assemble_jacobian(u, pb).to_dense();
    const Eigen::VectorXd R = Eigen::Map<const Eigen::VectorXd>(r.values.data(), static_cast<Eigen::Index>(r.values.size()));
    const Eigen::VectorXd JtR = J.transpose() * R;
    const auto g = loss_gradient(u, pb);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(JtR(static_cast<Eigen::Index>(k))).epsilon(1e-12));
}

TEST_CASE("residual weights and pairwise sum") {
    const std::vector<double> r{-2.0, 0.5, 0.0};
    const auto w = residual_weights(r, 3.0);
    CHECK(w[0] == doctest::Approx(-4.0));
    CHECK(w[1] == doctest::Approx(0.25));
    CHECK(w[2] == 0.0);
    std::vector<double> many(1000, 0.1);
    CHECK(pairwise_sum(many) == doctest::Approx(100.0).epsilon(1e-14));
}

TEST_CASE("loss parameters are validated") {
    LossParams p;
    p.q = 1.0;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    p.q = 2.0;
    p.mu_b = 0.0;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    auto pb = ex::eikonal1d(10, 1, 1);
    const std::vector<double> wrong(5, 0.0);
    CHECK_THROWS_AS(residual_steady(wrong, pb), IndexingError);
}
