#include "hjres/errors.hpp"
#include "hjres/grid_graph.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

using namespace hjres;

TEST_CASE("interval grid sizes") {
    const auto g = build_interval_grid(20);
    CHECK(g.size() == 21);
    CHECK(g.interior().size() == 19);
    CHECK(g.boundary().size() == 2);
    CHECK(g.h() == doctest::Approx(0.05));
    CHECK(g.degree() == 2);
    validate(g);

    CHECK(build_interval_grid(160).h() == doctest::Approx(0.00625));
}

TEST_CASE("smallest interval grid") {
    const auto g = build_interval_grid(2);
    REQUIRE(g.size() == 3);
    CHECK(g.point(0)[0] == 0.0);
    CHECK(g.point(1)[0] == doctest::Approx(0.5));
    CHECK(g.point(2)[0] == 1.0);
    REQUIRE(g.interior() == std::vector<std::size_t>{1});
    for (double len : g.edge_lengths(1)) CHECK(len == doctest::Approx(0.5));
    CHECK_THROWS_AS(build_interval_grid(1), InvalidGridError);
}

TEST_CASE("box grid in 2D and 3D") {
    const double lo2[] = {0, 0}, hi2[] = {1, 1};
    const auto g = build_box_grid(lo2, hi2, 0.5);
    CHECK(g.size() == 9);
    REQUIRE(g.interior().size() == 1);
    const auto c = g.interior()[0];
    CHECK(g.point(c)[0] == doctest::Approx(0.5));
    CHECK(g.point(c)[1] == doctest::Approx(0.5));
    CHECK(g.neighbors(c).size() == 4);
    // neighbor order (-e1, +e1, -e2, +e2)
    const auto nb = g.neighbors(c);
    CHECK(g.point(nb[0])[0] == doctest::Approx(0.0));
    CHECK(g.point(nb[1])[0] == doctest::Approx(1.0));
    CHECK(g.point(nb[2])[1] == doctest::Approx(0.0));
    CHECK(g.point(nb[3])[1] == doctest::Approx(1.0));

    const double lo[] = {-2, -2}, hi[] = {2, 2};
    const auto big = build_box_grid(lo, hi, 0.02);
    REQUIRE(big.lattice());
    CHECK(big.lattice()->shape == std::vector<std::size_t>{201, 201});

    const double lo3[] = {0, 0, 0}, hi3[] = {1, 1, 1};
    const auto g3 = build_box_grid(lo3, hi3, 0.25);
    CHECK(g3.interior().size() == 27);
    CHECK(g3.degree() == 6);
    validate(g3);
}

TEST_CASE("lattice index round trip") {
    const double lo[] = {0, 0, 0}, hi[] = {1, 2, 1};
    const auto g = build_box_grid(lo, hi, 0.5);
    const auto& lat = *g.lattice();
    for (std::size_t l = 0; l < lat.count(); ++l) {
        const auto m = lat.multi(l);
        CHECK(lat.linear(m) == l);
        CHECK(g.node_at_lattice(l).value() == l);
    }
}

namespace {
// Independent classification of the lattice on [-2, 2]^2.
struct Census {
    std::size_t interior = 0;
    std::size_t staircase_boundary = 0;
};

Census brute_force_annulus(double r, double R, double h) {
    const auto n = static_cast<long>(std::lround(4.0 / h));
    auto inside = [&](long i, long k) {
        if (i < 0 || k < 0 || i > n || k > n) return false;
        const double x = -2 + 4.0 * i / n, y = -2 + 4.0 * k / n;
        const double rho = std::hypot(x, y);
        return rho > r + 1e-9 && rho < R - 1e-9;
    };
    Census c;
    for (long i = 0; i <= n; ++i)
        for (long k = 0; k <= n; ++k) {
            if (inside(i, k)) {
                ++c.interior;
            } else if (inside(i - 1, k) || inside(i + 1, k) || inside(i, k - 1) || inside(i, k + 1)) {
                ++c.staircase_boundary;
            }
        }
    return c;
}
} // namespace

TEST_CASE("annulus staircase grid") {
    const double r = 0.5, R = std::sqrt(2.0);
    const auto ag = build_annulus_grid(r, R, 0.04);
    validate(ag.graph);
    const auto census = brute_force_annulus(r, R, 0.04);
    CHECK(ag.graph.interior().size() == census.interior);
    CHECK(ag.graph.boundary().size() == census.staircase_boundary);

    for (auto b : ag.graph.boundary()) {
        const auto p = ag.graph.point(b);
        const double rho = std::hypot(p[0], p[1]);
        CHECK(ag.boundary_value[b] == (rho <= r ? 0.0 : 1.0));
    }
    for (auto j : ag.graph.interior()) CHECK(std::isnan(ag.boundary_value[j]));
}

TEST_CASE("annulus at h = 0.02 tags and center node") {
    const double r = 0.5, R = std::sqrt(2.0);
    const auto ag = build_annulus_grid(r, R, 0.02);
    std::size_t zeros = 0, ones = 0;
    for (auto b : ag.graph.boundary()) (ag.boundary_value[b] == 0.0 ? zeros : ones) += 1;
    CHECK(zeros > 0);
    CHECK(ones > 0);
    CHECK(zeros + ones == ag.graph.boundary().size());

    // (0,0) only belongs to the graph when it touches the annulus; a small inner radius
    // makes (h, 0) interior.
    const auto small = build_annulus_grid(0.15, R, 0.2);
    const auto& lat = *small.graph.lattice();
    const std::size_t mid[] = {10, 10};
    const auto node = small.graph.node_at_lattice(lat.linear(mid));
    REQUIRE(node);
    CHECK(small.graph.point(*node)[0] == doctest::Approx(0.0).scale(1.0));
    CHECK_FALSE(small.graph.is_interior(*node));
    CHECK(small.boundary_value[*node] == 0.0);
}

TEST_CASE("annulus cut-cell grid") {
    const double r = 0.5, R = std::sqrt(2.0);
    const auto ag = build_annulus_grid(r, R, 0.04, AnnulusBoundary::CutCell);
    validate(ag.graph);
    CHECK(ag.graph.interior().size() == brute_force_annulus(r, R, 0.04).interior);
    for (auto b : ag.graph.boundary()) {
        const auto p = ag.graph.point(b);
        const double rho = std::hypot(p[0], p[1]);
        // crossings closer than 1e-3 h to the interior node are pushed out to that distance
        const double target = ag.boundary_value[b] == 0.0 ? r : R;
        CHECK(std::abs(rho - target) <= 1e-3 * 0.04 + 1e-12);
    }
    for (auto j : ag.graph.interior())
        for (double len : ag.graph.edge_lengths(j)) {
            CHECK(len > 0.0);
            CHECK(len <= 0.04 + 1e-12);
        }
}

TEST_CASE("collocation stencil offsets") {
    const double p1[] = {0.3};
    const auto s1 = collocation_stencil(p1, 0.1, 1);
    REQUIRE(s1.offsets.size() == 2);
    CHECK(s1.offsets[0][0] == doctest::Approx(-0.1));
    CHECK(s1.offsets[1][0] == doctest::Approx(0.1));

    const double p2[] = {0, 0};
    CHECK(collocation_stencil(p2, 0.2, 2).offsets.size() == 4);

    const double p5[] = {1, 1, 1, 1, 1};
    const auto s5 = collocation_stencil(p5, 0.3, 5);
    CHECK(s5.offsets.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
        double dist = 0;
        for (std::size_t i = 0; i < 5; ++i) dist += std::abs(s5.offsets[k][i]);
        CHECK(dist == doctest::Approx(0.3));
    }
}

TEST_CASE("graph gradient") {
    const auto g = build_interval_grid(10);
    std::vector<double> u(11, 0.0);
    u[1] = 0.1;
    u[2] = 0.2;
    const auto p = graph_gradient(u, 1, g);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(-1.0));

    std::vector<double> c(11, 3.7);
    for (auto j : g.interior())
        for (double v : graph_gradient(c, j, g)) CHECK(v == 0.0);

    std::vector<double> x(11);
    for (std::size_t j = 0; j < 11; ++j) x[j] = g.point(j)[0];
    for (auto j : g.interior()) {
        const auto q = graph_gradient(x, j, g);
        CHECK(q[0] == doctest::Approx(1.0));
        CHECK(q[1] == doctest::Approx(-1.0));
    }

    CHECK_THROWS_AS(graph_gradient(u, 0, g), NotInteriorError);
    std::vector<double> short_u(5, 0.0);
    CHECK_THROWS_AS(graph_gradient(short_u, 1, g), IndexingError);
}

TEST_CASE("validate rejects broken graphs") {
    GridGraph::Parts parts;
    parts.dim = 1;
    parts.coords = {0.0, 0.5, 1.0};
    parts.kinds = {NodeKind::Boundary, NodeKind::Interior, NodeKind::Boundary};
    parts.neighbor_offsets = {0, 0, 1, 1};  // interior node with one neighbor, not symmetric
    parts.neighbors = {0};
    parts.edge_lengths = {0.5};
    parts.h = 0.5;
    CHECK_THROWS_AS(validate(GridGraph(parts)), InvalidGridError);
}

TEST_CASE("field output format") {
    const auto g = build_interval_grid(2);
    std::vector<double> u{0.0, 0.25, 0.0};
    std::ostringstream os;
    write_field(os, g, u);
    std::istringstream is(os.str());
    std::size_t idx;
    double x, v;
    char tag;
    std::vector<char> tags;
    while (is >> idx >> x >> tag >> v) tags.push_back(tag);
    CHECK(tags == std::vector<char>{'B', 'I', 'B'});
}
