#include "hjres/experiments.hpp"

#include "hjres/errors.hpp"
#include "hjres/kruzhkov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hjres::experiments {

SteadyProblem eikonal1d(std::size_t n, double lambda, double alpha, double mu_b, double q) {
    SteadyProblem pb;
    pb.graph = std::make_shared<GridGraph>(build_interval_grid(n));
    pb.hamiltonian = make_lax_friedrichs_eikonal(alpha, lambda);
    pb.boundary_values.assign(pb.graph->size(), 0.0);
    pb.loss.mu_b = mu_b;
    pb.loss.q = q;
    return pb;
}

SteadyProblem upwind_eikonal1d(std::size_t n, double lambda, double mu_b) {
    SteadyProblem pb;
    pb.graph = std::make_shared<GridGraph>(build_interval_grid(n));
    pb.hamiltonian = std::make_shared<UpwindEikonalHamiltonian>(lambda, constant_source(1.0));
    pb.boundary_values.assign(pb.graph->size(), 0.0);
    pb.loss.mu_b = mu_b;
    return pb;
}

SteadyProblem eikonal2d(std::size_t n, double lambda, double alpha, double mu_b) {
    if (n < 2) throw InvalidGridError("2D grid needs n >= 2");
    const std::vector<double> lo{0.0, 0.0}, hi{1.0, 1.0};
    SteadyProblem pb;
    pb.graph = std::make_shared<GridGraph>(build_box_grid(lo, hi, 1.0 / static_cast<double>(n)));
    pb.hamiltonian = make_lax_friedrichs_eikonal(alpha, lambda);
    pb.boundary_values.assign(pb.graph->size(), 0.0);
    pb.loss.mu_b = mu_b;
    return pb;
}

double eikonal1d_error(const GridGraph& g, std::span<const double> u) {
    double e = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double x = g.point(j)[0];
        e = std::max(e, std::abs(u[j] - std::min(x, 1.0 - x)));
    }
    return e;
}

double nn_eikonal_error(const Mlp& net, double lambda, std::size_t samples) {
    if (samples < 2) throw PreconditionError("need at least two error samples");
    const kruzhkov::InverseOptions diag{kruzhkov::InverseMode::Diagnostic};
    Eigen::MatrixXd X(1, static_cast<Eigen::Index>(samples));
    for (std::size_t i = 0; i < samples; ++i) X(0, static_cast<Eigen::Index>(i)) = static_cast<double>(i) / static_cast<double>(samples - 1);
    const Eigen::RowVectorXd y = net.forward_batch(X);
    double e = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double x = X(0, static_cast<Eigen::Index>(i));
        const double v = kruzhkov::inverse(y(static_cast<Eigen::Index>(i)), lambda, diag);
        e = std::max(e, std::abs(v - std::min(x, 1.0 - x)));
    }
    return e;
}

namespace {

std::mt19937_64 training_rng(unsigned long long seed) {
    // Separate stream from the initialization.
    return std::mt19937_64(seed ^ 0x9e3779b97f4a7c15ULL);
}

} // namespace

NnRun nn_eikonal_fixed(const NnEikonalConfig& cfg, double h, unsigned long long seed) {
    auto net = lipschitz_init(cfg.layers, cfg.lipschitz, seed);
    auto rng = training_rng(seed);
    auto pb = make_eikonal1d_problem(h, cfg.lambda, cfg.alpha, cfg.n0, cfg.mu_b);
    auto r = sgd_min_res(net, *pb, cfg.train, rng);
    return {seed, nn_eikonal_error(net, cfg.lambda, cfg.error_samples), r.iters, r.converged, std::move(r.log)};
}

NnRun nn_eikonal_schedule(const NnEikonalConfig& cfg, unsigned long long seed) {
    auto net = lipschitz_init(cfg.layers, cfg.lipschitz, seed);
    auto rng = training_rng(seed);
    const auto n0 = cfg.n0;
    const auto mu_b = cfg.mu_b;
    auto r = multilevel_train(
        net, cfg.schedule,
        [n0, mu_b](const ScheduleStage& s) { return make_eikonal1d_problem(s.h, s.lambda, s.alpha, n0, mu_b); },
        cfg.train, rng);
    NnRun run{seed, nn_eikonal_error(net, cfg.lambda, cfg.error_samples), r.total_iters, r.stages.back().converged, {}};
    std::size_t offset = 0;
    for (const auto& st : r.stages) {
        for (auto e : st.log) {
            e.iter += offset;
            run.log.push_back(e);
        }
        offset += st.iters;
    }
    return run;
}

// ---------------------------------------------------------------------------

std::vector<std::array<double, 2>> zero_crossings(const std::function<double(double, double)>& f, double w, double h) {
    const auto n = static_cast<std::size_t>(std::floor(2.0 * w / h + 1e-9)) + 1;
    std::vector<double> v(n * n);
    auto coord = [w, h](std::size_t i) { return -w + h * static_cast<double>(i); };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) v[i * n + j] = f(coord(i), coord(j));
    std::vector<std::array<double, 2>> pts;
    auto edge = [&](std::size_t i0, std::size_t j0, std::size_t i1, std::size_t j1) {
        const double a = v[i0 * n + j0], b = v[i1 * n + j1];
        if (a == 0.0) {
            pts.push_back({coord(i0), coord(j0)});
            return;
        }
        if ((a < 0.0) == (b < 0.0) || b == 0.0) return;
        const double t = a / (a - b);
        pts.push_back({coord(i0) + t * (coord(i1) - coord(i0)), coord(j0) + t * (coord(j1) - coord(j0))});
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i + 1 < n) edge(i, j, i + 1, j);
            if (j + 1 < n) edge(i, j, i, j + 1);
        }
    }
    return pts;
}

std::vector<std::array<double, 2>> initial_contour(std::span<const double> a0, std::size_t samples_per_arc) {
    if (a0.size() != 2) throw PreconditionError("initial contour is computed in 2D");
    std::vector<std::array<double, 2>> pts;
    for (std::size_t k = 0; k < samples_per_arc; ++k) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples_per_arc);
        // Unit circle around -a0, kept where it lies inside the obstacle ball.
        const double x1 = -a0[0] + std::cos(th), y1 = -a0[1] + std::sin(th);
        if (x1 * x1 + y1 * y1 <= 0.25) pts.push_back({x1, y1});
        // Obstacle circle, kept where it lies inside the unit ball around -a0.
        const double x2 = 0.5 * std::cos(th), y2 = 0.5 * std::sin(th);
        if ((x2 + a0[0]) * (x2 + a0[0]) + (y2 + a0[1]) * (y2 + a0[1]) <= 1.0) pts.push_back({x2, y2});
    }
    return pts;
}

double hausdorff(std::span<const std::array<double, 2>> A, std::span<const std::array<double, 2>> B) {
    if (A.empty() || B.empty()) return std::numeric_limits<double>::infinity();
    auto directed = [](std::span<const std::array<double, 2>> P, std::span<const std::array<double, 2>> Q) {
        double worst = 0.0;
        for (const auto& p : P) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : Q) best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(A, B), directed(B, A));
}

ObstacleReport run_obstacle(const ObstacleConfig& cfg, Mlp& net) {
    if (cfg.phases.empty()) throw PreconditionError("obstacle run needs at least one phase");
    std::vector<std::size_t> layers{cfg.dim + 1};
    layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
    layers.push_back(1);
    net = lipschitz_init(layers, cfg.lipschitz, cfg.seed);
    auto rng = training_rng(cfg.seed);
    const std::vector<double> a0(cfg.dim, 1.0);

    ObstacleReport rep;
    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.max_iters = cfg.iters_per_stage;
    tc.stop_tol = 0.0;  // fixed budget per stage
    tc.log_every = cfg.log_every;
    for (const auto& ph : cfg.phases) {
        if (ph.h.size() != ph.dt.size() || ph.h.empty()) throw PreconditionError("phase needs matching h and dt lists");
        // dt rides in the lambda slot so the schedule check covers it.
        std::vector<ScheduleStage> stages;
        for (std::size_t m = 0; m < ph.h.size(); ++m) stages.push_back({ph.h[m], ph.dt[m], 0.0, {}, {}});
        const auto scheme = ph.scheme;
        auto r = multilevel_train(
            net, stages,
            [&cfg, scheme, &a0](const ScheduleStage& s) {
                ObstacleProblemSpec sp;
                sp.dim = cfg.dim;
                sp.scheme = scheme;
                sp.h = s.h;
                sp.dt = s.lambda;
                sp.t_max = cfg.t_max;
                sp.half_width = cfg.half_width;
                sp.n_interior = cfg.n_interior;
                sp.n_initial = cfg.n_initial;
                sp.initial_weight = cfg.initial_weight;
                sp.a0 = a0;
                return std::make_unique<ObstacleProblem>(sp);
            },
            tc, rng);
        rep.iters += r.total_iters;
        for (auto& s : r.stages) rep.stages.push_back(std::move(s));
    }

    // Central slice: remaining coordinates are zero.
    std::vector<double> in(cfg.dim + 1, 0.0);
    auto at = [&](double t, double x, double y) {
        in[0] = t;
        in[1] = x;
        in[2] = y;
        return net.forward(in);
    };
    const double w = cfg.eval_half_width;
    const auto n = static_cast<std::size_t>(std::floor(2.0 * w / cfg.h_eval + 1e-9)) + 1;
    std::vector<double> x(cfg.dim, 0.0);
    for (double t : {0.0, 1.0, 2.0}) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                x[0] = -w + cfg.h_eval * static_cast<double>(i);
                x[1] = -w + cfg.h_eval * static_cast<double>(j);
                rep.max_violation = std::max(rep.max_violation, obstacle_psi(x) - at(t, x[0], x[1]));
            }
        }
    }
    if (cfg.dim != 2) {
        // Off the plane of a0 the initial zero set does not meet the central slice.
        rep.hausdorff_t0 = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }
    const auto model = zero_crossings([&](double px, double py) { return at(0.0, px, py); }, w, cfg.h_eval);
    const auto exact = initial_contour(a0, 4000);
    rep.hausdorff_t0 = hausdorff(model, exact);
    return rep;
}

// ---------------------------------------------------------------------------

IsaacsSolve isaacs_reference(std::size_t n, const IsaacsParams& prm, const IsaacsSetup& setup,
                             const NewtonOptions& opt) {
    if (n < 8) throw InvalidGridError("Isaacs lattice needs n >= 8");
    const double h = 4.0 / static_cast<double>(n);
    const double shift = setup.shift;
    IsaacsSolve out{build_annulus_grid(prm.r, prm.R, h, setup.boundary), {}, {}};
    SteadyProblem pb;
    pb.graph = std::make_shared<GridGraph>(out.grid.graph);
    pb.hamiltonian = std::make_shared<IsaacsHamiltonian>(prm, h, setup.stencil, pb.graph);
    pb.boundary_values.assign(pb.graph->size(), 0.0);
    for (auto j : pb.graph->boundary()) pb.boundary_values[j] = out.grid.boundary_value[j] + shift;
    std::vector<double> u0(pb.graph->size(), 0.0);
    for (auto j : pb.graph->boundary()) u0[j] = pb.boundary_values[j];
    out.info = newton_solve(std::move(u0), pb, opt);
    out.u = out.info.u;
    return out;
}

double isaacs_shared_diff(const IsaacsSolve& coarse, const IsaacsSolve& fine) {
    const auto& gc = coarse.grid.graph;
    const auto& gf = fine.grid.graph;
    double worst = 0.0;
    std::size_t shared = 0;
    for (std::size_t j = 0; j < gc.size(); ++j) {
        auto p = gc.point(j);
        const auto& lat = *gf.lattice();
        std::vector<std::size_t> idx(2);
        bool on = true;
        for (std::size_t a = 0; a < 2; ++a) {
            const double s = (p[a] - lat.lo[a]) / lat.h;
            const double r = std::round(s);
            if (std::abs(s - r) > 1e-6 || r < 0) on = false;
            idx[a] = static_cast<std::size_t>(std::max(r, 0.0));
        }
        if (!on) continue;
        auto k = gf.node_at_lattice(lat.linear(idx));
        if (!k) continue;
        ++shared;
        worst = std::max(worst, std::abs(coarse.u[j] - fine.u[*k]));
    }
    if (shared == 0) throw PreconditionError("grids share no node");
    return worst;
}

IsaacsNnResult isaacs_nn(const IsaacsNnConfig& cfg, const IsaacsParams& prm, const IsaacsSolve& reference) {
    std::vector<std::size_t> layers{2};
    layers.insert(layers.end(), cfg.hidden.begin(), cfg.hidden.end());
    layers.push_back(1);
    IsaacsNnResult out{lipschitz_init(layers, cfg.lipschitz, cfg.seed), {}, 0.0};

    const double r = prm.r, R = prm.R;
    StencilProblemSpec s;
    s.hamiltonian = std::make_shared<IsaacsHamiltonian>(prm, cfg.h);
    s.h = cfg.h;
    s.n_interior = cfg.n_interior;
    s.n_boundary = cfg.n_boundary;
    s.interior = [r, R](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(-R, R);
        while (true) {
            const double x = u(rng), y = u(rng), q = x * x + y * y;
            if (q > r * r && q < R * R) return std::vector<double>{x, y};
        }
    };
    s.boundary = [r, R](std::mt19937_64& rng) {
        std::uniform_real_distribution<double> th(0.0, 2.0 * std::numbers::pi);
        const double rad = std::bernoulli_distribution(0.5)(rng) ? r : R;
        const double a = th(rng);
        return std::vector<double>{rad * std::cos(a), rad * std::sin(a)};
    };
    s.boundary_data = [r, R](std::span<const double> x) { return std::hypot(x[0], x[1]) < 0.5 * (r + R) ? 0.0 : 1.0; };
    const auto& g = reference.grid.graph;
    for (std::size_t k = 0; k < g.interior().size(); k += 7) {
        auto p = g.point(g.interior()[k]);
        s.probe_points.emplace_back(p.begin(), p.end());
    }
    StencilProblem pb(std::move(s));
    auto rng = training_rng(cfg.seed);
    out.train = sgd_min_res(out.net, pb, cfg.train, rng);
    for (auto j : g.interior())
        out.diff_vs_reference = std::max(out.diff_vs_reference, std::abs(out.net.forward(g.point(j)) - reference.u[j]));
    return out;
}

std::vector<JacobianRow> analyze_jacobian_sweep(std::span<const std::size_t> ns, double lambda, double alpha,
                                                double mu_b) {
    std::vector<JacobianRow> rows;
    for (auto n : ns) {
        auto pb = eikonal1d(n, lambda, alpha, mu_b);
        std::vector<double> u(pb.size(), 0.0);
        rows.push_back({1.0 / static_cast<double>(n), pb.graph->interior().size(), condition_report(u, pb)});
    }
    return rows;
}

} // namespace hjres::experiments
