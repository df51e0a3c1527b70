#pragma once

#include "hjres/grid_graph.hpp"
#include "hjres/hamiltonians.hpp"
#include "hjres/jacobian.hpp"
#include "hjres/mlp.hpp"
#include "hjres/residual.hpp"
#include "hjres/steady_solvers.hpp"
#include "hjres/time_dependent.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

// Problem builders and drivers shared by the command-line tool and the acceptance suite.
namespace hjres::experiments {

/// |u'| + lambda u = 1 on [0, 1], u(0) = u(1) = 0, Lax-Friedrichs with viscosity alpha, h = 1/n.
SteadyProblem eikonal1d(std::size_t n, double lambda, double alpha, double mu_b = 10.0, double q = 2.0);
/// Same equation with the upwind scheme max_k (p_k)_+ + lambda u - 1.
SteadyProblem upwind_eikonal1d(std::size_t n, double lambda, double mu_b = 10.0);
/// ||grad u|| + lambda u = 1 on [0, 1]^2 with zero data, Lax-Friedrichs, h = 1/n.
SteadyProblem eikonal2d(std::size_t n, double lambda, double alpha, double mu_b = 10.0);

/// max_j |u_j - min(x_j, 1 - x_j)|.
double eikonal1d_error(const GridGraph& g, std::span<const double> u);

// Network runs on the 1D damped eikonal problem.

struct NnEikonalConfig {
    std::vector<std::size_t> layers{1, 64, 64, 64, 1};
    double lipschitz = 4.0;
    std::size_t n0 = 20;
    double mu_b = 10.0;
    double alpha = 1.0;
    double lambda = 0.1;  // equation damping, also used for the inversion
    TrainConfig train;
    std::vector<ScheduleStage> schedule{
        {1.0 / 20, 2.0, 1.0, {}, {}}, {1.0 / 100, 1.0, 1.0, {}, {}},
        {1.0 / 500, 0.5, 1.0, {}, {}}, {1.0 / 1000, 0.1, 1.0, {}, {}}};
    std::size_t error_samples = 1001;
};

struct NnRun {
    unsigned long long seed = 0;
    double final_error = 0.0;
    std::size_t iters = 0;
    bool converged = false;
    std::vector<TrainLogEntry> log;  // stage logs concatenated, iterations counted globally
};

/// L-inf error of the inverse Kruzhkov transform of the network against min(x, 1 - x)
/// on a uniform sample of [0, 1].
double nn_eikonal_error(const Mlp& net, double lambda, std::size_t samples);

NnRun nn_eikonal_fixed(const NnEikonalConfig& cfg, double h, unsigned long long seed);
NnRun nn_eikonal_schedule(const NnEikonalConfig& cfg, unsigned long long seed);

// Obstacle problem with a network in (t, x).

struct ObstaclePhase {
    ObstacleScheme scheme = ObstacleScheme::LaxFriedrichs;
    std::vector<double> h;
    std::vector<double> dt;
};

struct ObstacleConfig {
    std::size_t dim = 2;
    std::vector<std::size_t> hidden{48, 48, 48};
    double lipschitz = 4.0;
    double lr = 1e-3;
    std::size_t iters_per_stage = 2000;
    std::size_t n_interior = 400;
    std::size_t n_initial = 400;
    double initial_weight = 10.0;
    double t_max = 2.0;
    double half_width = 2.5;
    double h_eval = 0.05;
    double eval_half_width = 2.0;
    std::size_t log_every = 0;
    std::vector<ObstaclePhase> phases{
        {ObstacleScheme::LaxFriedrichs, {0.3, 0.2, 0.1}, {0.15, 0.1, 0.05}},
        {ObstacleScheme::OneSided, {0.2, 0.1, 0.05}, {0.1, 0.05, 0.025}}};
    unsigned long long seed = 1;
};

struct ObstacleReport {
    double max_violation = 0.0;   // max (psi - u) over the evaluation grid and t in {0, 1, 2}
    double hausdorff_t0 = 0.0;    // zero set of u(0, .) vs the exact initial contour; NaN unless dim = 2
    std::size_t iters = 0;
    std::vector<TrainResult> stages;
};

/// Trains the network through every phase (each phase is a monotone schedule) and evaluates
/// complementarity and the initial contour on the central 2D slice.
ObstacleReport run_obstacle(const ObstacleConfig& cfg, Mlp& net);

/// Zero crossings of f along the edges of a square grid of spacing h on [-w, w]^2,
/// linearly interpolated.
std::vector<std::array<double, 2>> zero_crossings(const std::function<double(double, double)>& f, double w, double h);

/// Points on the boundary of the lens {||x + a0|| <= 1} n {||x|| <= 1/2} in 2D.
std::vector<std::array<double, 2>> initial_contour(std::span<const double> a0, std::size_t samples_per_arc);

double hausdorff(std::span<const std::array<double, 2>> A, std::span<const std::array<double, 2>> B);

// Isaacs reference solutions on the annulus.

struct IsaacsSolve {
    AnnulusGrid grid;
    std::vector<double> u;
    NewtonResult info;
};

struct IsaacsSetup {
    IsaacsStencil stencil = IsaacsStencil::Central;
    AnnulusBoundary boundary = AnnulusBoundary::CutCell;
    double shift = 0.0;  // added to every Dirichlet value
};

/// Newton solve on the annulus lattice with spacing 4/n.
IsaacsSolve isaacs_reference(std::size_t n, const IsaacsParams& prm = {}, const IsaacsSetup& setup = {},
                             const NewtonOptions& opt = {1e-10, 100, 0x1p-30});

/// max |u_coarse - u_fine| over nodes present in both lattices.
double isaacs_shared_diff(const IsaacsSolve& coarse, const IsaacsSolve& fine);

/// Network variant: monotone Isaacs stencil of spacing h collocated at random annulus
/// points, boundary points drawn uniformly on both circles.
struct IsaacsNnConfig {
    std::vector<std::size_t> hidden{32, 32};
    double lipschitz = 4.0;
    double h = 0.04;
    std::size_t n_interior = 200;
    std::size_t n_boundary = 40;
    TrainConfig train;
    unsigned long long seed = 1;
};

struct IsaacsNnResult {
    Mlp net;
    TrainResult train;
    double diff_vs_reference = 0.0;  // max over the reference interior nodes
};

IsaacsNnResult isaacs_nn(const IsaacsNnConfig& cfg, const IsaacsParams& prm, const IsaacsSolve& reference);

// Conditioning sweep.

struct JacobianRow {
    double h = 0.0;
    std::size_t M = 0;
    ConditionReport report;
};

/// Condition report of the 1D eikonal Jacobian at u = 0 for each n.
std::vector<JacobianRow> analyze_jacobian_sweep(std::span<const std::size_t> ns, double lambda, double alpha,
                                                double mu_b = 10.0);

} // namespace hjres::experiments
