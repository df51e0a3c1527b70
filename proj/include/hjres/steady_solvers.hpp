#pragma once

#include "hjres/jacobian.hpp"
#include "hjres/residual.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace hjres {

struct SolveConfig {
    double step = 1e-3;
    std::size_t max_iters = 100000;
    double tol_inf = 1e-3;
    std::size_t record_every = 100;

    void validate() const;
};

struct HistoryPoint {
    std::size_t iter = 0;
    double loss = 0.0;
    double res_inf = 0.0;
};

struct GdResult {
    std::vector<double> u;
    std::vector<HistoryPoint> history;
    std::size_t iters = 0;
    bool converged = false;
    /// Set when some recorded loss exceeds its predecessor.
    bool loss_increased = false;
};

/// u <- u - step * grad L(u) until ||R(u)||_inf < tol_inf or the budget runs out.
/// The last iterate is always appended to the history.
GdResult gradient_descent(std::vector<double> u0, const SteadyProblem& pb, const SolveConfig& cfg);

struct NewtonOptions {
    double tol = 1e-12;
    std::size_t max_iters = 100;
    double min_step = 0x1p-30;
};

struct NewtonResult {
    std::vector<double> u;
    std::size_t iters = 0;
    double res_inf = 0.0;
};

/// Damped Newton on a generic square system F(u) = 0 with sparse Jacobian.
/// Backtracks by halving until ||F||_2 decreases; on a stall the iterate is nudged
/// once by 1e-10 along -J^T F before giving up.
using SystemFn = std::function<std::vector<double>(std::span<const double>)>;
using SystemJacobianFn = std::function<Eigen::SparseMatrix<double>(std::span<const double>)>;
NewtonResult newton_system(const SystemFn& F, const SystemJacobianFn& J, std::vector<double> u0,
                           const NewtonOptions& opt);

NewtonResult newton_solve(std::vector<double> u0, const SteadyProblem& pb, const NewtonOptions& opt = {});

struct ScheduleStage {
    double h = 0.0;
    double lambda = 1.0;
    double alpha = 1.0;
    std::optional<double> step;
    std::optional<std::size_t> max_iters;
};

/// Throws PreconditionError unless stages is non-empty with non-increasing h, lambda, alpha.
void validate_schedule(std::span<const ScheduleStage> stages);

using ProblemFactory = std::function<SteadyProblem(const ScheduleStage&)>;

struct MultilevelResult {
    std::vector<GdResult> stages;
    std::vector<SteadyProblem> problems;
    std::size_t total_iters = 0;
};

/// Gradient descent stage by stage, warm-starting each from the left-constant
/// prolongation of the previous stage. The first stage starts from u0 (zeros if empty).
MultilevelResult multilevel_solve(std::span<const ScheduleStage> stages, const ProblemFactory& factory,
                                  const SolveConfig& base, std::vector<double> u0 = {});

/// Value at each fine node of the coarse node to its left along every axis.
/// Both graphs need lattice metadata.
std::vector<double> prolong_left_constant(const GridGraph& coarse, std::span<const double> u_coarse,
                                          const GridGraph& fine);

/// max(bdiff, Rinf / lambda).
double stability_bound(double Rinf, double bdiff, double lambda);

using CandidateFn = std::function<double(std::span<const double>)>;
using PointSampler = std::function<std::vector<double>(std::mt19937_64&)>;

/// Grid-free evaluation domain: samplers for interior and boundary points, the
/// Dirichlet data, and the spacing of the collocation stencil.
struct AposterioriDomain {
    PointSampler interior;
    PointSampler boundary;
    CandidateFn boundary_data;
    double h = 0.0;
};

/// Box [lo, hi] with interior samples kept h away from the faces.
AposterioriDomain box_domain(std::vector<double> lo, std::vector<double> hi, double h, CandidateFn boundary_data);

struct AposterioriReport {
    double sup_residual = 0.0;  // sample max, a lower estimate of the true sup
    double sup_boundary = 0.0;
    double bound = 0.0;         // max(sup_residual / lambda, sup_boundary)
};

AposterioriReport aposteriori_report(const CandidateFn& u, const Hamiltonian& H, const AposterioriDomain& dom,
                                     std::size_t n_mc, unsigned long long seed);

} // namespace hjres
