#pragma once

#include "hjres/grid_graph.hpp"
#include "hjres/hamiltonians.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace hjres {

struct LossParams {
    double q = 2.0;
    double mu_b = 10.0;
    double mu_i = 1.0;

    /// Throws PreconditionError unless q > 1, mu_b > 0 and mu_i > 0.
    void validate() const;
};

/// A stationary scheme H(x_j, u_j, grad_G u_j) = 0 on J with u = g on B.
struct SteadyProblem {
    std::shared_ptr<const GridGraph> graph;
    std::shared_ptr<const Hamiltonian> hamiltonian;
    std::vector<double> boundary_values;  // node-indexed, read on B only
    LossParams loss;

    std::size_t size() const { return graph->size(); }
};

/// Scaled residual: interior entries H / M^{1/q}, boundary entries (mu_b/N)^{1/q} (u - g).
struct ResidualVector {
    std::vector<double> values;
    std::size_t M = 0;
    std::size_t N = 0;
    double interior_scale = 0.0;
    double boundary_scale = 0.0;

    double norm_inf() const;
};

double interior_scale(std::size_t M, double q);
double boundary_scale(std::size_t N, double mu_b, double q);

ResidualVector residual_steady(std::span<const double> u, const SteadyProblem& pb);

/// Unscaled scheme values H(x_j, u_j, grad_G u_j), node-indexed (0 on B).
std::vector<double> scheme_values(std::span<const double> u, const SteadyProblem& pb);

/// max_{j in J} |H(x_j, u_j, grad_G u_j)| and max_{j in B} |u_j - g_j|.
struct ResidualSplit {
    double interior_inf = 0.0;
    double boundary_inf = 0.0;
};
ResidualSplit residual_split(std::span<const double> u, const SteadyProblem& pb);

/// (1/q) sum |R_j|^q with pairwise summation.
double loss(std::span<const double> u, const SteadyProblem& pb);
double loss_from_residual(std::span<const double> r, double q);

/// w_j = |R_j|^{q-1} sign(R_j).
std::vector<double> residual_weights(std::span<const double> r, double q);

/// (DR(u))^T w assembled row by row, without materializing the Jacobian.
std::vector<double> loss_gradient(std::span<const double> u, const SteadyProblem& pb);
/// Same, reusing an already evaluated residual of u.
std::vector<double> loss_gradient(std::span<const double> u, const SteadyProblem& pb, const ResidualVector& r);

/// Jacobian row of an interior node: diagonal and neighbor entries, unscaled.
/// diag = dH/du + sum_k dH/dp_k / dx_kj, off_k = -dH/dp_k / dx_kj.
struct InteriorRow {
    double diag = 0.0;
    std::vector<double> off;
};
InteriorRow interior_row(std::span<const double> u, std::size_t j, const GridGraph& g, const Hamiltonian& H);

double pairwise_sum(std::span<const double> v);

} // namespace hjres
