#pragma once

#include "hjres/residual.hpp"
#include "hjres/steady_solvers.hpp"

#include <Eigen/Sparse>

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hjres {

/// u_j^n for n = 0..steps, stored slab by slab.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    SpaceTimeField(std::size_t nodes, std::size_t steps, double dt, double fill = 0.0);

    std::size_t nodes() const noexcept { return nodes_; }
    std::size_t steps() const noexcept { return steps_; }
    double dt() const noexcept { return dt_; }

    double& at(std::size_t n, std::size_t j) { return values_[n * nodes_ + j]; }
    double at(std::size_t n, std::size_t j) const { return values_[n * nodes_ + j]; }
    std::span<double> slab(std::size_t n) { return {values_.data() + n * nodes_, nodes_}; }
    std::span<const double> slab(std::size_t n) const { return {values_.data() + n * nodes_, nodes_}; }
    std::vector<double>& flat() noexcept { return values_; }
    const std::vector<double>& flat() const noexcept { return values_; }

private:
    std::size_t nodes_ = 0;
    std::size_t steps_ = 0;
    double dt_ = 0.0;
    std::vector<double> values_;
};

/// u_t + F(x, u, grad u) = 0 on a graph, Dirichlet data b_j^n on B, initial data g0 on J.
/// F is time-independent and written in the same p-slot form as stationary schemes.
struct SpaceTimeProblem {
    std::shared_ptr<const GridGraph> graph;
    std::shared_ptr<const Hamiltonian> F;
    std::vector<double> initial;   // node-indexed
    SpaceTimeField boundary;       // read on B only
    LossParams loss;

    double dt() const { return boundary.dt(); }
    std::size_t steps() const { return boundary.steps(); }
    void validate() const;
};

enum class TimeScheme { Implicit, Explicit };

/// Scaled space-time residual in the field layout. Interior entries for n >= 1:
///   (1/(M N))^{1/q} ((u^n - u^{n-1})/dt + F(u^m))  with m = n (implicit) or n - 1 (explicit),
/// boundary entries (mu_b/(M_b N))^{1/q} (u^n - b^n) for n >= 1, interior entries at n = 0
/// (mu_i/M)^{1/q} (u^0 - g0). The explicit scheme also reads u^0 on B, so it carries
/// boundary entries at n = 0; the implicit one leaves them at 0.
SpaceTimeField residual_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb, TimeScheme scheme);
SpaceTimeField residual_spacetime_implicit(const SpaceTimeField& U, const SpaceTimeProblem& pb);
SpaceTimeField residual_spacetime_explicit(const SpaceTimeField& U, const SpaceTimeProblem& pb);

double loss_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb, TimeScheme scheme = TimeScheme::Implicit);

/// Sparse Jacobian of residual_spacetime in the flat field layout.
Eigen::SparseMatrix<double> jacobian_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb,
                                               TimeScheme scheme);

SpaceTimeField loss_spacetime_gradient(const SpaceTimeField& U, const SpaceTimeProblem& pb,
                                       TimeScheme scheme = TimeScheme::Implicit);

/// Unscaled max_j |(u^n - u^{n-1})/dt + F(u^n)| for n = 1..N (entry 0 is 0).
std::vector<double> slab_residual_inf(const SpaceTimeField& U, const SpaceTimeProblem& pb);

struct F3Report {
    bool ok = false;
    double worst_lambda = 0.0;   // -min(0, min dt dF/du)
    double min_dt_dFdu = 0.0;
};

/// Samples dt * dF/du at random (node, u, p); ok iff the minimum is >= -1 + 1e-6.
F3Report check_f3(const Hamiltonian& F, const GridGraph& g, double dt, std::size_t samples,
                  const HypothesisCheckOptions& opt = {});

/// Per-step Hamiltonian (u - prev_j)/dt + F, optionally wrapped as min(., u - psi_j).
class StepHamiltonian final : public Hamiltonian {
public:
    StepHamiltonian(std::shared_ptr<const Hamiltonian> F, std::vector<double> prev, double dt,
                    std::vector<double> obstacle = {});
    double value(const NodeContext& c, double u, std::span<const double> p) const override;
    double derivatives(const NodeContext& c, double u, std::span<const double> p,
                       std::span<double> dp) const override;

private:
    std::shared_ptr<const Hamiltonian> F_;
    std::vector<double> prev_;
    double dt_;
    std::vector<double> obstacle_;
};

/// Backward Euler marching, one Newton solve per step (the space-time oracle).
/// u^0 is g0 on J and b^0 on B. An optional node-indexed obstacle turns every step into
/// min((u - u^{n-1})/dt + F, u - psi) = 0. Newton failure at step n is rethrown with n
/// in the message.
SpaceTimeField march_implicit(const SpaceTimeProblem& pb, const NewtonOptions& opt = {},
                              std::span<const double> obstacle = {});

/// Forward Euler substitution u^{n} = u^{n-1} - dt F(u^{n-1}) on J, u^n = b^n on B.
SpaceTimeField march_explicit(const SpaceTimeProblem& pb);

/// Backward recurrence for the interior weights w_j^n = |R_j^n|^{q-1} at a critical point
/// of the explicit loss, n = N-1..0, from w^N (zeros when empty). Only interior
/// neighbors contribute. Returns a field with zeros on B.
SpaceTimeField explicit_residual_recurrence(const SpaceTimeField& U, const SpaceTimeProblem& pb,
                                            std::span<const double> w_terminal = {});

/// prev_diff + max(dt * Rinf_next, bdiff).
double stability_time_bound(double prev_diff, double Rinf_next, double bdiff, double dt);

/// Folds stability_time_bound over n = 1..N starting from initial_diff; entry 0 is initial_diff.
std::vector<double> cumulative_time_bound(double initial_diff, std::span<const double> Rinf,
                                          std::span<const double> bdiff, double dt);

// Obstacle problem min(u_t + (a . grad u)_+, u - psi) = 0.

enum class ObstacleScheme { LaxFriedrichs, OneSided };

/// Transport part of the obstacle scheme at one point.
///   LaxFriedrichs: (sum_i a_i (u_i+ - u_i-)/(2h))_+ - sum_i (u_i+ + u_i- - 2u)/(2h)
///   OneSided:      (sum_i a_i (3u - 4u_i- + u_i--)/(2h))_+
/// For OneSided, a NaN in minus2 selects the first-order difference (u - u_i-)/h on that axis.
double obstacle_transport(ObstacleScheme scheme, std::span<const double> a, double h, double u,
                          std::span<const double> minus, std::span<const double> plus,
                          std::span<const double> minus2);

/// psi(x) = ||x|| - 1/2.
double obstacle_psi(std::span<const double> x);
/// g(x) = max(||x + a0|| - 1, psi(x)).
double obstacle_initial(std::span<const double> x, std::span<const double> a0);
/// a0 / ||a0||.
std::vector<double> unit_drift(std::span<const double> a0);

/// LxF obstacle transport in p-slot form on axis-ordered stencils.
class ObstacleLaxFriedrichs final : public Hamiltonian {
public:
    explicit ObstacleLaxFriedrichs(std::vector<double> a);
    double value(const NodeContext& c, double u, std::span<const double> p) const override;
    double derivatives(const NodeContext& c, double u, std::span<const double> p,
                       std::span<double> dp) const override;

private:
    std::vector<double> a_;
};

/// Residual of the obstacle scheme on a box grid: for n >= 1 and interior j,
/// min((u^n - u^{n-1})/dt + H(u^n), u^n - psi_j); for n = 0, u^0 - g0 on J; 0 on B.
SpaceTimeField obstacle_residual(const SpaceTimeField& U, const GridGraph& g, std::span<const double> a,
                                 std::span<const double> psi, std::span<const double> g0, ObstacleScheme scheme);

/// Writes one field_t{n}.txt per slab into dir.
void write_spacetime_fields(const std::string& dir, const GridGraph& g, const SpaceTimeField& U);

} // namespace hjres
