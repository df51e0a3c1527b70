#pragma once

#include "hjres/grid_graph.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace hjres {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

/// Where a numerical Hamiltonian is evaluated: the graph node (kNoNode for
/// grid-free collocation) and its coordinates.
struct NodeContext {
    std::size_t index = kNoNode;
    std::span<const double> x;
};

using SourceFn = std::function<double(std::span<const double>)>;

SourceFn constant_source(double value);

struct HamiltonianInfo {
    std::string name;
    double lambda = 0.0;  // declared (H3) constant
    double alpha = 0.0;   // numerical viscosity, when applicable
    std::optional<double> lipschitz_bound;
};

/// Numerical Hamiltonian H(x_j, u_j, p) with p_k = (u_j - u_k) / dx_kj in the
/// graph's neighbor order.
///
/// Non-smooth points use a fixed subgradient convention: sign(0) = 0, the
/// derivative of (z)_+ at 0 is 0, and min/max ties pick the first argument.
class Hamiltonian {
public:
    explicit Hamiltonian(HamiltonianInfo info) : info_(std::move(info)) {}
    virtual ~Hamiltonian() = default;

    virtual double value(const NodeContext& c, double u, std::span<const double> p) const = 0;

    /// Returns dH/du and writes dH/dp_k into dp. The default uses central
    /// differences with step 1e-6.
    virtual double derivatives(const NodeContext& c, double u, std::span<const double> p,
                               std::span<double> dp) const;

    const HamiltonianInfo& info() const noexcept { return info_; }

private:
    HamiltonianInfo info_;
};

/// Continuous Hamiltonian H(x, u, grad u) used as the base of Lax-Friedrichs.
class ContinuousHamiltonian {
public:
    virtual ~ContinuousHamiltonian() = default;
    virtual double value(std::span<const double> x, double u, std::span<const double> grad) const = 0;
    /// Returns dH/du; writes dH/dgrad_i.
    virtual double derivatives(std::span<const double> x, double u, std::span<const double> grad,
                               std::span<double> dgrad) const = 0;
    /// Bound on |dH/dgrad_i|; Lax-Friedrichs needs alpha at least this large.
    virtual double gradient_bound() const = 0;
};

/// ||grad u||_2 + lambda u - f(x).
class EikonalBase final : public ContinuousHamiltonian {
public:
    EikonalBase(double lambda, SourceFn f);
    double value(std::span<const double> x, double u, std::span<const double> grad) const override;
    double derivatives(std::span<const double> x, double u, std::span<const double> grad,
                       std::span<double> dgrad) const override;
    double gradient_bound() const override { return 1.0; }
    double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
    SourceFn f_;
};

/// H(x, u, centered gradient) - alpha * sum_axis (u_+ + u_- - 2u) / (2h) on axis-ordered
/// stencils. In p-slot form: base(grad_i = (p_{2i} - p_{2i+1}) / 2) + alpha/2 * sum_k p_k.
class LaxFriedrichsHamiltonian final : public Hamiltonian {
public:
    LaxFriedrichsHamiltonian(std::shared_ptr<const ContinuousHamiltonian> base, double alpha, double lambda);
    double value(const NodeContext& c, double u, std::span<const double> p) const override;
    double derivatives(const NodeContext& c, double u, std::span<const double> p,
                       std::span<double> dp) const override;

private:
    std::shared_ptr<const ContinuousHamiltonian> base_;
    double alpha_;
};

/// Lax-Friedrichs eikonal |grad u| + lambda u - f with viscosity alpha.
std::shared_ptr<LaxFriedrichsHamiltonian> make_lax_friedrichs_eikonal(double alpha, double lambda,
                                                                      SourceFn f = constant_source(1.0));

/// Rouy-Tourin upwind eikonal: max_k (p_k)_+ - f(x) + lambda u.
class UpwindEikonalHamiltonian final : public Hamiltonian {
public:
    UpwindEikonalHamiltonian(double lambda, SourceFn f);
    double value(const NodeContext& c, double u, std::span<const double> p) const override;
    double derivatives(const NodeContext& c, double u, std::span<const double> p,
                       std::span<double> dp) const override;

private:
    double lambda_;
    SourceFn f_;
};

struct IsaacsParams {
    double sigma_x = 0.5;
    double sigma_y = 0.2;
    double vs = 0.5;
    double kappa = 0.1;
    double a = 0.2;
    double r = 0.5;
    double R = 1.4142135623730951;
    double lambda_extra = 0.0;
};

/// Wind field v_c(x, y) = 1 - a sin(pi (x^2 + y^2 - r^2) / (R^2 - r^2)).
double isaacs_wind(double x, double y, const IsaacsParams& prm);

enum class IsaacsStencil {
    /// Upwind first differences (positive parts, min of one-sided slopes); monotone for any h.
    Monotone,
    /// Central first differences throughout. Monotone only while the diffusion dominates,
    /// i.e. h <= central_spacing_limit(params); second-order consistent.
    Central,
};

/// Stochastic Zermelo HJBI scheme on the 5-point stencil with spacing h. In the monotone
/// stencil the advection term -v_c u_x is upwinded along the sign of v_c (forward
/// difference for v_c > 0), which keeps every p-slot non-decreasing.
/// With a graph, per-edge lengths replace h (cut cells next to curved boundaries).
class IsaacsHamiltonian final : public Hamiltonian {
public:
    IsaacsHamiltonian(IsaacsParams prm, double h, IsaacsStencil stencil = IsaacsStencil::Monotone,
                      std::shared_ptr<const GridGraph> graph = nullptr);
    double value(const NodeContext& c, double u, std::span<const double> p) const override;
    double derivatives(const NodeContext& c, double u, std::span<const double> p,
                       std::span<double> dp) const override;
    const IsaacsParams& params() const noexcept { return prm_; }
    IsaacsStencil stencil() const noexcept { return stencil_; }

    static double central_spacing_limit(const IsaacsParams& prm);

private:
    std::array<double, 4> spacing(const NodeContext& c) const;

    IsaacsParams prm_;
    double h_;
    IsaacsStencil stencil_;
    std::shared_ptr<const GridGraph> graph_;
};

// Pointwise evaluators on raw stencil values.

double eval_lax_friedrichs_1d(double u_j, double u_jm, double u_jp, double h, double alpha, double lambda,
                              double f);

/// neighbor_values follow the axis ordering (-e_1, +e_1, ...).
double eval_lax_friedrichs_graph(std::span<const double> x, double u_i, std::span<const double> neighbor_values,
                                 double h, double alpha, const ContinuousHamiltonian& base);

double eval_upwind_eikonal(double u_i, std::span<const double> neighbor_values,
                           std::span<const double> edge_lengths, double f);

/// ext over I[p_minus, p_plus]: min when p_minus <= p_plus, max over [p_plus, p_minus] otherwise.
/// Dense 513-point sampling plus golden-section refinement around the best sample.
double eval_godunov_ext_1d(const std::function<double(double)>& H, double p_minus, double p_plus);
double godunov_ext_abs(double p_minus, double p_plus);
double godunov_ext_square(double p_minus, double p_plus);

/// neighbor_values = {u(x-h,y), u(x+h,y), u(x,y-h), u(x,y+h)}.
double eval_isaacs(double u, std::span<const double> neighbor_values, double x, double y,
                   const IsaacsParams& prm, double h);

struct HypothesisCheckOptions {
    double u_lo = -2.0, u_hi = 2.0;
    double p_lo = -5.0, p_hi = 5.0;
    double tol = 1e-7;
    unsigned long long seed = 12345;
};

struct HypothesisReport {
    bool h2_ok = true;
    double worst_h2 = 0.0;  // most negative sampled dH/dp_k
    double h3_margin = 0.0; // min sampled dH/du
    double lipschitz_estimate = 0.0;
};

/// Samples (x_j, u, p) and probes (H2)/(H3)/(H1) with central differences of step eps.
HypothesisReport check_hypotheses(const Hamiltonian& H, const GridGraph& g, std::size_t n_samples, double eps,
                                  const HypothesisCheckOptions& opt = {});

} // namespace hjres
