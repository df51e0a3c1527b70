#include "hjres/hamiltonians.hpp"

#include "hjres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace hjres {

namespace {

double pos(double z) { return z > 0.0 ? z : 0.0; }
double sign0(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

} // namespace

SourceFn constant_source(double value) {
    return [value](std::span<const double>) { return value; };
}

double Hamiltonian::derivatives(const NodeContext& c, double u, std::span<const double> p,
                                std::span<double> dp) const {
    constexpr double step = 1e-6;
    std::vector<double> q(p.begin(), p.end());
    for (std::size_t k = 0; k < q.size(); ++k) {
        double saved = q[k];
        q[k] = saved + step;
        double up = value(c, u, q);
        q[k] = saved - step;
        double dn = value(c, u, q);
        q[k] = saved;
        dp[k] = (up - dn) / (2.0 * step);
    }
    return (value(c, u + step, p) - value(c, u - step, p)) / (2.0 * step);
}

EikonalBase::EikonalBase(double lambda, SourceFn f) : lambda_(lambda), f_(std::move(f)) {}

double EikonalBase::value(std::span<const double> x, double u, std::span<const double> grad) const {
    double s = 0.0;
    for (double g : grad) s += g * g;
    return std::sqrt(s) + lambda_ * u - f_(x);
}

double EikonalBase::derivatives(std::span<const double>, double, std::span<const double> grad,
                                std::span<double> dgrad) const {
    double s = 0.0;
    for (double g : grad) s += g * g;
    double n = std::sqrt(s);
    for (std::size_t i = 0; i < grad.size(); ++i) dgrad[i] = n > 0.0 ? grad[i] / n : 0.0;
    return lambda_;
}

LaxFriedrichsHamiltonian::LaxFriedrichsHamiltonian(std::shared_ptr<const ContinuousHamiltonian> base,
                                                   double alpha, double lambda)
    : Hamiltonian(HamiltonianInfo{"lax_friedrichs", lambda, alpha, std::nullopt}),
      base_(std::move(base)),
      alpha_(alpha) {}

double LaxFriedrichsHamiltonian::value(const NodeContext& c, double u, std::span<const double> p) const {
    if (p.empty() || p.size() % 2 != 0) throw IncompleteStencilError("Lax-Friedrichs needs axis pairs");
    const std::size_t d = p.size() / 2;
    double grad[8];
    std::vector<double> big;
    std::span<double> gs(grad, d);
    if (d > 8) {
        big.resize(d);
        gs = big;
    }
    double visc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        gs[i] = 0.5 * (p[2 * i] - p[2 * i + 1]);
        visc += p[2 * i] + p[2 * i + 1];
    }
    return base_->value(c.x, u, gs) + 0.5 * alpha_ * visc;
}

double LaxFriedrichsHamiltonian::derivatives(const NodeContext& c, double u, std::span<const double> p,
                                             std::span<double> dp) const {
    if (p.empty() || p.size() % 2 != 0) throw IncompleteStencilError("Lax-Friedrichs needs axis pairs");
    const std::size_t d = p.size() / 2;
    std::vector<double> grad(d), dgrad(d);
    for (std::size_t i = 0; i < d; ++i) grad[i] = 0.5 * (p[2 * i] - p[2 * i + 1]);
    double du = base_->derivatives(c.x, u, grad, dgrad);
    for (std::size_t i = 0; i < d; ++i) {
        dp[2 * i] = 0.5 * dgrad[i] + 0.5 * alpha_;
        dp[2 * i + 1] = -0.5 * dgrad[i] + 0.5 * alpha_;
    }
    return du;
}

std::shared_ptr<LaxFriedrichsHamiltonian> make_lax_friedrichs_eikonal(double alpha, double lambda, SourceFn f) {
    auto base = std::make_shared<EikonalBase>(lambda, std::move(f));
    return std::make_shared<LaxFriedrichsHamiltonian>(std::move(base), alpha, lambda);
}

UpwindEikonalHamiltonian::UpwindEikonalHamiltonian(double lambda, SourceFn f)
    : Hamiltonian(HamiltonianInfo{"upwind_eikonal", lambda, 0.0, std::nullopt}),
      lambda_(lambda),
      f_(std::move(f)) {}

double UpwindEikonalHamiltonian::value(const NodeContext& c, double u, std::span<const double> p) const {
    if (p.empty()) throw IncompleteStencilError("upwind eikonal needs at least one neighbor");
    double m = 0.0;
    for (double pk : p) m = std::max(m, pos(pk));
    return m - f_(c.x) + lambda_ * u;
}

double UpwindEikonalHamiltonian::derivatives(const NodeContext&, double, std::span<const double> p,
                                             std::span<double> dp) const {
    if (p.empty()) throw IncompleteStencilError("upwind eikonal needs at least one neighbor");
    std::size_t best = p.size();
    double m = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        dp[k] = 0.0;
        if (p[k] > m) {
            m = p[k];
            best = k;
        }
    }
    if (best < p.size()) dp[best] = 1.0;
    return lambda_;
}

double isaacs_wind(double x, double y, const IsaacsParams& prm) {
    const double s = (x * x + y * y - prm.r * prm.r) / (prm.R * prm.R - prm.r * prm.r);
    return 1.0 - prm.a * std::sin(std::numbers::pi * s);
}

IsaacsHamiltonian::IsaacsHamiltonian(IsaacsParams prm, double h, IsaacsStencil stencil,
                                     std::shared_ptr<const GridGraph> graph)
    : Hamiltonian(HamiltonianInfo{"isaacs", prm.lambda_extra, 0.0, std::nullopt}),
      prm_(prm),
      h_(h),
      stencil_(stencil),
      graph_(std::move(graph)) {
    if (!(h > 0.0)) throw PreconditionError("Isaacs spacing must be positive");
    if (stencil_ == IsaacsStencil::Central && h > central_spacing_limit(prm_))
        throw PreconditionError("central Isaacs stencil is not monotone at this spacing");
}

double IsaacsHamiltonian::central_spacing_limit(const IsaacsParams& prm) {
    const double drift = 1.0 + std::abs(prm.a) + prm.vs + prm.kappa;
    const double cross = prm.vs + prm.kappa;
    return std::min(prm.sigma_x * prm.sigma_x / drift,
                    cross > 0.0 ? prm.sigma_y * prm.sigma_y / cross : std::numeric_limits<double>::infinity());
}

std::array<double, 4> IsaacsHamiltonian::spacing(const NodeContext& c) const {
    if (graph_ && c.index != kNoNode) {
        auto len = graph_->edge_lengths(c.index);
        if (len.size() == 4) return {len[0], len[1], len[2], len[3]};
    }
    return {h_, h_, h_, h_};
}

double IsaacsHamiltonian::value(const NodeContext& c, double u, std::span<const double> p) const {
    if (p.size() != 4 || c.x.size() != 2) throw IncompleteStencilError("Isaacs scheme needs the 2D 5-point stencil");
    const auto L = spacing(c);
    const double vc = isaacs_wind(c.x[0], c.x[1], prm_);
    const double diff = prm_.sigma_x * prm_.sigma_x * (p[0] + p[1]) / (L[0] + L[1]) +
                        prm_.sigma_y * prm_.sigma_y * (p[2] + p[3]) / (L[2] + L[3]);
    const double tail = -1.0 + prm_.lambda_extra * u;
    if (stencil_ == IsaacsStencil::Central) {
        const double gx = (L[1] * p[0] - L[0] * p[1]) / (L[0] + L[1]);
        const double gy = (L[3] * p[2] - L[2] * p[3]) / (L[2] + L[3]);
        return diff - vc * gx + prm_.vs * std::hypot(gx, gy) - prm_.kappa * (std::abs(gx) + std::abs(gy)) + tail;
    }
    const double adv = pos(vc) * p[1] + pos(-vc) * p[0];
    double s = 0.0;
    for (double pk : p) s += pos(pk) * pos(pk);
    const double l1 = std::min(p[0], p[1]) + std::min(p[2], p[3]);
    return diff + adv + prm_.vs * std::sqrt(s) + prm_.kappa * l1 + tail;
}

double IsaacsHamiltonian::derivatives(const NodeContext& c, double, std::span<const double> p,
                                      std::span<double> dp) const {
    if (p.size() != 4 || c.x.size() != 2) throw IncompleteStencilError("Isaacs scheme needs the 2D 5-point stencil");
    const auto L = spacing(c);
    const double vc = isaacs_wind(c.x[0], c.x[1], prm_);
    const double dx = prm_.sigma_x * prm_.sigma_x / (L[0] + L[1]);
    const double dy = prm_.sigma_y * prm_.sigma_y / (L[2] + L[3]);
    if (stencil_ == IsaacsStencil::Central) {
        const double gx = (L[1] * p[0] - L[0] * p[1]) / (L[0] + L[1]);
        const double gy = (L[3] * p[2] - L[2] * p[3]) / (L[2] + L[3]);
        const double n = std::hypot(gx, gy);
        const double Gx = -vc + (n > 0.0 ? prm_.vs * gx / n : 0.0) - prm_.kappa * sign0(gx);
        const double Gy = (n > 0.0 ? prm_.vs * gy / n : 0.0) - prm_.kappa * sign0(gy);
        dp[0] = dx + Gx * L[1] / (L[0] + L[1]);
        dp[1] = dx - Gx * L[0] / (L[0] + L[1]);
        dp[2] = dy + Gy * L[3] / (L[2] + L[3]);
        dp[3] = dy - Gy * L[2] / (L[2] + L[3]);
        return prm_.lambda_extra;
    }
    dp[0] = dx + pos(-vc);
    dp[1] = dx + pos(vc);
    dp[2] = dy;
    dp[3] = dy;
    double s = 0.0;
    for (double pk : p) s += pos(pk) * pos(pk);
    if (s > 0.0) {
        const double n = std::sqrt(s);
        for (std::size_t k = 0; k < 4; ++k) dp[k] += prm_.vs * pos(p[k]) / n;
    }
    dp[p[0] <= p[1] ? 0 : 1] += prm_.kappa;
    dp[p[2] <= p[3] ? 2 : 3] += prm_.kappa;
    return prm_.lambda_extra;
}

double eval_lax_friedrichs_1d(double u_j, double u_jm, double u_jp, double h, double alpha, double lambda,
                              double f) {
    return std::abs((u_jp - u_jm) / (2.0 * h)) - alpha * (u_jp + u_jm - 2.0 * u_j) / (2.0 * h) + lambda * u_j - f;
}

double eval_lax_friedrichs_graph(std::span<const double> x, double u_i, std::span<const double> neighbor_values,
                                 double h, double alpha, const ContinuousHamiltonian& base) {
    if (neighbor_values.empty() || neighbor_values.size() % 2 != 0)
        throw IncompleteStencilError("Lax-Friedrichs needs a full axis-pair stencil");
    const std::size_t d = neighbor_values.size() / 2;
    std::vector<double> grad(d);
    double lap = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double um = neighbor_values[2 * i];
        const double up = neighbor_values[2 * i + 1];
        grad[i] = (up - um) / (2.0 * h);
        lap += (up + um - 2.0 * u_i) / (2.0 * h);
    }
    return base.value(x, u_i, grad) - alpha * lap;
}

double eval_upwind_eikonal(double u_i, std::span<const double> neighbor_values,
                           std::span<const double> edge_lengths, double f) {
    if (neighbor_values.empty()) throw IncompleteStencilError("upwind eikonal needs at least one neighbor");
    if (edge_lengths.size() != neighbor_values.size()) throw IndexingError("edge length count mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < neighbor_values.size(); ++k)
        m = std::max(m, pos(u_i - neighbor_values[k]) / edge_lengths[k]);
    return m - f;
}

namespace {

// min of H on [lo, hi] by sampling and golden-section refinement.
double sampled_min(const std::function<double(double)>& H, double lo, double hi) {
    constexpr int n = 513;
    if (lo == hi) return H(lo);
    const double step = (hi - lo) / (n - 1);
    int best = 0;
    double best_val = H(lo);
    for (int i = 1; i < n; ++i) {
        double v = H(i == n - 1 ? hi : lo + step * i);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = lo + step * std::max(best - 1, 0);
    double b = std::min(hi, lo + step * std::min(best + 1, n - 1));
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = H(c), fd = H(d);
    for (int it = 0; it < 80 && (b - a) > 1e-15 * (1.0 + std::abs(a)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = H(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = H(d);
        }
    }
    return std::min({best_val, fc, fd, H(lo), H(hi)});
}

} // namespace

double eval_godunov_ext_1d(const std::function<double(double)>& H, double p_minus, double p_plus) {
    if (p_minus <= p_plus) return sampled_min(H, p_minus, p_plus);
    auto neg = [&H](double p) { return -H(p); };
    return -sampled_min(neg, p_plus, p_minus);
}

double godunov_ext_abs(double p_minus, double p_plus) {
    if (p_minus <= p_plus) {
        if (p_minus <= 0.0 && 0.0 <= p_plus) return 0.0;
        return std::min(std::abs(p_minus), std::abs(p_plus));
    }
    return std::max(std::abs(p_minus), std::abs(p_plus));
}

double godunov_ext_square(double p_minus, double p_plus) {
    const double a = godunov_ext_abs(p_minus, p_plus);
    return a * a;
}

double eval_isaacs(double u, std::span<const double> neighbor_values, double x, double y,
                   const IsaacsParams& prm, double h) {
    if (neighbor_values.size() != 4) throw IncompleteStencilError("Isaacs scheme needs 4 axis neighbors");
    double p[4];
    for (int k = 0; k < 4; ++k) p[k] = (u - neighbor_values[k]) / h;
    const double xy[2] = {x, y};
    IsaacsHamiltonian H(prm, h);
    return H.value(NodeContext{kNoNode, xy}, u, p);
}

HypothesisReport check_hypotheses(const Hamiltonian& H, const GridGraph& g, std::size_t n_samples, double eps,
                                  const HypothesisCheckOptions& opt) {
    if (n_samples == 0) throw PreconditionError("check_hypotheses needs at least one sample");
    if (g.interior().empty()) throw PreconditionError("graph has no interior node");
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, g.interior().size() - 1);
    std::uniform_real_distribution<double> ud(opt.u_lo, opt.u_hi);
    std::uniform_real_distribution<double> pd(opt.p_lo, opt.p_hi);

    HypothesisReport rep;
    rep.h3_margin = std::numeric_limits<double>::infinity();
    rep.worst_h2 = std::numeric_limits<double>::infinity();
    const std::size_t K = g.degree();
    std::vector<double> p(K);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const std::size_t j = g.interior()[pick(rng)];
        NodeContext c{j, g.point(j)};
        const double u = ud(rng);
        for (auto& pk : p) pk = pd(rng);
        double norm2 = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double saved = p[k];
            p[k] = saved + eps;
            const double up = H.value(c, u, p);
            p[k] = saved - eps;
            const double dn = H.value(c, u, p);
            p[k] = saved;
            const double d = (up - dn) / (2.0 * eps);
            rep.worst_h2 = std::min(rep.worst_h2, d);
            norm2 += d * d;
        }
        const double du = (H.value(c, u + eps, p) - H.value(c, u - eps, p)) / (2.0 * eps);
        rep.h3_margin = std::min(rep.h3_margin, du);
        norm2 += du * du;
        rep.lipschitz_estimate = std::max(rep.lipschitz_estimate, std::sqrt(norm2));
    }
    rep.h2_ok = rep.worst_h2 >= -opt.tol;
    return rep;
}

} // namespace hjres
