#include "hjres/time_dependent.hpp"

#include "hjres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace hjres {

SpaceTimeField::SpaceTimeField(std::size_t nodes, std::size_t steps, double dt, double fill)
    : nodes_(nodes), steps_(steps), dt_(dt), values_((steps + 1) * nodes, fill) {
    if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
}

void SpaceTimeProblem::validate() const {
    if (!graph || !F) throw PreconditionError("space-time problem is missing its graph or F");
    if (initial.size() != graph->size()) throw IndexingError("initial data must be node-indexed");
    if (boundary.nodes() != graph->size()) throw IndexingError("boundary data does not match graph");
    if (boundary.steps() < 1) throw PreconditionError("need at least one time step");
    if (graph->interior().empty()) throw PreconditionError("problem has no interior node");
    loss.validate();
}

namespace {

void check_shape(const SpaceTimeField& U, const SpaceTimeProblem& pb) {
    pb.validate();
    if (U.nodes() != pb.graph->size() || U.steps() != pb.steps())
        throw IndexingError("space-time field shape does not match problem");
    if (U.dt() != pb.dt()) throw IndexingError("space-time field time step does not match problem");
}

struct Scales {
    double interior, boundary, initial;
};

Scales scales(const SpaceTimeProblem& pb) {
    const double M = static_cast<double>(pb.graph->interior().size());
    const double Mb = static_cast<double>(pb.graph->boundary().size());
    const double N = static_cast<double>(pb.steps());
    const double q = pb.loss.q;
    return {std::pow(1.0 / (M * N), 1.0 / q), Mb > 0 ? std::pow(pb.loss.mu_b / (Mb * N), 1.0 / q) : 0.0,
            std::pow(pb.loss.mu_i / M, 1.0 / q)};
}

void slot_values(std::span<const double> u, std::size_t j, const GridGraph& g, std::vector<double>& p) {
    auto nb = g.neighbors(j);
    auto len = g.edge_lengths(j);
    p.resize(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) p[s] = (u[j] - u[nb[s]]) / len[s];
}

double F_at(const SpaceTimeProblem& pb, std::span<const double> u, std::size_t j, std::vector<double>& p) {
    slot_values(u, j, *pb.graph, p);
    return pb.F->value(NodeContext{j, pb.graph->point(j)}, u[j], p);
}

} // namespace

SpaceTimeField residual_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb, TimeScheme scheme) {
    check_shape(U, pb);
    const auto& g = *pb.graph;
    const auto sc = scales(pb);
    const double dt = pb.dt();
    SpaceTimeField R(g.size(), pb.steps(), dt);
    std::vector<double> p;
    for (auto j : g.interior()) R.at(0, j) = sc.initial * (U.at(0, j) - pb.initial[j]);
    if (scheme == TimeScheme::Explicit)
        for (auto j : g.boundary()) R.at(0, j) = sc.boundary * (U.at(0, j) - pb.boundary.at(0, j));
    for (std::size_t n = 1; n <= pb.steps(); ++n) {
        auto src = U.slab(scheme == TimeScheme::Implicit ? n : n - 1);
        for (auto j : g.interior())
            R.at(n, j) = sc.interior * ((U.at(n, j) - U.at(n - 1, j)) / dt + F_at(pb, src, j, p));
        for (auto j : g.boundary()) R.at(n, j) = sc.boundary * (U.at(n, j) - pb.boundary.at(n, j));
    }
    return R;
}

SpaceTimeField residual_spacetime_implicit(const SpaceTimeField& U, const SpaceTimeProblem& pb) {
    return residual_spacetime(U, pb, TimeScheme::Implicit);
}

SpaceTimeField residual_spacetime_explicit(const SpaceTimeField& U, const SpaceTimeProblem& pb) {
    return residual_spacetime(U, pb, TimeScheme::Explicit);
}

double loss_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb, TimeScheme scheme) {
    return loss_from_residual(residual_spacetime(U, pb, scheme).flat(), pb.loss.q);
}

Eigen::SparseMatrix<double> jacobian_spacetime(const SpaceTimeField& U, const SpaceTimeProblem& pb,
                                               TimeScheme scheme) {
    check_shape(U, pb);
    const auto& g = *pb.graph;
    const auto sc = scales(pb);
    const double dt = pb.dt();
    const std::size_t S = g.size();
    std::vector<Eigen::Triplet<double>> t;
    auto add = [&t](std::size_t r, std::size_t c, double v) {
        t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
    };
    for (auto j : g.interior()) add(j, j, sc.initial);
    if (scheme == TimeScheme::Explicit)
        for (auto j : g.boundary()) add(j, j, sc.boundary);
    for (std::size_t n = 1; n <= pb.steps(); ++n) {
        const std::size_t m = scheme == TimeScheme::Implicit ? n : n - 1;
        auto src = U.slab(m);
        for (auto j : g.interior()) {
            const std::size_t row = n * S + j;
            auto ir = interior_row(src, j, g, *pb.F);
            add(row, n * S + j, sc.interior / dt);
            add(row, (n - 1) * S + j, -sc.interior / dt);
            add(row, m * S + j, sc.interior * ir.diag);
            auto nb = g.neighbors(j);
            for (std::size_t s = 0; s < nb.size(); ++s) add(row, m * S + nb[s], sc.interior * ir.off[s]);
        }
        for (auto j : g.boundary()) add(n * S + j, n * S + j, sc.boundary);
    }
    const auto dim = static_cast<Eigen::Index>(S * (pb.steps() + 1));
    Eigen::SparseMatrix<double> J(dim, dim);
    J.setFromTriplets(t.begin(), t.end());
    J.makeCompressed();
    return J;
}

SpaceTimeField loss_spacetime_gradient(const SpaceTimeField& U, const SpaceTimeProblem& pb, TimeScheme scheme) {
    const auto R = residual_spacetime(U, pb, scheme);
    const auto w = residual_weights(R.flat(), pb.loss.q);
    const auto J = jacobian_spacetime(U, pb, scheme);
    const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    const Eigen::VectorXd gv = J.transpose() * wv;
    SpaceTimeField G(U.nodes(), U.steps(), U.dt());
    std::copy(gv.data(), gv.data() + gv.size(), G.flat().begin());
    return G;
}

std::vector<double> slab_residual_inf(const SpaceTimeField& U, const SpaceTimeProblem& pb) {
    check_shape(U, pb);
    std::vector<double> out(pb.steps() + 1, 0.0);
    std::vector<double> p;
    for (std::size_t n = 1; n <= pb.steps(); ++n) {
        auto src = U.slab(n);
        for (auto j : pb.graph->interior()) {
            const double r = (U.at(n, j) - U.at(n - 1, j)) / pb.dt() + F_at(pb, src, j, p);
            out[n] = std::max(out[n], std::abs(r));
        }
    }
    return out;
}

F3Report check_f3(const Hamiltonian& F, const GridGraph& g, double dt, std::size_t samples,
                  const HypothesisCheckOptions& opt) {
    if (samples < 1) throw PreconditionError("check_f3 needs at least one sample");
    if (g.interior().empty()) throw PreconditionError("check_f3 needs interior nodes");
    std::mt19937_64 rng(opt.seed);
    std::uniform_int_distribution<std::size_t> pick(0, g.interior().size() - 1);
    std::uniform_real_distribution<double> du(opt.u_lo, opt.u_hi), dp(opt.p_lo, opt.p_hi);
    double lo = std::numeric_limits<double>::infinity();
    std::vector<double> p, d;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto j = g.interior()[pick(rng)];
        p.resize(g.neighbors(j).size());
        d.resize(p.size());
        for (auto& x : p) x = dp(rng);
        const double dFdu = F.derivatives(NodeContext{j, g.point(j)}, du(rng), p, d);
        lo = std::min(lo, dt * dFdu);
    }
    F3Report rep;
    rep.min_dt_dFdu = lo;
    rep.worst_lambda = -std::min(0.0, lo);
    rep.ok = lo >= -1.0 + 1e-6;
    return rep;
}

StepHamiltonian::StepHamiltonian(std::shared_ptr<const Hamiltonian> F, std::vector<double> prev, double dt,
                                 std::vector<double> obstacle)
    : Hamiltonian(HamiltonianInfo{"step", (obstacle.empty() ? 1.0 / dt : std::min(1.0 / dt, 1.0)) +
                                              std::min(0.0, F->info().lambda),
                                  F->info().alpha, std::nullopt}),
      F_(std::move(F)),
      prev_(std::move(prev)),
      dt_(dt),
      obstacle_(std::move(obstacle)) {}

double StepHamiltonian::value(const NodeContext& c, double u, std::span<const double> p) const {
    const double a = (u - prev_[c.index]) / dt_ + F_->value(c, u, p);
    if (obstacle_.empty()) return a;
    return std::min(a, u - obstacle_[c.index]);
}

double StepHamiltonian::derivatives(const NodeContext& c, double u, std::span<const double> p,
                                    std::span<double> dp) const {
    if (!obstacle_.empty()) {
        const double a = (u - prev_[c.index]) / dt_ + F_->value(c, u, p);
        if (u - obstacle_[c.index] < a) {
            std::fill(dp.begin(), dp.end(), 0.0);
            return 1.0;
        }
    }
    return 1.0 / dt_ + F_->derivatives(c, u, p, dp);
}

namespace {

std::vector<double> initial_slab(const SpaceTimeProblem& pb) {
    std::vector<double> u0(pb.graph->size());
    for (auto j : pb.graph->interior()) u0[j] = pb.initial[j];
    for (auto j : pb.graph->boundary()) u0[j] = pb.boundary.at(0, j);
    return u0;
}

} // namespace

SpaceTimeField march_implicit(const SpaceTimeProblem& pb, const NewtonOptions& opt, std::span<const double> obstacle) {
    pb.validate();
    if (!obstacle.empty() && obstacle.size() != pb.graph->size())
        throw IndexingError("obstacle must be node-indexed");
    const auto& g = *pb.graph;
    SpaceTimeField U(g.size(), pb.steps(), pb.dt());
    auto u0 = initial_slab(pb);
    std::copy(u0.begin(), u0.end(), U.slab(0).begin());
    for (std::size_t n = 1; n <= pb.steps(); ++n) {
        std::vector<double> prev(U.slab(n - 1).begin(), U.slab(n - 1).end());
        SteadyProblem step;
        step.graph = pb.graph;
        step.hamiltonian = std::make_shared<StepHamiltonian>(
            pb.F, prev, pb.dt(), std::vector<double>(obstacle.begin(), obstacle.end()));
        step.boundary_values.assign(U.slab(n).size(), 0.0);
        for (auto j : g.boundary()) step.boundary_values[j] = pb.boundary.at(n, j);
        step.loss = pb.loss;
        try {
            auto res = newton_solve(std::move(prev), step, opt);
            std::copy(res.u.begin(), res.u.end(), U.slab(n).begin());
        } catch (const NonConvergenceError& e) {
            throw NonConvergenceError("marching failed at step " + std::to_string(n) + ": " + e.what(),
                                      e.iterations(), e.residual_inf(), e.best());
        }
    }
    return U;
}

SpaceTimeField march_explicit(const SpaceTimeProblem& pb) {
    pb.validate();
    const auto& g = *pb.graph;
    SpaceTimeField U(g.size(), pb.steps(), pb.dt());
    auto u0 = initial_slab(pb);
    std::copy(u0.begin(), u0.end(), U.slab(0).begin());
    std::vector<double> p;
    for (std::size_t n = 1; n <= pb.steps(); ++n) {
        auto src = U.slab(n - 1);
        for (auto j : g.interior()) U.at(n, j) = src[j] - pb.dt() * F_at(pb, src, j, p);
        for (auto j : g.boundary()) U.at(n, j) = pb.boundary.at(n, j);
    }
    return U;
}

SpaceTimeField explicit_residual_recurrence(const SpaceTimeField& U, const SpaceTimeProblem& pb,
                                            std::span<const double> w_terminal) {
    check_shape(U, pb);
    const auto& g = *pb.graph;
    const double dt = pb.dt();
    const std::size_t N = pb.steps();
    SpaceTimeField W(g.size(), N, dt);
    if (!w_terminal.empty()) {
        if (w_terminal.size() != g.size()) throw IndexingError("terminal weights must be node-indexed");
        for (auto j : g.interior()) W.at(N, j) = w_terminal[j];
    }
    std::vector<double> p, d;
    for (std::size_t n = N; n-- > 0;) {
        auto un = U.slab(n);
        // Coefficients F_u and F_{p_k} at every interior node of slab n.
        std::vector<double> Fu(g.size(), 0.0);
        std::vector<std::vector<double>> Fp(g.size());
        for (auto j : g.interior()) {
            slot_values(un, j, g, p);
            d.assign(p.size(), 0.0);
            Fu[j] = pb.F->derivatives(NodeContext{j, g.point(j)}, un[j], p, d);
            Fp[j] = d;
        }
        for (auto j : g.interior()) {
            auto nb = g.neighbors(j);
            auto len = g.edge_lengths(j);
            double self = 1.0 - dt * Fu[j];
            for (std::size_t s = 0; s < nb.size(); ++s) self -= dt / len[s] * Fp[j][s];
            double w = self * W.at(n + 1, j);
            for (std::size_t s = 0; s < nb.size(); ++s) {
                const auto k = nb[s];
                if (!g.is_interior(k)) continue;
                const auto slot = g.neighbor_slot(k, j);
                if (!slot) throw InvalidGridError("neighbor relation is not symmetric");
                w += dt / len[s] * Fp[k][*slot] * W.at(n + 1, k);
            }
            W.at(n, j) = w;
        }
    }
    return W;
}

double stability_time_bound(double prev_diff, double Rinf_next, double bdiff, double dt) {
    return prev_diff + std::max(dt * Rinf_next, bdiff);
}

std::vector<double> cumulative_time_bound(double initial_diff, std::span<const double> Rinf,
                                          std::span<const double> bdiff, double dt) {
    if (Rinf.size() != bdiff.size()) throw IndexingError("per-step residuals and boundary gaps differ in length");
    std::vector<double> out(Rinf.size(), initial_diff);
    for (std::size_t n = 1; n < Rinf.size(); ++n) out[n] = stability_time_bound(out[n - 1], Rinf[n], bdiff[n], dt);
    return out;
}

double obstacle_transport(ObstacleScheme scheme, std::span<const double> a, double h, double u,
                          std::span<const double> minus, std::span<const double> plus,
                          std::span<const double> minus2) {
    const std::size_t d = a.size();
    double drift = 0.0;
    if (scheme == ObstacleScheme::LaxFriedrichs) {
        double visc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            drift += a[i] * (plus[i] - minus[i]) / (2.0 * h);
            visc += (plus[i] + minus[i] - 2.0 * u) / (2.0 * h);
        }
        return std::max(drift, 0.0) - visc;
    }
    for (std::size_t i = 0; i < d; ++i) {
        const double m2 = minus2.empty() ? std::nan("") : minus2[i];
        drift += a[i] * (std::isnan(m2) ? (u - minus[i]) / h : (3.0 * u - 4.0 * minus[i] + m2) / (2.0 * h));
    }
    return std::max(drift, 0.0);
}

double obstacle_psi(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s) - 0.5;
}

double obstacle_initial(std::span<const double> x, std::span<const double> a0) {
    if (x.size() != a0.size()) throw IndexingError("point and drift differ in dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] + a0[i]) * (x[i] + a0[i]);
    return std::max(std::sqrt(s) - 1.0, obstacle_psi(x));
}

std::vector<double> unit_drift(std::span<const double> a0) {
    double s = 0.0;
    for (double v : a0) s += v * v;
    if (!(s > 0.0)) throw PreconditionError("drift direction must be nonzero");
    std::vector<double> a(a0.begin(), a0.end());
    for (auto& v : a) v /= std::sqrt(s);
    return a;
}

ObstacleLaxFriedrichs::ObstacleLaxFriedrichs(std::vector<double> a)
    : Hamiltonian(HamiltonianInfo{"obstacle_lax_friedrichs", 0.0, 1.0, std::nullopt}), a_(std::move(a)) {}

double ObstacleLaxFriedrichs::value(const NodeContext&, double, std::span<const double> p) const {
    if (p.size() != 2 * a_.size()) throw IncompleteStencilError("obstacle scheme needs one axis pair per drift entry");
    double drift = 0.0, visc = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) {
        drift += a_[i] * 0.5 * (p[2 * i] - p[2 * i + 1]);
        visc += 0.5 * (p[2 * i] + p[2 * i + 1]);
    }
    return std::max(drift, 0.0) + visc;
}

double ObstacleLaxFriedrichs::derivatives(const NodeContext&, double, std::span<const double> p,
                                          std::span<double> dp) const {
    if (p.size() != 2 * a_.size()) throw IncompleteStencilError("obstacle scheme needs one axis pair per drift entry");
    double drift = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) drift += a_[i] * 0.5 * (p[2 * i] - p[2 * i + 1]);
    const double on = drift > 0.0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) {
        dp[2 * i] = 0.5 + on * 0.5 * a_[i];
        dp[2 * i + 1] = 0.5 - on * 0.5 * a_[i];
    }
    return 0.0;
}

SpaceTimeField obstacle_residual(const SpaceTimeField& U, const GridGraph& g, std::span<const double> a,
                                 std::span<const double> psi, std::span<const double> g0, ObstacleScheme scheme) {
    if (U.nodes() != g.size() || psi.size() != g.size() || g0.size() != g.size())
        throw IndexingError("obstacle fields must be node-indexed");
    if (a.size() != g.dim()) throw IndexingError("drift dimension does not match grid");
    if (!g.lattice()) throw PreconditionError("obstacle residual needs a lattice grid");
    const auto& lat = *g.lattice();
    const std::size_t d = g.dim();
    const double h = lat.h;
    SpaceTimeField R(g.size(), U.steps(), U.dt());
    for (auto j : g.interior()) R.at(0, j) = U.at(0, j) - g0[j];
    std::vector<double> minus(d), plus(d), minus2(d);
    for (std::size_t n = 1; n <= U.steps(); ++n) {
        auto u = U.slab(n);
        for (auto j : g.interior()) {
            auto nb = g.neighbors(j);
            auto idx = lat.multi(g.lattice_index(j));
            for (std::size_t i = 0; i < d; ++i) {
                minus[i] = u[nb[2 * i]];
                plus[i] = u[nb[2 * i + 1]];
                minus2[i] = std::nan("");
                if (idx[i] >= 2) {
                    auto back = idx;
                    back[i] -= 2;
                    if (auto k = g.node_at_lattice(lat.linear(back))) minus2[i] = u[*k];
                }
            }
            const double A = (u[j] - U.at(n - 1, j)) / U.dt() + obstacle_transport(scheme, a, h, u[j], minus, plus, minus2);
            R.at(n, j) = std::min(A, u[j] - psi[j]);
        }
    }
    return R;
}

void write_spacetime_fields(const std::string& dir, const GridGraph& g, const SpaceTimeField& U) {
    std::filesystem::create_directories(dir);
    for (std::size_t n = 0; n <= U.steps(); ++n) {
        std::ofstream os(std::filesystem::path(dir) / ("field_t" + std::to_string(n) + ".txt"));
        if (!os) throw PreconditionError("cannot write field files into " + dir);
        write_field(os, g, U.slab(n));
    }
}

} // namespace hjres
