#include "hjres/steady_solvers.hpp"

#include "hjres/errors.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjres {

void SolveConfig::validate() const {
    if (!(step > 0.0)) throw PreconditionError("step must be positive");
    if (!(tol_inf > 0.0)) throw PreconditionError("tol_inf must be positive");
    if (max_iters < 1) throw PreconditionError("max_iters must be at least 1");
    if (record_every < 1) throw PreconditionError("record_every must be at least 1");
}

GdResult gradient_descent(std::vector<double> u0, const SteadyProblem& pb, const SolveConfig& cfg) {
    cfg.validate();
    GdResult res;
    std::vector<double> u = std::move(u0);
    std::vector<double> last_finite = u;
    double prev_loss = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (;; ++it) {
        const auto r = residual_steady(u, pb);
        const double L = loss_from_residual(r.values, pb.loss.q);
        const double rinf = r.norm_inf();
        if (!std::isfinite(L) || !std::isfinite(rinf))
            throw DivergenceError("loss became non-finite", it, std::move(last_finite));
        last_finite = u;
        if (L > prev_loss) res.loss_increased = true;
        prev_loss = L;
        const bool done = rinf < cfg.tol_inf;
        if (done || it == cfg.max_iters || it % cfg.record_every == 0) res.history.push_back({it, L, rinf});
        if (done) {
            res.converged = true;
            break;
        }
        if (it == cfg.max_iters) break;
        const auto grad = loss_gradient(u, pb, r);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] -= cfg.step * grad[i];
    }
    res.iters = it;
    res.u = std::move(u);
    return res;
}

namespace {

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double norm_inf(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace

NewtonResult newton_system(const SystemFn& F, const SystemJacobianFn& J, std::vector<double> u0,
                           const NewtonOptions& opt) {
    std::vector<double> u = std::move(u0);
    const auto n = static_cast<Eigen::Index>(u.size());
    auto r = F(u);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    bool nudged = false;
    for (std::size_t it = 0;; ++it) {
        const double rinf = norm_inf(r);
        if (!std::isfinite(rinf)) throw NonConvergenceError("Newton residual became non-finite", it, rinf, u);
        if (rinf <= opt.tol) return NewtonResult{std::move(u), it, rinf};
        if (it == opt.max_iters) throw NonConvergenceError("Newton iteration budget exhausted", it, rinf, u);

        const Eigen::SparseMatrix<double> A = J(u);
        if (!analyzed) {
            lu.analyzePattern(A);
            analyzed = true;
        }
        lu.factorize(A);
        if (lu.info() != Eigen::Success) {
            lu.analyzePattern(A);
            lu.factorize(A);
            if (lu.info() != Eigen::Success) throw NonConvergenceError("singular Newton Jacobian", it, rinf, u);
        }
        const Eigen::Map<const Eigen::VectorXd> rv(r.data(), n);
        const Eigen::VectorXd d = lu.solve(-rv);

        const double base = norm2(r);
        std::vector<double> trial(u.size());
        bool accepted = false;
        for (double t = 1.0; t >= opt.min_step; t *= 0.5) {
            for (Eigen::Index i = 0; i < n; ++i) trial[i] = u[i] + t * d[i];
            auto rt = F(trial);
            if (norm2(rt) < base) {
                u.swap(trial);
                r = std::move(rt);
                accepted = true;
                break;
            }
        }
        if (accepted) continue;
        if (nudged) throw NonConvergenceError("Newton line search stalled", it, rinf, u);
        // Stalled at a kink: move off it once along the descent direction of ||F||^2.
        nudged = true;
        const Eigen::VectorXd g = A.transpose() * rv;
        const double gn = g.norm();
        if (!(gn > 0.0)) throw NonConvergenceError("Newton line search stalled", it, rinf, u);
        for (Eigen::Index i = 0; i < n; ++i) u[i] -= 1e-10 * g[i] / gn;
        r = F(u);
    }
}

NewtonResult newton_solve(std::vector<double> u0, const SteadyProblem& pb, const NewtonOptions& opt) {
    SystemFn F = [&pb](std::span<const double> u) { return residual_steady(u, pb).values; };
    SystemJacobianFn J = [&pb](std::span<const double> u) { return assemble_jacobian(u, pb).to_eigen(); };
    auto res = newton_system(F, J, std::move(u0), opt);
    // Dirichlet rows are linear, so one Newton step already lands on the data up to the
    // rounding of the sparse solve; store the data exactly.
    for (auto b : pb.graph->boundary()) res.u[b] = pb.boundary_values[b];
    res.res_inf = residual_steady(res.u, pb).norm_inf();
    return res;
}

void validate_schedule(std::span<const ScheduleStage> stages) {
    if (stages.empty()) throw PreconditionError("schedule has no stage");
    for (std::size_t m = 0; m < stages.size(); ++m) {
        const auto& s = stages[m];
        if (!(s.h > 0.0)) throw PreconditionError("stage spacing must be positive");
        if (m == 0) continue;
        const auto& p = stages[m - 1];
        if (s.h > p.h || s.lambda > p.lambda || s.alpha > p.alpha)
            throw PreconditionError("schedule must be non-increasing in h, lambda and alpha");
    }
}

MultilevelResult multilevel_solve(std::span<const ScheduleStage> stages, const ProblemFactory& factory,
                                  const SolveConfig& base, std::vector<double> u0) {
    validate_schedule(stages);
    MultilevelResult out;
    for (std::size_t m = 0; m < stages.size(); ++m) {
        auto pb = factory(stages[m]);
        std::vector<double> start;
        if (m == 0) {
            start = u0.empty() ? std::vector<double>(pb.size(), 0.0) : std::move(u0);
        } else {
            start = prolong_left_constant(*out.problems.back().graph, out.stages.back().u, *pb.graph);
        }
        SolveConfig cfg = base;
        if (stages[m].step) cfg.step = *stages[m].step;
        if (stages[m].max_iters) cfg.max_iters = *stages[m].max_iters;
        auto res = gradient_descent(std::move(start), pb, cfg);
        out.total_iters += res.iters;
        out.stages.push_back(std::move(res));
        out.problems.push_back(std::move(pb));
    }
    return out;
}

std::vector<double> prolong_left_constant(const GridGraph& coarse, std::span<const double> u_coarse,
                                          const GridGraph& fine) {
    if (!coarse.lattice() || !fine.lattice()) throw PreconditionError("prolongation needs lattice metadata");
    if (u_coarse.size() != coarse.size()) throw IndexingError("coarse field size does not match graph");
    if (coarse.dim() != fine.dim()) throw PreconditionError("grids differ in dimension");
    const auto& lat = *coarse.lattice();
    const std::size_t d = coarse.dim();
    std::vector<double> out(fine.size());
    std::vector<std::size_t> idx(d);
    for (std::size_t j = 0; j < fine.size(); ++j) {
        auto x = fine.point(j);
        for (std::size_t a = 0; a < d; ++a) {
            const double t = std::floor((x[a] - lat.lo[a]) / lat.h + 1e-9);
            const double clamped = std::clamp(t, 0.0, static_cast<double>(lat.shape[a] - 1));
            idx[a] = static_cast<std::size_t>(clamped);
        }
        if (auto k = coarse.node_at_lattice(lat.linear(idx))) {
            out[j] = u_coarse[*k];
            continue;
        }
        // Left neighbor is not an active site (curved domains): use the nearest coarse node.
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < coarse.size(); ++k) {
            auto y = coarse.point(k);
            double s = 0.0;
            for (std::size_t a = 0; a < d; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
            if (s < best) {
                best = s;
                arg = k;
            }
        }
        out[j] = u_coarse[arg];
    }
    return out;
}

double stability_bound(double Rinf, double bdiff, double lambda) {
    if (!(lambda > 0.0)) throw InapplicableBoundError("stability bound needs lambda > 0");
    return std::max(bdiff, Rinf / lambda);
}

AposterioriDomain box_domain(std::vector<double> lo, std::vector<double> hi, double h, CandidateFn boundary_data) {
    if (lo.size() != hi.size() || lo.empty()) throw PreconditionError("box bounds differ in dimension");
    for (std::size_t a = 0; a < lo.size(); ++a)
        if (!(hi[a] - lo[a] > 2.0 * h)) throw PreconditionError("box too small for the stencil spacing");
    AposterioriDomain dom;
    dom.h = h;
    dom.boundary_data = std::move(boundary_data);
    dom.interior = [lo, hi, h](std::mt19937_64& rng) {
        std::vector<double> x(lo.size());
        for (std::size_t a = 0; a < lo.size(); ++a)
            x[a] = std::uniform_real_distribution<double>(lo[a] + h, hi[a] - h)(rng);
        return x;
    };
    dom.boundary = [lo, hi](std::mt19937_64& rng) {
        const std::size_t d = lo.size();
        std::vector<double> x(d);
        for (std::size_t a = 0; a < d; ++a) x[a] = std::uniform_real_distribution<double>(lo[a], hi[a])(rng);
        const auto face = std::uniform_int_distribution<std::size_t>(0, 2 * d - 1)(rng);
        x[face / 2] = face % 2 == 0 ? lo[face / 2] : hi[face / 2];
        return x;
    };
    return dom;
}

AposterioriReport aposteriori_report(const CandidateFn& u, const Hamiltonian& H, const AposterioriDomain& dom,
                                     std::size_t n_mc, unsigned long long seed) {
    const double lambda = H.info().lambda;
    if (!(lambda > 0.0)) throw InapplicableBoundError("a-posteriori bound needs lambda > 0");
    std::mt19937_64 rng(seed);
    AposterioriReport rep;
    for (std::size_t s = 0; s < n_mc; ++s) {
        const auto x = dom.interior(rng);
        const auto st = collocation_stencil(x, dom.h, x.size());
        const double ux = u(x);
        std::vector<double> p(st.offsets.size());
        std::vector<double> y(x.size());
        for (std::size_t k = 0; k < st.offsets.size(); ++k) {
            for (std::size_t a = 0; a < x.size(); ++a) y[a] = x[a] + st.offsets[k][a];
            p[k] = (ux - u(y)) / dom.h;
        }
        rep.sup_residual = std::max(rep.sup_residual, std::abs(H.value(NodeContext{kNoNode, x}, ux, p)));
    }
    for (std::size_t s = 0; s < n_mc; ++s) {
        const auto x = dom.boundary(rng);
        rep.sup_boundary = std::max(rep.sup_boundary, std::abs(u(x) - dom.boundary_data(x)));
    }
    rep.bound = std::max(rep.sup_residual / lambda, rep.sup_boundary);
    return rep;
}

} // namespace hjres
