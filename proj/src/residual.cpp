#include "hjres/residual.hpp"

#include "hjres/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hjres {

void LossParams::validate() const {
    if (!(q > 1.0)) throw PreconditionError("loss exponent q must exceed 1");
    if (!(mu_b > 0.0)) throw PreconditionError("boundary weight mu_b must be positive");
    if (!(mu_i > 0.0)) throw PreconditionError("initial weight mu_i must be positive");
}

double ResidualVector::norm_inf() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

double interior_scale(std::size_t M, double q) { return std::pow(static_cast<double>(M), -1.0 / q); }

double boundary_scale(std::size_t N, double mu_b, double q) {
    return std::pow(mu_b / static_cast<double>(N), 1.0 / q);
}

namespace {

void check_sizes(std::span<const double> u, const SteadyProblem& pb) {
    if (!pb.graph || !pb.hamiltonian) throw PreconditionError("problem is missing its graph or Hamiltonian");
    if (u.size() != pb.graph->size()) throw IndexingError("field size does not match graph");
    if (pb.boundary_values.size() != pb.graph->size())
        throw IndexingError("boundary data must be node-indexed");
    pb.loss.validate();
}

double node_value(std::span<const double> u, std::size_t j, const GridGraph& g, const Hamiltonian& H,
                  std::vector<double>& p) {
    auto nb = g.neighbors(j);
    auto len = g.edge_lengths(j);
    p.resize(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) p[s] = (u[j] - u[nb[s]]) / len[s];
    return H.value(NodeContext{j, g.point(j)}, u[j], p);
}

} // namespace

ResidualVector residual_steady(std::span<const double> u, const SteadyProblem& pb) {
    check_sizes(u, pb);
    const auto& g = *pb.graph;
    ResidualVector r;
    r.M = g.interior().size();
    r.N = g.boundary().size();
    if (r.M == 0) throw PreconditionError("problem has no interior node");
    r.interior_scale = interior_scale(r.M, pb.loss.q);
    r.boundary_scale = r.N > 0 ? boundary_scale(r.N, pb.loss.mu_b, pb.loss.q) : 0.0;
    r.values.assign(g.size(), 0.0);
    std::vector<double> p;
    for (auto j : g.interior()) r.values[j] = r.interior_scale * node_value(u, j, g, *pb.hamiltonian, p);
    for (auto j : g.boundary()) r.values[j] = r.boundary_scale * (u[j] - pb.boundary_values[j]);
    return r;
}

std::vector<double> scheme_values(std::span<const double> u, const SteadyProblem& pb) {
    check_sizes(u, pb);
    const auto& g = *pb.graph;
    std::vector<double> out(g.size(), 0.0);
    std::vector<double> p;
    for (auto j : g.interior()) out[j] = node_value(u, j, g, *pb.hamiltonian, p);
    return out;
}

ResidualSplit residual_split(std::span<const double> u, const SteadyProblem& pb) {
    auto h = scheme_values(u, pb);
    ResidualSplit s;
    for (auto j : pb.graph->interior()) s.interior_inf = std::max(s.interior_inf, std::abs(h[j]));
    for (auto j : pb.graph->boundary())
        s.boundary_inf = std::max(s.boundary_inf, std::abs(u[j] - pb.boundary_values[j]));
    return s;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double loss_from_residual(std::span<const double> r, double q) {
    std::vector<double> terms(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double a = std::abs(r[i]);
        terms[i] = q == 2.0 ? a * a : std::pow(a, q);
    }
    return pairwise_sum(terms) / q;
}

double loss(std::span<const double> u, const SteadyProblem& pb) {
    return loss_from_residual(residual_steady(u, pb).values, pb.loss.q);
}

std::vector<double> residual_weights(std::span<const double> r, double q) {
    std::vector<double> w(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (q == 2.0) {
            w[i] = r[i];
        } else {
            const double a = std::abs(r[i]);
            w[i] = a == 0.0 ? 0.0 : std::copysign(std::pow(a, q - 1.0), r[i]);
        }
    }
    return w;
}

InteriorRow interior_row(std::span<const double> u, std::size_t j, const GridGraph& g, const Hamiltonian& H) {
    auto nb = g.neighbors(j);
    auto len = g.edge_lengths(j);
    std::vector<double> p(nb.size()), dp(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) p[s] = (u[j] - u[nb[s]]) / len[s];
    InteriorRow row;
    row.diag = H.derivatives(NodeContext{j, g.point(j)}, u[j], p, dp);
    row.off.resize(nb.size());
    for (std::size_t s = 0; s < nb.size(); ++s) {
        row.diag += dp[s] / len[s];
        row.off[s] = -dp[s] / len[s];
    }
    return row;
}

std::vector<double> loss_gradient(std::span<const double> u, const SteadyProblem& pb) {
    return loss_gradient(u, pb, residual_steady(u, pb));
}

std::vector<double> loss_gradient(std::span<const double> u, const SteadyProblem& pb, const ResidualVector& r) {
    auto w = residual_weights(r.values, pb.loss.q);
    const auto& g = *pb.graph;
    std::vector<double> grad(g.size(), 0.0);
    for (auto j : g.interior()) {
        if (w[j] == 0.0) continue;
        auto row = interior_row(u, j, g, *pb.hamiltonian);
        const double c = w[j] * r.interior_scale;
        grad[j] += c * row.diag;
        auto nb = g.neighbors(j);
        for (std::size_t s = 0; s < nb.size(); ++s) grad[nb[s]] += c * row.off[s];
    }
    for (auto j : g.boundary()) grad[j] += w[j] * r.boundary_scale;
    return grad;
}

} // namespace hjres
