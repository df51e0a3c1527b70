#include "hjres/jacobian.hpp"

#include "hjres/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hjres {

SparseJacobian::SparseJacobian(std::vector<std::size_t> row_offsets, std::vector<std::size_t> cols,
                               std::vector<double> vals, std::size_t M, std::size_t N)
    : row_offsets_(std::move(row_offsets)), cols_(std::move(cols)), vals_(std::move(vals)), M_(M), N_(N) {
    if (row_offsets_.empty() || row_offsets_.back() != cols_.size() || cols_.size() != vals_.size())
        throw IndexingError("malformed sparse Jacobian arrays");
}

double SparseJacobian::entry(std::size_t j, std::size_t k) const {
    auto c = row_cols(j);
    auto v = row_vals(j);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c[i] == k) s += v[i];
    return s;
}

std::vector<double> SparseJacobian::multiply(std::span<const double> x) const {
    if (x.size() != size()) throw IndexingError("vector size does not match Jacobian");
    std::vector<double> y(size(), 0.0);
    for (std::size_t j = 0; j < size(); ++j) {
        auto c = row_cols(j);
        auto v = row_vals(j);
        for (std::size_t i = 0; i < c.size(); ++i) y[j] += v[i] * x[c[i]];
    }
    return y;
}

std::vector<double> SparseJacobian::transpose_multiply(std::span<const double> w) const {
    if (w.size() != size()) throw IndexingError("vector size does not match Jacobian");
    std::vector<double> y(size(), 0.0);
    for (std::size_t j = 0; j < size(); ++j) {
        auto c = row_cols(j);
        auto v = row_vals(j);
        for (std::size_t i = 0; i < c.size(); ++i) y[c[i]] += v[i] * w[j];
    }
    return y;
}

Eigen::SparseMatrix<double> SparseJacobian::to_eigen() const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(vals_.size());
    for (std::size_t j = 0; j < size(); ++j) {
        auto c = row_cols(j);
        auto v = row_vals(j);
        for (std::size_t i = 0; i < c.size(); ++i)
            t.emplace_back(static_cast<int>(j), static_cast<int>(c[i]), v[i]);
    }
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

Eigen::MatrixXd SparseJacobian::to_dense() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < size(); ++j) {
        auto c = row_cols(j);
        auto v = row_vals(j);
        for (std::size_t i = 0; i < c.size(); ++i)
            A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c[i])) += v[i];
    }
    return A;
}

SparseJacobian SparseJacobian::from_dense(const Eigen::MatrixXd& A, std::size_t M, std::size_t N) {
    std::vector<std::size_t> off{0}, cols;
    std::vector<double> vals;
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        for (Eigen::Index k = 0; k < A.cols(); ++k) {
            if (A(j, k) != 0.0) {
                cols.push_back(static_cast<std::size_t>(k));
                vals.push_back(A(j, k));
            }
        }
        off.push_back(cols.size());
    }
    return SparseJacobian(std::move(off), std::move(cols), std::move(vals), M, N);
}

SparseJacobian assemble_jacobian(std::span<const double> u, const SteadyProblem& pb) {
    auto r = residual_steady(u, pb);  // validates sizes
    const auto& g = *pb.graph;
    std::vector<std::size_t> off{0}, cols;
    std::vector<double> vals;
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g.is_interior(j)) {
            auto row = interior_row(u, j, g, *pb.hamiltonian);
            cols.push_back(j);
            vals.push_back(r.interior_scale * row.diag);
            auto nb = g.neighbors(j);
            for (std::size_t s = 0; s < nb.size(); ++s) {
                cols.push_back(nb[s]);
                vals.push_back(r.interior_scale * row.off[s]);
            }
        } else {
            cols.push_back(j);
            vals.push_back(r.boundary_scale);
        }
        off.push_back(cols.size());
    }
    return SparseJacobian(std::move(off), std::move(cols), std::move(vals), r.M, r.N);
}

double mu_bound(double lambda, std::size_t M, std::size_t N, double mu_b, double q) {
    if (!(q > 1.0) || M == 0 || N == 0 || !(mu_b > 0.0) || !(lambda > 0.0))
        throw PreconditionError("mu_bound needs positive arguments and q > 1");
    return std::min(lambda * interior_scale(M, q), boundary_scale(N, mu_b, q));
}

double gershgorin_margin(const SparseJacobian& J) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < J.size(); ++j) {
        auto c = J.row_cols(j);
        auto v = J.row_vals(j);
        double diag = 0.0, off = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] == j)
                diag += v[i];
            else
                off += std::abs(v[i]);
        }
        margin = std::min(margin, std::abs(diag) - off);
    }
    return margin;
}

namespace {

std::vector<double> normalized(const Eigen::VectorXd& v) {
    std::vector<double> out(v.data(), v.data() + v.size());
    const double n = v.norm();
    if (n == 0.0) return out;
    for (auto& x : out) x /= n;
    const double thresh = 1e-12;
    for (double x : out) {
        if (std::abs(x) > thresh) {
            if (x < 0.0)
                for (auto& y : out) y = -y;
            break;
        }
    }
    return out;
}

EigenPair real_pair(std::complex<double> value, const Eigen::VectorXcd& vec) {
    Eigen::VectorXd re = vec.real();
    if (re.norm() < 1e-8 * vec.norm()) re = vec.imag();
    return EigenPair{value, normalized(re)};
}

EigenResult dense_eigen(const SparseJacobian& J, EigenWhich which, const EigenOptions& opt) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(J.to_dense(), true);
    if (es.info() != Eigen::Success) throw IterationLimitError("dense eigensolver failed", 0.0);
    const auto& vals = es.eigenvalues();
    const auto n = vals.size();
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double a = std::abs(vals[i]), b = std::abs(vals[best]);
        if (which == EigenWhich::SmallestModulus ? a < b : a > b) best = i;
    }
    EigenResult res;
    res.dense = true;
    res.extreme = real_pair(vals[best], es.eigenvectors().col(best));
    const double target = std::abs(vals[best]);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(std::abs(vals[i]) - target) <= opt.cluster_tol)
            res.cluster.push_back(real_pair(vals[i], es.eigenvectors().col(i)));
    }
    return res;
}

EigenResult iterative_eigen(const SparseJacobian& J, EigenWhich which, const EigenOptions& opt) {
    const auto A = J.to_eigen();
    const auto n = A.rows();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    if (which == EigenWhich::SmallestModulus) {
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success) throw IterationLimitError("Jacobian factorization failed", 0.0);
    }
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] += 1e-3 * static_cast<double>(i % 7);
    x.normalize();
    double est = 0.0, prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        Eigen::VectorXd y = which == EigenWhich::SmallestModulus ? Eigen::VectorXd(lu.solve(x)) : Eigen::VectorXd(A * x);
        const double ny = y.norm();
        if (!(ny > 0.0)) throw IterationLimitError("power iteration collapsed", est);
        y /= ny;
        est = y.dot(A * y);  // Rayleigh quotient
        x = y;
        if (std::abs(est - prev) <= opt.tol * std::max(1.0, std::abs(est))) {
            EigenResult res;
            res.dense = false;
            res.extreme = EigenPair{std::complex<double>(est, 0.0), normalized(x)};
            res.cluster.push_back(res.extreme);
            return res;
        }
        prev = est;
    }
    throw IterationLimitError("eigen-iteration budget exhausted", est);
}

} // namespace

EigenResult extreme_eigenpair(const SparseJacobian& J, EigenWhich which, const EigenOptions& opt) {
    if (J.size() == 0) throw PreconditionError("empty Jacobian");
    if (J.size() <= opt.dense_limit) return dense_eigen(J, which, opt);
    return iterative_eigen(J, which, opt);
}

ConditionReport condition_report(std::span<const double> u, const SteadyProblem& pb, const EigenOptions& opt) {
    if (pb.graph->interior().empty()) throw PreconditionError("condition report needs interior nodes");
    auto J = assemble_jacobian(u, pb);
    ConditionReport rep;
    rep.mu = mu_bound(pb.hamiltonian->info().lambda, J.interior_count(), J.boundary_count(), pb.loss.mu_b,
                      pb.loss.q);
    rep.margin = gershgorin_margin(J);
    if (J.size() <= opt.dense_limit) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(J.to_dense(), false);
        if (es.info() != Eigen::Success) throw IterationLimitError("dense eigensolver failed", 0.0);
        const Eigen::VectorXd mod = es.eigenvalues().cwiseAbs();
        rep.eig_min = mod.minCoeff();
        rep.eig_max = mod.maxCoeff();
    } else {
        rep.eig_min = std::abs(extreme_eigenpair(J, EigenWhich::SmallestModulus, opt).extreme.value);
        rep.eig_max = std::abs(extreme_eigenpair(J, EigenWhich::LargestModulus, opt).extreme.value);
    }
    rep.kappa = rep.eig_max / rep.eig_min;
    return rep;
}

} // namespace hjres
