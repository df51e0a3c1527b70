#pragma once

#include "hjres/residual.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hjres {

/// Row-compressed Jacobian of the scaled residual, rows/columns in graph order.
class SparseJacobian {
public:
    SparseJacobian() = default;
    SparseJacobian(std::vector<std::size_t> row_offsets, std::vector<std::size_t> cols, std::vector<double> vals,
                   std::size_t M, std::size_t N);

    std::size_t size() const noexcept { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
    std::size_t interior_count() const noexcept { return M_; }
    std::size_t boundary_count() const noexcept { return N_; }

    std::span<const std::size_t> row_cols(std::size_t j) const {
        return {cols_.data() + row_offsets_[j], row_offsets_[j + 1] - row_offsets_[j]};
    }
    std::span<const double> row_vals(std::size_t j) const {
        return {vals_.data() + row_offsets_[j], row_offsets_[j + 1] - row_offsets_[j]};
    }
    double entry(std::size_t j, std::size_t k) const;

    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> transpose_multiply(std::span<const double> w) const;

    Eigen::SparseMatrix<double> to_eigen() const;
    Eigen::MatrixXd to_dense() const;

    /// Drops exact zeros of A.
    static SparseJacobian from_dense(const Eigen::MatrixXd& A, std::size_t M, std::size_t N);

private:
    std::vector<std::size_t> row_offsets_;
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
    std::size_t M_ = 0;
    std::size_t N_ = 0;
};

SparseJacobian assemble_jacobian(std::span<const double> u, const SteadyProblem& pb);

/// min(lambda / M^{1/q}, (mu_b / N)^{1/q}).
double mu_bound(double lambda, std::size_t M, std::size_t N, double mu_b, double q);

/// min_j |a_jj| - sum_{k != j} |a_jk|.
double gershgorin_margin(const SparseJacobian& J);

enum class EigenWhich { SmallestModulus, LargestModulus };

struct EigenPair {
    std::complex<double> value;
    std::vector<double> vector;  // unit l2, first nonzero entry positive
};

struct EigenOptions {
    std::size_t dense_limit = 5000;
    double tol = 1e-10;
    std::size_t max_iters = 10000;
    double cluster_tol = 1e-6;
};

struct EigenResult {
    EigenPair extreme;
    /// Every eigenpair whose modulus is within cluster_tol of the extreme one
    /// (dense path only; the iterative path reports just the extreme pair).
    std::vector<EigenPair> cluster;
    bool dense = true;
};

EigenResult extreme_eigenpair(const SparseJacobian& J, EigenWhich which, const EigenOptions& opt = {});

struct ConditionReport {
    double mu = 0.0;
    double margin = 0.0;
    double eig_min = 0.0;  // modulus
    double eig_max = 0.0;  // modulus
    double kappa = 0.0;
};

ConditionReport condition_report(std::span<const double> u, const SteadyProblem& pb, const EigenOptions& opt = {});

} // namespace hjres
