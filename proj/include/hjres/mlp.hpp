#pragma once

#include "hjres/hamiltonians.hpp"
#include "hjres/steady_solvers.hpp"
#include "hjres/time_dependent.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hjres {

enum class Activation : std::uint32_t { Tanh = 1 };

/// Intermediate activations of a batch forward pass, kept for backpropagation.
struct MlpTape {
    std::vector<Eigen::MatrixXd> act;  // act[0] = inputs, act[l] = output of layer l
};

/// Fully connected network R^{d_in} -> R with tanh hidden layers and an affine output.
/// Parameters live in one flat array: for each layer W (fan_out x fan_in, column-major)
/// followed by b (fan_out).
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<std::size_t> layer_sizes, Activation act = Activation::Tanh);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t layer_count() const { return sizes_.size() - 1; }
    std::size_t param_count() const noexcept { return theta_.size(); }
    Activation activation() const noexcept { return act_; }

    std::span<double> params() noexcept { return theta_; }
    std::span<const double> params() const noexcept { return theta_; }

    Eigen::Map<Eigen::MatrixXd> weight(std::size_t l);
    Eigen::Map<const Eigen::MatrixXd> weight(std::size_t l) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t l);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;

    double forward(std::span<const double> x) const;
    /// X is d_in x B; returns the B outputs. Fills tape when given.
    Eigen::RowVectorXd forward_batch(const Eigen::MatrixXd& X, MlpTape* tape = nullptr) const;
    /// Adds d(sum_b dout_b * y_b)/dtheta to grad.
    void backward(const MlpTape& tape, const Eigen::RowVectorXd& dout, std::span<double> grad) const;

    /// Product over layers of min(||W||_F, sqrt(||W||_1 ||W||_inf)), times the activation slope bound 1.
    double lipschitz_bound() const;

    unsigned long long seed = 0;
    double certified_lipschitz = 0.0;

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> offsets_;  // start of W_l in theta_
    std::vector<double> theta_;
    Activation act_ = Activation::Tanh;
};

/// Sum over layers of (fan_in + 1) * fan_out.
std::size_t mlp_param_count(std::span<const std::size_t> layer_sizes);

/// Uniform +-sqrt(6/(fan_in + fan_out)) weights and +-1/sqrt(fan_in) biases, then every
/// weight matrix is scaled by a common factor so that lipschitz_bound() <= L.
Mlp lipschitz_init(std::vector<std::size_t> layer_sizes, double L, unsigned long long seed);

/// Binary layout: magic "HJMLP1\0\0", u32 layer count, u64 sizes, u32 activation id,
/// u64 seed, f64 certified bound, u64 parameter count, f64 parameters (native endianness).
void save_checkpoint(std::ostream& os, const Mlp& net);
Mlp load_checkpoint(std::istream& is);

/// Reverse-mode gradient of a loss that depends on the network through its values at
/// the columns of `points`. The closure receives those values and returns the loss,
/// writing dloss/dvalue into its second argument.
using OutputLoss = std::function<double(const Eigen::RowVectorXd&, Eigen::RowVectorXd&)>;
double param_gradient(const Mlp& net, const Eigen::MatrixXd& points, const OutputLoss& loss, std::vector<double>& grad);

// Optimizers.

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<double> m, v;

    void update(std::span<double> theta, std::span<const double> grad);
};

struct SgdState {
    double lr = 1e-3;
    void update(std::span<double> theta, std::span<const double> grad) const;
};

// Collocation problems.

/// One draw of collocation data: every network input the stochastic loss needs,
/// plus whatever the problem wants to remember about the layout.
struct CollocationBatch {
    Eigen::MatrixXd points;
    std::vector<double> aux;
    std::size_t n_interior = 0;
    std::size_t n_boundary = 0;
};

class TrainingProblem {
public:
    virtual ~TrainingProblem() = default;
    virtual std::size_t input_dim() const = 0;
    virtual CollocationBatch draw(std::mt19937_64& rng) const = 0;
    /// Stochastic loss at network values y on batch.points; writes dloss/dy.
    virtual double evaluate(const CollocationBatch& batch, const Eigen::RowVectorXd& y,
                            Eigen::RowVectorXd& dy) const = 0;
    /// Max |scheme residual| over a fixed deterministic probe set.
    virtual double probe_residual(const Mlp& net) const = 0;
};

/// Stationary scheme H(x, u, p) collocated at random points with the axis stencil x +- h e_i.
/// Loss (1/(q N0)) sum |H|^q + (mu_b/(q Nb)) sum |u - g|^q.
struct StencilProblemSpec {
    std::shared_ptr<const Hamiltonian> hamiltonian;
    double h = 0.0;
    std::size_t n_interior = 20;
    std::size_t n_boundary = 2;
    LossParams loss;
    PointSampler interior;
    PointSampler boundary;
    /// When non-empty, used as the boundary batch every iteration instead of sampling.
    std::vector<std::vector<double>> fixed_boundary;
    CandidateFn boundary_data;
    std::vector<std::vector<double>> probe_points;
};

class StencilProblem final : public TrainingProblem {
public:
    explicit StencilProblem(StencilProblemSpec spec);
    std::size_t input_dim() const override { return dim_; }
    CollocationBatch draw(std::mt19937_64& rng) const override;
    double evaluate(const CollocationBatch& batch, const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) const override;
    double probe_residual(const Mlp& net) const override;

private:
    StencilProblemSpec spec_;
    std::size_t dim_;
};

/// 1D damped eikonal |u'| + lambda u = 1 on (0, 1), u(0) = u(1) = 0, LxF with viscosity alpha.
/// Interior points uniform in (0, 1); the boundary batch is {0, 1} every iteration.
std::unique_ptr<TrainingProblem> make_eikonal1d_problem(double h, double lambda, double alpha, std::size_t n0,
                                                        double mu_b = 10.0);

/// Obstacle problem in (t, x) with implicit time differences:
///   R = min((u(t,x) - u(t-dt,x))/dt + H(u(t,.)), u(t,x) - psi(x)),
/// loss mean R^2 + w0 * mean (u(0,x) - g(x))^2 over separate batches.
struct ObstacleProblemSpec {
    std::size_t dim = 2;
    ObstacleScheme scheme = ObstacleScheme::LaxFriedrichs;
    double h = 0.3;
    double dt = 0.15;
    double t_max = 2.0;
    double half_width = 2.5;
    std::size_t n_interior = 1000;
    std::size_t n_initial = 400;
    double initial_weight = 10.0;
    std::vector<double> a0;  // defaults to (1, ..., 1)
};

class ObstacleProblem final : public TrainingProblem {
public:
    explicit ObstacleProblem(ObstacleProblemSpec spec);
    std::size_t input_dim() const override { return spec_.dim + 1; }
    CollocationBatch draw(std::mt19937_64& rng) const override;
    double evaluate(const CollocationBatch& batch, const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) const override;
    double probe_residual(const Mlp& net) const override;
    const ObstacleProblemSpec& spec() const noexcept { return spec_; }

private:
    /// Network inputs attached to one collocation point (t, x).
    std::size_t stencil_size() const;
    void fill_stencil(Eigen::MatrixXd& P, std::size_t col, double t, std::span<const double> x) const;
    double residual_and_seed(const double* y, std::span<const double> x, double* dy, double scale) const;

    ObstacleProblemSpec spec_;
    std::vector<double> a_;
    std::vector<std::vector<double>> probe_;
};

struct TrainConfig {
    bool adam = true;
    double lr = 1e-3;
    std::size_t max_iters = 10000;
    std::size_t stop_window = 50;
    double stop_tol = 1e-3;
    std::size_t log_every = 0;  // 0 disables the probe log
};

struct TrainLogEntry {
    std::size_t iter = 0;
    double loss_stochastic = 0.0;
    double res_inf_probe = 0.0;
};

struct TrainResult {
    std::size_t iters = 0;
    bool converged = false;
    std::vector<double> losses;
    std::vector<TrainLogEntry> log;
};

/// Stochastic residual minimization: fresh collocation batch each iteration, one Adam or
/// SGD step, stop once the mean of the last stop_window losses drops below stop_tol.
TrainResult sgd_min_res(Mlp& net, const TrainingProblem& pb, const TrainConfig& cfg, std::mt19937_64& rng);

using TrainingFactory = std::function<std::unique_ptr<TrainingProblem>(const ScheduleStage&)>;

struct MultilevelTrainResult {
    std::vector<TrainResult> stages;
    std::size_t total_iters = 0;
};

/// Runs sgd_min_res stage by stage, carrying the parameters across stages. Each stage's
/// max_iters override replaces cfg.max_iters. Stages must be monotone.
MultilevelTrainResult multilevel_train(Mlp& net, std::span<const ScheduleStage> stages,
                                       const TrainingFactory& factory, const TrainConfig& cfg,
                                       std::mt19937_64& rng);

} // namespace hjres
