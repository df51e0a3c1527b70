#include "hjres/mlp.hpp"

#include "hjres/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace hjres {

std::size_t mlp_param_count(std::span<const std::size_t> layer_sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    return n;
}

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation act) : sizes_(std::move(layer_sizes)), act_(act) {
    if (sizes_.size() < 2) throw PreconditionError("network needs an input and an output layer");
    if (sizes_.back() != 1) throw PreconditionError("network output must be scalar");
    for (auto s : sizes_)
        if (s == 0) throw PreconditionError("layer sizes must be positive");
    if (act_ != Activation::Tanh) throw PreconditionError("unsupported activation");
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(off);
        off += (sizes_[l] + 1) * sizes_[l + 1];
    }
    theta_.assign(off, 0.0);
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(std::size_t l) {
    return {theta_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
            static_cast<Eigen::Index>(sizes_[l])};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
    return {theta_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
            static_cast<Eigen::Index>(sizes_[l])};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t l) {
    return {theta_.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], static_cast<Eigen::Index>(sizes_[l + 1])};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
    return {theta_.data() + offsets_[l] + sizes_[l] * sizes_[l + 1], static_cast<Eigen::Index>(sizes_[l + 1])};
}

double Mlp::forward(std::span<const double> x) const {
    if (x.size() != input_dim()) throw IndexingError("input dimension does not match network");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), 1);
    for (std::size_t i = 0; i < x.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = x[i];
    return forward_batch(X)(0);
}

Eigen::RowVectorXd Mlp::forward_batch(const Eigen::MatrixXd& X, MlpTape* tape) const {
    if (static_cast<std::size_t>(X.rows()) != input_dim()) throw IndexingError("input dimension does not match network");
    const std::size_t L = layer_count();
    if (tape) {
        tape->act.resize(L + 1);
        tape->act[0] = X;
    }
    Eigen::MatrixXd a = X;
    for (std::size_t l = 0; l < L; ++l) {
        Eigen::MatrixXd z = weight(l) * a;
        z.colwise() += bias(l);
        if (l + 1 < L) z = z.array().tanh().matrix();
        a.swap(z);
        if (tape) tape->act[l + 1] = a;
    }
    return a.row(0);
}

void Mlp::backward(const MlpTape& tape, const Eigen::RowVectorXd& dout, std::span<double> grad) const {
    if (grad.size() != theta_.size()) throw IndexingError("gradient buffer does not match parameters");
    const std::size_t L = layer_count();
    Eigen::MatrixXd delta = dout;  // dloss/dz of the current layer, fan_out x B
    for (std::size_t l = L; l-- > 0;) {
        const auto& in = tape.act[l];
        Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
                                       static_cast<Eigen::Index>(sizes_[l]));
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + sizes_[l] * sizes_[l + 1],
                                       static_cast<Eigen::Index>(sizes_[l + 1]));
        gW.noalias() += delta * in.transpose();
        gb += delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd up = weight(l).transpose() * delta;
        delta = (up.array() * (1.0 - in.array().square())).matrix();  // tanh' = 1 - tanh^2
    }
}

double Mlp::lipschitz_bound() const {
    double prod = 1.0;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const auto W = weight(l);
        const double fro = W.norm();
        const double one = W.cwiseAbs().colwise().sum().maxCoeff();
        const double inf = W.cwiseAbs().rowwise().sum().maxCoeff();
        prod *= std::min(fro, std::sqrt(one * inf));
    }
    return prod;
}

Mlp lipschitz_init(std::vector<std::size_t> layer_sizes, double L, unsigned long long seed) {
    if (!(L > 0.0)) throw PreconditionError("Lipschitz target must be positive");
    Mlp net(std::move(layer_sizes));
    net.seed = seed;
    std::mt19937_64 rng(seed);
    const auto& s = net.layer_sizes();
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double wlim = std::sqrt(6.0 / static_cast<double>(s[l] + s[l + 1]));
        const double blim = 1.0 / std::sqrt(static_cast<double>(s[l]));
        std::uniform_real_distribution<double> uw(-wlim, wlim), ub(-blim, blim);
        auto W = net.weight(l);
        for (Eigen::Index c = 0; c < W.cols(); ++c)
            for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = uw(rng);
        auto b = net.bias(l);
        for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = ub(rng);
    }
    const double bound = net.lipschitz_bound();
    if (bound > L) {
        const double f = std::pow(L / bound, 1.0 / static_cast<double>(net.layer_count()));
        for (std::size_t l = 0; l < net.layer_count(); ++l) net.weight(l) *= f;
    }
    net.certified_lipschitz = net.lipschitz_bound();
    return net;
}

namespace {

constexpr char kMagic[8] = {'H', 'J', 'M', 'L', 'P', '1', '\0', '\0'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw PreconditionError("truncated checkpoint");
    return v;
}

} // namespace

void save_checkpoint(std::ostream& os, const Mlp& net) {
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_sizes().size()));
    for (auto s : net.layer_sizes()) put<std::uint64_t>(os, s);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(net.activation()));
    put<std::uint64_t>(os, net.seed);
    put<double>(os, net.certified_lipschitz);
    put<std::uint64_t>(os, net.param_count());
    auto p = net.params();
    os.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!os) throw PreconditionError("failed to write checkpoint");
}

Mlp load_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw PreconditionError("not a network checkpoint");
    const auto nl = get<std::uint32_t>(is);
    if (nl < 2 || nl > 1024) throw PreconditionError("implausible layer count in checkpoint");
    std::vector<std::size_t> sizes(nl);
    for (auto& s : sizes) s = get<std::uint64_t>(is);
    const auto act = static_cast<Activation>(get<std::uint32_t>(is));
    Mlp net(sizes, act);
    net.seed = get<std::uint64_t>(is);
    net.certified_lipschitz = get<double>(is);
    const auto n = get<std::uint64_t>(is);
    if (n != net.param_count()) throw PreconditionError("checkpoint parameter count does not match layer sizes");
    auto p = net.params();
    is.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw PreconditionError("truncated checkpoint");
    return net;
}

double param_gradient(const Mlp& net, const Eigen::MatrixXd& points, const OutputLoss& loss, std::vector<double>& grad) {
    MlpTape tape;
    const Eigen::RowVectorXd y = net.forward_batch(points, &tape);
    Eigen::RowVectorXd dy = Eigen::RowVectorXd::Zero(y.size());
    const double L = loss(y, dy);
    grad.assign(net.param_count(), 0.0);
    net.backward(tape, dy, grad);
    return L;
}

void AdamState::update(std::span<double> theta, std::span<const double> grad) {
    if (m.size() != theta.size()) {
        m.assign(theta.size(), 0.0);
        v.assign(theta.size(), 0.0);
    }
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
}

void SgdState::update(std::span<double> theta, std::span<const double> grad) const {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

// ---------------------------------------------------------------------------

namespace {

double powq(double a, double q) { return q == 2.0 ? a * a : std::pow(a, q); }

/// d/dr (|r|^q / q) = |r|^{q-1} sign(r).
double dpowq(double r, double q) {
    if (q == 2.0) return r;
    const double a = std::abs(r);
    return a == 0.0 ? 0.0 : std::copysign(std::pow(a, q - 1.0), r);
}

} // namespace

StencilProblem::StencilProblem(StencilProblemSpec spec) : spec_(std::move(spec)) {
    if (!spec_.hamiltonian) throw PreconditionError("stencil problem needs a Hamiltonian");
    if (!(spec_.h > 0.0)) throw PreconditionError("stencil spacing must be positive");
    if (spec_.n_interior < 1 || spec_.n_boundary < 1) throw PreconditionError("batch sizes must be at least 1");
    if (!spec_.fixed_boundary.empty()) spec_.n_boundary = spec_.fixed_boundary.size();
    if (!spec_.interior || (!spec_.boundary && spec_.fixed_boundary.empty()) || !spec_.boundary_data)
        throw PreconditionError("stencil problem needs samplers and boundary data");
    spec_.loss.validate();
    std::mt19937_64 probe_rng(0);
    dim_ = spec_.interior(probe_rng).size();
}

CollocationBatch StencilProblem::draw(std::mt19937_64& rng) const {
    const std::size_t d = dim_, K = 2 * d + 1;
    CollocationBatch b;
    b.n_interior = spec_.n_interior;
    b.n_boundary = spec_.n_boundary;
    b.points.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(b.n_interior * K + b.n_boundary));
    b.aux.resize(b.n_boundary);
    Eigen::Index col = 0;
    for (std::size_t s = 0; s < b.n_interior; ++s) {
        const auto x = spec_.interior(rng);
        for (std::size_t k = 0; k < K; ++k, ++col) {
            for (std::size_t a = 0; a < d; ++a) b.points(static_cast<Eigen::Index>(a), col) = x[a];
            if (k > 0) {
                const std::size_t axis = (k - 1) / 2;
                b.points(static_cast<Eigen::Index>(axis), col) += (k - 1) % 2 == 0 ? -spec_.h : spec_.h;
            }
        }
    }
    for (std::size_t s = 0; s < b.n_boundary; ++s, ++col) {
        const auto x = spec_.fixed_boundary.empty() ? spec_.boundary(rng) : spec_.fixed_boundary[s];
        for (std::size_t a = 0; a < d; ++a) b.points(static_cast<Eigen::Index>(a), col) = x[a];
        b.aux[s] = spec_.boundary_data(x);
    }
    return b;
}

double StencilProblem::evaluate(const CollocationBatch& b, const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) const {
    const std::size_t d = dim_, K = 2 * d + 1;
    const double q = spec_.loss.q;
    const double wi = 1.0 / static_cast<double>(b.n_interior);
    const double wb = spec_.loss.mu_b / static_cast<double>(b.n_boundary);
    dy.setZero(y.size());
    std::vector<double> p(2 * d), dp(2 * d), x(d);
    double interior = 0.0, boundary = 0.0;
    for (std::size_t s = 0; s < b.n_interior; ++s) {
        const auto c0 = static_cast<Eigen::Index>(s * K);
        for (std::size_t a = 0; a < d; ++a) x[a] = b.points(static_cast<Eigen::Index>(a), c0);
        const double u = y(c0);
        for (std::size_t k = 0; k < 2 * d; ++k) p[k] = (u - y(c0 + static_cast<Eigen::Index>(k) + 1)) / spec_.h;
        const NodeContext ctx{kNoNode, x};
        const double H = spec_.hamiltonian->value(ctx, u, p);
        interior += powq(std::abs(H), q);
        const double g = wi * dpowq(H, q);
        if (g == 0.0) continue;
        const double Hu = spec_.hamiltonian->derivatives(ctx, u, p, dp);
        double du = Hu;
        for (std::size_t k = 0; k < 2 * d; ++k) {
            du += dp[k] / spec_.h;
            dy(c0 + static_cast<Eigen::Index>(k) + 1) -= g * dp[k] / spec_.h;
        }
        dy(c0) += g * du;
    }
    const auto cb = static_cast<Eigen::Index>(b.n_interior * K);
    for (std::size_t s = 0; s < b.n_boundary; ++s) {
        const double r = y(cb + static_cast<Eigen::Index>(s)) - b.aux[s];
        boundary += powq(std::abs(r), q);
        dy(cb + static_cast<Eigen::Index>(s)) += wb * dpowq(r, q);
    }
    return (wi * interior + wb * boundary) / q;
}

double StencilProblem::probe_residual(const Mlp& net) const {
    const std::size_t d = dim_;
    double worst = 0.0;
    std::vector<double> p(2 * d), y(d);
    for (const auto& x : spec_.probe_points) {
        const double u = net.forward(x);
        for (std::size_t k = 0; k < 2 * d; ++k) {
            y = x;
            y[k / 2] += k % 2 == 0 ? -spec_.h : spec_.h;
            p[k] = (u - net.forward(y)) / spec_.h;
        }
        worst = std::max(worst, std::abs(spec_.hamiltonian->value(NodeContext{kNoNode, x}, u, p)));
    }
    return worst;
}

std::unique_ptr<TrainingProblem> make_eikonal1d_problem(double h, double lambda, double alpha, std::size_t n0,
                                                        double mu_b) {
    StencilProblemSpec s;
    s.hamiltonian = make_lax_friedrichs_eikonal(alpha, lambda);
    s.h = h;
    s.n_interior = n0;
    s.loss.mu_b = mu_b;
    s.interior = [](std::mt19937_64& rng) {
        return std::vector<double>{std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
    };
    s.fixed_boundary = {{0.0}, {1.0}};
    s.boundary_data = [](std::span<const double>) { return 0.0; };
    for (int i = 1; i < 200; ++i) s.probe_points.push_back({i / 200.0});
    return std::make_unique<StencilProblem>(std::move(s));
}

// ---------------------------------------------------------------------------

ObstacleProblem::ObstacleProblem(ObstacleProblemSpec spec) : spec_(std::move(spec)) {
    if (spec_.dim < 1) throw PreconditionError("obstacle dimension must be positive");
    if (spec_.a0.empty()) spec_.a0.assign(spec_.dim, 1.0);
    if (spec_.a0.size() != spec_.dim) throw PreconditionError("a0 dimension does not match");
    if (!(spec_.h > 0.0) || !(spec_.dt > 0.0) || !(spec_.t_max > 0.0) || !(spec_.half_width > 0.0))
        throw PreconditionError("obstacle spacings and extents must be positive");
    if (spec_.n_interior < 1 || spec_.n_initial < 1) throw PreconditionError("batch sizes must be at least 1");
    a_ = unit_drift(spec_.a0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(0.0, spec_.t_max), ux(-spec_.half_width, spec_.half_width);
    for (int i = 0; i < 256; ++i) {
        std::vector<double> tx(spec_.dim + 1);
        tx[0] = ut(rng);
        for (std::size_t a = 0; a < spec_.dim; ++a) tx[a + 1] = ux(rng);
        probe_.push_back(std::move(tx));
    }
}

std::size_t ObstacleProblem::stencil_size() const {
    return 2 + (spec_.scheme == ObstacleScheme::OneSided ? 3 : 2) * spec_.dim;
}

// Column order: (t, x), (t - dt, x), then per axis (x - h e_i, x + h e_i[, x - 2h e_i]).
void ObstacleProblem::fill_stencil(Eigen::MatrixXd& P, std::size_t col, double t, std::span<const double> x) const {
    const std::size_t d = spec_.dim;
    const std::size_t per = spec_.scheme == ObstacleScheme::OneSided ? 3 : 2;
    const std::size_t K = stencil_size();
    for (std::size_t k = 0; k < K; ++k) {
        const auto c = static_cast<Eigen::Index>(col + k);
        P(0, c) = k == 1 ? t - spec_.dt : t;
        for (std::size_t a = 0; a < d; ++a) P(static_cast<Eigen::Index>(a + 1), c) = x[a];
        if (k >= 2) {
            const std::size_t axis = (k - 2) / per, which = (k - 2) % per;
            const double shift = which == 0 ? -spec_.h : (which == 1 ? spec_.h : -2.0 * spec_.h);
            P(static_cast<Eigen::Index>(axis + 1), c) += shift;
        }
    }
}

double ObstacleProblem::residual_and_seed(const double* y, std::span<const double> x, double* dy, double scale) const {
    const std::size_t d = spec_.dim;
    const std::size_t per = spec_.scheme == ObstacleScheme::OneSided ? 3 : 2;
    const double h = spec_.h, u = y[0];
    std::vector<double> minus(d), plus(d), minus2;
    if (per == 3) minus2.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        minus[i] = y[2 + per * i];
        plus[i] = y[3 + per * i];
        if (per == 3) minus2[i] = y[4 + per * i];
    }
    const double T = obstacle_transport(spec_.scheme, a_, h, u, minus, plus, minus2);
    const double A = (u - y[1]) / spec_.dt + T;
    const double B = u - obstacle_psi(x);
    if (B < A) {
        if (dy) dy[0] += scale * B;
        return B;
    }
    if (!dy) return A;
    const double g = scale * A;
    dy[0] += g / spec_.dt;
    dy[1] -= g / spec_.dt;
    double drift = 0.0;
    if (per == 2) {
        for (std::size_t i = 0; i < d; ++i) drift += a_[i] * (plus[i] - minus[i]) / (2.0 * h);
        const double on = drift > 0.0 ? 1.0 : 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            dy[0] += g / h;
            dy[2 + per * i] += g * (-on * a_[i] - 1.0) / (2.0 * h);
            dy[3 + per * i] += g * (on * a_[i] - 1.0) / (2.0 * h);
        }
    } else {
        for (std::size_t i = 0; i < d; ++i) drift += a_[i] * (3.0 * u - 4.0 * minus[i] + minus2[i]) / (2.0 * h);
        if (drift > 0.0) {
            for (std::size_t i = 0; i < d; ++i) {
                dy[0] += g * a_[i] * 3.0 / (2.0 * h);
                dy[2 + per * i] -= g * a_[i] * 2.0 / h;
                dy[4 + per * i] += g * a_[i] / (2.0 * h);
            }
        }
    }
    return A;
}

CollocationBatch ObstacleProblem::draw(std::mt19937_64& rng) const {
    const std::size_t d = spec_.dim, K = stencil_size();
    CollocationBatch b;
    b.n_interior = spec_.n_interior;
    b.n_boundary = spec_.n_initial;
    b.points.resize(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(b.n_interior * K + b.n_boundary));
    std::uniform_real_distribution<double> ut(0.0, spec_.t_max), ux(-spec_.half_width, spec_.half_width);
    std::vector<double> x(d);
    for (std::size_t s = 0; s < b.n_interior; ++s) {
        const double t = ut(rng);
        for (auto& v : x) v = ux(rng);
        fill_stencil(b.points, s * K, t, x);
    }
    b.aux.resize(b.n_boundary);
    for (std::size_t s = 0; s < b.n_boundary; ++s) {
        const auto c = static_cast<Eigen::Index>(b.n_interior * K + s);
        b.points(0, c) = 0.0;
        for (std::size_t a = 0; a < d; ++a) b.points(static_cast<Eigen::Index>(a + 1), c) = x[a] = ux(rng);
        b.aux[s] = obstacle_initial(x, spec_.a0);
    }
    return b;
}

// Loss: mean R^2 + w0 * mean (u(0, x) - g(x))^2.
double ObstacleProblem::evaluate(const CollocationBatch& b, const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) const {
    const std::size_t d = spec_.dim, K = stencil_size();
    dy.setZero(y.size());
    const double wi = 1.0 / static_cast<double>(b.n_interior);
    const double w0 = spec_.initial_weight / static_cast<double>(b.n_boundary);
    double interior = 0.0, initial = 0.0;
    std::vector<double> x(d);
    for (std::size_t s = 0; s < b.n_interior; ++s) {
        const auto c0 = static_cast<Eigen::Index>(s * K);
        for (std::size_t a = 0; a < d; ++a) x[a] = b.points(static_cast<Eigen::Index>(a + 1), c0);
        const double R = residual_and_seed(y.data() + c0, x, dy.data() + c0, 2.0 * wi);
        interior += R * R;
    }
    for (std::size_t s = 0; s < b.n_boundary; ++s) {
        const auto c = static_cast<Eigen::Index>(b.n_interior * K + s);
        const double r = y(c) - b.aux[s];
        initial += r * r;
        dy(c) += 2.0 * w0 * r;
    }
    return wi * interior + w0 * initial;
}

double ObstacleProblem::probe_residual(const Mlp& net) const {
    const std::size_t K = stencil_size();
    Eigen::MatrixXd P(static_cast<Eigen::Index>(spec_.dim + 1), static_cast<Eigen::Index>(probe_.size() * K));
    for (std::size_t s = 0; s < probe_.size(); ++s)
        fill_stencil(P, s * K, probe_[s][0], std::span<const double>(probe_[s]).subspan(1));
    const Eigen::RowVectorXd y = net.forward_batch(P);
    double worst = 0.0;
    for (std::size_t s = 0; s < probe_.size(); ++s) {
        const double R = residual_and_seed(y.data() + s * K, std::span<const double>(probe_[s]).subspan(1), nullptr, 0.0);
        worst = std::max(worst, std::abs(R));
    }
    return worst;
}

// ---------------------------------------------------------------------------

TrainResult sgd_min_res(Mlp& net, const TrainingProblem& pb, const TrainConfig& cfg, std::mt19937_64& rng) {
    if (pb.input_dim() != net.input_dim()) throw PreconditionError("network input does not match problem");
    if (cfg.stop_window < 1) throw PreconditionError("stop window must be at least 1");
    TrainResult res;
    AdamState adam;
    adam.lr = cfg.lr;
    const SgdState sgd{cfg.lr};
    std::vector<double> grad(net.param_count());
    MlpTape tape;
    Eigen::RowVectorXd dy;
    double window_sum = 0.0;
    for (std::size_t k = 0; k < cfg.max_iters; ++k) {
        const auto batch = pb.draw(rng);
        const Eigen::RowVectorXd y = net.forward_batch(batch.points, &tape);
        const double L = pb.evaluate(batch, y, dy);
        if (!std::isfinite(L)) throw DivergenceError("stochastic loss became non-finite", k, {});
        std::fill(grad.begin(), grad.end(), 0.0);
        net.backward(tape, dy, grad);
        if (cfg.adam)
            adam.update(net.params(), grad);
        else
            sgd.update(net.params(), grad);
        res.losses.push_back(L);
        res.iters = k + 1;
        window_sum += L;
        if (res.losses.size() > cfg.stop_window) window_sum -= res.losses[res.losses.size() - 1 - cfg.stop_window];
        if (cfg.log_every > 0 && k % cfg.log_every == 0) res.log.push_back({k, L, pb.probe_residual(net)});
        if (res.losses.size() >= cfg.stop_window && window_sum / static_cast<double>(cfg.stop_window) < cfg.stop_tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

MultilevelTrainResult multilevel_train(Mlp& net, std::span<const ScheduleStage> stages, const TrainingFactory& factory,
                                       const TrainConfig& cfg, std::mt19937_64& rng) {
    validate_schedule(stages);
    MultilevelTrainResult out;
    for (const auto& st : stages) {
        auto pb = factory(st);
        TrainConfig c = cfg;
        if (st.max_iters) c.max_iters = *st.max_iters;
        if (st.step) c.lr = *st.step;
        auto r = sgd_min_res(net, *pb, c, rng);
        out.total_iters += r.iters;
        out.stages.push_back(std::move(r));
    }
    return out;
}

} // namespace hjres
