#include "hjres/errors.hpp"
#include "hjres/mlp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

using namespace hjres;

namespace {

// Relative l2 error of the backprop gradient against central differences on a subset of parameters.
double gradient_error(Mlp& net, const Eigen::MatrixXd& P, const OutputLoss& loss, std::mt19937_64& rng,
                      std::size_t count = 20) {
    std::vector<double> grad;
    param_gradient(net, P, loss, grad);
    std::uniform_int_distribution<std::size_t> pick(0, net.param_count() - 1);
    Eigen::RowVectorXd scratch;
    auto L = [&] { return loss(net.forward_batch(P), scratch); };
    double num = 0, den = 0;
    for (std::size_t c = 0; c < count; ++c) {
        const auto k = pick(rng);
        const double s = net.params()[k], e = 1e-6;
        net.params()[k] = s + e;
        const double lp = L();
        net.params()[k] = s - e;
        const double lm = L();
        net.params()[k] = s;
        const double fd = (lp - lm) / (2 * e);
        num += (grad[k] - fd) * (grad[k] - fd);
        den += fd * fd;
    }
    return std::sqrt(num / den);
}

OutputLoss problem_loss(const TrainingProblem& pb, const CollocationBatch& b) {
    return [&pb, &b](const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) { return pb.evaluate(b, y, dy); };
}

} // namespace

TEST_CASE("parameter layout") {
    const std::vector<std::size_t> paper_net{1, 64, 64, 64, 1};
    CHECK(mlp_param_count(paper_net) == 8513);
    Mlp net(paper_net);
    CHECK(net.param_count() == 8513);
    CHECK(net.weight(0).rows() == 64);
    CHECK(net.weight(0).cols() == 1);
    CHECK(net.bias(3).size() == 1);
}

TEST_CASE("forward pass basics") {
    Mlp zero({3, 5, 1});
    const double x[] = {0.3, -1.0, 2.0};
    CHECK(zero.forward(x) == 0.0);

    Mlp affine({1, 1});
    affine.weight(0)(0, 0) = 2.0;
    affine.bias(0)(0) = 1.0;
    const double three[] = {3.0};
    CHECK(affine.forward(three) == 7.0);

    const auto net = lipschitz_init({2, 8, 8, 1}, 2.0, 5);
    Eigen::MatrixXd X(2, 3);
    X << 0.1, 0.5, -0.7, 0.2, -0.3, 0.9;
    const auto y = net.forward_batch(X);
    for (Eigen::Index c = 0; c < 3; ++c) {
        const double xc[] = {X(0, c), X(1, c)};
        CHECK(y(c) == doctest::Approx(net.forward(xc)).epsilon(1e-14));
    }
    CHECK_THROWS_AS(net.forward(three), IndexingError);
}

TEST_CASE("Lipschitz initialization") {
    const auto net = lipschitz_init({2, 16, 16, 1}, 1.0, 42);
    CHECK(net.certified_lipschitz <= 1.0 + 1e-12);
    CHECK(net.lipschitz_bound() <= 1.0 + 1e-12);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-3, 3);
    double worst = 0;
    for (int s = 0; s < 10000; ++s) {
        const double a[] = {U(rng), U(rng)}, b[] = {U(rng), U(rng)};
        const double d = std::hypot(a[0] - b[0], a[1] - b[1]);
        if (d < 1e-12) continue;
        worst = std::max(worst, std::abs(net.forward(a) - net.forward(b)) / d);
    }
    CHECK(worst <= 1.0 + 1e-9);

    CHECK_THROWS_AS(lipschitz_init({1, 4, 1}, 0.0, 1), PreconditionError);
    const auto a = lipschitz_init({1, 4, 1}, 2.0, 9), b = lipschitz_init({1, 4, 1}, 2.0, 9);
    CHECK(std::vector<double>(a.params().begin(), a.params().end()) ==
          std::vector<double>(b.params().begin(), b.params().end()));
}

TEST_CASE("checkpoint round trip") {
    const auto net = lipschitz_init({3, 7, 1}, 3.0, 77);
    std::stringstream ss;
    save_checkpoint(ss, net);
    const auto back = load_checkpoint(ss);
    CHECK(back.layer_sizes() == net.layer_sizes());
    CHECK(back.seed == 77);
    CHECK(back.certified_lipschitz == net.certified_lipschitz);
    CHECK(std::vector<double>(back.params().begin(), back.params().end()) ==
          std::vector<double>(net.params().begin(), net.params().end()));
    std::stringstream junk("not a checkpoint");
    CHECK_THROWS(load_checkpoint(junk));
}

TEST_CASE("backprop matches finite differences") {
    std::mt19937_64 rng(13);
    auto net = lipschitz_init({1, 16, 16, 1}, 4.0, 3);
    const auto pb = make_eikonal1d_problem(0.05, 0.5, 1.0, 20);
    for (int t = 0; t < 5; ++t) {
        const auto b = pb->draw(rng);
        CHECK(gradient_error(net, b.points, problem_loss(*pb, b), rng) <= 1e-5);
    }

    for (auto scheme : {ObstacleScheme::LaxFriedrichs, ObstacleScheme::OneSided}) {
        ObstacleProblemSpec spec;
        spec.scheme = scheme;
        spec.n_interior = 30;
        spec.n_initial = 20;
        ObstacleProblem ob(spec);
        auto onet = lipschitz_init({3, 12, 12, 1}, 4.0, 8);
        const auto b = ob.draw(rng);
        CHECK(gradient_error(onet, b.points, problem_loss(ob, b), rng) <= 1e-5);
    }
}

TEST_CASE("gradient linearity and zero residual") {
    std::mt19937_64 rng(2);
    const auto net = lipschitz_init({1, 8, 1}, 2.0, 4);
    Eigen::MatrixXd P(1, 5);
    P << 0.1, 0.2, 0.4, 0.6, 0.9;
    const Eigen::RowVectorXd target = net.forward_batch(P);

    OutputLoss zero = [&](const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) {
        dy = y - target;
        return 0.5 * dy.squaredNorm();
    };
    std::vector<double> g;
    CHECK(param_gradient(net, P, zero, g) == 0.0);
    for (double v : g) CHECK(v == 0.0);

    OutputLoss L1 = [](const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) {
        dy = y;
        return 0.5 * y.squaredNorm();
    };
    OutputLoss L2 = [](const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) {
        dy = Eigen::RowVectorXd::Ones(y.size());
        return y.sum();
    };
    const double a = 0.3, b = -2.0;
    OutputLoss mix = [&](const Eigen::RowVectorXd& y, Eigen::RowVectorXd& dy) {
        Eigen::RowVectorXd d1, d2;
        const double v = a * L1(y, d1) + b * L2(y, d2);
        dy = a * d1 + b * d2;
        return v;
    };
    std::vector<double> g1, g2, gm;
    param_gradient(net, P, L1, g1);
    param_gradient(net, P, L2, g2);
    param_gradient(net, P, mix, gm);
    for (std::size_t k = 0; k < gm.size(); ++k) CHECK(gm[k] == doctest::Approx(a * g1[k] + b * g2[k]).epsilon(1e-12));
}

TEST_CASE("optimizers") {
    std::vector<double> theta{1.0, -1.0};
    const std::vector<double> grad{0.5, -0.25};
    SgdState{0.1}.update(theta, grad);
    CHECK(theta[0] == doctest::Approx(0.95));
    CHECK(theta[1] == doctest::Approx(-0.975));

    AdamState adam;
    adam.lr = 0.01;
    std::vector<double> t2{0.0, 0.0};
    adam.update(t2, grad);
    // first Adam step moves each coordinate by lr against the gradient sign
    CHECK(t2[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(t2[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(adam.step == 1);
}

TEST_CASE("training determinism and zero learning rate") {
    const auto pb = make_eikonal1d_problem(0.05, 1.0, 1.0, 20);
    TrainConfig cfg;
    cfg.max_iters = 30;
    cfg.stop_tol = 0.0;

    auto run = [&](unsigned long long seed) {
        auto net = lipschitz_init({1, 8, 8, 1}, 4.0, seed);
        std::mt19937_64 rng(seed);
        const auto r = sgd_min_res(net, *pb, cfg, rng);
        return std::make_pair(std::vector<double>(net.params().begin(), net.params().end()), r.losses);
    };
    const auto a = run(3), b = run(3);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);

    auto net = lipschitz_init({1, 8, 8, 1}, 4.0, 3);
    const std::vector<double> before(net.params().begin(), net.params().end());
    TrainConfig frozen = cfg;
    frozen.lr = 0.0;
    frozen.adam = false;
    std::mt19937_64 rng(1);
    sgd_min_res(net, *pb, frozen, rng);
    CHECK(std::vector<double>(net.params().begin(), net.params().end()) == before);
}

TEST_CASE("training reduces the loss and single-stage schedules match") {
    const auto pb = make_eikonal1d_problem(0.05, 1.0, 1.0, 20);
    TrainConfig cfg;
    cfg.max_iters = 1500;
    cfg.log_every = 500;
    auto net = lipschitz_init({1, 16, 16, 1}, 4.0, 2);
    const double before = pb->probe_residual(net);
    std::mt19937_64 rng(5);
    const auto r = sgd_min_res(net, *pb, cfg, rng);
    CHECK(pb->probe_residual(net) < before);
    CHECK(r.log.size() >= 1);

    const std::vector<ScheduleStage> one{{0.05, 1.0, 1.0, {}, std::size_t{40}}};
    auto factory = [](const ScheduleStage& s) { return make_eikonal1d_problem(s.h, s.lambda, s.alpha, 20); };
    auto n1 = lipschitz_init({1, 8, 1}, 4.0, 6), n2 = n1;
    std::mt19937_64 r1(8), r2(8);
    TrainConfig c40;
    c40.max_iters = 40;
    c40.stop_tol = 0.0;
    multilevel_train(n1, one, factory, c40, r1);
    sgd_min_res(n2, *factory(one[0]), c40, r2);
    CHECK(std::vector<double>(n1.params().begin(), n1.params().end()) ==
          std::vector<double>(n2.params().begin(), n2.params().end()));
}

TEST_CASE("stochastic loss is unbiased") {
    // zero network and a piecewise-constant source: E[L] = (0.3 * 1 + 0.7 * 4) / 2
    StencilProblemSpec s;
    s.hamiltonian = std::make_shared<UpwindEikonalHamiltonian>(0.0, [](std::span<const double> x) {
        return x[0] < 0.3 ? 1.0 : 2.0;
    });
    s.h = 0.01;
    s.n_interior = 20;
    s.interior = [](std::mt19937_64& rng) {
        return std::vector<double>{std::uniform_real_distribution<double>(0.0, 1.0)(rng)};
    };
    s.fixed_boundary = {{0.0}, {1.0}};
    s.boundary_data = [](std::span<const double>) { return 0.0; };
    const StencilProblem pb(s);
    const Mlp zero({1, 4, 1});
    std::mt19937_64 rng(99);
    const std::size_t draws = 20000;
    double sum = 0, sum2 = 0;
    Eigen::RowVectorXd dy;
    for (std::size_t k = 0; k < draws; ++k) {
        const auto b = pb.draw(rng);
        const double L = pb.evaluate(b, zero.forward_batch(b.points), dy);
        sum += L;
        sum2 += L * L;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
    CHECK(std::abs(mean - 1.55) <= 3 * se);
}
