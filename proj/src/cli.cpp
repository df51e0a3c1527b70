#include "hjres/cli.hpp"

#include "hjres/config.hpp"
#include "hjres/errors.hpp"
#include "hjres/experiments.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <locale>
#include <mutex>
#include <sstream>
#include <thread>

namespace hjres::cli {

namespace fs = std::filesystem;
using config::Config;
namespace ex = experiments;

namespace {

struct Common {
    std::string config_path;
    std::optional<unsigned long long> seed;
    std::string out = "runs";
    std::size_t threads = 1;
    bool dry_run = false;
    bool force = false;
    std::vector<std::string> overrides;
};

class NotConverged : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::ofstream open_csv(const fs::path& p, const std::string& header) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os.imbue(std::locale::classic());
    os << std::setprecision(12);
    os << header << '\n';
    return os;
}

// Runs fn(0..n-1) on up to `threads` workers; rethrows the first failure.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

fs::path make_output_dir(const Common& c, const std::string& command) {
    fs::path base(c.out);
    if (c.force) {
        fs::create_directories(base);
        return base;
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream stamp;
    stamp << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    fs::path dir = base / stamp.str();
    for (int k = 1; fs::exists(dir); ++k) dir = base / (stamp.str() + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

std::string fmt_h(double h) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << h;
    return os.str();
}

void write_history(const fs::path& p, const std::vector<HistoryPoint>& hist) {
    auto os = open_csv(p, "iter,loss,res_inf");
    for (const auto& e : hist) os << e.iter << ',' << e.loss << ',' << e.res_inf << '\n';
}

void write_train_log(const fs::path& p, const std::vector<TrainLogEntry>& log) {
    auto os = open_csv(p, "iter,loss_stochastic,res_inf_probe");
    for (const auto& e : log) os << e.iter << ',' << e.loss_stochastic << ',' << e.res_inf_probe << '\n';
}

void write_condition_row(std::ostream& os, double h, std::size_t M, const ConditionReport& r) {
    os << h << ',' << M << ',' << r.mu << ',' << r.margin << ',' << r.eig_min << ',' << r.eig_max << ',' << r.kappa
       << '\n';
}

void write_graph_field(const fs::path& p, const GridGraph& g, std::span<const double> u) {
    std::ofstream os(p);
    os.imbue(std::locale::classic());
    os << std::setprecision(12);
    write_field(os, g, u);
}

std::vector<ScheduleStage> stages_from(const std::vector<double>& h, const std::vector<double>& lambda,
                                       const std::vector<double>& alpha, const std::string& where) {
    if (h.size() != lambda.size() || h.size() != alpha.size())
        throw ConfigError(where + ": schedule lists must have equal lengths");
    std::vector<ScheduleStage> st;
    for (std::size_t i = 0; i < h.size(); ++i) st.push_back({h[i], lambda[i], alpha[i], {}, {}});
    try {
        validate_schedule(st);
    } catch (const PreconditionError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return st;
}

// ---------------------------------------------------------------------------
// Each command has a "plan" built from the config (all config errors surface there)
// and a run step that only computes.

struct GridPlan {
    std::vector<std::size_t> ns, schedule;
    std::string hamiltonian;
    double lambda, alpha, mu_b, q;
    SolveConfig solve;
};

GridPlan plan_grid(const Config& c) {
    const std::string s = "eikonal1d-grid";
    GridPlan p{c.counts(s, "ns"), c.counts(s, "schedule"), c.choice(s, "hamiltonian"), c.real(s, "lambda"),
               c.real(s, "alpha"), c.real(s, "mu_b"), c.real(s, "q"), {}};
    p.solve.step = c.real(s, "step");
    p.solve.max_iters = c.count(s, "max_iters");
    p.solve.tol_inf = c.real(s, "tol");
    p.solve.record_every = c.count(s, "record_every");
    std::vector<double> h, l(p.schedule.size(), p.lambda), a(p.schedule.size(), p.alpha);
    for (auto n : p.schedule) h.push_back(1.0 / static_cast<double>(n));
    stages_from(h, l, a, s + ".schedule");
    return p;
}

SteadyProblem grid_problem(const GridPlan& p, std::size_t n) {
    if (p.hamiltonian == "upwind") {
        auto pb = ex::upwind_eikonal1d(n, p.lambda, p.mu_b);
        pb.loss.q = p.q;
        return pb;
    }
    return ex::eikonal1d(n, p.lambda, p.alpha, p.mu_b, p.q);
}

int run_grid(const GridPlan& p, const fs::path& dir, std::size_t threads, std::ostream& out) {
    std::vector<GdResult> cold(p.ns.size());
    std::vector<SteadyProblem> problems;
    for (auto n : p.ns) problems.push_back(grid_problem(p, n));
    parallel_for(p.ns.size(), threads, [&](std::size_t i) {
        cold[i] = gradient_descent(std::vector<double>(problems[i].size(), 0.0), problems[i], p.solve);
    });
    auto summary = open_csv(dir / "summary.csv", "run,n,iters,converged,final_res_inf");
    for (std::size_t i = 0; i < p.ns.size(); ++i) {
        const auto n = p.ns[i];
        const auto tag = "cold_n" + std::to_string(n);
        write_history(dir / ("history_" + tag + ".csv"), cold[i].history);
        write_graph_field(dir / ("field_" + tag + ".txt"), *problems[i].graph, cold[i].u);
        summary << "cold," << n << ',' << cold[i].iters << ',' << cold[i].converged << ','
                << cold[i].history.back().res_inf << '\n';
        out << "cold n=" << n << ": " << (cold[i].converged ? "converged" : "stalled") << " after " << cold[i].iters
            << " iterations\n";
        if (cold[i].converged) continue;
        const auto rep = condition_report(cold[i].u, problems[i]);
        auto cs = open_csv(dir / ("condition_" + tag + ".csv"), "h,M,mu,margin,eig_min,eig_max,kappa");
        write_condition_row(cs, 1.0 / static_cast<double>(n), problems[i].graph->interior().size(), rep);
        const auto J = assemble_jacobian(cold[i].u, problems[i]);
        const auto eig = extreme_eigenpair(J, EigenWhich::SmallestModulus);
        auto es = open_csv(dir / ("eigenvector_" + tag + ".csv"), "eigenvalue_re,eigenvalue_im,index,x,component");
        for (const auto& pair : eig.cluster.empty() ? std::vector<EigenPair>{eig.extreme} : eig.cluster) {
            for (std::size_t j = 0; j < pair.vector.size(); ++j)
                es << pair.value.real() << ',' << pair.value.imag() << ',' << j << ','
                   << problems[i].graph->point(j)[0] << ',' << pair.vector[j] << '\n';
        }
        out << "  smallest eigenvalue modulus at the final iterate: " << rep.eig_min << '\n';
    }

    std::vector<ScheduleStage> stages;
    for (auto n : p.schedule) stages.push_back({1.0 / static_cast<double>(n), p.lambda, p.alpha, {}, {}});
    auto ml = multilevel_solve(
        stages, [&](const ScheduleStage& st) { return grid_problem(p, static_cast<std::size_t>(std::lround(1.0 / st.h))); },
        p.solve);
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const auto tag = "multilevel_n" + std::to_string(p.schedule[k]);
        write_history(dir / ("history_" + tag + ".csv"), ml.stages[k].history);
        summary << "multilevel," << p.schedule[k] << ',' << ml.stages[k].iters << ',' << ml.stages[k].converged << ','
                << ml.stages[k].history.back().res_inf << '\n';
    }
    write_graph_field(dir / "field_multilevel.txt", *ml.problems.back().graph, ml.stages.back().u);
    out << "multilevel: " << ml.total_iters << " iterations in total, final stage "
        << (ml.stages.back().converged ? "converged" : "did not converge") << '\n';
    if (!ml.stages.back().converged) throw NotConverged("multilevel schedule did not reach the tolerance");
    return Success;
}

// ---------------------------------------------------------------------------

struct NnPlan {
    ex::NnEikonalConfig cfg;
    std::size_t seeds;
    unsigned long long seed;
    std::vector<double> fixed_h;
};

NnPlan plan_nn(const Config& c) {
    const std::string s = "eikonal1d-nn";
    NnPlan p;
    p.cfg.layers = c.counts(s, "layers");
    if (p.cfg.layers.size() < 2 || p.cfg.layers.front() != 1 || p.cfg.layers.back() != 1)
        throw ConfigError(s + ".layers: must start and end with 1");
    p.cfg.lipschitz = c.real(s, "lipschitz");
    p.cfg.n0 = c.count(s, "n0");
    p.cfg.mu_b = c.real(s, "mu_b");
    p.cfg.alpha = c.real(s, "alpha");
    p.cfg.lambda = c.real(s, "lambda");
    p.cfg.train.adam = c.choice(s, "optimizer") == "adam";
    p.cfg.train.lr = c.real(s, "lr");
    p.cfg.train.max_iters = c.count(s, "max_iters");
    p.cfg.train.stop_window = c.count(s, "stop_window");
    p.cfg.train.stop_tol = c.real(s, "stop_tol");
    p.cfg.train.log_every = c.count(s, "log_every");
    p.cfg.schedule = stages_from(c.reals(s, "schedule_h"), c.reals(s, "schedule_lambda"), c.reals(s, "schedule_alpha"),
                                 s + ".schedule_h");
    if (std::abs(p.cfg.schedule.back().lambda - p.cfg.lambda) > 1e-12)
        throw ConfigError(s + ".schedule_lambda: last stage must equal lambda");
    p.cfg.error_samples = c.count(s, "error_samples");
    p.seeds = c.count(s, "seeds");
    p.seed = static_cast<unsigned long long>(c.integer(s, "seed"));
    p.fixed_h = c.reals(s, "fixed_h");
    return p;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int run_nn(const NnPlan& p, const fs::path& dir, std::size_t threads, std::ostream& out) {
    const std::size_t modes = 1 + p.fixed_h.size();  // mode 0 is the schedule
    std::vector<ex::NnRun> runs(modes * p.seeds);
    std::mutex io;
    parallel_for(runs.size(), threads, [&](std::size_t job) {
        const std::size_t mode = job / p.seeds;
        const auto seed = p.seed + job % p.seeds;
        runs[job] = mode == 0 ? ex::nn_eikonal_schedule(p.cfg, seed) : ex::nn_eikonal_fixed(p.cfg, p.fixed_h[mode - 1], seed);
        std::lock_guard lock(io);
        out << (mode == 0 ? std::string("schedule") : "fixed h=" + fmt_h(p.fixed_h[mode - 1])) << " seed " << seed
            << ": error " << runs[job].final_error << ", " << runs[job].iters << " iterations\n";
    });
    auto summary = open_csv(dir / "summary.csv", "mode,h,runs,mean_error,stddev_error,max_error");
    for (std::size_t mode = 0; mode < modes; ++mode) {
        const std::string name = mode == 0 ? "schedule" : "fixed_h" + fmt_h(p.fixed_h[mode - 1]);
        auto os = open_csv(dir / ("runs_" + name + ".csv"), "seed,final_error,iters,converged");
        std::vector<double> errs;
        for (std::size_t k = 0; k < p.seeds; ++k) {
            const auto& r = runs[mode * p.seeds + k];
            os << r.seed << ',' << r.final_error << ',' << r.iters << ',' << r.converged << '\n';
            errs.push_back(r.final_error);
            if (p.cfg.train.log_every > 0)
                write_train_log(dir / ("train_log_" + name + "_seed" + std::to_string(r.seed) + ".csv"), r.log);
        }
        summary << (mode == 0 ? "schedule" : "fixed") << ','
                << (mode == 0 ? p.cfg.schedule.back().h : p.fixed_h[mode - 1]) << ',' << errs.size() << ','
                << mean(errs) << ',' << stddev(errs) << ',' << *std::max_element(errs.begin(), errs.end()) << '\n';
    }
    return Success;
}

// ---------------------------------------------------------------------------

ex::ObstacleConfig plan_obstacle(const Config& c) {
    const std::string s = "obstacle";
    ex::ObstacleConfig o;
    o.dim = c.count(s, "dim");
    o.seed = static_cast<unsigned long long>(c.integer(s, "seed"));
    o.hidden = c.counts(s, "hidden");
    for (auto w : o.hidden)
        if (w == 0) throw ConfigError(s + ".hidden: widths must be positive");
    o.lipschitz = c.real(s, "lipschitz");
    o.lr = c.real(s, "lr");
    o.iters_per_stage = c.count(s, "iters_per_stage");
    o.n_interior = c.count(s, "n_interior");
    o.n_initial = c.count(s, "n_initial");
    o.initial_weight = c.real(s, "initial_weight");
    o.t_max = c.real(s, "t_max");
    o.half_width = c.real(s, "half_width");
    o.h_eval = c.real(s, "h_eval");
    o.eval_half_width = c.real(s, "eval_half_width");
    o.log_every = 100;
    o.phases.clear();
    const std::pair<const char*, ObstacleScheme> phases[] = {{"lf", ObstacleScheme::LaxFriedrichs},
                                                             {"os", ObstacleScheme::OneSided}};
    for (const auto& [prefix, scheme] : phases) {
        const std::string hk = std::string(prefix) + "_h", dk = std::string(prefix) + "_dt";
        ex::ObstaclePhase ph{scheme, c.reals(s, hk), c.reals(s, dk)};
        std::vector<double> alpha(ph.h.size(), 0.0);
        stages_from(ph.h, ph.dt, alpha, s + "." + hk);
        o.phases.push_back(std::move(ph));
    }
    return o;
}

int run_obstacle(const ex::ObstacleConfig& o, const fs::path& dir, std::ostream& out) {
    Mlp net;
    const auto rep = ex::run_obstacle(o, net);
    for (std::size_t k = 0; k < rep.stages.size(); ++k)
        write_train_log(dir / ("train_log_stage" + std::to_string(k) + ".csv"), rep.stages[k].log);
    {
        std::ofstream ck(dir / "network.bin", std::ios::binary);
        save_checkpoint(ck, net);
    }
    const double w = o.eval_half_width;
    const auto n = static_cast<std::size_t>(std::floor(2.0 * w / o.h_eval + 1e-9)) + 1;
    std::vector<double> in(o.dim + 1, 0.0);
    for (int t : {0, 1, 2}) {
        auto os = open_csv(dir / ("slice_t" + std::to_string(t) + ".csv"), "x1,x2,u,psi");
        in[0] = t;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                in[1] = -w + o.h_eval * static_cast<double>(i);
                in[2] = -w + o.h_eval * static_cast<double>(j);
                std::vector<double> x(in.begin() + 1, in.end());
                os << in[1] << ',' << in[2] << ',' << net.forward(in) << ',' << obstacle_psi(x) << '\n';
            }
        }
    }
    auto os = open_csv(dir / "report.csv", "dim,max_violation,hausdorff_t0,iters");
    os << o.dim << ',' << rep.max_violation << ',' << rep.hausdorff_t0 << ',' << rep.iters << '\n';
    out << "max violation of u >= psi: " << rep.max_violation << "\nHausdorff distance of the t=0 zero set: "
        << rep.hausdorff_t0 << '\n';
    return Success;
}

// ---------------------------------------------------------------------------

struct IsaacsPlan {
    std::vector<std::size_t> ns;
    IsaacsParams prm;
    ex::IsaacsSetup setup;
    NewtonOptions newton;
    std::size_t nn_iters;
    ex::IsaacsNnConfig nn;
};

IsaacsPlan plan_isaacs(const Config& c) {
    const std::string s = "isaacs2d";
    IsaacsPlan p;
    p.ns = c.counts(s, "ns");
    p.prm.sigma_x = c.real(s, "sigma_x");
    p.prm.sigma_y = c.real(s, "sigma_y");
    p.prm.vs = c.real(s, "vs");
    p.prm.kappa = c.real(s, "kappa");
    p.prm.a = c.real(s, "a");
    p.prm.r = c.real(s, "r");
    p.prm.R = c.real(s, "R");
    p.prm.lambda_extra = c.real(s, "lambda_extra");
    if (!(p.prm.R > p.prm.r) || p.prm.R >= 2.0) throw ConfigError(s + ".R: need r < R < 2");
    p.setup.stencil = c.choice(s, "stencil") == "central" ? IsaacsStencil::Central : IsaacsStencil::Monotone;
    p.setup.boundary = c.choice(s, "boundary") == "cut_cell" ? AnnulusBoundary::CutCell : AnnulusBoundary::Staircase;
    if (p.setup.stencil == IsaacsStencil::Central) {
        const double limit = IsaacsHamiltonian::central_spacing_limit(p.prm);
        for (auto n : p.ns)
            if (4.0 / static_cast<double>(n) > limit)
                throw ConfigError(s + ".ns: central stencil needs 4/n <= " + fmt_h(limit) + " to stay monotone");
    }
    p.newton = {c.real(s, "newton_tol"), c.count(s, "newton_max_iters"), 0x1p-30};
    p.nn_iters = c.count(s, "nn_iters");
    p.nn.hidden = c.counts(s, "nn_hidden");
    p.nn.lipschitz = c.real(s, "nn_lipschitz");
    p.nn.h = c.real(s, "nn_h");
    p.nn.n_interior = c.count(s, "nn_interior");
    p.nn.n_boundary = c.count(s, "nn_boundary");
    p.nn.seed = static_cast<unsigned long long>(c.integer(s, "seed"));
    p.nn.train.max_iters = p.nn_iters;
    p.nn.train.stop_tol = 0.0;
    p.nn.train.log_every = 100;
    return p;
}

int run_isaacs(const IsaacsPlan& p, const fs::path& dir, std::ostream& out) {
    std::vector<ex::IsaacsSolve> sols;
    auto rep = open_csv(dir / "report.csv", "n,h,nodes,newton_iters,res_inf");
    for (auto n : p.ns) {
        try {
            sols.push_back(ex::isaacs_reference(n, p.prm, p.setup, p.newton));
        } catch (const NonConvergenceError& e) {
            throw NotConverged("Isaacs reference at n=" + std::to_string(n) + ": " + e.what());
        }
        const auto& s = sols.back();
        write_graph_field(dir / ("field_n" + std::to_string(n) + ".txt"), s.grid.graph, s.u);
        rep << n << ',' << 4.0 / static_cast<double>(n) << ',' << s.u.size() << ',' << s.info.iters << ','
            << s.info.res_inf << '\n';
        out << "n=" << n << ": Newton converged in " << s.info.iters << " steps\n";
    }
    auto sc = open_csv(dir / "self_convergence.csv", "n_coarse,n_fine,max_diff");
    for (std::size_t k = 0; k + 1 < sols.size(); ++k) {
        const double d = ex::isaacs_shared_diff(sols[k], sols[k + 1]);
        sc << p.ns[k] << ',' << p.ns[k + 1] << ',' << d << '\n';
        out << "max difference n=" << p.ns[k] << " vs n=" << p.ns[k + 1] << ": " << d << '\n';
    }
    if (p.nn_iters > 0) {
        auto res = ex::isaacs_nn(p.nn, p.prm, sols.back());
        write_train_log(dir / "train_log_nn.csv", res.train.log);
        const auto& g = sols.back().grid.graph;
        std::vector<double> v(g.size());
        for (std::size_t j = 0; j < g.size(); ++j) v[j] = res.net.forward(g.point(j));
        write_graph_field(dir / "field_nn.txt", g, v);
        auto os = open_csv(dir / "nn_report.csv", "iters,diff_vs_reference");
        os << res.train.iters << ',' << res.diff_vs_reference << '\n';
        out << "network vs reference: " << res.diff_vs_reference << '\n';
    }
    return Success;
}

// ---------------------------------------------------------------------------

struct JacobianPlan {
    std::vector<std::size_t> ns;
    double lambda, alpha, mu_b;
};

int run_jacobian(const JacobianPlan& p, const fs::path& dir, std::ostream& out) {
    const auto rows = ex::analyze_jacobian_sweep(p.ns, p.lambda, p.alpha, p.mu_b);
    auto os = open_csv(dir / "jacobian.csv", "h,M,mu,margin,eig_min,eig_max,kappa");
    for (const auto& r : rows) {
        write_condition_row(os, r.h, r.M, r.report);
        out << "h=" << r.h << " kappa=" << r.report.kappa << '\n';
    }
    return Success;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Residual minimization solvers for discrete Hamilton-Jacobi schemes", "hjres"};
    app.require_subcommand(1);
    app.fallthrough();
    Common c;
    app.add_option("--config", c.config_path, "INI file with experiment sections");
    app.add_option("--seed", c.seed, "Base seed (overrides the section's seed)");
    app.add_option("--out", c.out, "Output root directory")->capture_default_str();
    app.add_option("--threads", c.threads, "Worker threads for seeded repetitions")->check(CLI::PositiveNumber);
    app.add_flag("--dry-run", c.dry_run, "Validate the configuration and exit");
    app.add_flag("--force", c.force, "Write straight into --out instead of a fresh timestamped directory");
    app.add_option("--set", c.overrides, "Override a config value: [section.]key=value");
    const char* names[] = {"eikonal1d-grid", "eikonal1d-nn", "obstacle", "isaacs2d", "analyze-jacobian"};
    const char* help[] = {"Cold and multilevel gradient descent on the 1D eikonal grid problem",
                          "Network training on the 1D damped eikonal problem, fixed spacing vs schedule",
                          "Network training on the obstacle level-set problem",
                          "Newton reference solves of the Isaacs equation on an annulus",
                          "Conditioning sweep of the 1D eikonal Jacobian"};
    for (int i = 0; i < 5; ++i) app.add_subcommand(names[i], help[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? Success : ConfigFailure;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    try {
        Config cfg(config::experiment_schema());
        if (!c.config_path.empty()) cfg.merge_ini_file(c.config_path);
        if (c.seed && cmd != "eikonal1d-grid" && cmd != "analyze-jacobian") cfg.set(cmd + ".seed", std::to_string(*c.seed));
        for (const auto& kv : c.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError(kv + ": override must look like key=value");
            std::string key = kv.substr(0, eq);
            if (key.find('.') == std::string::npos) key = cmd + "." + key;
            cfg.set(key, kv.substr(eq + 1));
        }

        std::function<int(const fs::path&)> job;
        if (cmd == "eikonal1d-grid") {
            auto p = plan_grid(cfg);
            job = [p, &c, &out](const fs::path& d) { return run_grid(p, d, c.threads, out); };
        } else if (cmd == "eikonal1d-nn") {
            auto p = plan_nn(cfg);
            job = [p, &c, &out](const fs::path& d) { return run_nn(p, d, c.threads, out); };
        } else if (cmd == "obstacle") {
            auto p = plan_obstacle(cfg);
            job = [p, &out](const fs::path& d) { return run_obstacle(p, d, out); };
        } else if (cmd == "isaacs2d") {
            auto p = plan_isaacs(cfg);
            job = [p, &out](const fs::path& d) { return run_isaacs(p, d, out); };
        } else {
            const std::string s = "analyze-jacobian";
            JacobianPlan p{cfg.counts(s, "ns"), cfg.real(s, "lambda"), cfg.real(s, "alpha"), cfg.real(s, "mu_b")};
            job = [p, &out](const fs::path& d) { return run_jacobian(p, d, out); };
        }

        if (c.dry_run) {
            cfg.write_ini(out, cmd);
            out << "configuration ok\n";
            return Success;
        }
        const auto dir = make_output_dir(c, cmd);
        {
            std::ofstream ini(dir / "config.ini");
            cfg.write_ini(ini, cmd);
        }
        out << "writing to " << dir.string() << '\n';
        return job(dir);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return ConfigFailure;
    } catch (const NotConverged& e) {
        err << "not converged: " << e.what() << '\n';
        return NonConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Failure;
    }
}

} // namespace hjres::cli
