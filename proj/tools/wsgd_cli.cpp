// wsgd: solve least-squares systems with weighted SGD / randomized Kaczmarz,
// print conditioning statistics and bounds, and run the synthetic sweeps.
//
// Exit codes: 0 success, 2 input or usage error, 3 degenerate problem.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wsgd/wsgd.hpp"

namespace {

using wsgd::io::format_double;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void print_kv(std::ostream& os, const std::string& key, const std::string& value)
{
    os << key << ": " << value << '\n';
}

void print_kv(std::ostream& os, const std::string& key, double value)
{
    print_kv(os, key, format_double(value));
}

std::ofstream open_output(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw wsgd::IoError("cannot write '" + path + "'");
    }
    return os;
}

struct System {
    wsgd::DenseMatrix A;
    wsgd::Vector b;
};

System load_system(const std::string& matrix_path, const std::string& rhs_path)
{
    System s{wsgd::io::read_matrix(matrix_path), wsgd::io::read_vector(rhs_path)};
    if (s.b.size() != s.A.rows()) {
        throw wsgd::DimensionError("rhs '" + rhs_path + "' has " + std::to_string(s.b.size())
                                   + " entries, matrix '" + matrix_path + "' has "
                                   + std::to_string(s.A.rows()) + " rows");
    }
    return s;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
    std::string matrix;
    std::string rhs;
    std::string method = "sgd";
    double lambda = 0.0;
    std::optional<double> step_size;
    std::optional<double> epsilon;
    double c = 1.0;
    std::size_t max_iters = 10000;
    std::uint64_t seed = 0;
    double delta = 0.0;
    std::string out;
    bool both_distances = false;
};

int cmd_solve(const SolveArgs& a)
{
    const System sys = load_system(a.matrix, a.rhs);
    wsgd::RunRecord rec;
    if (a.method == "sgd") {
        if (a.step_size.has_value() == a.epsilon.has_value()) {
            throw UsageError("solve --method sgd needs exactly one of --step-size and --epsilon");
        }
        const wsgd::Problem prob = wsgd::from_least_squares(sys.A, sys.b);
        const wsgd::ProblemStats st = wsgd::stats(prob);
        wsgd::SgdConfig cfg;
        cfg.scheme = wsgd::WeightScheme::partially_biased(a.lambda);
        cfg.step_size = a.step_size;
        cfg.epsilon = a.epsilon;
        cfg.max_iters = a.max_iters;
        cfg.seed = a.seed;
        cfg.grad_tol = a.delta;
        rec = wsgd::run(prob, st, cfg);
    } else {
        if (a.step_size || a.epsilon) {
            throw UsageError("--step-size / --epsilon apply to --method sgd only; use --c");
        }
        wsgd::KaczmarzVariant v;
        if (a.method == "kaczmarz-weighted") {
            v = wsgd::KaczmarzVariant::weighted(a.c);
        } else if (a.method == "kaczmarz-uniform") {
            v = wsgd::KaczmarzVariant::uniform(a.c);
        } else {
            v = wsgd::KaczmarzVariant::hybrid(a.c);
        }
        wsgd::KaczmarzOptions opts;
        opts.max_iters = a.max_iters;
        opts.seed = a.seed;
        rec = wsgd::run_kaczmarz(sys.A, sys.b, v, opts);
    }

    for (const auto& w : rec.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    if (!a.out.empty()) {
        auto os = open_output(a.out);
        wsgd::write_csv(os, rec);
    }
    print_kv(std::cout, "method", a.method);
    print_kv(std::cout, a.method == "sgd" ? "step_size" : "c", rec.step_size);
    print_kv(std::cout, "iterations", std::to_string(rec.iterations_run));
    if (rec.hit_tolerance_at) {
        print_kv(std::cout, "gradient_tolerance_reached_at", std::to_string(*rec.hit_tolerance_at));
    }
    print_kv(std::cout, "final_error_sq", rec.errors_sq.back().error_sq);
    if (a.both_distances) {
        const wsgd::Vector x_ls = wsgd::solve_least_squares(sys.A, sys.b);
        print_kv(std::cout, "distance_sq_to_lsq", (rec.final_x - x_ls).squaredNorm());
        try {
            const wsgd::Vector x_w = wsgd::weighted_solution(sys.A, sys.b);
            print_kv(std::cout, "distance_sq_to_weighted_lsq", (rec.final_x - x_w).squaredNorm());
        } catch (const wsgd::ZeroRowError&) {
            print_kv(std::cout, "distance_sq_to_weighted_lsq", "undefined (zero row)");
        }
    }
    std::cout << "x:";
    for (Eigen::Index j = 0; j < rec.final_x.size(); ++j) {
        std::cout << ' ' << format_double(rec.final_x(j));
    }
    std::cout << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
    std::string matrix;
    std::string rhs;
    double epsilon = 0.1;
    double lambda = 0.5;
    std::optional<double> eps0;
};

void print_bound(const std::string& key, wsgd::IterBound which, const wsgd::BoundConstants& c,
                 double eps, double eps0)
{
    try {
        print_kv(std::cout, key, wsgd::iter_bound_exact(which, c, eps, eps0));
    } catch (const wsgd::BoundUndefinedError&) {
        print_kv(std::cout, key, "undefined");
    }
}

int cmd_stats(const StatsArgs& a)
{
    const System sys = load_system(a.matrix, a.rhs);
    const wsgd::Problem prob = wsgd::from_least_squares(sys.A, sys.b);
    const wsgd::ProblemStats s = wsgd::stats(prob);
    const wsgd::KaczmarzStats ks = wsgd::kaczmarz_stats(sys.A, sys.b);
    const double eps0 = a.eps0.value_or(s.x_star.squaredNorm());

    auto& os = std::cout;
    print_kv(os, "n", std::to_string(prob.size()));
    print_kv(os, "d", std::to_string(prob.dim()));
    print_kv(os, "L_min", s.L.minCoeff());
    print_kv(os, "L_bar", s.L_bar);
    print_kv(os, "L_max", s.L.maxCoeff());
    print_kv(os, "sup_L", s.sup_L);
    print_kv(os, "inf_L", s.inf_L);
    print_kv(os, "mu", s.mu);
    print_kv(os, "sigma_sq", s.sigma_sq);
    print_kv(os, "K(A)", s.cond_K);
    if (ks.cond_K_w) {
        print_kv(os, "K(D^-1 A)", *ks.cond_K_w);
    } else {
        print_kv(os, "K(D^-1 A)", "undefined (zero row)");
    }
    print_kv(os, "epsilon", a.epsilon);
    print_kv(os, "eps0", eps0);
    print_kv(os, "lambda", a.lambda);

    const wsgd::WeightTable full = wsgd::build_weights(wsgd::WeightScheme::fully_biased(), s.L,
                                                       prob.probs());
    const wsgd::EffectiveConstants eff =
        wsgd::effective_constants(full, s.L, s.grad_norms_sq_at_xstar, prob.probs());
    wsgd::BoundConstants c22{s.mu, eff.sup_L_w, s.L_bar, s.inf_L, s.L_sq_bar, eff.sigma_sq_w, a.lambda};
    wsgd::BoundConstants raw{s.mu, s.sup_L, s.L_bar, s.inf_L, s.L_sq_bar, s.sigma_sq, a.lambda};
    print_bound("iters_cor22_fully_biased", wsgd::IterBound::Cor22, c22, a.epsilon, eps0);
    print_bound("iters_cor31", wsgd::IterBound::Cor31, raw, a.epsilon, eps0);
    print_bound("iters_cor33", wsgd::IterBound::Cor33, raw, a.epsilon, eps0);
    print_bound("iters_bach_moulines", wsgd::IterBound::BachMoulines, raw, a.epsilon, eps0);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// bounds

struct BoundsArgs {
    std::optional<double> gamma;
    std::optional<double> mu;
    std::optional<double> sup_L;
    double sigma_sq = 0.0;
    double eps0 = 1.0;
    std::size_t k_max = 100;
    std::string out;
    std::string matrix;
    std::string rhs;
    std::string variant;
    double c = 0.5;
};

int cmd_bounds(const BoundsArgs& a)
{
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!a.out.empty()) {
        file = open_output(a.out);
        os = &file;
    }
    double rate = 0.0;
    double horizon = 0.0;
    std::function<double(double)> curve;
    if (!a.variant.empty()) {
        if (a.matrix.empty() || a.rhs.empty()) {
            throw UsageError("bounds --variant needs --matrix and --rhs");
        }
        const System sys = load_system(a.matrix, a.rhs);
        wsgd::KaczmarzVariant v;
        if (a.variant == "weighted") {
            v = wsgd::KaczmarzVariant::weighted(a.c);
        } else if (a.variant == "uniform") {
            v = wsgd::KaczmarzVariant::uniform(a.c);
        } else {
            v = wsgd::KaczmarzVariant::hybrid(a.c);
        }
        const wsgd::KaczmarzBound kb = wsgd::kaczmarz_bound(v, wsgd::kaczmarz_stats(sys.A, sys.b));
        rate = kb.rate;
        horizon = kb.horizon;
        curve = [kb, eps0 = a.eps0](double k) { return kb(k, eps0); };
    } else {
        if (!a.gamma || !a.mu || !a.sup_L) {
            throw UsageError("bounds needs --gamma, --mu and --sup-l (or --variant with a matrix)");
        }
        const wsgd::BoundCurve bc = wsgd::bound_curve(*a.gamma, *a.mu, *a.sup_L, a.sigma_sq, a.eps0);
        rate = bc.rate();
        horizon = bc.horizon();
        curve = bc;
    }
    std::cerr << "rate: " << format_double(rate) << '\n';
    std::cerr << "horizon: " << format_double(horizon) << '\n';
    *os << "iteration,bound\n";
    for (std::size_t k = 0; k <= a.k_max; ++k) {
        *os << k << ',' << format_double(curve(static_cast<double>(k))) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
    std::string which = "all";
    std::size_t trials = 100;
    std::string lambda_grid;
    double epsilon = 0.1;
    std::size_t max_iters = 50000;
    std::uint64_t seed = wsgd::kDefaultSeedBase;
    std::string out_dir = "results";
    unsigned threads = 0;
    std::size_t n = 1000;
    std::size_t d = 10;
    std::string step_rule = "cor33";
};

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    for (const auto& f : wsgd::io::split(text, ',')) {
        const auto v = wsgd::io::parse_double(f);
        if (!v) {
            throw UsageError("--lambda-grid: cannot parse '" + f + "'");
        }
        grid.push_back(*v);
    }
    return grid;
}

int cmd_experiment(const ExperimentArgs& a)
{
    std::vector<int> cases;
    if (a.which == "all") {
        cases = {1, 2, 3, 4, 5};
    } else {
        const auto v = wsgd::io::parse_double(a.which);
        if (!v || *v < 1 || *v > 5 || *v != static_cast<int>(*v)) {
            throw UsageError("--case must be 1..5 or all");
        }
        cases = {static_cast<int>(*v)};
    }
    std::vector<wsgd::SweepResult> results;
    for (int id : cases) {
        wsgd::CaseSpec spec;
        spec.case_id = id;
        spec.n = a.n;
        spec.d = a.d;
        spec.trials = a.trials;
        if (!a.lambda_grid.empty()) {
            spec.lambda_grid = parse_grid(a.lambda_grid);
        }
        spec.eps_target = a.epsilon;
        spec.max_iters = a.max_iters;
        spec.seed_base = a.seed;
        spec.threads = a.threads;
        spec.step_rule = a.step_rule == "exact" ? wsgd::StepRule::ExactConstants
                                                : wsgd::StepRule::Cor33Envelope;
        results.push_back(wsgd::run_sweep(spec));
    }
    const auto files = wsgd::emit_results(results, a.out_dir);
    std::cout << "case,lambda,mean_iters_to_eps,censored\n";
    for (const auto& r : results) {
        for (const auto& cell : r.cells) {
            std::cout << r.case_id << ',' << format_double(cell.lambda) << ','
                      << format_double(cell.mean_iters_to_eps) << ',' << (cell.censored ? 1 : 0)
                      << '\n';
        }
    }
    std::cerr << "wrote " << files.curves.string() << ", " << files.iters.string() << ", "
              << files.plot.string() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------------------
// tightness

struct TightnessArgs {
    int N = 99;
    std::size_t trials = 10000;
    std::uint64_t seed = 1;
    std::string export_prefix;
    int sign = 1;
};

int cmd_tightness(const TightnessArgs& a)
{
    if (!a.export_prefix.empty()) {
        const wsgd::Problem prob = wsgd::tightness_instance(a.N, a.sign);
        // Least-squares rows sqrt(f_i scale / n) z_i reproduce the components.
        const double n = static_cast<double>(prob.size());
        wsgd::DenseMatrix A = prob.directions();
        wsgd::Vector b = prob.offsets();
        for (Eigen::Index i = 0; i < A.rows(); ++i) {
            const double s = std::sqrt(prob.scales()(i) / n);
            A.row(i) *= s;
            b(i) *= s;
        }
        auto am = open_output(a.export_prefix + "_A.csv");
        wsgd::io::write_csv_matrix(am, A);
        auto bm = open_output(a.export_prefix + "_b.csv");
        wsgd::io::write_vector(bm, b);
        std::cerr << "wrote " << a.export_prefix << "_A.csv, " << a.export_prefix << "_b.csv\n";
    }
    const wsgd::TightnessDemo demo = wsgd::tightness_demo(a.N, a.trials, a.seed);
    print_kv(std::cout, "N", std::to_string(demo.N));
    print_kv(std::cout, "trials", std::to_string(demo.trials));
    print_kv(std::cout, "expected_uniform_first_hit", static_cast<double>(demo.N + 1));
    print_kv(std::cout, "uniform_mean_first_hit", demo.uniform_mean_first_hit);
    print_kv(std::cout, "fully_biased_prob_component_1", demo.biased_prob_first);
    print_kv(std::cout, "fully_biased_mean_first_hit", demo.biased_mean_first_hit);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Weighted SGD and randomized Kaczmarz for least squares"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* sc = app.add_subcommand("solve", "run SGD or a Kaczmarz variant on A x = b");
    sc->add_option("--matrix,-A", solve.matrix, "matrix (Matrix Market or CSV)")->required();
    sc->add_option("--rhs,-b", solve.rhs, "right-hand side, one value per line")->required();
    sc->add_option("--method", solve.method)
        ->check(CLI::IsMember({"sgd", "kaczmarz-weighted", "kaczmarz-uniform", "kaczmarz-hybrid"}))
        ->capture_default_str();
    sc->add_option("--lambda", solve.lambda, "bias parameter in [0, 1]")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    auto* step_opt = sc->add_option("--step-size", solve.step_size, "fixed step size gamma");
    auto* eps_opt = sc->add_option("--epsilon", solve.epsilon, "target accuracy (derives gamma)");
    step_opt->excludes(eps_opt);
    sc->add_option("--c", solve.c, "Kaczmarz relaxation")->capture_default_str();
    sc->add_option("--max-iters", solve.max_iters)->capture_default_str();
    sc->add_option("--seed", solve.seed)->capture_default_str();
    sc->add_option("--delta", solve.delta, "full-gradient stopping tolerance (0 disables)")
        ->capture_default_str();
    sc->add_option("--out", solve.out, "trace CSV path");
    sc->add_flag("--both-distances", solve.both_distances,
                 "print distances to the ordinary and weighted LS solutions");

    StatsArgs st;
    auto* stc = app.add_subcommand("stats", "conditioning statistics and iteration bounds");
    stc->add_option("--matrix,-A", st.matrix)->required();
    stc->add_option("--rhs,-b", st.rhs)->required();
    stc->add_option("--epsilon", st.epsilon)->capture_default_str();
    stc->add_option("--lambda", st.lambda)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    stc->add_option("--eps0", st.eps0, "initial error (default ||x*||^2, start at 0)");

    BoundsArgs bd;
    auto* bc = app.add_subcommand("bounds", "error bound curve as iteration,bound CSV");
    bc->add_option("--gamma", bd.gamma);
    bc->add_option("--mu", bd.mu);
    bc->add_option("--sup-l", bd.sup_L);
    bc->add_option("--sigma-sq", bd.sigma_sq)->capture_default_str();
    bc->add_option("--eps0", bd.eps0)->capture_default_str();
    bc->add_option("--k-max", bd.k_max)->capture_default_str();
    bc->add_option("--out", bd.out);
    bc->add_option("--matrix,-A", bd.matrix);
    bc->add_option("--rhs,-b", bd.rhs);
    bc->add_option("--variant", bd.variant, "Kaczmarz variant")
        ->check(CLI::IsMember({"weighted", "uniform", "hybrid"}));
    bc->add_option("--c", bd.c)->capture_default_str();

    ExperimentArgs ex;
    auto* ec = app.add_subcommand("experiment", "lambda sweeps on the synthetic cases");
    ec->add_option("--case", ex.which, "1..5 or all")->capture_default_str();
    ec->add_option("--trials", ex.trials)->capture_default_str();
    ec->add_option("--lambda-grid", ex.lambda_grid, "comma-separated (default 0,0.1,...,1)");
    ec->add_option("--epsilon", ex.epsilon)->capture_default_str();
    ec->add_option("--max-iters", ex.max_iters)->capture_default_str();
    ec->add_option("--seed", ex.seed)->capture_default_str();
    ec->add_option("--out-dir", ex.out_dir)->capture_default_str();
    ec->add_option("--threads", ex.threads, "0 = all cores")->capture_default_str();
    ec->add_option("--rows", ex.n)->capture_default_str();
    ec->add_option("--step-rule", ex.step_rule,
                   "cor33: envelope step per lambda; exact: basic step with exact weighted constants")
        ->check(CLI::IsMember({"cor33", "exact"}))
        ->capture_default_str();
    ec->add_option("--cols", ex.d)->capture_default_str();

    TightnessArgs tg;
    auto* tc = app.add_subcommand("tightness", "first-hit demo on the N+1 quadratic instance");
    tc->add_option("--N", tg.N)->check(CLI::PositiveNumber)->capture_default_str();
    tc->add_option("--trials", tg.trials)->capture_default_str();
    tc->add_option("--seed", tg.seed)->capture_default_str();
    tc->add_option("--sign", tg.sign)->check(CLI::IsMember({-1, 1}))->capture_default_str();
    tc->add_option("--export", tg.export_prefix,
                   "write PREFIX_A.csv / PREFIX_b.csv least-squares form");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*sc) {
            return cmd_solve(solve);
        }
        if (*stc) {
            return cmd_stats(st);
        }
        if (*bc) {
            return cmd_bounds(bd);
        }
        if (*ec) {
            return cmd_experiment(ex);
        }
        if (*tc) {
            return cmd_tightness(tg);
        }
    } catch (const wsgd::DegenerateProblemError& e) {
        std::cerr << "degenerate problem: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const wsgd::ZeroRowError& e) {
        std::cerr << "degenerate problem: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const wsgd::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const UsageError& e) {
        std::cerr << "usage: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
