#pragma once

// Seeded multi-trial sweeps over the bias parameter lambda on the five
// synthetic least-squares families, plus the sampling demo on the
// tightness instance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/io.hpp"
#include "wsgd/numerics.hpp"
#include "wsgd/problem.hpp"
#include "wsgd/sampling.hpp"
#include "wsgd/sgd.hpp"
#include "wsgd/weighting.hpp"

namespace wsgd {

inline constexpr std::uint64_t kDefaultSeedBase = 20140501;

/// How a sweep picks the step size for each lambda.
enum class StepRule {
    Cor33Envelope, ///< partially biased step from the min/max envelope bounds
    ExactConstants ///< basic step with the exact sup L_(w) and sigma^2_(w) of each lambda
};

inline std::vector<double> default_lambda_grid()
{
    std::vector<double> g;
    for (int k = 0; k <= 10; ++k) {
        g.push_back(k / 10.0);
    }
    return g;
}

struct CaseSpec {
    int case_id = 1;
    std::size_t n = 1000;
    std::size_t d = 10;
    std::size_t trials = 100;
    std::vector<double> lambda_grid = default_lambda_grid();
    double eps_target = 0.1;
    std::size_t max_iters = 50000;
    std::uint64_t seed_base = kDefaultSeedBase;
    std::size_t curve_ticks = 50; ///< evenly spaced curve checkpoints on top of powers of two
    unsigned threads = 0;         ///< 0: hardware concurrency
    StepRule step_rule = StepRule::Cor33Envelope;
};

struct CaseInstance {
    DenseMatrix A;
    Vector b;
    Vector x_true;
};

/// Row variance and residual variance of each family.
inline double case_row_variance(int case_id, std::size_t row, std::size_t n)
{
    switch (case_id) {
    case 1: return row + 1 == n ? 100.0 : 1.0;
    case 2: return 1.0;
    case 3:
    case 4:
    case 5: return static_cast<double>(row + 1);
    default: throw ParameterError("unknown case id " + std::to_string(case_id));
    }
}

inline double case_noise_variance(int case_id)
{
    switch (case_id) {
    case 1: return 0.01;
    case 2: return 0.01;
    case 3: return 400.0;
    case 4: return 100.0;
    case 5: return 0.01;
    default: throw ParameterError("unknown case id " + std::to_string(case_id));
    }
}

/// b = A x_true + e with Gaussian x_true, A and e; the stream depends on
/// (seed_base, case, trial) only.
inline CaseInstance generate_case(const CaseSpec& spec, std::size_t trial)
{
    if (spec.case_id < 1 || spec.case_id > 5) {
        throw ParameterError("generate_case: case id must be 1..5");
    }
    if (spec.n < 1 || spec.d < 1) {
        throw DimensionError("generate_case: n and d must be positive");
    }
    RngStream rng(derive_seed(spec.seed_base, static_cast<std::uint64_t>(spec.case_id), trial));
    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto d = static_cast<Eigen::Index>(spec.d);
    CaseInstance inst;
    inst.x_true.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        inst.x_true(j) = rng.gaussian(0.0, 1.0);
    }
    inst.A.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double var = case_row_variance(spec.case_id, static_cast<std::size_t>(i), spec.n);
        for (Eigen::Index j = 0; j < d; ++j) {
            inst.A(i, j) = rng.gaussian(0.0, var);
        }
    }
    const double nv = case_noise_variance(spec.case_id);
    Vector e(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        e(i) = rng.gaussian(0.0, nv);
    }
    inst.b = inst.A * inst.x_true + e;
    return inst;
}

struct SweepCell {
    double lambda = 0.0;
    std::vector<Checkpoint> mean_curve; ///< mean ||x_k - x*||^2 across trials
    double mean_iters_to_eps = 0.0;     ///< censored trials counted at max_iters
    bool censored = false;              ///< some trial never reached eps
    std::size_t trials = 0;
    std::size_t censored_trials = 0;
};

struct SweepResult {
    int case_id = 0;
    std::vector<SweepCell> cells;
};

namespace detail {

/// Calls fn(t) for t in [0, count) on up to `threads` workers; results are
/// written by fn into caller-owned slots, so the output does not depend on
/// scheduling. The first exception (lowest index) is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&](std::size_t start, std::size_t stride) {
        for (std::size_t t = start; t < count; t += stride) {
            try {
                fn(t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const std::size_t nthreads = std::min<std::size_t>(threads, std::max<std::size_t>(count, 1));
    if (nthreads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < nthreads; ++w) {
            pool.emplace_back(worker, w, nthreads);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace detail

/// Per trial: one instance, and for every lambda one weighted SGD run with
/// the partially biased weights and the matching step size.
inline SweepResult run_sweep(const CaseSpec& spec)
{
    if (spec.trials == 0) {
        throw ParameterError("run_sweep: need at least one trial");
    }
    for (double lam : spec.lambda_grid) {
        if (!(lam >= 0.0 && lam <= 1.0)) {
            throw ParameterError("run_sweep: lambda values must lie in [0, 1]");
        }
    }
    const std::size_t nl = spec.lambda_grid.size();
    std::vector<std::size_t> ticks;
    if (spec.curve_ticks > 0 && spec.max_iters > 0) {
        for (std::size_t k = 1; k <= spec.curve_ticks; ++k) {
            ticks.push_back(spec.max_iters * k / spec.curve_ticks);
        }
    }

    auto context = [&](std::size_t t) {
        return "case " + std::to_string(spec.case_id) + " trial " + std::to_string(t) + ": ";
    };

    // runs[trial][lambda]
    std::vector<std::vector<RunRecord>> runs(spec.trials, std::vector<RunRecord>(nl));
    detail::parallel_for(spec.trials, spec.threads, [&](std::size_t t) {
        try {
            const CaseInstance inst = generate_case(spec, t);
            const Problem prob = from_least_squares(inst.A, inst.b);
            const ProblemStats s = stats(prob);
            for (std::size_t l = 0; l < nl; ++l) {
                SgdConfig cfg;
                cfg.scheme = WeightScheme::partially_biased(spec.lambda_grid[l]);
                if (spec.step_rule == StepRule::ExactConstants) {
                    const WeightTable tab = build_weights(cfg.scheme, s.L, prob.probs());
                    const EffectiveConstants eff =
                        effective_constants(tab, s.L, s.grad_norms_sq_at_xstar, prob.probs());
                    cfg.step_size = step_size_cor22(s.mu, spec.eps_target, eff.sup_L_w, eff.sigma_sq_w);
                } else {
                    cfg.epsilon = spec.eps_target;
                }
                cfg.max_iters = spec.max_iters;
                cfg.seed = derive_seed(spec.seed_base ^ 0xa5a5a5a5ULL,
                                       static_cast<std::uint64_t>(spec.case_id) * 1000003ULL + t, l);
                cfg.extra_checkpoints = ticks;
                cfg.error_target = spec.eps_target;
                RunRecord rec = run(prob, s, cfg);
                rec.final_x.resize(0);
                rec.config.extra_checkpoints.clear();
                runs[t][l] = std::move(rec);
            }
        } catch (const DegenerateProblemError& e) {
            throw DegenerateProblemError(context(t) + e.what());
        } catch (const Error& e) {
            throw Error(context(t) + e.what());
        }
    });

    SweepResult res;
    res.case_id = spec.case_id;
    for (std::size_t l = 0; l < nl; ++l) {
        SweepCell cell;
        cell.lambda = spec.lambda_grid[l];
        cell.trials = spec.trials;
        cell.mean_curve = runs[0][l].errors_sq;
        for (auto& c : cell.mean_curve) {
            c.error_sq = 0.0;
        }
        double iters = 0.0;
        for (std::size_t t = 0; t < spec.trials; ++t) {
            const auto& rec = runs[t][l];
            for (std::size_t k = 0; k < cell.mean_curve.size(); ++k) {
                cell.mean_curve[k].error_sq += rec.errors_sq[k].error_sq;
            }
            if (rec.first_below_target) {
                iters += static_cast<double>(*rec.first_below_target);
            } else {
                iters += static_cast<double>(spec.max_iters);
                ++cell.censored_trials;
            }
        }
        const double inv = 1.0 / static_cast<double>(spec.trials);
        for (auto& c : cell.mean_curve) {
            c.error_sq *= inv;
        }
        cell.mean_iters_to_eps = iters * inv;
        cell.censored = cell.censored_trials > 0;
        res.cells.push_back(std::move(cell));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Tightness demo

struct TightnessDemo {
    int N = 0;
    std::size_t trials = 0;
    double uniform_mean_first_hit = 0.0;
    double biased_mean_first_hit = 0.0;
    double biased_prob_first = 0.0; ///< p^(w) of the heavy component
};

/// Mean number of draws until the heavy component is first sampled, under
/// uniform and under fully biased sampling.
inline TightnessDemo tightness_demo(int N, std::size_t trials, std::uint64_t seed)
{
    const Problem prob = tightness_instance(N, 1);
    const WeightTable full = build_weights(WeightScheme::fully_biased(), prob.lipschitz(), prob.probs());
    const AliasTable uni = build_alias(prob.probs());
    const AliasTable bia = build_alias(full.sampling_probs);

    auto mean_first_hit = [&](const AliasTable& t, std::uint64_t s) {
        RngStream rng(s);
        double total = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            std::size_t draws = 1;
            while (t.draw(rng) != 0) {
                ++draws;
            }
            total += static_cast<double>(draws);
        }
        return trials ? total / static_cast<double>(trials) : 0.0;
    };

    TightnessDemo out;
    out.N = N;
    out.trials = trials;
    out.uniform_mean_first_hit = mean_first_hit(uni, derive_seed(seed, 1));
    out.biased_mean_first_hit = mean_first_hit(bia, derive_seed(seed, 2));
    out.biased_prob_first = full.sampling_probs(0);
    return out;
}

// ---------------------------------------------------------------------------
// Output

inline void write_curves_csv(std::ostream& os, const std::vector<SweepResult>& results)
{
    os << "case,lambda,iteration,mean_error_sq\n";
    for (const auto& r : results) {
        for (const auto& cell : r.cells) {
            for (const auto& c : cell.mean_curve) {
                os << r.case_id << ',' << io::format_double(cell.lambda) << ',' << c.iteration
                   << ',' << io::format_double(c.error_sq) << '\n';
            }
        }
    }
}

inline void write_iters_csv(std::ostream& os, const std::vector<SweepResult>& results)
{
    os << "case,lambda,mean_iters_to_eps,censored\n";
    for (const auto& r : results) {
        for (const auto& cell : r.cells) {
            os << r.case_id << ',' << io::format_double(cell.lambda) << ','
               << io::format_double(cell.mean_iters_to_eps) << ',' << (cell.censored ? 1 : 0)
               << '\n';
        }
    }
}

/// gnuplot script drawing one log-scale panel per case from curves.csv.
inline void write_plot_script(std::ostream& os, const std::vector<SweepResult>& results,
                              const std::string& curves_file = "curves.csv")
{
    os << "# gnuplot script: mean squared error versus iteration\n";
    os << "set datafile separator ','\n";
    os << "set logscale y\n";
    os << "set xlabel 'iteration k'\n";
    os << "set ylabel 'mean ||x_k - x*||^2'\n";
    os << "set key outside right\n";
    for (const auto& r : results) {
        os << "set title 'Case " << r.case_id << "'\n";
        os << "plot ";
        for (std::size_t l = 0; l < r.cells.size(); ++l) {
            const auto lam = io::format_double(r.cells[l].lambda);
            os << (l ? ", \\\n     " : "") << "'" << curves_file << "' every ::1 using "
               << "(($1==" << r.case_id << " && abs($2-" << lam << ")<1e-12) ? $3 : 1/0):4"
               << " with lines title 'lambda=" << lam << "'";
        }
        os << "\npause -1\n";
    }
}

/// Rebuilds sweep results from the two CSV files (the fields they carry).
inline std::vector<SweepResult> parse_results(std::istream& curves, std::istream& iters)
{
    std::vector<SweepResult> out;
    auto cell_for = [&](int case_id, double lambda) -> SweepCell& {
        auto it = std::find_if(out.begin(), out.end(),
                               [&](const SweepResult& r) { return r.case_id == case_id; });
        if (it == out.end()) {
            out.push_back({case_id, {}});
            it = out.end() - 1;
        }
        auto ct = std::find_if(it->cells.begin(), it->cells.end(),
                               [&](const SweepCell& c) { return c.lambda == lambda; });
        if (ct == it->cells.end()) {
            SweepCell c;
            c.lambda = lambda;
            it->cells.push_back(std::move(c));
            ct = it->cells.end() - 1;
        }
        return *ct;
    };
    auto fields = [](const std::string& line, std::size_t want, const char* which) {
        auto f = io::split(line, ',');
        if (f.size() != want) {
            throw IoError(std::string(which) + ": malformed line '" + line + "'");
        }
        return f;
    };
    auto num = [](const std::string& s) {
        const auto v = io::parse_double(s);
        if (!v) {
            throw IoError("bad number '" + s + "'");
        }
        return *v;
    };

    std::string line;
    if (!std::getline(curves, line) || line != "case,lambda,iteration,mean_error_sq") {
        throw IoError("curves.csv: bad header");
    }
    while (std::getline(curves, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = fields(line, 4, "curves.csv");
        auto& cell = cell_for(static_cast<int>(num(f[0])), num(f[1]));
        cell.mean_curve.push_back({static_cast<std::size_t>(num(f[2])), num(f[3])});
    }
    if (!std::getline(iters, line) || line != "case,lambda,mean_iters_to_eps,censored") {
        throw IoError("iters.csv: bad header");
    }
    while (std::getline(iters, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = fields(line, 4, "iters.csv");
        auto& cell = cell_for(static_cast<int>(num(f[0])), num(f[1]));
        cell.mean_iters_to_eps = num(f[2]);
        cell.censored = num(f[3]) != 0.0;
    }
    return out;
}

struct EmittedFiles {
    std::filesystem::path curves;
    std::filesystem::path iters;
    std::filesystem::path plot;
};

inline EmittedFiles emit_results(const std::vector<SweepResult>& results,
                                 const std::filesystem::path& out_dir, bool with_plot = true)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw IoError("cannot create output directory '" + out_dir.string() + "'");
    }
    EmittedFiles files{out_dir / "curves.csv", out_dir / "iters.csv", out_dir / "plot.gp"};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream os(p, std::ios::binary);
        if (!os) {
            throw IoError("cannot write '" + p.string() + "'");
        }
        return os;
    };
    {
        auto os = open(files.curves);
        write_curves_csv(os, results);
        if (!os) {
            throw IoError("write failed: " + files.curves.string());
        }
    }
    {
        auto os = open(files.iters);
        write_iters_csv(os, results);
        if (!os) {
            throw IoError("write failed: " + files.iters.string());
        }
    }
    if (with_plot) {
        auto os = open(files.plot);
        write_plot_script(os, results);
    } else {
        files.plot.clear();
    }
    return files;
}

} // namespace wsgd
