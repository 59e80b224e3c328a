#include "gwharm/conductance.hpp"
#include "gwharm/config.hpp"
#include "gwharm/dimension.hpp"
#include "gwharm/error.hpp"
#include "gwharm/kernels.hpp"
#include "gwharm/mctree.hpp"
#include "gwharm/reclen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

using namespace gwharm;

namespace {

constexpr int kDiagnosticFailure = 4;

std::vector<std::string> row(std::initializer_list<double> xs) {
    std::vector<std::string> r;
    for (double x : xs) {
        r.push_back(format_double(x));
    }
    return r;
}

CsvTable density_table(const ConductanceSolution& sol, std::vector<std::pair<std::string, std::string>> meta) {
    meta.emplace_back("iterations_run", std::to_string(sol.iterations_run));
    meta.emplace_back("final_residual", format_double(sol.final_residual));
    meta.emplace_back("mass_below_floor", format_double(sol.mass_below_floor()));
    CsvTable t{std::move(meta), {"x", "weight_density"}, {}};
    const GridDist& d = sol.law;
    for (std::size_t i = 0; i < d.size(); ++i) {
        t.rows.push_back(row({d.x(i), d.weights()[i] / d.step()}));
    }
    return t;
}

CsvTable sweep_table(const std::vector<DimensionRow>& rows, std::vector<std::pair<std::string, std::string>> meta,
                     int& failures) {
    CsvTable t{std::move(meta), {"lambda", "dim", "speed"}, {}};
    for (const auto& r : rows) {
        t.rows.push_back(row({r.lambda, r.dim, r.speed}));
        if (!r.ok) {
            ++failures;
            std::cerr << "lambda=" << format_double(r.lambda) << ": " << r.error << "\n";
        }
    }
    return t;
}

int run_beta_density(const RunConfig& cfg) {
    const OffspringLaw law = parse_offspring(*cfg.offspring);
    const ConductanceSolution sol = beta_iterate(law, *cfg.lambda, {cfg.step, cfg.iters, 0.0});
    write_csv(cfg.out, density_table(sol, run_metadata(cfg)));
    std::cerr << "support [" << format_double(sol.law.lo()) << ", " << format_double(sol.law.hi())
              << "], residual " << format_double(sol.final_residual) << "\n";
    return 0;
}

int run_sweep(const RunConfig& cfg) {
    const OffspringLaw law = parse_offspring(*cfg.offspring);
    const auto lambdas = linear_grid(*cfg.lambda_min, *cfg.lambda_max, cfg.points);
    const auto rows = sweep(law, lambdas, {cfg.step, cfg.iters, 0.0}, cfg.workers);
    int failures = 0;
    write_csv(cfg.out, sweep_table(rows, run_metadata(cfg), failures));
    std::cerr << "E[log N] = " << format_double(visibility_dimension(law))
              << ", log m = " << format_double(boundary_dimension(law)) << "\n";
    return failures > 0 ? kDiagnosticFailure : 0;
}

int run_recursive_lengths(const RunConfig& cfg) {
    const OffspringLaw law = parse_offspring(*cfg.offspring);
    const MarkLaw mark = parse_mark(*cfg.mark);
    PoolOptions popts;
    popts.pool_size = cfg.pool;
    popts.generations = cfg.gens;
    popts.seed = cfg.seed;
    popts.workers = cfg.workers;
    const SamplePool pool = phi_population(mark, law, popts);
    EvalOptions eopts;
    eopts.seed = cfg.seed;
    eopts.workers = cfg.workers;
    const RecLenReport r = reclen_report(pool, mark, law, eopts);

    Estimate cl{std::nan(""), std::nan("")};
    if (law.prob(2) == 1.0 && mark.kind() == MarkLaw::Kind::InverseUniform) {
        cl = cl_dimension(pool, mark, law, eopts).dimension;
    }
    auto meta = run_metadata(cfg);
    meta.emplace_back("integrability", to_string(r.integrability));
    meta.emplace_back("length_divergent", r.length_divergent ? "true" : "false");
    meta.emplace_back("pool_ks_last", format_double(pool.ks_history.empty() ? 0.0 : pool.ks_history.back()));
    CsvTable t{meta,
               {"dim_natural", "dim_natural_se", "dim_length", "dim_length_se", "dim_length_via_natural",
                "dim_length_via_natural_se", "alpha", "alpha_residual", "log_m", "natural_margin",
                "length_margin", "normalizer", "normalizer_se", "cl_dimension", "cl_dimension_se"},
               {}};
    t.rows.push_back(row({r.dim_natural.value, r.dim_natural.se, r.dim_length.value, r.dim_length.se,
                          r.dim_length_via_natural.value, r.dim_length_via_natural.se, r.alpha, r.alpha_residual,
                          r.log_m, r.natural_margin, r.length_margin, r.normalizer.value, r.normalizer.se,
                          cl.value, cl.se}));
    write_csv(cfg.out, t);

    if (!cfg.ecdf_out.empty()) {
        std::vector<double> sorted = pool.samples;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const std::size_t points = std::min<std::size_t>(n, 2000);
        CsvTable e{run_metadata(cfg), {"x", "cdf"}, {}};
        for (std::size_t j = 1; j <= points; ++j) {
            const std::size_t i = j * n / points;
            e.rows.push_back(row({sorted[i - 1], static_cast<double>(i) / static_cast<double>(n)}));
        }
        write_csv(cfg.ecdf_out, e);
    }
    return 0;
}

int run_mc_verify(const RunConfig& cfg) {
    const OffspringLaw law = parse_offspring(*cfg.offspring);
    const double lambda = *cfg.lambda;
    const ConductanceSolution sol = beta_iterate(law, lambda, {cfg.step, cfg.iters, 0.0});
    const double dim = dim_lambda(sol, cfg.workers);
    const double speed = speed_lambda(sol, cfg.workers);
    const McOptions mc{cfg.seed, cfg.workers};

    CsvTable t{run_metadata(cfg), {"quantity", "analytic", "mc", "se", "z"}, {}};
    bool ok = true;
    auto add = [&](const std::string& name, double analytic, const Estimate& e) {
        const double z = e.se > 0.0 ? (e.value - analytic) / e.se : 0.0;
        ok = ok && std::abs(z) < 3.0;
        auto r = row({analytic, e.value, e.se, z});
        r.insert(r.begin(), name);
        t.rows.push_back(r);
    };
    add("speed", speed, speed_mc(law, lambda, cfg.steps, cfg.walks, mc));
    DimMcOptions dopts;
    dopts.depth = cfg.depth;
    dopts.horizon = cfg.horizon;
    dopts.beta_window = cfg.window;
    dopts.n_trees = cfg.trees;
    const DimMcResult d = dim_mc(law, lambda, dopts, mc);
    add("dim", dim, d.at_horizon);
    add("dim_half_horizon", dim, d.at_half_horizon);
    if (cfg.stat_trees > 0) {
        const std::vector<TestStatistic> stats{
            {"stationarity_identity", [](double x) { return x; }},
            {"stationarity_square", [](double x) { return x * x; }},
            {"stationarity_log", [](double x) { return std::log(x); }},
        };
        for (const auto& s : stationarity_test(law, lambda, cfg.stat_depth, cfg.stat_trees, stats, mc)) {
            add(s.name, s.root_side, {s.child_side, s.se});
        }
    }
    t.meta.emplace_back("stabilized", d.stabilized ? "true" : "false");
    write_csv(cfg.out, t);
    if (!d.stabilized) {
        std::cerr << "dimension estimate did not stabilize between horizons " << std::max(1, cfg.horizon / 2)
                  << " and " << cfg.horizon << "\n";
    }
    return ok && d.stabilized ? 0 : kDiagnosticFailure;
}

int run_kernel_test(const RunConfig& cfg) {
    const std::vector<KernelFamily> families{
        KernelFamily::product(0.5),  KernelFamily::product(1.0),   KernelFamily::shifted_c(1.0),
        KernelFamily::shifted_c(0.3), KernelFamily::shifted_d(0.0), KernelFamily::shifted_d(0.5),
    };
    Rng rng(cfg.seed, 0);
    CsvTable t{run_metadata(cfg), {"family", "triples", "symmetry", "associativity", "summand", "pass"}, {}};
    bool ok = true;
    for (const auto& k : families) {
        const AxiomReport r = check_axioms(k, cfg.samples, rng);
        const bool pass = r.worst() <= 1e-12;
        ok = ok && pass;
        t.rows.push_back({r.family, std::to_string(r.triples), format_double(r.symmetry),
                          format_double(r.associativity), format_double(r.summand), pass ? "1" : "0"});
    }
    write_csv(cfg.out, t);
    return ok ? 0 : kDiagnosticFailure;
}

int run_reproduce_figures(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) {
        fail(ErrorCode::IoError, "cannot create '" + cfg.out_dir + "': " + ec.message());
    }
    const fs::path dir(cfg.out_dir);
    const BetaOptions opts{cfg.step, cfg.iters, 0.0};
    const OffspringLaw three = parse_offspring("1:1/3,2:1/3,3:1/3");
    const OffspringLaw two = parse_offspring("1:0.5,2:0.5");
    int failures = 0;

    for (double lambda : {0.7, 1.0, 1.2}) {
        const ConductanceSolution sol = beta_iterate(three, lambda, opts);
        auto meta = run_metadata(cfg);
        meta.emplace_back("offspring", three.description());
        meta.emplace_back("lambda", format_double(lambda));
        const std::string name = "beta_density_lambda_" + format_double(lambda) + ".csv";
        write_csv((dir / name).string(), density_table(sol, meta));
        std::cout << name << ": mass below 0.3 = " << format_double(sol.law.mass_below(0.3)) << "\n";
    }

    struct Recipe {
        const char* file;
        const OffspringLaw* law;
        double hi;
    };
    for (const Recipe& rc : {Recipe{"sweep_p1_p2.csv", &two, 1.45}, Recipe{"sweep_p1_p2_p3.csv", &three, 1.95}}) {
        const auto rows = sweep(*rc.law, linear_grid(0.05, rc.hi, cfg.points), opts, cfg.workers);
        auto meta = run_metadata(cfg);
        meta.emplace_back("offspring", rc.law->description());
        write_csv((dir / rc.file).string(), sweep_table(rows, meta, failures));
        const ConductanceSolution at_one = beta_iterate(*rc.law, 1.0, opts);
        double lo = INFINITY;
        double hi = -INFINITY;
        for (const auto& r : rows) {
            if (r.ok) {
                lo = std::min(lo, r.dim);
                hi = std::max(hi, r.dim);
            }
        }
        std::cout << rc.file << ": speed(1) = " << format_double(speed_lambda(at_one, cfg.workers))
                  << " (closed form " << format_double(speed_simple(*rc.law)) << "), dim in ["
                  << format_double(lo) << ", " << format_double(hi) << "], E[log N] = "
                  << format_double(visibility_dimension(*rc.law)) << ", log m = "
                  << format_double(boundary_dimension(*rc.law)) << "\n";
    }
    return failures > 0 ? kDiagnosticFailure : 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        const std::optional<RunConfig> parsed = parse_config(argc, argv, std::cout);
        if (!parsed) {
            return 0;
        }
        const RunConfig& cfg = *parsed;
        const bool randomized = cfg.command == Command::RecursiveLengths || cfg.command == Command::McVerify ||
                                cfg.command == Command::KernelTest;
        if (randomized && !cfg.seed_given) {
            std::cerr << "seed=" << cfg.seed << "\n";
        }
        switch (cfg.command) {
        case Command::BetaDensity:
            return run_beta_density(cfg);
        case Command::Sweep:
            return run_sweep(cfg);
        case Command::RecursiveLengths:
            return run_recursive_lengths(cfg);
        case Command::McVerify:
            return run_mc_verify(cfg);
        case Command::KernelTest:
            return run_kernel_test(cfg);
        case Command::ReproduceFigures:
            return run_reproduce_figures(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiagnosticFailure;
    }
    return 0;
}
