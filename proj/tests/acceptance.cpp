// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any fails. Randomized criteria write their numbers to CSV files under
// the output directory; the reproducibility criterion reruns them into a
// second directory and compares the files byte for byte.

#include "gwharm/conductance.hpp"
#include "gwharm/config.hpp"
#include "gwharm/dimension.hpp"
#include "gwharm/error.hpp"
#include "gwharm/kernels.hpp"
#include "gwharm/mctree.hpp"
#include "gwharm/reclen.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace gwharm;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr unsigned kWorkers = 1;

struct Outcome {
    bool pass = true;
    std::string detail;
};

void note(Outcome& out, bool ok, const std::string& what) {
    out.pass = out.pass && ok;
    out.detail += (out.detail.empty() ? "" : "; ") + what + (ok ? "" : " [violated]");
}

std::string fmt(double x, int digits = 6) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

std::string est(const Estimate& e) { return fmt(e.value) + " +- " + fmt(e.se, 2); }

const OffspringLaw& half() {
    static const OffspringLaw law = validate_offspring({{1, 0.5}, {2, 0.5}});
    return law;
}
const OffspringLaw& third() {
    static const OffspringLaw law = validate_offspring({{1, 1.0 / 3}, {2, 1.0 / 3}, {3, 1.0 / 3}});
    return law;
}
const OffspringLaw& binary() {
    static const OffspringLaw law = validate_offspring({{2, 1.0}});
    return law;
}

void save(const fs::path& dir, const std::string& name, CsvTable t) {
    t.meta.insert(t.meta.begin(), {{"criterion", name}, {"seed", std::to_string(kSeed)},
                                   {"workers", std::to_string(kWorkers)}, {"version", kVersion}});
    write_csv((dir / (name + ".csv")).string(), t);
}

std::vector<std::string> cells(std::initializer_list<double> xs) {
    std::vector<std::string> r;
    for (double x : xs) {
        r.push_back(format_double(x));
    }
    return r;
}

void est_row(CsvTable& t, const std::string& name, const Estimate& e, double reference) {
    std::vector<std::string> r{name};
    for (auto& c : cells({e.value, e.se, reference})) {
        r.push_back(std::move(c));
    }
    t.rows.push_back(std::move(r));
}

// ---- deterministic criteria --------------------------------------------------

Outcome ac1() {
    Outcome out;
    for (int m : {2, 3}) {
        const auto law = validate_offspring({{m, 1.0}});
        for (double lambda : {0.5, 1.0, 1.5}) {
            const ConductanceSolution sol = beta_iterate(law, lambda);
            const double dd = std::abs(dim_lambda(sol) - std::log(m));
            const double ds = std::abs(speed_lambda(sol) - (m - lambda) / (m + lambda));
            const bool ok = dd < 1e-3 && ds < 1e-3;
            out.pass = out.pass && ok;
            out.detail += (out.detail.empty() ? "" : " ") + std::string("m=") + std::to_string(m) +
                          ",l=" + fmt(lambda) + ":" + fmt(std::max(dd, ds), 2) + (ok ? "" : "!");
        }
    }
    out.detail = "max |error| per case " + out.detail + " (tol 1e-3)";
    return out;
}

Outcome ac2() {
    Outcome out;
    const struct {
        const OffspringLaw* law;
        double target;
        const char* name;
    } cases[] = {{&half(), 1.0 / 6.0, "1/6"}, {&third(), 5.0 / 18.0, "5/18"}};
    for (const auto& c : cases) {
        const double grid = speed_lambda(beta_iterate(*c.law, 1.0));
        const double simple = speed_simple(*c.law);
        const bool ok = std::abs(grid - c.target) < 2e-3 && std::abs(grid - simple) < 2e-3 &&
                        std::abs(simple - c.target) < 1e-15;
        out.pass = out.pass && ok;
        out.detail += std::string(out.detail.empty() ? "" : "; ") + c.name + ": grid " + fmt(grid, 8) +
                      ", closed form " + fmt(simple, 17) + (ok ? "" : " [violated]");
    }
    return out;
}

Outcome ac3() {
    Outcome out;
    const struct {
        const OffspringLaw* law;
        double hi;
        const char* name;
    } cases[] = {{&half(), 1.45, "{1:1/2,2:1/2}"}, {&third(), 1.95, "{1:1/3,2:1/3,3:1/3}"}};
    for (const auto& c : cases) {
        const double lower = visibility_dimension(*c.law) - 5e-3;
        const double upper = boundary_dimension(*c.law) - 5e-3;
        const auto rows = sweep(*c.law, linear_grid(0.05, c.hi, 50), {}, kWorkers);
        std::vector<double> bad;
        double worst_gap = INFINITY;
        for (const auto& r : rows) {
            worst_gap = std::min(worst_gap, boundary_dimension(*c.law) - r.dim);
            if (!r.ok || !(r.dim > lower && r.dim < upper)) {
                bad.push_back(r.lambda);
            }
        }
        out.pass = out.pass && bad.empty();
        std::string where;
        for (double l : bad) {
            where += (where.empty() ? "" : ",") + fmt(l, 4);
        }
        out.detail += std::string(out.detail.empty() ? "" : "; ") + c.name + ": " +
                      std::to_string(rows.size() - bad.size()) + "/" + std::to_string(rows.size()) +
                      " in bounds, min(log m - d) = " + fmt(worst_gap, 4) +
                      (bad.empty() ? "" : ", outside at lambda = " + where);
    }
    return out;
}

Outcome ac4() {
    const ConductanceSolution sol = beta_iterate(third(), 0.7);
    const double mass = sol.law.mass_below(0.3);
    return {mass < 1e-3, "mass below 0.3 = " + fmt(mass, 3) + ", support starts at " + fmt(sol.law.lo())};
}

Outcome ac7() {
    Outcome out;
    Rng rng(kSeed, 70);
    for (const auto& k : {KernelFamily::product(1.0), KernelFamily::product(0.25), KernelFamily::shifted_c(1.0),
                          KernelFamily::shifted_c(0.25), KernelFamily::shifted_d(0.0), KernelFamily::shifted_d(0.5)}) {
        const AxiomReport r = check_axioms(k, 10000, rng);
        const bool ok = r.worst() < 1e-12;
        out.pass = out.pass && ok;
        out.detail += (out.detail.empty() ? "" : "; ") + r.family + " " + fmt(r.worst(), 2) + (ok ? "" : "!");
    }
    out.detail = "worst relative violation: " + out.detail;
    return out;
}

// ---- randomized criteria -----------------------------------------------------

Outcome ac5(const fs::path& dir) {
    Outcome out;
    const double lambda = 1.0;
    const ConductanceSolution sol = beta_iterate(half(), lambda);
    const double d = dim_lambda(sol);
    const double s = speed_lambda(sol);
    DimMcOptions opts;
    opts.depth = 60;
    opts.horizon = 30;
    opts.n_trees = 10000;
    const DimMcResult mc = dim_mc(half(), lambda, opts, {kSeed, kWorkers});
    const Estimate speed = speed_mc(half(), lambda, 10000, 1000, {kSeed, kWorkers});
    const double zd = (mc.at_horizon.value - d) / mc.at_horizon.se;
    const double zs = (speed.value - s) / speed.se;
    out.pass = std::abs(zd) < 3 && std::abs(zs) < 3;
    out.detail = "dim " + est(mc.at_horizon) + " vs " + fmt(d) + " (z=" + fmt(zd, 3) + "); speed " + est(speed) +
                 " vs " + fmt(s) + " (z=" + fmt(zs, 3) + ")";
    CsvTable t{{}, {"quantity", "mc", "se", "analytic"}, {}};
    est_row(t, "dim", mc.at_horizon, d);
    est_row(t, "dim_half_horizon", mc.at_half_horizon, d);
    est_row(t, "speed", speed, s);
    save(dir, "ac5", std::move(t));
    return out;
}

Outcome ac6(const fs::path& dir) {
    Outcome out;
    const std::vector<TestStatistic> stats{{"identity", [](double x) { return x; }},
                                           {"square", [](double x) { return x * x; }},
                                           {"log", [](double x) { return std::log(x); }}};
    CsvTable t{{}, {"lambda", "statistic", "child_side", "root_side", "se", "z"}, {}};
    for (double lambda : {0.7, 1.0}) {
        const auto res = stationarity_test(half(), lambda, 16, 100000, stats, {kSeed, kWorkers});
        for (const auto& r : res) {
            const bool ok = std::abs(r.z) < 3;
            out.pass = out.pass && ok;
            out.detail += (out.detail.empty() ? "" : " ") + std::string("l=") + fmt(lambda) + "/" + r.name +
                          ":z=" + fmt(r.z, 3) + (ok ? "" : "!");
            std::vector<std::string> row{format_double(lambda), r.name};
            for (auto& c : cells({r.child_side, r.root_side, r.se, r.z})) {
                row.push_back(std::move(c));
            }
            t.rows.push_back(std::move(row));
        }
    }
    save(dir, "ac6", std::move(t));
    return out;
}

Outcome ac8(const fs::path& dir) {
    Outcome out;
    const MarkLaw mark = MarkLaw::inverse_uniform();
    const MalthusianResult alpha = malthusian(mark, binary().mean());
    note(out, std::abs(alpha.alpha - 1.0) < 1e-9 && alpha.residual < 1e-10,
              "alpha " + fmt(alpha.alpha, 12) + " (residual " + fmt(alpha.residual, 2) + ")");

    PoolOptions popts;
    popts.pool_size = 1'000'000;
    popts.generations = 100;
    popts.seed = kSeed;
    popts.workers = kWorkers;
    const SamplePool pool = phi_population(mark, binary(), popts);
    const EvalOptions eopts{0, kSeed, kWorkers};

    const LengthDimension len = dim_length(pool, mark, binary(), eopts);
    const double upper = len.direct.value + 3.0 * len.direct.se;
    note(out, upper < 1.0, "dim_length " + est(len.direct) + ", CI upper " + fmt(upper));

    const CurienLeGall cl = cl_dimension(pool, mark, binary(), eopts);
    note(out, std::abs(cl.numerator.z) < 3, "numerator balance z=" + fmt(cl.numerator.z, 3));
    note(out, std::abs(cl.denominator.z) < 3, "denominator balance z=" + fmt(cl.denominator.z, 3));

    const double z_log =
        cl_identity_test(pool, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; }, eopts);
    const double z_frac = cl_identity_test(
        pool, [](double x) { return x / (x + 1.0); }, [](double x) { return 1.0 / ((x + 1.0) * (x + 1.0)); },
        eopts);
    note(out, std::abs(z_log) < 3, "identity log z=" + fmt(z_log, 3));
    note(out, std::abs(z_frac) < 3, "identity x/(x+1) z=" + fmt(z_frac, 3));

    const double z_cl = z_score(cl.dimension, len.direct);
    note(out, std::abs(z_cl) < 3, "cl_dimension " + est(cl.dimension) + " z=" + fmt(z_cl, 3));

    CsvTable t{{}, {"quantity", "value", "se", "reference"}, {}};
    t.rows.push_back({"alpha", format_double(alpha.alpha), "0", format_double(alpha.residual)});
    est_row(t, "dim_length", len.direct, 1.0);
    est_row(t, "dim_length_via_natural", len.via_natural, len.direct.value);
    est_row(t, "cl_dimension", cl.dimension, len.direct.value);
    est_row(t, "checknum_lhs", cl.numerator.lhs, cl.numerator.rhs.value);
    est_row(t, "checknum_rhs", cl.numerator.rhs, cl.numerator.z);
    est_row(t, "checkdenum_lhs", cl.denominator.lhs, cl.denominator.rhs.value);
    est_row(t, "checkdenum_rhs", cl.denominator.rhs, cl.denominator.z);
    t.rows.push_back({"identity_log_z", format_double(z_log), "0", "0"});
    t.rows.push_back({"identity_frac_z", format_double(z_frac), "0", "0"});
    save(dir, "ac8", std::move(t));
    return out;
}

Outcome ac9(const fs::path& dir) {
    Outcome out;
    const MarkLaw mark = MarkLaw::point_mass(2.0);
    PoolOptions popts;
    popts.pool_size = 100'000;
    popts.generations = 100;
    popts.seed = kSeed;
    popts.workers = kWorkers;
    const SamplePool pool = phi_population(mark, binary(), popts);
    double worst = 0.0;
    for (double x : pool.samples) {
        worst = std::max(worst, std::abs(x - 1.5));
    }
    note(out, worst < 1e-12, "max |phi - 3/2| = " + fmt(worst, 2));
    const EvalOptions eopts{0, kSeed, kWorkers};
    const NaturalDimension nat = dim_natural(pool, mark, binary(), eopts);
    const LengthDimension len = dim_length(pool, mark, binary(), eopts);
    const double alpha = malthusian(mark, binary().mean()).alpha;
    note(out, std::abs(nat.dim.value - std::log(2.0)) < 1e-3, "dim_natural " + fmt(nat.dim.value, 10));
    note(out, std::abs(len.direct.value - 1.0) < 1e-3, "dim_length " + fmt(len.direct.value, 10));
    note(out, std::abs(alpha - 1.0) < 1e-3, "alpha " + fmt(alpha, 10));
    CsvTable t{{}, {"quantity", "value", "se", "reference"}, {}};
    est_row(t, "dim_natural", nat.dim, std::log(2.0));
    est_row(t, "dim_length", len.direct, 1.0);
    est_row(t, "normalizer", nat.normalizer, 9.0 / 7.0);
    save(dir, "ac9", std::move(t));
    return out;
}

Outcome ac10(const fs::path& dir) {
    Outcome out;
    const MarkLaw yule = MarkLaw::inverse_uniform();
    const double alpha = malthusian(yule, binary().mean()).alpha;
    const AgeReport r = age_process_check(yule, binary(), alpha, {5.0, 10.0}, 10000, {kSeed, kWorkers});
    CsvTable t{{}, {"case", "u", "scaled", "se", "u_next", "ratio", "ratio_se"}, {}};
    for (const auto& row : r.rows) {
        const double z = (row.scaled.value - 1.0) / row.scaled.se;
        note(out, std::abs(z) < 3, "u=" + fmt(row.u) + ": " + est(row.scaled) + " (z=" + fmt(z, 3) + ")");
        std::vector<std::string> line{"inverse_uniform"};
        for (auto& c : cells({row.u, row.scaled.value, row.scaled.se, row.u_next, row.ratio.value, row.ratio.se})) {
            line.push_back(std::move(c));
        }
        t.rows.push_back(std::move(line));
    }

    // Deterministic lifetimes: every tree is the same, so a handful suffices.
    const MarkLaw two = MarkLaw::point_mass(2.0);
    const double alpha2 = malthusian(two, binary().mean()).alpha;
    const AgeReport lat = age_process_check(two, binary(), alpha2, {5.0, 10.0}, 100, {kSeed, kWorkers});
    std::string ratios;
    for (const auto& row : lat.rows) {
        ratios += (ratios.empty() ? "" : ",") + fmt(row.ratio.value, 12);
        std::vector<std::string> line{"point_mass(2)"};
        for (auto& c : cells({row.u, row.scaled.value, row.scaled.se, row.u_next, row.ratio.value, row.ratio.se})) {
            line.push_back(std::move(c));
        }
        t.rows.push_back(std::move(line));
    }
    note(out, lat.lattice_span.has_value() && lat.stabilized,
              "lattice span " + fmt(lat.lattice_span.value_or(NAN)) + ", ratios " + ratios);
    save(dir, "ac10", std::move(t));
    return out;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary);
    std::ifstream fb(b, std::ios::binary);
    if (!fa || !fb) {
        return false;
    }
    const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return sa == sb;
}

using Randomized = std::pair<std::string, std::function<Outcome(const fs::path&)>>;

const std::vector<Randomized>& randomized() {
    static const std::vector<Randomized> list{
        {"ac5", ac5}, {"ac6", ac6}, {"ac8", ac8}, {"ac9", ac9}, {"ac10", ac10}};
    return list;
}

void print(const std::string& id, const Outcome& o, double seconds, int& failures) {
    std::printf("%s %s %s (%.1fs)\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
}

Outcome guarded(const std::function<Outcome()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("error: ") + e.what()};
    }
}

} // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    const fs::path first = root / "run1";
    const fs::path second = root / "run2";
    fs::create_directories(first);
    fs::create_directories(second);

    int failures = 0;
    auto timed = [&](const std::string& id, const std::function<Outcome()>& f) {
        const auto t0 = std::chrono::steady_clock::now();
        const Outcome o = guarded(f);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        print(id, o, dt.count(), failures);
    };

    timed("AC1", ac1);
    timed("AC2", ac2);
    timed("AC3", ac3);
    timed("AC4", ac4);
    timed("AC5", [&] { return ac5(first); });
    timed("AC6", [&] { return ac6(first); });
    timed("AC7", ac7);
    timed("AC8", [&] { return ac8(first); });
    timed("AC9", [&] { return ac9(first); });
    timed("AC10", [&] { return ac10(first); });

    timed("AC11", [&] {
        Outcome out;
        for (const auto& [name, run] : randomized()) {
            guarded([&] { return run(second); });
            const std::string file = name + ".csv";
            const bool ok = same_bytes(first / file, second / file);
            out.pass = out.pass && ok;
            out.detail += (out.detail.empty() ? "" : " ") + file + (ok ? ":identical" : ":DIFFERENT");
        }
        return out;
    });

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
