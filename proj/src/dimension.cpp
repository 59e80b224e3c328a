#include "gwharm/dimension.hpp"

#include "gwharm/error.hpp"
#include "gwharm/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace gwharm {

namespace {

constexpr double kBoundaryTolerance = 1e-8;
constexpr double kLeakTolerance = 1e-6;
constexpr std::size_t kRowBlocks = 64;

struct Partial {
    double log_weighted = 0.0;
    double product = 0.0;
    double union_term = 0.0;
    double leaked = 0.0;
};

} // namespace

PairMoments pair_moments(const ConductanceSolution& sol, unsigned workers) {
    const GridDist& d = sol.law;
    const double lambda = sol.lambda;
    PairMoments out;

    std::vector<double> x;
    std::vector<double> w;
    std::vector<double> log1m;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double wi = d.weights()[i];
        if (wi <= kAtomPrune) {
            continue;
        }
        const double xi = d.x(i);
        if (xi >= 1.0) {
            out.boundary_mass += wi;
            continue;
        }
        x.push_back(xi);
        w.push_back(wi);
        log1m.push_back(std::log1p(-xi));
    }
    if (out.boundary_mass > kBoundaryTolerance) {
        fail(ErrorCode::BoundaryMass, "mass " + std::to_string(out.boundary_mass) + " at beta = 1");
    }
    const std::size_t g = x.size();
    if (g == 0) {
        fail(ErrorCode::BoundaryMass, "no mass below beta = 1");
    }

    // Rows are split into fixed blocks so the reduction order is independent
    // of the worker count. Off-diagonal terms are counted twice.
    const std::size_t blocks = std::min(kRowBlocks, g);
    std::vector<Partial> partial(blocks);
    const double shift = lambda - 1.0;
    parallel_for(blocks, workers, [&](std::size_t b) {
        Partial p;
        for (std::size_t i = b; i < g; i += blocks) {
            const double xi = x[i];
            const double li = log1m[i];
            const double a0 = shift + xi;
            const double a1 = 1.0 - xi;
            double s_log = 0.0;
            double s_prod = 0.0;
            double s_union = 0.0;
            double s_leak = 0.0;
            for (std::size_t j = i + 1; j < g; ++j) {
                const double xj = x[j];
                const double den = a0 + xj * a1;
                if (den <= 0.0) {
                    s_leak += w[j];
                    continue;
                }
                const double inv = w[j] / den;
                const double prod = xi * xj * inv;
                s_prod += prod;
                s_log += prod * (li + log1m[j]);
                s_union += (xi + xj - xi * xj) * inv;
            }
            const double wi = w[i];
            p.product += 2.0 * wi * s_prod;
            p.log_weighted += wi * s_log;
            p.union_term += 2.0 * wi * s_union;
            p.leaked += 2.0 * wi * s_leak;

            const double den = a0 + xi * a1;
            if (den <= 0.0) {
                p.leaked += wi * wi;
                continue;
            }
            const double prod = xi * xi / den;
            p.product += wi * wi * prod;
            p.log_weighted += wi * wi * prod * li;
            p.union_term += wi * wi * (2.0 * xi - xi * xi) / den;
        }
        partial[b] = p;
    });
    for (const auto& p : partial) {
        out.log_weighted += p.log_weighted;
        out.product += p.product;
        out.union_term += p.union_term;
        out.leaked_mass += p.leaked;
    }
    if (out.leaked_mass > kLeakTolerance) {
        fail(ErrorCode::SupportLeakage,
             "joint mass " + std::to_string(out.leaked_mass) + " where the denominator is not positive");
    }
    return out;
}

double dim_lambda(const ConductanceSolution& sol, unsigned workers) {
    const PairMoments m = pair_moments(sol, workers);
    return std::log(sol.lambda) - m.log_weighted / m.product;
}

double speed_lambda(const ConductanceSolution& sol, unsigned workers) {
    const PairMoments m = pair_moments(sol, workers);
    return m.product / m.union_term;
}

double speed_simple(const OffspringLaw& law) {
    const auto pmf = law.pmf();
    double acc = 0.0;
    for (std::size_t k = 1; k < pmf.size(); ++k) {
        const double kk = static_cast<double>(k);
        acc += pmf[k] * (kk - 1.0) / (kk + 1.0);
    }
    return acc;
}

double visibility_dimension(const OffspringLaw& law) {
    const auto pmf = law.pmf();
    double acc = 0.0;
    for (std::size_t k = 2; k < pmf.size(); ++k) {
        acc += pmf[k] * std::log(static_cast<double>(k));
    }
    return acc;
}

double boundary_dimension(const OffspringLaw& law) { return std::log(law.mean()); }

std::vector<DimensionRow> sweep(const OffspringLaw& law, std::vector<double> lambdas, const BetaOptions& opts,
                                unsigned workers) {
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<DimensionRow> rows(lambdas.size());
    parallel_for(lambdas.size(), workers, [&](std::size_t i) {
        DimensionRow& row = rows[i];
        row.lambda = lambdas[i];
        row.grid_step = opts.step;
        try {
            const ConductanceSolution sol = beta_iterate(law, lambdas[i], opts);
            const PairMoments m = pair_moments(sol, 1);
            row.iterations = sol.iterations_run;
            row.dim = std::log(sol.lambda) - m.log_weighted / m.product;
            row.speed = m.product / m.union_term;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
            row.dim = std::nan("");
            row.speed = std::nan("");
        }
    });
    return rows;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
    std::vector<double> out;
    if (points <= 0) {
        return out;
    }
    if (points == 1) {
        out.push_back(lo);
        return out;
    }
    for (int i = 0; i < points; ++i) {
        out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return out;
}

} // namespace gwharm
