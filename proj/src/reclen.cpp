#include "gwharm/reclen.hpp"

#include "gwharm/error.hpp"
#include "gwharm/kernels.hpp"
#include "gwharm/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace gwharm {

namespace {

constexpr std::size_t kChunk = 8192;

enum StreamTag : std::uint64_t {
    kMatchedPrimary = 11,
    kMatchedSecondary = 12,
    kKappaBootstrap = 13,
    kClTriples = 14,
    kClBootstrap = 15,
    kIdentityPairs = 16,
    kAgeTrees = 17,
    kGenerationBase = 1000,
};

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

// Runs body(rng, i) for every i in [0, n); each fixed chunk has its own stream.
void for_each_chunked(std::size_t n, std::uint64_t seed, unsigned workers,
                      const std::function<void(Rng&, std::size_t)>& body) {
    parallel_for(chunk_count(n), workers, [&](std::size_t c) {
        Rng rng(seed, c);
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            body(rng, i);
        }
    });
}

double draw_sum(const std::vector<double>& pool, int k, Rng& rng) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
        s += pool[rng.below(pool.size())];
    }
    return s;
}

// h(1/u, s) with h(a,b) = ab/(a+b-1), written in terms of u = 1/Gamma.
double regenerate(double u, double s) { return s / (1.0 + u * (s - 1.0)); }

double ks_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t i = 0;
    std::size_t j = 0;
    const auto na = static_cast<double>(a.size());
    const auto nb = static_cast<double>(b.size());
    double best = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return best;
}

void block_sums(std::span<const double> x, std::span<const double> w, std::vector<double>& out) {
    const BlockLayout layout(x.size());
    out.assign(layout.blocks, 0.0);
    for (std::size_t b = 0; b < layout.blocks; ++b) {
        double s = 0.0;
        for (std::size_t i = layout.begin(b); i < layout.end(b); ++i) {
            s += w.empty() ? x[i] : x[i] * w[i];
        }
        out[b] = s;
    }
}

void require_finite(const std::vector<double>& blocks, const char* what) {
    const double total = pairwise_sum(blocks);
    if (!std::isfinite(total)) {
        fail(ErrorCode::NonFiniteEstimate, std::string(what) + " is not finite");
    }
}

void check_pool(const SamplePool& pool) {
    if (pool.samples.size() < kMinPoolSize) {
        fail(ErrorCode::InvalidArgument, "pool must hold at least 1000 samples");
    }
}

std::size_t resolve_samples(const SamplePool& pool, const EvalOptions& opts) {
    return opts.samples == 0 ? pool.samples.size() : opts.samples;
}

Estimate ratio_of_means(const Estimate& num, const Estimate& den) {
    const double r = num.value / den.value;
    const double rel = std::hypot(num.se / num.value, den.se / den.value);
    return {r, std::abs(r) * rel};
}

} // namespace

SamplePool phi_population(const MarkLaw& mark, const OffspringLaw& law, const PoolOptions& opts) {
    if (opts.pool_size < kMinPoolSize) {
        fail(ErrorCode::InvalidArgument, "pool size must be at least 1000");
    }
    if (opts.generations < 1) {
        fail(ErrorCode::InvalidArgument, "generations must be >= 1");
    }
    SamplePool pool;
    pool.provenance = {law.description(), mark.description(), opts.seed};
    std::vector<double> next(opts.pool_size);
    std::vector<double> sorted_prev;
    std::vector<double> sorted_cur;

    for (int g = 0; g <= opts.generations; ++g) {
        const std::uint64_t gen_seed = substream(opts.seed, kGenerationBase + (opts.synchronized ? 0 : g));
        const bool first = g == 0;
        // Generation 0 uses an infinite child sum, h(Gamma, inf) = Gamma, but
        // consumes the same draws so synchronized runs stay coupled.
        for_each_chunked(opts.pool_size, gen_seed, opts.workers, [&](Rng& rng, std::size_t i) {
            const int k = law.sample(rng);
            double s = 0.0;
            if (first) {
                for (int j = 0; j < k; ++j) {
                    rng.next();
                }
            } else {
                s = draw_sum(pool.samples, k, rng);
            }
            const double u = mark.sample_inverse(rng);
            next[i] = first ? 1.0 / u : regenerate(u, s);
        });
        for (double v : next) {
            if (!(v > 1.0) || std::isnan(v)) {
                fail(ErrorCode::DomainViolation, "pool sample left (1, inf)");
            }
        }
        pool.samples.swap(next);
        if (next.empty()) {
            next.resize(opts.pool_size);
        }
        pool.generation = g;
        if (opts.track_ks) {
            sorted_cur = pool.samples;
            std::sort(sorted_cur.begin(), sorted_cur.end());
            if (!first) {
                pool.ks_history.push_back(ks_sorted(sorted_prev, sorted_cur));
            }
            sorted_prev.swap(sorted_cur);
        }
        if (opts.observer) {
            opts.observer(pool);
        }
    }
    return pool;
}

Estimate kappa_mc(double u, const SamplePool& pool, const OffspringLaw& law, std::size_t draws, Rng& rng) {
    if (!(u > 1.0)) {
        fail(ErrorCode::DomainViolation, "kappa needs u > 1");
    }
    if (draws < 2) {
        fail(ErrorCode::InvalidArgument, "kappa needs at least two draws");
    }
    const KernelFamily h = KernelFamily::recursive_lengths();
    std::vector<double> v(draws);
    for (auto& x : v) {
        x = h(u, draw_sum(pool.samples, law.sample(rng), rng));
    }
    return mean_se(v);
}

MatchedSamples matched_samples(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                               std::size_t n, std::uint64_t seed, std::uint64_t stream, unsigned workers) {
    check_pool(pool);
    if (n < 2) {
        fail(ErrorCode::InvalidArgument, "need at least two samples");
    }
    const KernelFamily h = KernelFamily::recursive_lengths();
    MatchedSamples m;
    m.log_ratio.resize(n);
    m.lifetime.resize(n);
    m.kappa.resize(n);
    m.phi.resize(n);
    m.inverse_mark.resize(n);
    for_each_chunked(n, substream(seed, stream), workers, [&](Rng& rng, std::size_t i) {
        const double s = draw_sum(pool.samples, law.sample(rng), rng);
        const double u = mark.sample_inverse(rng);
        const double phi = regenerate(u, s);
        const double s_other = draw_sum(pool.samples, law.sample(rng), rng);
        m.log_ratio[i] = std::log1p((s - 1.0) * u);
        m.lifetime[i] = -std::log1p(-u);
        m.kappa[i] = h(phi, s_other);
        m.phi[i] = phi;
        m.inverse_mark[i] = u;
    });
    return m;
}

NaturalDimension dim_natural(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                             const EvalOptions& opts) {
    const MatchedSamples m =
        matched_samples(pool, mark, law, resolve_samples(pool, opts), opts.seed, kMatchedPrimary, opts.workers);
    std::vector<double> num;
    std::vector<double> den;
    block_sums(m.log_ratio, m.kappa, num);
    block_sums(m.kappa, {}, den);
    require_finite(num, "natural-dimension numerator");
    require_finite(den, "kappa normalizer");
    NaturalDimension out;
    out.dim = bootstrap_ratio(num, den, substream(opts.seed, kKappaBootstrap));
    out.normalizer = mean_se(m.kappa);
    return out;
}

MalthusianResult malthusian(const MarkLaw& mark, double m) {
    if (!(m > 1.0) || !std::isfinite(m)) {
        fail(ErrorCode::InvalidArgument, "Malthusian parameter needs 1 < m < inf");
    }
    const double target = 1.0 / m;
    auto g = [&](double a) { return mark.expected_discount(a) - target; };
    double lo = 0.0;
    double hi = 1.0;
    while (g(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) {
            fail(ErrorCode::NoBracket, "no sign change of the Malthusian equation below 1e6");
        }
    }
    MalthusianResult r;
    r.lo = lo;
    r.hi = hi;
    double a = hi;
    double ga = g(hi);
    for (int it = 0; it < 200 && ga != 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double gm = g(mid);
        a = mid;
        ga = gm;
        if (gm > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r.alpha = a;
    r.residual = std::abs(ga);
    if (!(r.residual < 1e-10)) {
        fail(ErrorCode::NoBracket, "bisection stalled above the 1e-10 residual");
    }
    return r;
}

LengthDimension dim_length(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                           const EvalOptions& opts) {
    LengthDimension out;
    const std::optional<double> life = mark.expected_lifetime();
    if (!life) {
        fail(ErrorCode::DivergentDenominator, "mean lifetime of the marks cannot be certified finite");
    }
    if (std::isinf(*life)) {
        out.divergent = true;
        return out;
    }
    const std::size_t n = resolve_samples(pool, opts);
    const MatchedSamples a = matched_samples(pool, mark, law, n, opts.seed, kMatchedPrimary, opts.workers);
    std::vector<double> num;
    std::vector<double> den;
    std::vector<double> norm;
    block_sums(a.log_ratio, a.kappa, num);
    block_sums(a.lifetime, a.kappa, den);
    block_sums(a.kappa, {}, norm);
    require_finite(num, "length-dimension numerator");
    require_finite(den, "kappa-weighted lifetime");
    // log(1-U phi) = log(1-U) - log((1-U)/(1-U phi)), so the direct formula
    // reduces to a ratio of the two positive weighted means.
    out.direct = bootstrap_ratio(num, den, substream(opts.seed, kKappaBootstrap + 100));

    const Estimate natural = bootstrap_ratio(num, norm, substream(opts.seed, kKappaBootstrap));
    const MatchedSamples b = matched_samples(pool, mark, law, n, opts.seed, kMatchedSecondary, opts.workers);
    std::vector<double> den_b;
    std::vector<double> norm_b;
    block_sums(b.lifetime, b.kappa, den_b);
    block_sums(b.kappa, {}, norm_b);
    require_finite(den_b, "kappa-weighted lifetime");
    const Estimate mean_life = bootstrap_ratio(den_b, norm_b, substream(opts.seed, kKappaBootstrap + 200));
    out.via_natural = ratio_of_means(natural, mean_life);
    out.z_routes = z_score(out.direct, out.via_natural);
    return out;
}

CurienLeGall cl_dimension(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                          const EvalOptions& opts) {
    if (!(law.prob(2) == 1.0) || mark.kind() != MarkLaw::Kind::InverseUniform) {
        fail(ErrorCode::WrongModel, "formula holds only for binary trees with uniform 1/Gamma");
    }
    if (pool.provenance.offspring != law.description() || pool.provenance.mark != mark.description()) {
        fail(ErrorCode::WrongModel, "pool was built for a different model");
    }
    const std::size_t n = resolve_samples(pool, opts);
    std::vector<double> num(n);
    std::vector<double> den(n);
    const auto& s = pool.samples;
    for_each_chunked(n, substream(opts.seed, kClTriples), opts.workers, [&](Rng& rng, std::size_t i) {
        const double p1 = s[rng.below(s.size())];
        const double p2 = s[rng.below(s.size())];
        const double q = s[rng.below(s.size())];
        num[i] = 2.0 * std::log1p(p2 / p1) * p1 * q / (q + p1 + p2 - 1.0);
        den[i] = p1 * p2 / (p1 + p2 - 1.0);
    });
    std::vector<double> num_b;
    std::vector<double> den_b;
    block_sums(num, {}, num_b);
    block_sums(den, {}, den_b);
    require_finite(num_b, "numerator");
    require_finite(den_b, "denominator");

    CurienLeGall out;
    out.dimension = bootstrap_ratio(num_b, den_b, substream(opts.seed, kClBootstrap));

    const MatchedSamples m = matched_samples(pool, mark, law, n, opts.seed, kMatchedPrimary, opts.workers);
    std::vector<double> lhs_num(n);
    std::vector<double> lhs_den(n);
    for (std::size_t i = 0; i < n; ++i) {
        lhs_num[i] = m.log_ratio[i] * m.kappa[i];
        lhs_den[i] = m.lifetime[i] * m.kappa[i];
    }
    out.numerator = {mean_se(lhs_num), mean_se(num), 0.0};
    out.numerator.z = z_score(out.numerator.lhs, out.numerator.rhs);
    out.denominator = {mean_se(lhs_den), mean_se(den), 0.0};
    out.denominator.z = z_score(out.denominator.lhs, out.denominator.rhs);
    return out;
}

double cl_identity_test(const SamplePool& pool, const std::function<double(double)>& g,
                        const std::function<double(double)>& g_prime, const EvalOptions& opts) {
    check_pool(pool);
    const std::size_t n = resolve_samples(pool, opts);
    std::vector<double> diff(n);
    const auto& s = pool.samples;
    for_each_chunked(n, substream(opts.seed, kIdentityPairs), opts.workers, [&](Rng& rng, std::size_t i) {
        const double p1 = s[rng.below(s.size())];
        const double p2 = s[rng.below(s.size())];
        diff[i] = g(p1 + p2) - p1 * (p1 - 1.0) * g_prime(p1) - g(p1);
    });
    const Estimate d = mean_se(diff);
    if (!std::isfinite(d.value)) {
        fail(ErrorCode::NonFiniteEstimate, "identity test produced a non-finite mean");
    }
    return d.se > 0.0 ? d.value / d.se : 0.0;
}

LengthGeometry length_geometry(const TruncatedTree& t) {
    const Tree& tree = t.tree;
    if (!tree.marked()) {
        fail(ErrorCode::InvalidArgument, "length geometry needs a marked tree");
    }
    LengthGeometry g;
    g.edge_length.resize(tree.size());
    g.height.resize(tree.size());
    g.ball_radius.resize(tree.size());
    for (NodeId x = 0; x < tree.size(); ++x) {
        const NodeId p = tree.parent(x);
        const double above = p == kNoNode ? 1.0 : g.ball_radius[p];
        const double base = p == kNoNode ? 0.0 : g.height[p];
        const double inv = 1.0 / tree.mark(x);
        g.edge_length[x] = above * inv;
        g.height[x] = base + g.edge_length[x];
        g.ball_radius[x] = above * (1.0 - inv);
    }
    return g;
}

AgeReport age_process_check(const MarkLaw& mark, const OffspringLaw& law, double alpha,
                            const std::vector<double>& u_grid, std::size_t n_trees, const McOptions& mc,
                            std::size_t node_budget) {
    if (u_grid.empty() || n_trees < 2) {
        fail(ErrorCode::InvalidArgument, "age check needs a time grid and at least two trees");
    }
    for (double u : u_grid) {
        if (!(u >= 0.0) || !std::isfinite(u)) {
            fail(ErrorCode::InvalidArgument, "times must be finite and >= 0");
        }
    }
    AgeReport report;
    report.alpha = alpha;
    if (mark.kind() == MarkLaw::Kind::PointMass) {
        report.lattice_span = -std::log1p(-1.0 / mark.point_value());
    }
    // Comparison partner of each requested time.
    std::vector<double> partner(u_grid.size());
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        if (report.lattice_span) {
            partner[i] = u_grid[i] + *report.lattice_span;
        } else {
            partner[i] = i + 1 < u_grid.size() ? u_grid[i + 1] : std::nan("");
        }
    }
    std::vector<double> times(u_grid);
    for (double p : partner) {
        if (!std::isnan(p)) {
            times.push_back(p);
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    const double horizon = times.back();
    const std::size_t nt = times.size();

    std::vector<double> counts(n_trees * nt);
    const BlockLayout layout(n_trees, 256);
    parallel_for(layout.blocks, mc.workers, [&](std::size_t blk) {
        std::vector<double> stack;
        for (std::size_t t = layout.begin(blk); t < layout.end(blk); ++t) {
            Rng rng(mc.seed, substream(kAgeTrees, t));
            double* z = &counts[t * nt];
            std::size_t visited = 0;
            stack.assign(1, 0.0);
            while (!stack.empty()) {
                const double birth = stack.back();
                stack.pop_back();
                if (++visited > node_budget) {
                    fail(ErrorCode::NodeBudgetExceeded, "age process exceeded the node budget");
                }
                const double death = birth - std::log1p(-mark.sample_inverse(rng));
                const auto lo = std::lower_bound(times.begin(), times.end(), birth);
                const auto hi = std::lower_bound(times.begin(), times.end(), death);
                for (auto it = lo; it != hi; ++it) {
                    z[it - times.begin()] += 1.0;
                }
                if (death <= horizon) {
                    const int k = law.sample(rng);
                    stack.insert(stack.end(), static_cast<std::size_t>(k), death);
                }
            }
        }
    });

    auto index_of = [&](double u) {
        return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), u) - times.begin());
    };
    report.stabilized = true;
    std::vector<double> scaled(n_trees);
    std::vector<double> ratio(n_trees);
    for (std::size_t i = 0; i < u_grid.size(); ++i) {
        AgeRow row;
        row.u = u_grid[i];
        row.u_next = partner[i];
        const std::size_t a = index_of(row.u);
        const double fa = std::exp(-alpha * row.u);
        for (std::size_t t = 0; t < n_trees; ++t) {
            scaled[t] = fa * counts[t * nt + a];
        }
        row.scaled = mean_se(scaled);
        bool ok = report.lattice_span.has_value() || std::abs(row.scaled.value - 1.0) <= 3.0 * row.scaled.se + 1e-9;
        if (std::isnan(row.u_next)) {
            row.ratio = {std::nan(""), std::nan("")};
        } else {
            const std::size_t b = index_of(row.u_next);
            const double fb = std::exp(-alpha * row.u_next);
            for (std::size_t t = 0; t < n_trees; ++t) {
                ratio[t] = fb * counts[t * nt + b] / scaled[t];
            }
            row.ratio = mean_se(ratio);
            ok = ok && std::abs(row.ratio.value - 1.0) <= 3.0 * row.ratio.se + 1e-9;
        }
        row.stabilized = ok;
        report.stabilized = report.stabilized && ok;
        report.rows.push_back(row);
    }
    return report;
}

RecLenReport reclen_report(const SamplePool& pool, const MarkLaw& mark, const OffspringLaw& law,
                           const EvalOptions& opts) {
    RecLenReport r;
    r.integrability = integrability_advisor(mark, law);
    const MalthusianResult mal = malthusian(mark, law.mean());
    r.alpha = mal.alpha;
    r.alpha_residual = mal.residual;
    r.log_m = std::log(law.mean());
    const NaturalDimension nat = dim_natural(pool, mark, law, opts);
    r.dim_natural = nat.dim;
    r.normalizer = nat.normalizer;
    const LengthDimension len = dim_length(pool, mark, law, opts);
    r.length_divergent = len.divergent;
    r.dim_length = len.direct;
    r.dim_length_via_natural = len.via_natural;
    r.natural_margin = r.log_m - r.dim_natural.value;
    r.length_margin = r.alpha - r.dim_length.value;
    return r;
}

} // namespace gwharm
