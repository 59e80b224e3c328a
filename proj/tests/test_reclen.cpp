#include "gwharm/error.hpp"
#include "gwharm/kernels.hpp"
#include "gwharm/reclen.hpp"

#include <doctest.h>

#include <cmath>

using namespace gwharm;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

const OffspringLaw& binary() {
    static const OffspringLaw law = validate_offspring({{2, 1.0}});
    return law;
}

SamplePool degenerate_pool() {
    PoolOptions opts;
    opts.pool_size = 2000;
    opts.generations = 60;
    return phi_population(MarkLaw::point_mass(2.0), binary(), opts);
}

SamplePool small_uniform_pool(std::size_t n = 20000, int gens = 30) {
    PoolOptions opts;
    opts.pool_size = n;
    opts.generations = gens;
    opts.seed = 17;
    return phi_population(MarkLaw::inverse_uniform(), binary(), opts);
}

} // namespace

TEST_CASE("kernel evaluation") {
    CHECK(kernel_eval(KernelFamily::shifted_c(1.0), 2.0, 2.0) == doctest::Approx(4.0 / 3.0));
    CHECK(kernel_eval(KernelFamily::product(0.5), 3.0, 4.0) == doctest::Approx(6.0));
    CHECK(kernel_eval(KernelFamily::biased_walk(1.0), 1.0, 1.0) == doctest::Approx(0.5));
    CHECK(kernel_eval(KernelFamily::biased_walk(0.4), 0.7, 0.9) ==
          doctest::Approx(0.63 / (0.7 + 0.9 - 0.6)));
    CHECK(kernel_eval(KernelFamily::biased_walk(1.5), 0.7, 0.9) ==
          doctest::Approx(0.63 / (0.7 + 0.9 + 0.5)));
    CHECK(code_of([] { kernel_eval(KernelFamily::shifted_c(1.0), 0.5, 2.0); }) == ErrorCode::DomainViolation);
    CHECK(code_of([] { kernel_eval(KernelFamily::shifted_d(0.0), -1.0, 2.0); }) == ErrorCode::DomainViolation);
    // Shifted kernels stay in their domain.
    const KernelFamily h = KernelFamily::shifted_c(1.0);
    Rng rng(1, 1);
    for (int i = 0; i < 1000; ++i) {
        const double u = 1.0 + 10.0 * rng.uniform_open();
        const double v = 1.0 + 10.0 * rng.uniform_open();
        CHECK(h(u, v) > 1.0);
        CHECK(h(u, v) < std::min(u, v));
    }
}

TEST_CASE("kernel axioms") {
    Rng rng(2, 2);
    for (const auto& k : {KernelFamily::product(0.5), KernelFamily::shifted_c(1.0), KernelFamily::shifted_d(0.3)}) {
        const AxiomReport r = check_axioms(k, 10000, rng);
        CHECK(r.worst() < 1e-12);
    }
}

TEST_CASE("degenerate pool collapses to 3/2") {
    const SamplePool pool = degenerate_pool();
    for (double x : pool.samples) {
        CHECK(std::abs(x - 1.5) < 1e-12);
    }
    CHECK(pool.generation == 60);
    CHECK(pool.ks_history.size() == 60);
    Rng rng(1, 1);
    const Estimate k = kappa_mc(1.5, pool, binary(), 100, rng);
    CHECK(k.value == doctest::Approx(9.0 / 7.0).epsilon(1e-12));
    CHECK(k.se == doctest::Approx(0.0));
}

TEST_CASE("degenerate model dimensions") {
    const SamplePool pool = degenerate_pool();
    const MarkLaw mark = MarkLaw::point_mass(2.0);
    const EvalOptions opts{5000, 3, 1};
    const NaturalDimension nat = dim_natural(pool, mark, binary(), opts);
    CHECK(std::abs(nat.dim.value - std::log(2.0)) < 1e-6);
    const LengthDimension len = dim_length(pool, mark, binary(), opts);
    CHECK(std::abs(len.direct.value - 1.0) < 1e-6);
    CHECK(std::abs(len.via_natural.value - 1.0) < 1e-6);
    CHECK_FALSE(len.divergent);
}

TEST_CASE("Malthusian parameter") {
    CHECK(malthusian(MarkLaw::inverse_uniform(), 2.0).alpha == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(malthusian(MarkLaw::point_mass(2.0), 2.0).alpha == doctest::Approx(1.0).epsilon(1e-9));
    const MalthusianResult four = malthusian(MarkLaw::point_mass(2.0), 4.0);
    CHECK(four.alpha == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(four.residual < 1e-10);
    // E[(1-U)^a] = 1/(a+1) = 1/m gives a = m - 1.
    CHECK(malthusian(MarkLaw::inverse_uniform(), 3.5).alpha == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(code_of([] { malthusian(MarkLaw::inverse_uniform(), 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("pool properties") {
    const SamplePool pool = small_uniform_pool();
    for (double x : pool.samples) {
        REQUIRE(x > 1.0);
    }
    CHECK(pool.provenance.mark == MarkLaw::inverse_uniform().description());
    CHECK(pool.ks_history.back() < pool.ks_history.front());
    CHECK(code_of([] {
              PoolOptions o;
              o.pool_size = 10;
              phi_population(MarkLaw::inverse_uniform(), binary(), o);
          }) == ErrorCode::InvalidArgument);
}

TEST_CASE("monotone coupling") {
    PoolOptions opts;
    opts.pool_size = 5000;
    opts.generations = 8;
    opts.synchronized = true;
    std::vector<std::vector<double>> history;
    opts.observer = [&](const SamplePool& p) { history.push_back(p.samples); };
    phi_population(MarkLaw::inverse_uniform(), validate_offspring({{1, 0.3}, {2, 0.4}, {4, 0.3}}), opts);
    REQUIRE(history.size() == 9);
    for (std::size_t g = 1; g < history.size(); ++g) {
        for (std::size_t i = 0; i < history[g].size(); ++i) {
            REQUIRE(history[g][i] <= history[g - 1][i]);
        }
    }
}

TEST_CASE("kappa bounds") {
    const SamplePool pool = small_uniform_pool();
    Rng rng(9, 9);
    for (double u : {1.01, 1.5, 3.0, 50.0}) {
        const Estimate k = kappa_mc(u, pool, binary(), 2000, rng);
        CHECK(k.value > 1.0);
        CHECK(k.value < u);
    }
    CHECK(code_of([&] { kappa_mc(1.0, pool, binary(), 10, rng); }) == ErrorCode::DomainViolation);
}

TEST_CASE("matched samples satisfy phi = Gamma * beta") {
    const SamplePool pool = small_uniform_pool();
    const MatchedSamples m = matched_samples(pool, MarkLaw::inverse_uniform(), binary(), 5000, 1, 1, 1);
    for (std::size_t i = 0; i < m.phi.size(); ++i) {
        const double beta = m.inverse_mark[i] * m.phi[i];
        CHECK(beta > 0.0);
        CHECK(beta <= 1.0);
        CHECK(m.log_ratio[i] > 0.0);
        CHECK(m.phi[i] > 1.0);
        // log((1-U)/(1-U phi)) computed directly.
        const double u = m.inverse_mark[i];
        CHECK(m.log_ratio[i] == doctest::Approx(std::log((1 - u) / (1 - u * m.phi[i]))).epsilon(1e-6));
    }
}

TEST_CASE("drop in the uniform binary model") {
    const SamplePool pool = small_uniform_pool(50000, 40);
    const MarkLaw mark = MarkLaw::inverse_uniform();
    const EvalOptions opts{0, 5, 1};
    const NaturalDimension nat = dim_natural(pool, mark, binary(), opts);
    CHECK(nat.dim.value > 0.0);
    CHECK(nat.dim.value + 3 * nat.dim.se < std::log(2.0));
    const LengthDimension len = dim_length(pool, mark, binary(), opts);
    CHECK(len.direct.value + 3 * len.direct.se < 1.0);
    CHECK(std::abs(len.z_routes) < 3.0);
}

TEST_CASE("Curien-Le Gall preconditions and identity") {
    const SamplePool pool = small_uniform_pool();
    const MarkLaw mark = MarkLaw::inverse_uniform();
    const EvalOptions opts{0, 5, 1};
    CHECK(code_of([&] { cl_dimension(pool, MarkLaw::point_mass(2.0), binary(), opts); }) == ErrorCode::WrongModel);
    CHECK(code_of([&] { cl_dimension(pool, mark, validate_offspring({{3, 1.0}}), opts); }) ==
          ErrorCode::WrongModel);
    CHECK(cl_identity_test(pool, [](double) { return 2.0; }, [](double) { return 0.0; }, opts) == 0.0);
    const double z = cl_identity_test(pool, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; },
                                      opts);
    CHECK(std::abs(z) < 4.0);
}

TEST_CASE("length geometry") {
    Rng rng(1, 1);
    const MarkLaw two = MarkLaw::point_mass(2.0);
    const TruncatedTree t = sample_tree(binary(), 3, &two, rng);
    const LengthGeometry g = length_geometry(t);
    CHECK(g.edge_length[0] == doctest::Approx(0.5));
    CHECK(g.height[0] == doctest::Approx(0.5));

    const MarkLaw unif = MarkLaw::inverse_uniform();
    const TruncatedTree r = sample_tree(validate_offspring({{1, 0.5}, {2, 0.5}}), 12, &unif, rng);
    const LengthGeometry h = length_geometry(r);
    for (NodeId x = 0; x < r.tree.size(); ++x) {
        double prod = 1.0;
        for (NodeId y : r.tree.path_to(x)) {
            prod *= 1.0 - 1.0 / r.tree.mark(y);
        }
        CHECK(h.ball_radius[x] == doctest::Approx(prod).epsilon(1e-12));
        CHECK(1.0 - h.height[x] == doctest::Approx(prod).epsilon(1e-9).scale(1.0));
        CHECK(h.height[x] <= 1.0);
        if (x != 0) {
            CHECK(h.height[x] > h.height[r.tree.parent(x)]);
        }
    }
    Rng rng2(1, 1);
    CHECK(code_of([&] { length_geometry(sample_tree(binary(), 2, nullptr, rng2)); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("age process on the lattice") {
    const double span = std::log(2.0);
    const AgeReport r =
        age_process_check(MarkLaw::point_mass(2.0), binary(), 1.0, {0.0, 1.0, 5.0}, 4, {7, 1});
    REQUIRE(r.lattice_span);
    CHECK(*r.lattice_span == doctest::Approx(span));
    CHECK(r.rows[0].scaled.value == 1.0);
    for (const auto& row : r.rows) {
        const double z = std::pow(2.0, std::floor(row.u / span));
        CHECK(row.scaled.value == doctest::Approx(std::exp(-row.u) * z).epsilon(1e-12));
        CHECK(row.ratio.value == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(row.stabilized);
    }
    CHECK(r.stabilized);
}

TEST_CASE("age process for the Yule tree") {
    const AgeReport r = age_process_check(MarkLaw::inverse_uniform(), binary(), 1.0, {2.0, 4.0}, 4000, {3, 1});
    CHECK_FALSE(r.lattice_span);
    CHECK(std::abs(r.rows[0].scaled.value - 1.0) < 3 * r.rows[0].scaled.se);
    CHECK(std::abs(r.rows[1].scaled.value - 1.0) < 3 * r.rows[1].scaled.se);
    CHECK(std::isnan(r.rows[1].ratio.value));
}
