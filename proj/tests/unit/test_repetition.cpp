#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gsb/repetition.hpp"
#include "support/random_gen.hpp"

using namespace gsb;

TEST_CASE("h closed-form identities") {
    for (long m : {1L, 2L, 5L, 40L}) CHECK(cim_h(m, 0.0) == Catch::Approx(1.0));
    for (double x : {-0.5, -0.1, 0.3, 2.0}) CHECK(cim_h(1, x) == Catch::Approx(1.0));
    CHECK(cim_h(3, 0.2) == Catch::Approx(std::pow(1.2, 1) * 1.6));
    // sign tracking: 1 + mx < 0
    CHECK(cim_h(4, -0.5) == Catch::Approx(std::pow(0.5, 2) * (1.0 - 2.0)));
}

TEST_CASE("product model basics") {
    BinaryModel bm = BinaryModel::sine(0.5, {0.1, 0.8});
    const DiscreteModel base = bm.to_discrete();

    const DiscreteModel one = product_model(base, 1);
    CHECK(one.num_outcomes() == 2);

    const DiscreteModel two = product_model(base, 2);
    CHECK(two.num_outcomes() == 4);
    two.validate();
    // p((+,+)|theta) = [(1+f)/2]^2
    const double q0 = 0.5 * (1.0 + bm.f[0]);
    CHECK(two.probs[0][0] == Catch::Approx(q0 * q0));

    // enumeration cap
    DiscreteModel wide;
    for (int x = 0; x < 3; ++x) wide.outcomes.push_back("x" + std::to_string(x));
    wide.params = {0.0};
    wide.probs = {{0.2, 0.3, 0.5}};
    wide.derivs = {{0.0, 0.1, -0.1}};
    wide.weights = {1.0};
    wide.validate();
    CHECK_THROWS_AS(product_model(wide, 20), Error);
}

TEST_CASE("binary_cim single-shot and diagonal structure") {
    testgen::Rng rng(333);
    BinaryModel bm = BinaryModel::sine(0.7, {0.15, 0.7, 1.4});
    const int n = bm.n();
    // m = 1 reduces to f' f'^T / (1 - f_i^2)
    for (int i = 0; i < n; ++i) {
        const SymMatrix c = binary_cim(bm, i, 1);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                CHECK(c(j, k) == Catch::Approx(bm.fprime[static_cast<std::size_t>(j)] *
                                               bm.fprime[static_cast<std::size_t>(k)] /
                                               (1.0 - bm.f[static_cast<std::size_t>(i)] * bm.f[static_cast<std::size_t>(i)]))
                                     .epsilon(1e-13));
    }
    // diagonal entries scale linearly in m (Fisher additivity)
    for (long m : {2L, 9L, 31L}) {
        for (int i = 0; i < n; ++i) {
            const SymMatrix c1 = binary_cim(bm, i, 1);
            const SymMatrix cm = binary_cim(bm, i, m);
            CHECK(cm(i, i) == Catch::Approx(static_cast<double>(m) * c1(i, i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("binary_cim matches brute-force product enumeration") {
    testgen::Rng rng(444);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(testgen::uniform(rng, 0.0, 3.0));
        BinaryModel bm;
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            t += testgen::uniform(rng, 0.1, 0.8);
            bm.params.push_back(t);
            bm.f.push_back(testgen::uniform(rng, -0.9, 0.9));
            bm.fprime.push_back(testgen::gauss(rng));
        }
        bm.weights.assign(static_cast<std::size_t>(n), 1.0 / n);
        bm.validate();
        const DiscreteModel base = bm.to_discrete();
        for (long m : {1L, 2L, 3L, 4L, 5L, 6L}) {
            const DiscreteModel joint = product_model(base, m);
            const TestFunctions g = local_scores(joint);
            for (int i = 0; i < n; ++i) {
                const SymMatrix brute = info_matrix(joint, g, i);
                const SymMatrix closed = binary_cim(bm, i, m);
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        CHECK(closed(j, k) ==
                              Catch::Approx(brute(j, k)).epsilon(1e-10).margin(1e-12));
            }
        }
    }
}

TEST_CASE("m = 2 worked example cross-check") {
    BinaryModel bm = BinaryModel::sine(0.5, {0.0, M_PI / 2});
    const SymMatrix c = binary_cim(bm, 0, 2);
    CHECK(c(0, 0) == Catch::Approx(0.5));                 // 2 x single-shot Fisher
    CHECK(c(1, 1) == Catch::Approx(0.0).margin(1e-15));   // f'_2 = 0
    const DiscreteModel joint = product_model(bm.to_discrete(), 2);
    const SymMatrix brute = info_matrix(joint, local_scores(joint), 0);
    for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) CHECK(c(j, k) == Catch::Approx(brute(j, k)).margin(1e-12));
}

TEST_CASE("obs1 diagnostic identities") {
    // identical distributions at all theta_i: Lambda = 1 everywhere
    BinaryModel flat;
    flat.params = {0.0, 1.0, 2.0};
    flat.f = {0.3, 0.3, 0.3};
    flat.fprime = {0.1, -0.2, 0.1};
    flat.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const auto flat_diag = obs1_diag(flat, {1});
    for (const auto& row : flat_diag[0].lambda)
        for (double v : row) CHECK(v == Catch::Approx(1.0).epsilon(1e-12));

    // Lambda_{jn} = 1 and R_{jn} = 0 for any model
    BinaryModel bm = BinaryModel::sine(0.5, uniform_grid_inclusive(0.0, M_PI, 5));
    const auto diag = obs1_diag(bm, {1, 3});
    const int n = bm.n();
    for (int j = 0; j < n; ++j) {
        CHECK(diag[0].lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] ==
              Catch::Approx(1.0).epsilon(1e-12));
        CHECK(diag[0].lambda[static_cast<std::size_t>(n - 1)][static_cast<std::size_t>(j)] ==
              Catch::Approx(1.0).epsilon(1e-12));
        CHECK(diag[0].rmat[static_cast<std::size_t>(j)][static_cast<std::size_t>(n - 1)] ==
              Catch::Approx(0.0).margin(1e-12));
    }
    // Lambda diagonal >= 1
    for (int j = 0; j < n; ++j)
        CHECK(diag[0].lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] >= 1.0 - 1e-12);
}

TEST_CASE("obs1 ratio trend on the figure model (frozen reference values)") {
    // d = 0.5, n = 8, endpoint-inclusive uniform grid on [0, pi]; reference
    // ratios computed independently in 60-digit arithmetic
    BinaryModel bm = BinaryModel::sine(0.5, uniform_grid_inclusive(0.0, M_PI, 8));
    const auto diags = obs1_diag(bm, {1, 5, 10, 50, 200});
    CHECK(diags[0].ratio_fg_gcr == Catch::Approx(1.0).margin(1e-10));
    CHECK(diags[1].ratio_fg_gcr == Catch::Approx(1.20770561578).epsilon(1e-6));
    CHECK(diags[2].ratio_fg_gcr == Catch::Approx(1.15132660688).epsilon(1e-6));
    CHECK(diags[3].ratio_fg_gcr == Catch::Approx(1.02624556599).epsilon(1e-6));
    CHECK(diags[4].ratio_fg_gcr == Catch::Approx(1.00189488326).epsilon(1e-6));
    for (const auto& d : diags) CHECK(d.ratio_fg_gcr >= 1.0 - 1e-9);
}

TEST_CASE("closed-form diagnostic agrees with the generic product path") {
    BinaryModel bm = BinaryModel::sine(0.5, {0.3, 0.9, 1.7});
    const auto closed = obs1_diag(bm, {1, 2, 3, 4});
    const auto generic = obs1_diag(bm.to_discrete(), {1, 2, 3, 4});
    for (std::size_t k = 0; k < closed.size(); ++k) {
        CHECK(closed[k].bound_fg == Catch::Approx(generic[k].bound_fg).epsilon(1e-9));
        CHECK(closed[k].bound_gcr == Catch::Approx(generic[k].bound_gcr).epsilon(1e-9));
        CHECK(closed[k].bound_gbar == Catch::Approx(generic[k].bound_gbar).epsilon(1e-9));
    }
}

TEST_CASE("ratio excess stays resolved deep into the concentration regime") {
    // reference values from 120-digit arithmetic on the same collapsed model
    BinaryModel bm = BinaryModel::sine(0.5, uniform_grid_inclusive(0.0, M_PI, 8));
    const auto diags = obs1_diag(bm, {300, 340, 500});
    CHECK(diags[0].ratio_fg_gcr - 1.0 == Catch::Approx(2.154101779e-4).epsilon(1e-4));
    CHECK(diags[1].ratio_fg_gcr - 1.0 == Catch::Approx(3.51558391e-4).epsilon(1e-4));
    CHECK(diags[2].ratio_fg_gcr - 1.0 == Catch::Approx(2.4638994e-6).epsilon(1e-4));
}

TEST_CASE("large-m evaluation stays finite up to the module cap") {
    BinaryModel bm = BinaryModel::sine(0.5, uniform_grid_inclusive(0.0, M_PI, 8));
    const auto diags = obs1_diag(bm, {1000, 10000});
    for (const auto& d : diags) {
        CHECK(std::isfinite(d.bound_fg));
        CHECK(std::isfinite(d.bound_gcr));
        CHECK(d.ratio_fg_gcr >= 1.0 - 1e-9);
        CHECK(d.bound_fg > 0.0);
    }
    CHECK_THROWS_AS(obs1_diag(bm, {10001}), Error);
}
