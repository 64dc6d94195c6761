#include <doctest.h>

#include <cmath>

#include "efpsa/errors.hpp"
#include "efpsa/photonic_interface.hpp"
#include "efpsa/repeater_sim.hpp"

using namespace efpsa;
using namespace efpsa::repeater;

namespace {
const LinkParams kLink{};
const photonic::OpticalInterface kOptics{};
}  // namespace

TEST_CASE("link probabilities") {
    // 2 * 0.01 * e^-0.041 * 0.83 * 0.33 * eta
    CHECK(link_success_p1(kLink, 1.0) == doctest::Approx(5.25786e-3).epsilon(1e-5));
    CHECK(local_bk_p2(kLink, 0.5) == doctest::Approx(0.5 * 0.415 * 0.415));
    CHECK_THROWS_AS(link_success_p1(kLink, 1.5), ValidationError);
}

TEST_CASE("channel capacity") {
    CHECK(kLink.t_link() == doctest::Approx(3.33564e-6).epsilon(1e-5));
    CHECK(channel_capacity(kLink) == 3330);
    LinkParams fiber = kLink;
    fiber.signal_velocity = kSpeedOfLight / kFiberIndex;
    CHECK(channel_capacity(fiber) == 10 * 489);
    LinkParams exact = kLink;
    exact.signal_velocity = 1e3 / (400 * exact.t_ph);
    CHECK(channel_capacity(exact) == 4000);
}

TEST_CASE("closed-form rates") {
    const double eta = kOptics.eta(10);
    const double expect = 0.5 * 10 * link_success_p1(kLink, eta) / kLink.t_link();
    CHECK(rate_efpsa(10, kLink, kOptics) == doctest::Approx(expect));
    // rate at N = 10: 1844.69 ebits/s
    CHECK(rate_efpsa(10, kLink, kOptics) == doctest::Approx(1844.69).epsilon(1e-5));
    CHECK(rate_efpsa(0, kLink, kOptics) == 0.0);
    // the MZI tree has ceil(log2 10) = 4 stages
    CHECK(rate_mzi(10, kLink, kOptics) ==
          doctest::Approx(0.5 * 10 * link_success_p1(kLink, kOptics.eta(1) * std::pow(0.92, 4)) / kLink.t_link()));
    CHECK(rate_hybrid(10, 1, kLink, kOptics) == rate_efpsa(10, kLink, kOptics));
    CHECK(rate_hybrid(10, 10, kLink, kOptics) == rate_mzi(10, kLink, kOptics));
    CHECK_THROWS_AS(rate_hybrid(10, 11, kLink, kOptics), ValidationError);
}

TEST_CASE("peak and capacity clamp") {
    // d/dN [N 10^(-t N / 10)] = 0 at N = 10 / (t ln 10)
    CHECK(efpsa_peak(kLink, kOptics) == 1086);
    CHECK(rate_efpsa(4000, kLink, kOptics, true) < rate_efpsa(4000, kLink, kOptics, false));
    CHECK(rate_efpsa(3000, kLink, kOptics, true) == rate_efpsa(3000, kLink, kOptics, false));
    CHECK(rate_point(Architecture::Efpsa, 3331, kLink, kOptics).limit == Limit::Capacity);
    CHECK(rate_point(Architecture::Efpsa, 3330, kLink, kOptics).limit == Limit::Loss);
    CHECK(rate_point(Architecture::Efpsa, 3331, kLink, kOptics, false).limit == Limit::Loss);
}

TEST_CASE("natural loss conversion moves the peak to 1 / t_wg") {
    photonic::OpticalInterface o = kOptics;
    o.loss_mode = photonic::LossMode::Natural;
    CHECK(efpsa_peak(kLink, o) == 250);
}

TEST_CASE("property: hybrid envelope dominates both pure architectures") {
    for (long n : {1L, 2L, 7L, 64L, 333L, 1000L, 3000L, 5000L}) {
        const auto h = optimize_hybrid(n, kLink, kOptics);
        CHECK(h.rate >= rate_efpsa(n, kLink, kOptics));
        CHECK(h.rate >= rate_mzi(n, kLink, kOptics));
        CHECK(h.n_dev >= 1);
        CHECK(h.n_dev <= n);
    }
}

TEST_CASE("property: rates scale down with length") {
    LinkParams a = kLink;
    LinkParams b = kLink;
    b.L_km = 10.0;
    for (long n : {10L, 100L, 300L}) CHECK(rate_efpsa(n, b, kOptics) < rate_efpsa(n, a, kOptics));
}

TEST_CASE("architecture names") {
    CHECK(parse_architecture("hybrid") == Architecture::Hybrid);
    CHECK(to_string(Architecture::Mzi) == "mzi");
    CHECK_THROWS_AS(parse_architecture("star"), ValidationError);
}

TEST_CASE("superradiance") {
    CHECK(superradiance_fidelity(0.0, 1e8) == doctest::Approx(1.0 / 3.0));
    CHECK(superradiance_fidelity(1e-6, 1e8) == doctest::Approx(1.0));
    CHECK(tradeoff(0.99) == doctest::Approx(0.01 / 1.98));
    // fidelity reached at t0 = ln(198) / Gamma
    CHECK(herald_time(0.99, 1e8) == doctest::Approx(std::log(198.0) / 1e8));
    CHECK(superradiance_fidelity(herald_time(0.99, 1e8), 1e8) == doctest::Approx(0.99));
    // photon-number weight left after gating at t0 is the tradeoff itself
    CHECK(std::exp(-1e8 * herald_time(0.99, 1e8)) == doctest::Approx(tradeoff(0.99)));
    CHECK_THROWS_AS(tradeoff(0.2), ValidationError);
    CHECK(herald_density(0.0, 1e8) == 1e8);
}

TEST_CASE("property: superradiance fidelity is monotone") {
    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double f = superradiance_fidelity(i * 1e-9, 1e8);
        CHECK(f > prev);
        prev = f;
    }
}

TEST_CASE("scheme comparison and crossover") {
    const auto low = scheme_rates(0.99, 1e-3);
    CHECK(low.best() == "single-photon");
    const auto high = scheme_rates(0.99, 0.5);
    CHECK(high.best() == "bk+superradiance");
    const double p = bk_superradiance_crossover(0.99);
    CHECK(p == doctest::Approx(2 * (0.02 - 0.01 / 1.98)));
    const auto below = scheme_rates(0.99, p * 0.99);
    const auto above = scheme_rates(0.99, p * 1.01);
    CHECK(below.best() != "bk+superradiance");
    CHECK(above.best() == "bk+superradiance");
    CHECK_THROWS_AS(scheme_rates(0.99, 1.5), ValidationError);
}

TEST_CASE("Monte Carlo agrees with the closed form") {
    McOptions o;
    o.trials = 50000;
    for (long n : {10L, 100L, 800L}) {
        const auto r = monte_carlo_protocol(n, kLink, kOptics, o);
        const double cf = rate_efpsa(n, kLink, kOptics);
        CAPTURE(n);
        CHECK(std::abs(r.rate - cf) < 3.0 * r.stderr_rate);
        CHECK(r.batches == 100);
        CHECK(r.ebits > 0);
    }
}

TEST_CASE("Monte Carlo is deterministic and thread-count independent") {
    McOptions a;
    a.trials = 20000;
    a.threads = 1;
    McOptions b = a;
    b.threads = 4;
    const auto x = monte_carlo_protocol(100, kLink, kOptics, a);
    const auto y = monte_carlo_protocol(100, kLink, kOptics, b);
    CHECK(x.rate == y.rate);
    CHECK(x.stderr_rate == y.stderr_rate);
    CHECK(x.ebits == y.ebits);
    McOptions c = a;
    c.seed = 8;
    CHECK(monte_carlo_protocol(100, kLink, kOptics, c).ebits != x.ebits);
}

TEST_CASE("Monte Carlo: a slow local step becomes the bottleneck") {
    McOptions o;
    o.trials = 10000;
    o.t_local = 1e-4;
    // one server at p2 = 1 delivers at most 1 / t_local
    const auto r = simulate_protocol(1000, 0.5, 1.0, kLink, o);
    CHECK(r.rate <= 1.0 / o.t_local * 1.05);
    o.local_channels = 8;
    CHECK(simulate_protocol(1000, 0.5, 1.0, kLink, o).rate > 4.0 * r.rate);
}

TEST_CASE("Monte Carlo input validation") {
    McOptions o;
    o.trials = 10;
    CHECK_THROWS_AS(monte_carlo_protocol(10, kLink, kOptics, o), ValidationError);
    McOptions p;
    CHECK_THROWS_AS(simulate_protocol(10, 1.5, 0.5, kLink, p), ValidationError);
    CHECK_THROWS_AS(monte_carlo_protocol(0, kLink, kOptics, p), ValidationError);
}
