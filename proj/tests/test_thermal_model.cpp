#include <doctest.h>

#include <cmath>
#include <random>

#include "efpsa/device_model.hpp"
#include "efpsa/errors.hpp"
#include "efpsa/thermal_model.hpp"

using namespace efpsa;
using namespace efpsa::thermal;

namespace {
constexpr double kMu0 = 1.25663706212e-6;
constexpr double kGamma = 2.8e10;
}  // namespace

TEST_CASE("heat oracles") {
    const CircuitParams p;
    // 2 pi^2 / (mu0 gamma)^2 d^2 R_w Omega with d = 1 um, R_w = 10 mOhm, Omega = 2 MHz
    CHECK(heat_magnetic(p, 2e6, 1e-6, kGamma) == doctest::Approx(3.18880e-16).epsilon(1e-5));
    // low-frequency limit Lambda^2 Omega / (2 d_perp^2 R)
    CHECK(heat_electric(p, 2e6, 1.0, 0.17) == doctest::Approx(1e-12 * 2e6 / (2 * 0.0289 * 1e20)).epsilon(1e-9));
    // ratio at omega -> 0 with Lambda = d
    CHECK(dissipation_ratio(p, 0.0, 0.17, kGamma) ==
          doctest::Approx(std::pow(kMu0 * kGamma, 2) / (4 * kPi * kPi * 0.0289) / (1e-2 * 1e20)).epsilon(1e-12));
}

TEST_CASE("property: heat ratio identity at random points") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        CircuitParams p;
        p.C = std::pow(10.0, -18 + 3 * u(rng));
        p.R = std::pow(10.0, 10 + 10 * u(rng));
        p.R_w = std::pow(10.0, -3 + 2 * u(rng));
        p.Lambda = std::pow(10.0, -7 + 2 * u(rng));
        const double omega = std::pow(10.0, 5 + 5 * u(rng));
        const double rabi = std::pow(10.0, 5 + 2 * u(rng));
        const double d = 0.05 + 0.2 * u(rng);
        const double r = heat_electric(p, rabi, omega, d) / heat_magnetic(p, rabi, p.Lambda, kGamma);
        CHECK(r == doctest::Approx(dissipation_ratio(p, omega, d, kGamma)).epsilon(1e-12));
    }
}

TEST_CASE("property: monotone in omega and positive") {
    const CircuitParams p;
    const auto sweep = heat_sweep(p, 2e6, 2 * kPi * 1e6, 2 * kPi * 2e9, 61, 0.17, kGamma);
    REQUIRE(sweep.size() == 61);
    CHECK(sweep.front().omega == doctest::Approx(2 * kPi * 1e6));
    CHECK(sweep.back().omega == doctest::Approx(2 * kPi * 2e9));
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        CHECK(sweep[i].heat_electric > 0.0);
        CHECK(sweep[i].heat_magnetic > 0.0);
        CHECK(sweep[i].ratio == doctest::Approx(sweep[i].heat_electric / sweep[i].heat_magnetic));
        if (i) {
            CHECK(sweep[i].heat_electric > sweep[i - 1].heat_electric);
            CHECK(sweep[i].abs_device_impedance < sweep[i - 1].abs_device_impedance);
            CHECK(sweep[i].heat_magnetic == sweep[i - 1].heat_magnetic);
        }
    }
}

TEST_CASE("published electric heat is bracketed by the sweep") {
    const CircuitParams p;
    const auto sweep = heat_sweep(p, 2e6, 2 * kPi * 1e6, 2 * kPi * 2e9, 61, 0.17, kGamma);
    CHECK(sweep.front().heat_electric < 1.1e-21);
    CHECK(sweep.back().heat_electric > 1.1e-21);
    const double w = omega_reaching(sweep, 1.1e-21);
    // 1 + w^2 C^2 R_w R = 1.1e-21 / 3.4602e-25 -> w ~ 2.01e9 rad/s
    CHECK(w == doctest::Approx(2.0133e9).epsilon(1e-2));
    CHECK(omega_reaching(sweep, 1.0) < 0.0);
}

TEST_CASE("limit cases") {
    CircuitParams p;
    p.R = 1e300;
    // an ideal capacitor dissipates only in the wire: heat ~ omega^2 C^2 R_w
    const double h1 = heat_electric(p, 2e6, 1e8, 0.17);
    const double h2 = heat_electric(p, 2e6, 2e8, 0.17);
    CHECK(h2 / h1 == doctest::Approx(4.0).epsilon(1e-9));
    const CircuitParams q;
    CHECK_THROWS_AS(heat_electric(q, 0.0, 1e8, 0.17), ValidationError);
    CHECK(heat_magnetic(q, 2e6, 2e-6, kGamma) == doctest::Approx(4 * heat_magnetic(q, 2e6, 1e-6, kGamma)));
}

TEST_CASE("impedance of the device and through the cold line") {
    const CircuitParams p;
    const double w = 2 * kPi * 1e9;
    const auto z = efpsa_impedance(p, w);
    const double xc = 1.0 / (w * p.C);
    CHECK(std::abs(z.device.imag()) == doctest::Approx(xc).epsilon(1e-9));
    CHECK(z.device.real() == doctest::Approx(p.R_w).epsilon(1e-4));
    const double t = std::tan(w / kSpeedOfLight * p.l2);
    const Complex j(0.0, 1.0);
    const Complex expect = p.Z0 * (z.device + j * p.Z0 * t) / (p.Z0 + j * z.device * t);
    CHECK(std::abs(z.line - expect) < 1e-9 * std::abs(expect));
    CHECK(z.warnings.empty());

    CircuitParams longline = p;
    longline.l2 = 1.0;
    CHECK_FALSE(efpsa_impedance(longline, w).warnings.empty());

    const auto v = voltage_at_device(p, w, 1.0);
    CHECK(std::abs(v) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("circuit validation") {
    CircuitParams p;
    p.C = -1.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    CircuitParams q;
    CHECK_THROWS_AS(heat_sweep(q, 2e6, 1e9, 1e6, 10, 0.17, kGamma), ValidationError);
}
