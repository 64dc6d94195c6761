#include <doctest.h>

#include <cmath>
#include <random>

#include "efpsa/device_model.hpp"
#include "efpsa/errors.hpp"
#include "efpsa/spin_dynamics.hpp"

using namespace efpsa;
using namespace efpsa::spin;

namespace {

DriveConfig pm_drive(double field, double duration, double b = 0.01) {
    const PhysicalConstants c;
    DriveConfig d;
    d.transition = Transition::PlusMinus;
    d.field.mu1 = field;
    d.b_bias = b;
    d.duration = duration;
    d.carrier = resonance_frequency(d, c);
    return d;
}

void check_physical(const SpinState& s) {
    const auto& r = s.rho();
    CHECK(std::abs(r.trace() - std::complex<double>(1.0, 0.0)) < 1e-9);
    CHECK((r - r.adjoint()).norm() < 1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(r);
    CHECK(es.eigenvalues().minCoeff() > -1e-9);
}

}  // namespace

TEST_CASE("rabi frequency scales with the transverse field") {
    const PhysicalConstants c;
    DriveConfig d;
    d.field.mu1 = 6e6;
    d.field.mu2 = 8e6;
    CHECK(rabi_frequency(d, c) == doctest::Approx(1.7e6));
    d.transition = Transition::SingleQuantum;
    CHECK(rabi_frequency(d, c) == doctest::Approx(0.17 / 50.0 * 1e7 / std::sqrt(2.0)));
}

TEST_CASE("resonances") {
    const PhysicalConstants c;
    DriveConfig d;
    d.b_bias = 0.01;
    CHECK(resonance_frequency(d, c) == doctest::Approx(2 * 2.8e10 * 0.01));
    d.transition = Transition::SingleQuantum;
    d.single_quantum_level = kPlus;
    CHECK(resonance_frequency(d, c) == doctest::Approx(2.87e9 + 2.8e8));
    d.single_quantum_level = kMinus;
    CHECK(resonance_frequency(d, c) == doctest::Approx(2.87e9 - 2.8e8));
}

TEST_CASE("states reject unphysical density matrices") {
    Matrix3c bad = Matrix3c::Zero();
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(SpinState::from_density(bad), ValidationError);
    Matrix3c neg = Matrix3c::Zero();
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(SpinState::from_density(neg), ValidationError);
    CHECK_THROWS_AS(SpinState::level(3), ValidationError);
}

TEST_CASE("pi pulse transfers |+1> to |-1> (rotating wave)") {
    const PhysicalConstants c;
    const auto d = pm_drive(1e7, 1.0 / (2 * 1.7e6));
    const auto out = evolve(SpinState::level(kPlus), d, c, {Method::RotatingWave});
    CHECK(out.population(kMinus) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.population(kZero) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pi pulse with the full Hamiltonian agrees with the rotating wave result") {
    const PhysicalConstants c;
    const auto d = pm_drive(1e7, 1.0 / (2 * 1.7e6));
    const auto full = evolve(SpinState::level(kPlus), d, c, {Method::Integrate});
    // Bloch-Siegert error scales as (Omega / carrier)^2
    CHECK(full.population(kMinus) > 1.0 - 1e-4);
    check_physical(full);
}

TEST_CASE("drive at zero phase rotates about Bloch y") {
    const PhysicalConstants c;
    const auto d = pm_drive(1e7, 1.0 / (4 * 1.7e6));
    const auto out = evolve(SpinState::level(kPlus), d, c, {Method::RotatingWave});
    // pi/2 about y takes the north pole to +x: rho_{+-} = +1/2
    CHECK(out.rho()(kPlus, kMinus).real() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(out.rho()(kPlus, kMinus).imag()) < 1e-9);
}

TEST_CASE("rabi oscillation follows sin^2") {
    const PhysicalConstants c;
    const double rabi = 1.7e6;
    for (double t : {0.1e-6, 0.37e-6, 0.9e-6}) {
        const auto d = pm_drive(1e7, t);
        const auto out = evolve(SpinState::level(kPlus), d, c, {Method::RotatingWave});
        const double s = std::sin(kPi * rabi * t);
        CHECK(out.population(kMinus) == doctest::Approx(s * s).epsilon(1e-9));
    }
}

TEST_CASE("explicit RK4 steps that are too long are rejected") {
    const PhysicalConstants c;
    const auto d = pm_drive(1e7, 1e-7);
    EvolveOptions o;
    o.max_step = 1e-9;
    CHECK_THROWS_AS(evolve(SpinState::level(kPlus), d, c, o), ValidationError);
}

TEST_CASE("evolution preserves physicality for random drives") {
    const PhysicalConstants c;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        DriveConfig d;
        d.transition = i % 2 ? Transition::PlusMinus : Transition::SingleQuantum;
        d.field = {u(rng) * 1e6, u(rng) * 1e7, u(rng) * 1e7};
        d.b_bias = 0.005 + 0.01 * std::abs(u(rng));
        d.single_quantum_level = kPlus;
        d.carrier = resonance_frequency(d, c);
        d.phase = kPi * u(rng);
        d.duration = 2e-7 * std::abs(u(rng));
        Vector3c psi(std::complex<double>(u(rng), u(rng)), std::complex<double>(u(rng), u(rng)),
                     std::complex<double>(u(rng), u(rng)));
        const auto s = SpinState::pure(psi.normalized());
        const auto a = evolve(s, d, c, {Method::RotatingWave});
        check_physical(a);
        CHECK(a.purity() == doctest::Approx(1.0).epsilon(1e-9));
        if (i < 4) {
            const auto b = evolve(s, d, c, {Method::Integrate, Frame::Lab});
            check_physical(b);
            CHECK(b.purity() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("dephasing keeps populations and shrinks coherences") {
    Vector3c psi(1.0, 0.0, 1.0);
    const auto s = SpinState::pure(psi.normalized());
    const auto d = dephase(s, 1e-6, 1e-5);
    CHECK(d.population(kPlus) == doctest::Approx(0.5));
    CHECK(std::abs(d.rho()(kPlus, kMinus)) == doctest::Approx(0.5 * std::exp(-0.1)));
    const auto g = dephase(s, 1e-6, 1e-5, DephasingModel::Gaussian);
    CHECK(std::abs(g.rho()(kPlus, kMinus)) == doctest::Approx(0.5 * std::exp(-0.01)));
    check_physical(d);
}

TEST_CASE("equator gate fidelity closed form") {
    // 1/2 (1 + exp(-1/34)) evaluated independently
    CHECK(dephasing_pi_fidelity(1.7e6, 1e-5) == doctest::Approx(0.98550827589).epsilon(1e-10));
    // 1 - 1/(4 Omega T2) to first order
    CHECK(dephasing_pi_fidelity(1e9, 1e-5) == doctest::Approx(1.0 - 2.5e-5).epsilon(1e-9));
    CHECK_THROWS_AS(dephasing_pi_fidelity(-1.0, 1e-5), ValidationError);
}

TEST_CASE("average gate fidelity is deterministic and above the equator value") {
    const double a = average_gate_fidelity(1.7e6, 1e-5, 20000, 3);
    const double b = average_gate_fidelity(1.7e6, 1e-5, 20000, 3);
    CHECK(a == b);
    // poles lose nothing to dephasing, so the Haar average sits above the equator value
    CHECK(a > dephasing_pi_fidelity(1.7e6, 1e-5));
    CHECK(a < 1.0);
    CHECK_THROWS_AS(average_gate_fidelity(1.7e6, 1e-5, 10, 3), ValidationError);
}

TEST_CASE("Uhlmann fidelity") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2, 2);
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(2, 2);
    a(0, 0) = 1.0;
    b(1, 1) = 1.0;
    CHECK(state_fidelity(a, b) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(state_fidelity(a, a) == doctest::Approx(1.0));
    Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Identity(2, 2) * 0.5;
    CHECK(state_fidelity(a, mixed) == doctest::Approx(0.5));
    CHECK(state_fidelity(mixed, mixed) == doctest::Approx(1.0));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (int i = 0; i < 10; ++i) {
        Eigen::MatrixXcd x(3, 3), y(3, 3);
        for (int r = 0; r < 3; ++r) {
            for (int s = 0; s < 3; ++s) {
                x(r, s) = {n(rng), n(rng)};
                y(r, s) = {n(rng), n(rng)};
            }
        }
        Eigen::MatrixXcd rx = x * x.adjoint();
        Eigen::MatrixXcd ry = y * y.adjoint();
        rx /= rx.trace();
        ry /= ry.trace();
        const double f = state_fidelity(rx, ry);
        CHECK(f == doctest::Approx(state_fidelity(ry, rx)).epsilon(1e-9));
        CHECK(f <= 1.0 + 1e-12);
        CHECK(f >= 0.0);
    }
}

TEST_CASE("cross-talk fidelity at the equator is cos^2(pi r / 2)") {
    const PhysicalConstants c;
    const double t_pi = 1.0 / (2 * 1.7e6);
    for (double r : {0.0, 0.1, 0.25, 0.5}) {
        DriveConfig d;
        d.field.mu1 = r * 1e7;
        const double f = crosstalk_fidelity(d, t_pi, Averaging::Equator, c);
        const double e = std::cos(kPi * r / 2);
        CHECK(f == doctest::Approx(e * e).epsilon(1e-9));
    }
}

TEST_CASE("bloch-averaged cross-talk fidelity") {
    const PhysicalConstants c;
    DriveConfig d;
    d.field.mu1 = 0.5e7;
    const double f = crosstalk_fidelity(d, 1.0 / (2 * 1.7e6), Averaging::BlochAverage, c);
    // two-level average gate fidelity (|tr U|^2 + 2) / 6 with tr U = 2 cos(pi r / 2), r = 1/2
    const double tr = 2 * std::cos(kPi / 4);
    CHECK(f == doctest::Approx((tr * tr + 2) / 6.0).epsilon(1e-9));
    CHECK(f > crosstalk_fidelity(d, 1.0 / (2 * 1.7e6), Averaging::Equator, c));
}
