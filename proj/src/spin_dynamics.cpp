#include "efpsa/spin_dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "efpsa/errors.hpp"
#include "efpsa/random.hpp"

namespace efpsa::spin {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kStateTol = 1e-9;

namespace {

void check_density(const Eigen::MatrixXcd& rho, const char* what) {
    if (!rho.allFinite()) throw ValidationError(std::string(what) + ": non-finite entries");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > kStateTol) {
        throw ValidationError(std::string(what) + ": density matrix is not Hermitian");
    }
    if (std::abs(rho.trace() - cd(1.0, 0.0)) > kStateTol) {
        throw ValidationError(std::string(what) + ": density matrix trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kStateTol) {
        throw ValidationError(std::string(what) + ": density matrix has a negative eigenvalue");
    }
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

// Level energies (Hz) under the bias field: D + gamma B, 0, D - gamma B.
std::array<double, 3> level_energies(const DriveConfig& d, const PhysicalConstants& c) {
    const double z = c.gamma * d.b_bias;
    return {c.zero_field_splitting + z, 0.0, c.zero_field_splitting - z};
}

int addressed_level(const DriveConfig& d, const PhysicalConstants& c) {
    if (d.single_quantum_level == kPlus || d.single_quantum_level == kMinus) return d.single_quantum_level;
    const auto e = level_energies(d, c);
    return std::abs(d.carrier - e[kPlus]) <= std::abs(d.carrier - e[kMinus]) ? kPlus : kMinus;
}

// (upper, lower) levels of the addressed transition.
std::pair<int, int> transition_levels(const DriveConfig& d, const PhysicalConstants& c) {
    if (d.transition == Transition::PlusMinus) return {kPlus, kMinus};
    const int lvl = addressed_level(d, c);
    // energy ordering does not matter for the coupling; keep |+-1> first
    return {lvl, kZero};
}

// Rotating-frame generator K (Hz): the frame is exp(+i 2 pi K t).
std::array<double, 3> frame_generator(const DriveConfig& d, const PhysicalConstants& c) {
    const auto e = level_energies(d, c);
    if (d.transition == Transition::PlusMinus) {
        const double mean = 0.5 * (e[kPlus] + e[kMinus]);
        return {mean + 0.5 * d.carrier, 0.0, mean - 0.5 * d.carrier};
    }
    std::array<double, 3> k = e;
    k[addressed_level(d, c)] = d.carrier;
    return k;
}

// Hermitian coupling matrix C; the lab drive is cos(2 pi nu t + phase) C plus
// the parallel term on the |+-1> diagonal.
Matrix3c coupling(const DriveConfig& d, const PhysicalConstants& c) {
    Matrix3c m = Matrix3c::Zero();
    const double omega = rabi_frequency(d, c);
    const cd elem = omega * cd(0.0, -1.0) * std::polar(1.0, -d.field.perp_angle());
    if (d.transition == Transition::PlusMinus) {
        m(kPlus, kMinus) = elem;
        m(kMinus, kPlus) = std::conj(elem);
    } else {
        const int lvl = addressed_level(d, c);
        m(lvl, kZero) = elem;
        m(kZero, lvl) = std::conj(elem);
    }
    const double shift = c.d_par * d.field.par;
    m(kPlus, kPlus) += shift;
    m(kMinus, kMinus) += shift;
    return m;
}

Matrix3c frame_unitary(const std::array<double, 3>& k, double t) {
    Matrix3c u = Matrix3c::Zero();
    for (int i = 0; i < 3; ++i) u(i, i) = std::polar(1.0, kTwoPi * k[i] * t);
    return u;
}

Matrix3c expm_hermitian(const Matrix3c& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(h);
    Vector3c phases;
    for (int i = 0; i < 3; ++i) phases(i) = std::polar(1.0, -kTwoPi * es.eigenvalues()(i) * t);
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Exact propagator of the time-independent rotating-wave Hamiltonian.
Matrix3c rwa_propagator(const DriveConfig& d, const PhysicalConstants& c, double t) {
    const auto e = level_energies(d, c);
    const auto k = frame_generator(d, c);
    const Matrix3c cpl = coupling(d, c);
    Matrix3c h = Matrix3c::Zero();
    for (int i = 0; i < 3; ++i) h(i, i) = e[i] - k[i];
    const auto [up, lo] = transition_levels(d, c);
    // K_up - K_lo equals the carrier, so the e^{-i(2 pi nu t + phase)} half survives
    const cd r = 0.5 * cpl(up, lo) * std::polar(1.0, -d.phase);
    h(up, lo) += r;
    h(lo, up) += std::conj(r);
    return expm_hermitian(h, t);
}

}  // namespace

SpinState SpinState::pure(const Vector3c& psi) {
    const double n = psi.norm();
    if (!(n > 0.0) || !psi.allFinite()) throw ValidationError("SpinState: invalid state vector");
    const Vector3c v = psi / n;
    return SpinState(v * v.adjoint());
}

SpinState SpinState::level(int index) {
    if (index < 0 || index > 2) throw ValidationError("SpinState: level index out of range");
    Vector3c v = Vector3c::Zero();
    v(index) = 1.0;
    return pure(v);
}

SpinState SpinState::from_density(const Matrix3c& rho) {
    check_density(rho, "SpinState");
    return SpinState(0.5 * (rho + rho.adjoint()));
}

Eigen::Matrix2cd SpinState::restrict(int upper, int lower) const {
    Eigen::Matrix2cd m;
    m << rho_(upper, upper), rho_(upper, lower), rho_(lower, upper), rho_(lower, lower);
    return m;
}

double rabi_frequency(const DriveConfig& drive, const PhysicalConstants& c) {
    const double e_perp = drive.field.perp();
    if (drive.transition == Transition::PlusMinus) return c.d_perp * e_perp;
    return c.d_perp_prime * e_perp / std::sqrt(2.0);
}

double resonance_frequency(const DriveConfig& drive, const PhysicalConstants& c) {
    const auto e = level_energies(drive, c);
    if (drive.transition == Transition::PlusMinus) return e[kPlus] - e[kMinus];
    return e[addressed_level(drive, c)];
}

SpinState evolve(const SpinState& state, const DriveConfig& drive, const PhysicalConstants& c,
                 const EvolveOptions& options) {
    if (!(drive.duration >= 0.0) || !std::isfinite(drive.duration)) {
        throw ValidationError("evolve: duration must be finite and >= 0");
    }
    if (!std::isfinite(drive.field.par) || !std::isfinite(drive.field.mu1) || !std::isfinite(drive.field.mu2) ||
        !std::isfinite(drive.carrier) || !std::isfinite(drive.phase) || !std::isfinite(drive.b_bias)) {
        throw ValidationError("evolve: drive parameters must be finite");
    }
    check_density(state.rho(), "evolve");

    const auto energies = level_energies(drive, c);
    const auto k = frame_generator(drive, c);
    const Matrix3c cpl = coupling(drive, c);
    const double omega = rabi_frequency(drive, c);
    const double t_end = drive.duration;

    Matrix3c u;  // rotating-frame propagator
    if (options.method == Method::RotatingWave) {
        u = rwa_propagator(drive, c, t_end);
    } else {
        const double rule = 1.0 / (50.0 * std::max({std::abs(drive.carrier), omega, 1e-300}));
        if (options.max_step > 0.0 && options.max_step > rule) {
            throw ValidationError("evolve: step exceeds 1/(50 max(carrier, rabi))");
        }
        // Fastest rotation present in the rotating-frame Hamiltonian.
        double f_max = std::max(omega, std::abs(drive.carrier));
        for (int i = 0; i < 3; ++i) {
            f_max = std::max(f_max, std::abs(energies[i] - k[i]));
            for (int j = 0; j < 3; ++j) {
                if (i != j && std::abs(cpl(i, j)) > 0.0) {
                    f_max = std::max(f_max, std::abs(k[i] - k[j]) + std::abs(drive.carrier));
                }
            }
        }
        f_max = std::max(f_max, std::abs(c.d_par * drive.field.par));
        double step = f_max > 0.0 ? 1.0 / (64.0 * f_max) : t_end;
        if (options.max_step > 0.0) step = std::min(step, options.max_step);
        const auto n_steps = static_cast<long>(std::max(1.0, std::ceil(t_end / std::max(step, 1e-300))));
        const double dt = n_steps > 0 ? t_end / static_cast<double>(n_steps) : 0.0;

        Matrix3c h_static = Matrix3c::Zero();
        for (int i = 0; i < 3; ++i) h_static(i, i) = energies[i] - k[i];
        auto hamiltonian = [&](double t) {
            Matrix3c h = h_static;
            const double env = std::cos(kTwoPi * drive.carrier * t + drive.phase);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    if (cpl(i, j) == cd(0.0, 0.0)) continue;
                    h(i, j) += env * cpl(i, j) * std::polar(1.0, kTwoPi * (k[i] - k[j]) * t);
                }
            }
            return h;
        };
        const cd factor(0.0, -kTwoPi);
        auto deriv = [&](double t, const Matrix3c& m) -> Matrix3c { return factor * (hamiltonian(t) * m); };

        u = Matrix3c::Identity();
        if (t_end > 0.0) {
            for (long s = 0; s < n_steps; ++s) {
                const double t = s * dt;
                const Matrix3c k1 = deriv(t, u);
                const Matrix3c k2 = deriv(t + 0.5 * dt, u + 0.5 * dt * k1);
                const Matrix3c k3 = deriv(t + 0.5 * dt, u + 0.5 * dt * k2);
                const Matrix3c k4 = deriv(t + dt, u + dt * k3);
                u += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            // project back onto the unitaries (polar decomposition)
            Eigen::JacobiSVD<Matrix3c> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
            u = svd.matrixU() * svd.matrixV().adjoint();
        }
    }

    Matrix3c rho = u * state.rho() * u.adjoint();
    if (options.frame == Frame::Lab) {
        const Matrix3c back = frame_unitary(k, t_end).adjoint();
        rho = back * rho * back.adjoint();
    }
    return SpinState::from_density(0.5 * (rho + rho.adjoint()));
}

SpinState dephase(const SpinState& state, double elapsed, double T2_star, DephasingModel model) {
    if (!(elapsed >= 0.0)) throw ValidationError("dephase: elapsed time must be >= 0");
    if (!(T2_star > 0.0)) throw ValidationError("dephase: T2* must be > 0");
    const double x = elapsed / T2_star;
    const double f = model == DephasingModel::Exponential ? std::exp(-x) : std::exp(-x * x);
    Matrix3c rho = state.rho();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i != j) rho(i, j) *= f;
        }
    }
    return SpinState::from_density(rho);
}

double dephasing_pi_fidelity(double rabi, double T2_star) {
    if (!(rabi > 0.0)) throw ValidationError("dephasing_pi_fidelity: rabi must be > 0");
    if (!(T2_star > 0.0)) throw ValidationError("dephasing_pi_fidelity: T2* must be > 0");
    return 0.5 * (1.0 + std::exp(-1.0 / (2.0 * rabi * T2_star)));
}

double average_gate_fidelity(double rabi, double T2_star, std::size_t n_samples, std::uint64_t seed,
                             DephasingModel model) {
    if (n_samples < 1000) throw ValidationError("average_gate_fidelity: need at least 1000 samples");
    if (!(rabi > 0.0)) throw ValidationError("average_gate_fidelity: rabi must be > 0");
    if (!(T2_star > 0.0)) throw ValidationError("average_gate_fidelity: T2* must be > 0");

    const double t_pi = 1.0 / (2.0 * rabi);
    const double x = t_pi / T2_star;
    const double decay = model == DephasingModel::Exponential ? std::exp(-x) : std::exp(-x * x);

    // pi rotation about y: (theta, phi) -> (pi - theta, pi - phi)
    auto rng = make_stream(seed, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double cos_t = 2.0 * uniform01(rng) - 1.0;
        const double phi = 2.0 * kPi * uniform01(rng);
        const double half = 0.5 * std::acos(std::clamp(cos_t, -1.0, 1.0));
        Eigen::Vector2cd psi(std::cos(half), std::polar(std::sin(half), phi));
        Eigen::Matrix2cd ry;
        ry << 0.0, -1.0, 1.0, 0.0;
        const Eigen::Vector2cd target = ry * psi;
        Eigen::Matrix2cd rho = target * target.adjoint();
        rho(0, 1) *= decay;
        rho(1, 0) *= decay;
        sum += (target.adjoint() * rho * target)(0, 0).real();
    }
    return sum / static_cast<double>(n_samples);
}

double state_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
    if (rho.rows() != rho.cols() || sigma.rows() != sigma.cols() || rho.rows() != sigma.rows()) {
        throw ValidationError("state_fidelity: dimension mismatch");
    }
    check_density(rho, "state_fidelity");
    check_density(sigma, "state_fidelity");
    const Eigen::MatrixXcd s = psd_sqrt(rho);
    const Eigen::MatrixXcd m = s * sigma * s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return std::clamp(tr * tr, 0.0, 1.0);
}

double crosstalk_fidelity(const DriveConfig& residual, double t_pi, Averaging averaging,
                          const PhysicalConstants& c) {
    if (!(t_pi >= 0.0)) throw ValidationError("crosstalk_fidelity: t_pi must be >= 0");
    DriveConfig d = residual;
    d.carrier = resonance_frequency(residual, c);
    d.duration = t_pi;
    const auto [up, lo] = transition_levels(d, c);

    if (averaging == Averaging::Equator) {
        Vector3c psi = Vector3c::Zero();
        psi(up) = 1.0 / std::sqrt(2.0);
        psi(lo) = 1.0 / std::sqrt(2.0);
        const SpinState start = SpinState::pure(psi);
        const SpinState end = evolve(start, d, c, {Method::RotatingWave, Frame::Rotating, 0.0});
        return state_fidelity(end.rho(), start.rho());
    }

    // Haar average over the addressed qubit: (|tr U|^2 + 2) / 6.
    const Matrix3c u = rwa_propagator(d, c, t_pi);
    const int lv[2] = {up, lo};
    Eigen::Matrix2cd u2;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) u2(i, j) = u(lv[i], lv[j]);
    }
    const double tr2 = std::norm(u2.trace());
    return (tr2 + 2.0) / 6.0;
}

}  // namespace efpsa::spin
