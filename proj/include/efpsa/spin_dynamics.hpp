#pragma once

// NV ground-state triplet under electric (and static magnetic) drive.
//
// Basis order is {|+1>, |0>, |-1>}. Hamiltonians are in Hz (H/h); a state
// evolves as exp(-i 2 pi H t). A Rabi frequency Omega means a full population
// cycle at Omega, so a pi pulse lasts 1 / (2 Omega).

#include <Eigen/Dense>
#include <cstdint>

#include "efpsa/device_model.hpp"

namespace efpsa::spin {

using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

enum class Transition { PlusMinus, SingleQuantum };
enum class Averaging { Equator, BlochAverage };
enum class DephasingModel { Exponential, Gaussian };
enum class Method { Integrate, RotatingWave };
enum class Frame { Rotating, Lab };

inline constexpr int kPlus = 0;
inline constexpr int kZero = 1;
inline constexpr int kMinus = 2;

/// Density matrix of the triplet. Always Hermitian, unit trace and positive
/// semidefinite (checked on construction to 1e-9).
class SpinState {
public:
    static SpinState pure(const Vector3c& psi);
    static SpinState level(int index);
    static SpinState from_density(const Matrix3c& rho);

    [[nodiscard]] const Matrix3c& rho() const { return rho_; }
    [[nodiscard]] double population(int index) const { return rho_(index, index).real(); }
    [[nodiscard]] double purity() const { return (rho_ * rho_).trace().real(); }

    /// 2x2 block on the levels (upper, lower).
    [[nodiscard]] Eigen::Matrix2cd restrict(int upper, int lower) const;

private:
    explicit SpinState(const Matrix3c& rho) : rho_(rho) {}
    Matrix3c rho_;
};

struct DriveConfig {
    Transition transition = Transition::PlusMinus;
    NvField field;            // AC amplitude in the NV frame, V/m
    double carrier = 0.0;     // Hz
    double phase = 0.0;       // rad
    double duration = 0.0;    // s
    double b_bias = 0.0;      // T, along the NV axis
    /// For SingleQuantum: which of |+1>, |-1> the carrier addresses. Chosen
    /// from the carrier when left at kZero.
    int single_quantum_level = kZero;
};

/// PlusMinus: d_perp |E_perp|. SingleQuantum: d_perp' |E_perp| / sqrt 2.
double rabi_frequency(const DriveConfig& drive, const PhysicalConstants& c);

/// Carrier that is resonant with the drive's transition at its bias field.
double resonance_frequency(const DriveConfig& drive, const PhysicalConstants& c);

struct EvolveOptions {
    Method method = Method::Integrate;
    Frame frame = Frame::Rotating;
    /// Largest RK4 step, s. Zero picks one automatically. An explicit step
    /// longer than 1 / (50 max(carrier, Omega)) is rejected.
    double max_step = 0.0;
};

/// Evolve under the drive for drive.duration.
///
/// Integrate solves the Schroedinger equation for the propagator with fixed-step
/// RK4, keeping the counter-rotating terms. RotatingWave drops them and applies
/// the exact exponential of the time-independent rotating-frame Hamiltonian for
/// the addressed transition. Both report in the frame selected by options.frame;
/// the rotating frame coincides with the lab frame at t = 0.
///
/// Phase convention: a drive polarised along mu1 at zero phase rotates about
/// the Bloch y axis of the addressed transition.
SpinState evolve(const SpinState& state, const DriveConfig& drive, const PhysicalConstants& c,
                 const EvolveOptions& options = {});

/// Pure dephasing: every coherence is scaled by exp(-t/T2) (or exp(-(t/T2)^2)).
SpinState dephase(const SpinState& state, double elapsed, double T2_star,
                  DephasingModel model = DephasingModel::Exponential);

/// Equator-state pi-pulse fidelity 1/2 (1 + exp(-1 / (2 Omega T2*))).
double dephasing_pi_fidelity(double rabi, double T2_star);

/// Monte Carlo average over Haar-random qubit states of the pi-rotation fidelity
/// with the coherence dephased for the pulse length. Deterministic in seed.
double average_gate_fidelity(double rabi, double T2_star, std::size_t n_samples, std::uint64_t seed,
                             DephasingModel model = DephasingModel::Exponential);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for any dimension.
double state_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);

/// Fidelity between a neighbour evolved under a residual field for t_pi and the
/// identity. The residual drive is taken on resonance for its transition.
double crosstalk_fidelity(const DriveConfig& residual, double t_pi, Averaging averaging,
                          const PhysicalConstants& c);

}  // namespace efpsa::spin
