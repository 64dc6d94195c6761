#pragma once

// Lumped-circuit heat load of electric versus magnetic spin control.

#include <complex>
#include <string>
#include <vector>

namespace efpsa::thermal {

using Complex = std::complex<double>;

struct CircuitParams {
    double C = 2.8e-17;     // device capacitance, F
    double R = 1e20;        // parallel leakage, ohm
    double R_w = 1e-2;      // wire resistance, ohm
    double C_w = 1e-12;     // wire capacitance, F (not part of the impedance)
    double Z0 = 50.0;       // line impedance, ohm
    double Lambda = 1e-6;   // voltage-to-field length, m
    double l1 = 1.0;        // room-temperature line, m
    double l2 = 1e-3;       // cold line to the device, m

    void validate() const;
};

struct Impedance {
    Complex device;         // Z_C
    Complex line;           // Z_LT, seen through the cold line of length l2
    std::vector<std::string> warnings;
};

/// Z_C = R (1 - j w C R) / (1 + w^2 C^2 R^2) + R_w, and its transform through
/// a lossless line of length l2 with beta = w / c.
Impedance efpsa_impedance(const CircuitParams& p, double omega);

/// 2 Z_C U / (Z_C + Z0).
Complex voltage_at_device(const CircuitParams& p, double omega, double u_source);

/// Energy dissipated per pi pulse, J: (1 + w^2 C^2 R_w R) / R * Lambda^2 Omega / (2 d^2).
/// d_perp in Hz per V/m.
double heat_electric(const CircuitParams& p, double rabi, double omega, double d_perp);

/// 2 pi^2 / (mu0^2 gamma^2) d^2 R_w Omega, J, for a wire at distance d.
double heat_magnetic(const CircuitParams& p, double rabi, double d, double gamma, double mu0 = 1.25663706212e-6);

/// mu0^2 gamma^2 / (4 pi^2 d_perp^2) (1 + w^2 C^2 R_w R) / (R_w R), i.e.
/// heat_electric / heat_magnetic with Lambda = d.
double dissipation_ratio(const CircuitParams& p, double omega, double d_perp, double gamma,
                         double mu0 = 1.25663706212e-6);

struct SweepRow {
    double omega;           // rad/s
    double heat_electric;   // J
    double heat_magnetic;   // J
    double ratio;           // with Lambda = d
    double abs_device_impedance;
};

/// Log-spaced sweep of w over [omega_lo, omega_hi]; heat_magnetic uses d = p.Lambda.
std::vector<SweepRow> heat_sweep(const CircuitParams& p, double rabi, double omega_lo, double omega_hi, int points,
                                 double d_perp, double gamma, double mu0 = 1.25663706212e-6);

/// Smallest swept w at which heat_electric reaches `target` (linear
/// interpolation in log w), or a negative value when the sweep never does.
double omega_reaching(const std::vector<SweepRow>& sweep, double target_heat);

}  // namespace efpsa::thermal
