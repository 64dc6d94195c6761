#include "efpsa/thermal_model.hpp"

#include <cmath>
#include <sstream>

#include "efpsa/device_model.hpp"
#include "efpsa/errors.hpp"

namespace efpsa::thermal {

void CircuitParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("circuit parameter '") + name + "' must be positive");
        }
    };
    positive(C, "C");
    positive(R, "R");
    positive(R_w, "R_w");
    positive(C_w, "C_w");
    positive(Z0, "Z0");
    positive(Lambda, "Lambda");
    positive(l1, "l1");
    positive(l2, "l2");
}

Impedance efpsa_impedance(const CircuitParams& p, double omega) {
    p.validate();
    if (!(omega > 0.0)) throw ValidationError("omega must be > 0");
    Impedance z;
    const double wcr = omega * p.C * p.R;
    z.device = p.R * Complex(1.0, -wcr) / (1.0 + wcr * wcr) + p.R_w;

    const double bl = omega / kSpeedOfLight * p.l2;
    const Complex jt(0.0, std::tan(bl));
    z.line = p.Z0 * (z.device + p.Z0 * jt) / (p.Z0 + z.device * jt);

    if (bl > 0.1) {
        std::ostringstream os;
        os << "beta*l2 = " << bl << " is not small; the short-line approximation degrades";
        z.warnings.push_back(os.str());
    }
    if (p.R_w > 0.1 / (omega * p.C_w)) {
        std::ostringstream os;
        os << "R_w = " << p.R_w << " ohm is not small against 1/(w C_w) = " << 1.0 / (omega * p.C_w)
           << " ohm; omitting C_w is questionable";
        z.warnings.push_back(os.str());
    }
    return z;
}

Complex voltage_at_device(const CircuitParams& p, double omega, double u_source) {
    const Complex zc = efpsa_impedance(p, omega).device;
    return 2.0 * zc * u_source / (zc + p.Z0);
}

double heat_electric(const CircuitParams& p, double rabi, double omega, double d_perp) {
    p.validate();
    if (!(rabi > 0.0)) throw ValidationError("Rabi frequency must be > 0");
    if (!(omega >= 0.0)) throw ValidationError("omega must be >= 0");
    if (!(d_perp > 0.0)) throw ValidationError("d_perp must be > 0");
    const double x = omega * omega * p.C * p.C * p.R_w * p.R;
    return (1.0 + x) / p.R * p.Lambda * p.Lambda * rabi / (2.0 * d_perp * d_perp);
}

double heat_magnetic(const CircuitParams& p, double rabi, double d, double gamma, double mu0) {
    p.validate();
    if (!(rabi >= 0.0)) throw ValidationError("Rabi frequency must be >= 0");
    if (!(d > 0.0) || !(gamma > 0.0) || !(mu0 > 0.0)) throw ValidationError("d, gamma and mu0 must be > 0");
    return 2.0 * kPi * kPi / (mu0 * mu0 * gamma * gamma) * d * d * p.R_w * rabi;
}

double dissipation_ratio(const CircuitParams& p, double omega, double d_perp, double gamma, double mu0) {
    p.validate();
    if (!(omega >= 0.0)) throw ValidationError("omega must be >= 0");
    if (!(d_perp > 0.0) || !(gamma > 0.0) || !(mu0 > 0.0)) throw ValidationError("d_perp, gamma and mu0 must be > 0");
    const double x = omega * omega * p.C * p.C * p.R_w * p.R;
    return mu0 * mu0 * gamma * gamma / (4.0 * kPi * kPi * d_perp * d_perp) * (1.0 + x) / (p.R_w * p.R);
}

std::vector<SweepRow> heat_sweep(const CircuitParams& p, double rabi, double omega_lo, double omega_hi, int points,
                                 double d_perp, double gamma, double mu0) {
    if (!(omega_lo > 0.0) || !(omega_hi >= omega_lo)) throw ValidationError("invalid omega sweep range");
    if (points < 2) throw ValidationError("sweep needs at least two points");
    std::vector<SweepRow> rows;
    const double jb = heat_magnetic(p, rabi, p.Lambda, gamma, mu0);
    for (int i = 0; i < points; ++i) {
        const double w = omega_lo * std::pow(omega_hi / omega_lo, static_cast<double>(i) / (points - 1));
        rows.push_back({w, heat_electric(p, rabi, w, d_perp), jb, dissipation_ratio(p, w, d_perp, gamma, mu0),
                        std::abs(efpsa_impedance(p, w).device)});
    }
    return rows;
}

double omega_reaching(const std::vector<SweepRow>& sweep, double target_heat) {
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (sweep[i].heat_electric >= target_heat) {
            if (i == 0) return sweep[0].omega;
            const auto& a = sweep[i - 1];
            const auto& b = sweep[i];
            const double f = (target_heat - a.heat_electric) / (b.heat_electric - a.heat_electric);
            return std::exp(std::log(a.omega) + f * (std::log(b.omega) - std::log(a.omega)));
        }
    }
    return -1.0;
}

}  // namespace efpsa::thermal
