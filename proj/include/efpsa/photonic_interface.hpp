#pragma once

// Emitter-waveguide optics: Purcell-enhanced beta, propagation loss and the
// spectral profile of the slow-light band edge.

#include <string_view>
#include <utility>
#include <vector>

namespace efpsa::photonic {

/// How t_wg converts to a transmission: dB (10^(-t N / 10)) or nepers
/// (exp(-t N)).
enum class LossMode { Decibel, Natural };

/// F DW / (F DW + 1 - DW).
double beta_efficiency(double purcell, double debye_waller);

/// beta * transmission after n_periods periods of loss t_wg.
double collection_efficiency(double beta, double t_wg, double n_periods, LossMode mode = LossMode::Decibel);

/// Purcell factor as a function of detuning from the centre of the
/// operating window (Hz).
class PurcellProfile {
public:
    /// Band-edge shape: inside the gap (below the edge) the enhancement decays
    /// as F_max exp(-depth / gap_decay); on the band side it stays at F_max for
    /// `saturation` and then falls as F_max sqrt(saturation / distance).
    static PurcellProfile parametric(double f_max = 25.0, double band_edge = -100e9, double saturation = 32.5e9,
                                     double gap_decay = 10e9, double half_domain = 1e12);
    /// Linear interpolation of (detuning, F) samples sorted by detuning.
    static PurcellProfile tabulated(std::vector<std::pair<double, double>> samples);
    /// Two-column CSV: detuning_Hz,F_P. Lines starting with '#' and a
    /// non-numeric header row are skipped.
    static PurcellProfile parse_csv(std::string_view text);

    /// Throws ValidationError outside the domain.
    [[nodiscard]] double at(double detuning) const;
    [[nodiscard]] std::pair<double, double> domain() const { return {lo_, hi_}; }
    [[nodiscard]] bool is_tabulated() const { return !table_.empty(); }

private:
    PurcellProfile() = default;
    double f_max_ = 25.0;
    double edge_ = -100e9;
    double saturation_ = 32.5e9;
    double gap_decay_ = 10e9;
    double lo_ = -1e12;
    double hi_ = 1e12;
    std::vector<std::pair<double, double>> table_;
};

struct OpticalInterface {
    double purcell = 10.0;             // at the operating channel
    double debye_waller = 0.03;
    double t_wg = 4e-3;                // loss per period (dB or nepers per LossMode)
    double t_ph = 10e-9;               // enhanced optical lifetime, s
    LossMode loss_mode = LossMode::Decibel;
    /// Emitter in the middle of the device: photons cross half the periods.
    bool midpoint = false;

    void validate() const;
    [[nodiscard]] double beta() const { return beta_efficiency(purcell, debye_waller); }
    /// Collection efficiency for a device of n_periods periods.
    [[nodiscard]] double eta(double n_periods) const;
};

}  // namespace efpsa::photonic
