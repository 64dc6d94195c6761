#pragma once

// Voltage programming from the response matrix: cross-talk elimination,
// general multi-site drive synthesis and DC Stark channel allocation.

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "efpsa/device_model.hpp"
#include "efpsa/field_model.hpp"
#include "efpsa/spin_dynamics.hpp"

namespace efpsa::control {

using field::FieldBasisSet;
using field::GMatrix;

/// Desired AC transverse field at one site, NV frame, V/m.
struct SiteField {
    int site = 0;
    double mu1 = 0.0;
    double mu2 = 0.0;
};

/// Sites not listed get zero field.
struct DriveTarget {
    std::vector<SiteField> fields;
};

struct SolveOptions {
    bool strict = false;               // breakdown violations throw instead of warn
    double max_condition = 1e12;
};

struct Solution {
    Eigen::VectorXd voltages;
    double residual = 0.0;             // ||G V - E|| / ||E|| (0 for a zero target)
    double condition_number = 0.0;
    bool least_squares = false;
    double peak_surface_field = 0.0;   // V/m, bound from the basis surface probes
    std::vector<std::string> advisories;
};

/// Right-hand side for a Perp2 or Full3 matrix (parallel rows get zero).
Eigen::VectorXd target_vector(const GMatrix& g, const DriveTarget& target);

/// LU with partial pivoting and two rounds of iterative refinement. Throws
/// NumericalError for a singular or non-square matrix.
Eigen::VectorXd solve_square(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Minimum-norm least squares (complete orthogonal decomposition).
Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Rows of a that are linear combinations of earlier rows (rank deficiency).
std::vector<int> dependent_rows(const Eigen::MatrixXd& a, double tol = 1e-10);

/// V = G^-1 E_tar with zero field at every non-target site. G must be square
/// with condition number below options.max_condition. When basis is given the
/// electrode-surface field is checked against the breakdown bound.
Solution eliminate_crosstalk(const GMatrix& g, const DriveTarget& target, const PhysicalConstants& c,
                             const FieldBasisSet* basis = nullptr, const SolveOptions& options = {});

/// Same as eliminate_crosstalk for an arbitrary right-hand side. A rank
/// deficient G raises NumericalError naming the dependent rows.
Solution synthesize_drive(const GMatrix& g, const DriveTarget& target, const PhysicalConstants& c,
                          const FieldBasisSet* basis = nullptr, const SolveOptions& options = {});

/// Sum_j |V_j| max|basis_j| over the electrode surfaces.
double surface_field_bound(const FieldBasisSet& basis, const Eigen::VectorXd& voltages);

/// Equator cross-talk fidelity at every site when a pi pulse is applied to
/// `target_site`: residual fields act for t_pi = 1 / (2 Omega_target).
/// The entry for the target site is 1 by definition.
std::vector<double> crosstalk_fidelities(const GMatrix& g, const Eigen::VectorXd& voltages, int target_site,
                                         const PhysicalConstants& c,
                                         spin::Averaging averaging = spin::Averaging::Equator);

// ---------------------------------------------------------------------------
// Stark tuning

/// Optical transition shift (Hz) for a DC field in the NV frame:
/// (dmu_par E_par - (sqrt 2 / 2) mu_perp |E_perp|) / h. The perpendicular term
/// always lowers the frequency.
double stark_shift(const NvField& e, const PhysicalConstants& c);

/// Frequency channels relative to the centre of the photonic window (Hz).
struct ChannelPlan {
    std::vector<double> channels{-300e9, -40e9, 0.0, 40e9};  // Ch0 parking, Ch1..Ch3
    double linewidth = 100e6;
    /// Zero-field emitter detuning in the same coordinate; a site assigned to
    /// channel c needs a shift channels[c] - zero_field_detuning.
    double zero_field_detuning = 80e9;
    std::vector<int> assignment;       // site -> channel

    void validate() const;
    [[nodiscard]] std::vector<double> required_shifts() const;
};

struct ChannelSolution {
    Eigen::VectorXd voltages;          // top/bottom interleaved, V_b = -V_t unless least squares was needed
    std::vector<NvField> fields;       // achieved, per site
    std::vector<double> shifts;        // achieved Stark shift per site, Hz
    double zeroed_ratio = 0.0;         // max (|E_par|, |E_mu2|) / max|E_mu1|
    bool least_squares = false;
    double peak_surface_field = 0.0;
    std::vector<std::string> advisories;
};

/// Antisymmetric top/bottom drive so that E_par and E_mu2 vanish and E_mu1
/// sets each site's shift. Shifts must lie in [-max, 0]. Falls back to least
/// squares over all electrodes when the antisymmetric solution leaves more than
/// 1% of |E_mu1| in the zeroed components.
ChannelSolution allocate_shifts(const GMatrix& g3, const std::vector<double>& shifts, const PhysicalConstants& c,
                                const FieldBasisSet* basis = nullptr, const SolveOptions& options = {});

ChannelSolution allocate_channels(const GMatrix& g3, const ChannelPlan& plan, const PhysicalConstants& c,
                                  const FieldBasisSet* basis = nullptr, const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// File formats

/// CSV with a "# efpsa-gmatrix v1" comment, a header row
/// site,component,<electrode labels> and one row per field component.
std::string write_gmatrix_csv(const GMatrix& g);
GMatrix parse_gmatrix_csv(std::string_view text);

struct TargetRequest {
    enum class Mode { Drive, Stark } mode = Mode::Drive;
    DriveTarget drive;
    ChannelPlan plan;
    std::vector<double> shifts;        // Stark mode with explicit shifts
};

/// {"mode": "drive", "fields": [{"site": 4, "mu1": 1e7, "mu2": 0}]} or
/// {"mode": "stark", "channels": [0, 1, ...]} / {"mode": "stark", "shifts": [...]}.
TargetRequest parse_target_json(std::string_view text, int n_sites);

}  // namespace efpsa::control
