#pragma once

// Physical constants, device geometry and coordinate frames.
//
// Every quantity is SI. Susceptibilities are stored per (V/m), so the familiar
// 17 Hz cm/V reads 0.17 Hz/(V/m) here. Optical dipoles are kept in Debye and
// converted on use.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace efpsa {

using Vec3 = Eigen::Vector3d;

inline constexpr double kDebye = 3.33564e-30;           // C m
inline constexpr double kSpeedOfLight = 299792458.0;    // m/s
inline constexpr double kPi = 3.14159265358979323846;

/// Angle between [111] and [001]: arccos(1/sqrt 3), about 54.7 degrees.
inline double magic_angle() { return std::acos(1.0 / std::sqrt(3.0)); }

struct PhysicalConstants {
    // Spin-electric susceptibilities, Hz per V/m. The transverse coupling that
    // drives |+1> <-> |-1> is the large one; see README "Susceptibilities".
    double d_perp = 0.17;
    double d_par = 0.0035;
    double d_perp_prime = 0.17 / 50.0;

    double gamma = 2.8e10;             // Hz/T
    double mu0 = 1.25663706212e-6;     // T m/A
    double h = 6.62607015e-34;         // J s
    double zero_field_splitting = 2.87e9;  // Hz

    double delta_mu_par_debye = 1.5;
    double mu_perp_opt_debye = 2.1;

    double T2_star = 10e-6;            // s
    double debye_waller = 0.03;
    double E_bd_diamond = 2e9;         // V/m
    double E_bd_hfo2 = 1.6e9;          // V/m

    [[nodiscard]] double delta_mu_par() const { return delta_mu_par_debye * kDebye; }
    [[nodiscard]] double mu_perp_opt() const { return mu_perp_opt_debye * kDebye; }
    [[nodiscard]] double breakdown_field() const { return std::min(E_bd_diamond, E_bd_hfo2); }

    /// Throws ValidationError if any value is non-positive or d_perp_prime > d_perp.
    void validate() const;
};

struct DeviceGeometry {
    double a = 0.183e-6;       // electrode / NV spacing
    double h_wg = 0.364e-6;
    double w_wg = 0.091e-6;
    double l_fin = 0.500e-6;
    double w_fin = 0.091e-6;
    double h_fin = 0.273e-6;
    int n_sites = 10;

    // Electrode placement used by the analytic field surrogate. Each electrode
    // is a vertical strip of height h_fin at lateral offset +/- electrode_offset
    // from the waveguide axis, centred at electrode_depth below the midplane.
    double electrode_offset = 0.175e-6;
    double electrode_depth = -0.150e-6;
    // Voltage-to-field length: a unit differential voltage on one electrode
    // pair yields 1/drive_length V/m at its own site (fin model).
    double drive_length = 1e-6;

    std::vector<Vec3> displacements;   // per-site delta_k, empty = all zero
    Vec3 nv_axis{1.0, 1.0, 1.0};       // crystal coordinates

    /// Lab-frame position of NV k: k a z_hat + delta_k.
    [[nodiscard]] Vec3 nv_position(int k) const;
    [[nodiscard]] std::vector<Vec3> nv_positions() const;
};

/// Field components in the NV frame.
struct NvField {
    double par = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;

    [[nodiscard]] double perp() const { return std::hypot(mu1, mu2); }
    /// In-plane polarisation angle atan2(mu2, mu1).
    [[nodiscard]] double perp_angle() const { return std::atan2(mu2, mu1); }
};

/// Lab frame x=[001], y=[-110], z=[110]; NV frame z'=axis, mu1 = z' x [001],
/// mu2 = mu1 x z'. For the [111] axis this gives mu1 = [1-10] and mu2 = [-1-12].
class FrameTransform {
public:
    explicit FrameTransform(const Vec3& nv_axis_crystal = Vec3(1, 1, 1));

    [[nodiscard]] NvField lab_to_nv(const Vec3& e_lab) const;
    [[nodiscard]] Vec3 nv_to_lab(const NvField& e_nv) const;

    /// Rows are the lab unit vectors x, y, z in crystal coordinates.
    [[nodiscard]] const Eigen::Matrix3d& lab_basis() const { return lab_; }
    /// Rows are z', mu1, mu2 in crystal coordinates.
    [[nodiscard]] const Eigen::Matrix3d& nv_basis() const { return nv_; }
    /// Maps lab components to (par, mu1, mu2).
    [[nodiscard]] const Eigen::Matrix3d& lab_to_nv_matrix() const { return lab_to_nv_; }

private:
    Eigen::Matrix3d lab_;
    Eigen::Matrix3d nv_;
    Eigen::Matrix3d lab_to_nv_;
};

struct DeviceModel {
    PhysicalConstants constants;
    DeviceGeometry geometry;
    FrameTransform frame;
    std::vector<std::string> warnings;
};

/// Defaults: the nominal eFPSA device.
DeviceModel default_device();

/// Parse a flat key/value document (see README for keys). Unspecified keys keep
/// their defaults. Throws ValidationError on syntax errors, unknown keys,
/// non-positive dimensions or n_sites < 1.
DeviceModel load_device(std::string_view config_text);

}  // namespace efpsa
