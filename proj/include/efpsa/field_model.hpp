#pragma once

// Quasi-static electrode fields: analytic surrogate, imported grid maps and
// the voltage-to-field response matrix G.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efpsa/device_model.hpp"

namespace efpsa::field {

enum class Provenance { Surrogate, Imported, Analytic };

std::string to_string(Provenance p);

/// Field at a point per volt on one electrode, V/m per V.
using Response = std::function<Vec3(const Vec3&)>;

struct Electrode {
    std::string label;          // e.g. "e3t" for site 3, top
    Response response;
    /// Points on the electrode surface used for the breakdown check. Empty
    /// means the check falls back to the basis domain's sample points.
    std::vector<Vec3> surface_probes;
};

/// Immutable set of per-electrode unit-voltage responses. Queries are pure and
/// can run concurrently.
class FieldBasisSet {
public:
    FieldBasisSet(std::vector<Electrode> electrodes, Provenance provenance,
                  std::optional<Eigen::AlignedBox3d> domain = std::nullopt);

    [[nodiscard]] std::size_t size() const { return electrodes_->size(); }
    [[nodiscard]] Provenance provenance() const { return provenance_; }
    [[nodiscard]] const std::string& label(std::size_t j) const;
    [[nodiscard]] const std::optional<Eigen::AlignedBox3d>& domain() const { return domain_; }
    [[nodiscard]] bool contains(const Vec3& p) const;

    /// Throws ValidationError when p lies outside the domain.
    [[nodiscard]] Vec3 response(std::size_t j, const Vec3& p) const;

    /// Largest |E| per volt of electrode j over its surface probes.
    [[nodiscard]] double surface_peak(std::size_t j) const;

    /// New set with electrode order[i] in position i.
    [[nodiscard]] FieldBasisSet permuted(const std::vector<std::size_t>& order) const;

private:
    std::shared_ptr<const std::vector<Electrode>> electrodes_;
    Provenance provenance_;
    std::optional<Eigen::AlignedBox3d> domain_;
};

/// Default fin confinement factor.
inline constexpr double kFinConfinement = 1.7;
/// Charge fraction of each grounded-neighbour image.
inline constexpr double kImageFraction = 0.02;

/// Line-charge surrogate of the electrode array: two electrodes per site
/// (top at +electrode_offset in y, bottom at -electrode_offset), each a
/// uniformly charged segment along x with one image of opposite sign on every
/// grounded neighbour. fin_confinement > 1 compresses the field along the array
/// axis about each electrode and scales it up by the same factor. Charges are
/// normalised so a +-1/2 V pair in the fin model gives 1/drive_length at its
/// own site; the bare model shares that normalisation.
FieldBasisSet surrogate_basis(const DeviceGeometry& geometry, double fin_confinement = kFinConfinement,
                              double image_fraction = kImageFraction);

/// Uniform field per volt for every electrode (testing and simple studies).
FieldBasisSet uniform_basis(const std::vector<Vec3>& fields, const std::vector<std::string>& labels);

/// sum_j V_j basis_j(p) for every point.
std::vector<Vec3> superpose(const FieldBasisSet& basis, const Eigen::VectorXd& voltages,
                            const std::vector<Vec3>& points);

// ---------------------------------------------------------------------------
// Field maps

struct FieldMap {
    std::string electrode;
    std::vector<double> x, y, z;     // strictly increasing, m
    std::vector<Vec3> values;        // x fastest, then y, then z

    [[nodiscard]] Vec3 at(std::size_t i, std::size_t j, std::size_t k) const {
        return values[(k * y.size() + j) * x.size() + i];
    }
    /// Trilinear interpolation; throws outside the grid hull.
    [[nodiscard]] Vec3 interpolate(const Vec3& p) const;
};

FieldMap parse_field_map(std::string_view text);
std::string write_field_map(const FieldMap& map);

/// Sample electrode j of a basis on a rectilinear grid.
FieldMap sample_field_map(const FieldBasisSet& basis, std::size_t j, const std::vector<double>& x,
                          const std::vector<double>& y, const std::vector<double>& z);

/// Basis from one map per electrode. All maps must share the same grid.
FieldBasisSet import_field_maps(const std::vector<FieldMap>& maps);

// ---------------------------------------------------------------------------
// Response matrix

enum class Components { Perp2, Full3 };

enum class FieldComponent { Par, Mu1, Mu2 };
std::string to_string(FieldComponent c);

struct GMatrix {
    Eigen::MatrixXd values;                  // rows: site-major components
    std::vector<int> row_site;
    std::vector<FieldComponent> row_component;
    std::vector<std::string> column_labels;  // electrode labels
    Components components = Components::Perp2;
    int n_sites = 0;
    double condition_number = 0.0;

    [[nodiscard]] int rows_per_site() const { return components == Components::Perp2 ? 2 : 3; }
    /// Row index of (site, component); -1 when the component is not present.
    [[nodiscard]] int row(int site, FieldComponent c) const;
};

/// Rows per site: Perp2 -> (mu1, mu2); Full3 -> (par, mu1, mu2).
GMatrix assemble_g(const FieldBasisSet& basis, const std::vector<Vec3>& sites, Components components,
                   const FrameTransform& frame = FrameTransform{});

/// 2-norm condition number (inf for singular matrices).
double condition_number(const Eigen::MatrixXd& m);

// ---------------------------------------------------------------------------
// Far-field profiles

enum class ProfileKind { SingleLine, TwoLines, Loop, LoopWithFeeds, ElectrodePair, EfpsaArray };

ProfileKind parse_profile_kind(std::string_view name);
std::string to_string(ProfileKind k);
bool is_magnetic(ProfileKind k);

/// Distance from the probe to the nearest structure at the reference point.
inline constexpr double kProfileStructureDistance = 250e-9;
inline constexpr double kProfileNormalization = 500e-9;
inline constexpr double kProfileMinDistance = 50e-9;

/// Field magnitude at distance r along the probe axis, normalised to 1 at
/// 500 nm. Magnetic kinds integrate Biot-Savart over straight segments;
/// electric kinds use the bare surrogate.
double appendix_c_profile(ProfileKind kind, double r);

/// Least-squares slope of log(value) against log(r).
double log_log_slope(const std::vector<double>& r, const std::vector<double>& values);

/// Slope of the profile over the decade ending at r_max (log-spaced samples).
double far_field_slope(ProfileKind kind, double r_max, int samples = 21);

// ---------------------------------------------------------------------------
// Magnetostatics

struct Segment {
    Vec3 a;
    Vec3 b;
    double current = 1.0;   // A, flowing a -> b
};

/// Exact Biot-Savart field of straight current segments, T.
Vec3 biot_savart(const std::vector<Segment>& segments, const Vec3& p, double mu0 = 1.25663706212e-6);

}  // namespace efpsa::field
