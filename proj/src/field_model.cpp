#include "efpsa/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "efpsa/errors.hpp"

namespace efpsa::field {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Surrogate: return "surrogate";
        case Provenance::Imported: return "imported";
        case Provenance::Analytic: return "analytic";
    }
    return "unknown";
}

std::string to_string(FieldComponent c) {
    switch (c) {
        case FieldComponent::Par: return "par";
        case FieldComponent::Mu1: return "mu1";
        case FieldComponent::Mu2: return "mu2";
    }
    return "unknown";
}

FieldBasisSet::FieldBasisSet(std::vector<Electrode> electrodes, Provenance provenance,
                             std::optional<Eigen::AlignedBox3d> domain)
    : electrodes_(std::make_shared<const std::vector<Electrode>>(std::move(electrodes))),
      provenance_(provenance),
      domain_(std::move(domain)) {
    if (electrodes_->empty()) throw ValidationError("field basis needs at least one electrode");
    for (const auto& e : *electrodes_) {
        if (!e.response) throw ValidationError("field basis electrode '" + e.label + "' has no response");
    }
}

const std::string& FieldBasisSet::label(std::size_t j) const { return electrodes_->at(j).label; }

bool FieldBasisSet::contains(const Vec3& p) const {
    if (!domain_) return p.allFinite();
    // small tolerance so grid nodes on the hull count as inside
    const Vec3 tol = 1e-12 * (domain_->sizes().cwiseAbs() + Vec3::Constant(1e-30));
    return (p.array() >= (domain_->min() - tol).array()).all() &&
           (p.array() <= (domain_->max() + tol).array()).all();
}

Vec3 FieldBasisSet::response(std::size_t j, const Vec3& p) const {
    if (j >= size()) throw ValidationError("electrode index out of range");
    if (!contains(p)) {
        std::ostringstream os;
        os << "point (" << p.x() << ", " << p.y() << ", " << p.z() << ") outside the field-basis domain";
        throw ValidationError(os.str());
    }
    return (*electrodes_)[j].response(p);
}

double FieldBasisSet::surface_peak(std::size_t j) const {
    const auto& e = electrodes_->at(j);
    std::vector<Vec3> probes = e.surface_probes;
    if (probes.empty() && domain_) {
        // corners and centre of the domain
        for (int c = 0; c < 8; ++c) probes.push_back(domain_->corner(static_cast<Eigen::AlignedBox3d::CornerType>(c)));
        probes.push_back(domain_->center());
    }
    double peak = 0.0;
    for (const auto& p : probes) peak = std::max(peak, e.response(p).norm());
    return peak;
}

FieldBasisSet FieldBasisSet::permuted(const std::vector<std::size_t>& order) const {
    if (order.size() != size()) throw ValidationError("permutation size mismatch");
    std::vector<bool> seen(size(), false);
    std::vector<Electrode> out;
    out.reserve(size());
    for (auto i : order) {
        if (i >= size() || seen[i]) throw ValidationError("invalid permutation");
        seen[i] = true;
        out.push_back((*electrodes_)[i]);
    }
    return FieldBasisSet(std::move(out), provenance_, domain_);
}

namespace {

// Field of a unit line-charge density segment A -> B (Coulomb constant folded
// into the caller's scale).
Vec3 segment_field(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 u = b - a;
    const double len = u.norm();
    u /= len;
    const Vec3 d = p - a;
    const double s = d.dot(u);
    const Vec3 radial = d - s * u;
    const double rho = radial.norm();
    const double ra = d.norm();
    const double rb = (p - b).norm();
    const double e_axial = 1.0 / rb - 1.0 / ra;
    if (rho < 1e-15 * len) return e_axial * u;
    const double e_rad = ((len - s) / rb + s / ra) / rho;
    return e_axial * u + (e_rad / rho) * radial;
}

struct Charge {
    Vec3 a;
    Vec3 b;
    double z_centre;
    double q;
};

struct SurrogateElectrode {
    std::vector<Charge> charges;
    double kappa;
    double scale;

    Vec3 operator()(const Vec3& p) const {
        Vec3 e = Vec3::Zero();
        for (const auto& c : charges) {
            Vec3 ps = p;
            ps.z() = c.z_centre + kappa * (p.z() - c.z_centre);
            e += c.q * segment_field(ps, c.a, c.b);
        }
        return kappa * scale * e;
    }
};

std::vector<Charge> electrode_charges(const DeviceGeometry& g, int k, int side, double eta) {
    auto segment = [&](int site, int s, double q) {
        const double z = site * g.a;
        const double y = s * g.electrode_offset;
        return Charge{Vec3(g.electrode_depth - 0.5 * g.h_fin, y, z),
                      Vec3(g.electrode_depth + 0.5 * g.h_fin, y, z), z, q};
    };
    std::vector<Charge> out{segment(k, side, 1.0)};
    if (eta > 0.0) {
        if (k - 1 >= 0) out.push_back(segment(k - 1, side, -eta));
        if (k + 1 < g.n_sites) out.push_back(segment(k + 1, side, -eta));
        out.push_back(segment(k, -side, -eta));
    }
    return out;
}

void check_geometry(const DeviceGeometry& g) {
    if (!(g.a > 0.0)) throw ValidationError("degenerate geometry: electrode spacing a must be > 0");
    if (!(g.h_fin > 0.0)) throw ValidationError("degenerate geometry: h_fin must be > 0");
    if (!(g.electrode_offset > 0.0)) throw ValidationError("degenerate geometry: electrode_offset must be > 0");
    if (!(g.drive_length > 0.0)) throw ValidationError("degenerate geometry: drive_length must be > 0");
    if (g.n_sites < 1) throw ValidationError("degenerate geometry: n_sites must be >= 1");
}

}  // namespace

FieldBasisSet surrogate_basis(const DeviceGeometry& g, double fin_confinement, double image_fraction) {
    check_geometry(g);
    if (!(fin_confinement >= 1.0) || !std::isfinite(fin_confinement)) {
        throw ValidationError("fin_confinement must be >= 1");
    }
    if (!(image_fraction >= 0.0 && image_fraction < 1.0)) {
        throw ValidationError("image_fraction must be in [0, 1)");
    }

    // charge scale from a +-1/2 V pair at the middle site in the fin model
    const int k0 = g.n_sites / 2;
    const Vec3 site(0.0, 0.0, k0 * g.a);
    const SurrogateElectrode top{electrode_charges(g, k0, +1, image_fraction), kFinConfinement, 1.0};
    const SurrogateElectrode bottom{electrode_charges(g, k0, -1, image_fraction), kFinConfinement, 1.0};
    const double unit = (0.5 * (top(site) - bottom(site))).norm();
    if (!(unit > 0.0)) throw ValidationError("degenerate geometry: electrode pair produces no field");
    const double scale = 1.0 / (g.drive_length * unit);

    std::vector<Electrode> electrodes;
    for (int k = 0; k < g.n_sites; ++k) {
        for (int side : {+1, -1}) {
            SurrogateElectrode se{electrode_charges(g, k, side, image_fraction), fin_confinement, scale};
            const double y = side * (g.electrode_offset - 0.5 * g.w_fin);
            std::vector<Vec3> probes;
            for (double f : {-0.5, 0.0, 0.5}) probes.emplace_back(g.electrode_depth + f * g.h_fin, y, k * g.a);
            electrodes.push_back({"e" + std::to_string(k) + (side > 0 ? "t" : "b"), se, probes});
        }
    }
    return FieldBasisSet(std::move(electrodes), Provenance::Surrogate);
}

FieldBasisSet uniform_basis(const std::vector<Vec3>& fields, const std::vector<std::string>& labels) {
    if (fields.size() != labels.size()) throw ValidationError("uniform_basis: label count mismatch");
    std::vector<Electrode> electrodes;
    for (std::size_t j = 0; j < fields.size(); ++j) {
        const Vec3 f = fields[j];
        electrodes.push_back({labels[j], [f](const Vec3&) { return f; }, {}});
    }
    return FieldBasisSet(std::move(electrodes), Provenance::Analytic);
}

std::vector<Vec3> superpose(const FieldBasisSet& basis, const Eigen::VectorXd& voltages,
                            const std::vector<Vec3>& points) {
    if (static_cast<std::size_t>(voltages.size()) != basis.size()) {
        throw ValidationError("superpose: expected " + std::to_string(basis.size()) + " voltages, got " +
                              std::to_string(voltages.size()));
    }
    std::vector<Vec3> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        Vec3 e = Vec3::Zero();
        for (std::size_t j = 0; j < basis.size(); ++j) {
            if (voltages(static_cast<Eigen::Index>(j)) != 0.0) {
                e += voltages(static_cast<Eigen::Index>(j)) * basis.response(j, p);
            } else if (!basis.contains(p)) {
                (void)basis.response(j, p);  // raises the domain error
            }
        }
        out.push_back(e);
    }
    return out;
}

int GMatrix::row(int site, FieldComponent c) const {
    if (site < 0 || site >= n_sites) return -1;
    if (components == Components::Perp2) {
        if (c == FieldComponent::Par) return -1;
        return 2 * site + (c == FieldComponent::Mu1 ? 0 : 1);
    }
    return 3 * site + static_cast<int>(c);
}

double condition_number(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double lo = s(s.size() - 1);
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

GMatrix assemble_g(const FieldBasisSet& basis, const std::vector<Vec3>& sites, Components components,
                   const FrameTransform& frame) {
    if (sites.empty()) throw ValidationError("assemble_g: no sites");
    GMatrix g;
    g.components = components;
    g.n_sites = static_cast<int>(sites.size());
    const int per = g.rows_per_site();
    g.values.resize(per * g.n_sites, static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j) g.column_labels.push_back(basis.label(j));

    for (int i = 0; i < g.n_sites; ++i) {
        if (!basis.contains(sites[i])) {
            throw ValidationError("assemble_g: site " + std::to_string(i) + " is outside the basis domain");
        }
        if (components == Components::Full3) {
            g.row_site.push_back(i);
            g.row_component.push_back(FieldComponent::Par);
        }
        g.row_site.insert(g.row_site.end(), {i, i});
        g.row_component.insert(g.row_component.end(), {FieldComponent::Mu1, FieldComponent::Mu2});
        for (std::size_t j = 0; j < basis.size(); ++j) {
            const NvField e = frame.lab_to_nv(basis.response(j, sites[i]));
            const auto col = static_cast<Eigen::Index>(j);
            if (components == Components::Full3) {
                g.values(3 * i, col) = e.par;
                g.values(3 * i + 1, col) = e.mu1;
                g.values(3 * i + 2, col) = e.mu2;
            } else {
                g.values(2 * i, col) = e.mu1;
                g.values(2 * i + 1, col) = e.mu2;
            }
        }
    }
    if (!g.values.allFinite()) throw NumericalError("assemble_g: non-finite response");
    g.condition_number = condition_number(g.values);
    return g;
}

// ---------------------------------------------------------------------------

ProfileKind parse_profile_kind(std::string_view name) {
    std::string n(name);
    std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) {
        return c == '_' ? '-' : static_cast<char>(std::tolower(c));
    });
    if (n == "single-line" || n == "singleline" || n == "line") return ProfileKind::SingleLine;
    if (n == "two-lines" || n == "twolines") return ProfileKind::TwoLines;
    if (n == "loop") return ProfileKind::Loop;
    if (n == "loop-with-feeds" || n == "loopwithfeeds") return ProfileKind::LoopWithFeeds;
    if (n == "electrode-pair" || n == "electrodepair" || n == "pair") return ProfileKind::ElectrodePair;
    if (n == "efpsa-array" || n == "efpsaarray" || n == "efpsa" || n == "array") return ProfileKind::EfpsaArray;
    throw ValidationError("unsupported profile kind '" + std::string(name) + "'");
}

std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::SingleLine: return "single-line";
        case ProfileKind::TwoLines: return "two-lines";
        case ProfileKind::Loop: return "loop";
        case ProfileKind::LoopWithFeeds: return "loop-with-feeds";
        case ProfileKind::ElectrodePair: return "electrode-pair";
        case ProfileKind::EfpsaArray: return "efpsa-array";
    }
    return "unknown";
}

bool is_magnetic(ProfileKind k) {
    return k == ProfileKind::SingleLine || k == ProfileKind::TwoLines || k == ProfileKind::Loop ||
           k == ProfileKind::LoopWithFeeds;
}

namespace {

constexpr double kWireHalfLength = 1.0;   // m, "infinite" straight wires
constexpr int kLoopSegments = 3600;
constexpr double kFeedGap = 100e-9;

std::vector<Segment> loop_segments(double radius, double gap) {
    std::vector<Segment> segs;
    const double half = gap > 0.0 ? std::asin(0.5 * gap / radius) : 0.0;
    const double start = -0.5 * kPi + half;
    const double span = 2.0 * kPi - 2.0 * half;
    auto point = [&](double phi) { return Vec3(radius * std::cos(phi), radius * std::sin(phi), 0.0); };
    for (int i = 0; i < kLoopSegments; ++i) {
        const double p0 = start + span * i / kLoopSegments;
        const double p1 = start + span * (i + 1) / kLoopSegments;
        segs.push_back({point(p0), point(p1), 1.0});
    }
    if (gap > 0.0) {
        const Vec3 in_end = point(start);
        const Vec3 out_start = point(start + span);
        segs.push_back({Vec3(in_end.x(), -kWireHalfLength, 0.0), in_end, 1.0});
        segs.push_back({out_start, Vec3(out_start.x(), -kWireHalfLength, 0.0), 1.0});
    }
    return segs;
}

double magnetic_raw(ProfileKind kind, double r) {
    const double d = kProfileStructureDistance;
    switch (kind) {
        case ProfileKind::SingleLine: {
            static const std::vector<Segment> wire{{Vec3(-kWireHalfLength, 0, 0), Vec3(kWireHalfLength, 0, 0), 1.0}};
            return biot_savart(wire, Vec3(0.0, 0.0, r)).norm();
        }
        case ProfileKind::TwoLines: {
            static const std::vector<Segment> wires{
                {Vec3(-kWireHalfLength, d, 0), Vec3(kWireHalfLength, d, 0), 1.0},
                {Vec3(kWireHalfLength, -d, 0), Vec3(-kWireHalfLength, -d, 0), 1.0}};
            return biot_savart(wires, Vec3(0.0, 0.0, r)).norm();
        }
        case ProfileKind::Loop: {
            static const std::vector<Segment> loop = loop_segments(d, 0.0);
            return biot_savart(loop, Vec3(0.0, 0.0, r)).norm();
        }
        case ProfileKind::LoopWithFeeds: {
            static const std::vector<Segment> loop = loop_segments(d, kFeedGap);
            return biot_savart(loop, Vec3(0.0, 0.0, r)).norm();
        }
        default: break;
    }
    throw ValidationError("unsupported profile kind");
}

double electric_raw(ProfileKind kind, double r) {
    auto geometry = [](int n_sites) {
        DeviceGeometry g;
        g.a = kProfileStructureDistance;
        g.electrode_offset = kProfileStructureDistance;
        g.electrode_depth = 0.0;
        g.n_sites = n_sites;
        return g;
    };
    static const FieldBasisSet pair = surrogate_basis(geometry(1), 1.0, 0.0);
    static const FieldBasisSet array = surrogate_basis(geometry(10), 1.0, kImageFraction);
    if (kind == ProfileKind::ElectrodePair) {
        const Vec3 p(0.0, 0.0, r);
        return (pair.response(0, p) - pair.response(1, p)).norm();
    }
    // end pair of the array driven, probe outward along the array axis
    const Vec3 p(0.0, 0.0, -r);
    return (array.response(0, p) - array.response(1, p)).norm();
}

double profile_raw(ProfileKind kind, double r) {
    return is_magnetic(kind) ? magnetic_raw(kind, r) : electric_raw(kind, r);
}

}  // namespace

double appendix_c_profile(ProfileKind kind, double r) {
    if (!(r >= kProfileMinDistance) || !std::isfinite(r)) {
        throw ValidationError("profile distance must be >= 50 nm");
    }
    return profile_raw(kind, r) / profile_raw(kind, kProfileNormalization);
}

double log_log_slope(const std::vector<double>& r, const std::vector<double>& values) {
    if (r.size() != values.size() || r.size() < 2) throw ValidationError("log_log_slope: need >= 2 paired samples");
    const auto n = static_cast<double>(r.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!(r[i] > 0.0) || !(values[i] > 0.0)) throw ValidationError("log_log_slope: values must be positive");
        const double x = std::log(r[i]);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw ValidationError("log_log_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / den;
}

double far_field_slope(ProfileKind kind, double r_max, int samples) {
    if (samples < 2) throw ValidationError("far_field_slope: need >= 2 samples");
    std::vector<double> r, v;
    const double r_min = r_max / 10.0;
    for (int i = 0; i < samples; ++i) {
        const double x = r_min * std::pow(10.0, static_cast<double>(i) / (samples - 1));
        r.push_back(x);
        v.push_back(appendix_c_profile(kind, x));
    }
    return log_log_slope(r, v);
}

}  // namespace efpsa::field
