#include "efpsa/device_model.hpp"

#include <set>
#include <sstream>

#include "efpsa/config.hpp"
#include "efpsa/errors.hpp"

namespace efpsa {

void PhysicalConstants::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string("constant '") + name + "' must be positive and finite");
        }
    };
    positive(d_perp, "d_perp");
    positive(d_par, "d_par");
    positive(d_perp_prime, "d_perp_prime");
    positive(gamma, "gamma");
    positive(mu0, "mu0");
    positive(h, "h");
    positive(zero_field_splitting, "zero_field_splitting");
    positive(delta_mu_par_debye, "delta_mu_par");
    positive(mu_perp_opt_debye, "mu_perp_opt");
    positive(T2_star, "T2_star");
    positive(debye_waller, "debye_waller");
    positive(E_bd_diamond, "E_bd_diamond");
    positive(E_bd_hfo2, "E_bd_hfo2");
    if (debye_waller >= 1.0) throw ValidationError("constant 'debye_waller' must be < 1");
    if (d_perp_prime > d_perp) throw ValidationError("d_perp_prime must not exceed d_perp");
}

Vec3 DeviceGeometry::nv_position(int k) const {
    Vec3 p(0.0, 0.0, k * a);
    if (!displacements.empty()) p += displacements.at(static_cast<std::size_t>(k));
    return p;
}

std::vector<Vec3> DeviceGeometry::nv_positions() const {
    std::vector<Vec3> out;
    out.reserve(static_cast<std::size_t>(n_sites));
    for (int k = 0; k < n_sites; ++k) out.push_back(nv_position(k));
    return out;
}

FrameTransform::FrameTransform(const Vec3& nv_axis_crystal) {
    const double s2 = std::sqrt(2.0);
    lab_.row(0) = Vec3(0, 0, 1);
    lab_.row(1) = Vec3(-1, 1, 0) / s2;
    lab_.row(2) = Vec3(1, 1, 0) / s2;

    const Vec3 zp = nv_axis_crystal.normalized();
    const Vec3 mu1 = zp.cross(Vec3(0, 0, 1)).normalized();
    const Vec3 mu2 = mu1.cross(zp).normalized();
    nv_.row(0) = zp;
    nv_.row(1) = mu1;
    nv_.row(2) = mu2;

    // component along nv row i of a lab vector: nv_i . (sum_j e_j lab_j)
    lab_to_nv_ = nv_ * lab_.transpose();
}

NvField FrameTransform::lab_to_nv(const Vec3& e_lab) const {
    const Vec3 c = lab_to_nv_ * e_lab;
    return {c(0), c(1), c(2)};
}

Vec3 FrameTransform::nv_to_lab(const NvField& e_nv) const {
    return lab_to_nv_.transpose() * Vec3(e_nv.par, e_nv.mu1, e_nv.mu2);
}

DeviceModel default_device() {
    DeviceModel m{PhysicalConstants{}, DeviceGeometry{}, FrameTransform{}, {}};
    return m;
}

namespace {

void check_axis(const Vec3& axis) {
    const double m = axis.cwiseAbs().maxCoeff();
    if (!(m > 0.0)) throw ValidationError("nv_axis must be non-zero");
    const Vec3 n = axis.cwiseAbs() / m;
    if ((n - Vec3(1, 1, 1)).norm() > 1e-12) {
        throw ValidationError("nv_axis must be one of the four <111> orientations");
    }
}

}  // namespace

DeviceModel load_device(std::string_view config_text) {
    const Config cfg = Config::parse(config_text);
    DeviceModel m = default_device();
    auto& c = m.constants;
    auto& g = m.geometry;

    static const std::set<std::string> known = {
        "d_perp", "d_par", "d_perp_prime", "gamma", "mu0", "h", "zero_field_splitting",
        "delta_mu_par", "mu_perp_opt", "T2_star", "debye_waller", "E_bd_diamond", "E_bd_hfo2",
        "a", "h_wg", "w_wg", "l_fin", "w_fin", "h_fin", "n_sites", "electrode_offset",
        "electrode_depth", "drive_length", "displacements", "nv_axis"};
    for (const auto& [key, _] : cfg.entries()) {
        if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "'");
    }

    c.d_perp = cfg.number_or("d_perp", c.d_perp);
    c.d_par = cfg.number_or("d_par", c.d_par);
    // d_perp_prime tracks d_perp unless set explicitly
    c.d_perp_prime = cfg.number_or("d_perp_prime", c.d_perp / 50.0);
    c.gamma = cfg.number_or("gamma", c.gamma);
    c.mu0 = cfg.number_or("mu0", c.mu0);
    c.h = cfg.number_or("h", c.h);
    c.zero_field_splitting = cfg.number_or("zero_field_splitting", c.zero_field_splitting);
    c.delta_mu_par_debye = cfg.number_or("delta_mu_par", c.delta_mu_par_debye);
    c.mu_perp_opt_debye = cfg.number_or("mu_perp_opt", c.mu_perp_opt_debye);
    c.T2_star = cfg.number_or("T2_star", c.T2_star);
    c.debye_waller = cfg.number_or("debye_waller", c.debye_waller);
    c.E_bd_diamond = cfg.number_or("E_bd_diamond", c.E_bd_diamond);
    c.E_bd_hfo2 = cfg.number_or("E_bd_hfo2", c.E_bd_hfo2);
    c.validate();

    auto dimension = [&](const char* key, double& field) {
        field = cfg.number_or(key, field);
        if (!(field > 0.0)) throw ValidationError(std::string("config: '") + key + "' must be positive");
    };
    dimension("a", g.a);
    dimension("h_wg", g.h_wg);
    dimension("w_wg", g.w_wg);
    dimension("l_fin", g.l_fin);
    dimension("w_fin", g.w_fin);
    dimension("h_fin", g.h_fin);
    dimension("electrode_offset", g.electrode_offset);
    dimension("drive_length", g.drive_length);
    g.electrode_depth = cfg.number_or("electrode_depth", g.electrode_depth);

    const double n_sites = cfg.number_or("n_sites", g.n_sites);
    if (n_sites < 1.0 || n_sites != std::floor(n_sites)) {
        throw ValidationError("config: 'n_sites' must be an integer >= 1");
    }
    g.n_sites = static_cast<int>(n_sites);

    if (cfg.has("displacements")) {
        const auto& d = cfg.array("displacements");
        if (d.size() != 3 * static_cast<std::size_t>(g.n_sites)) {
            throw ValidationError("config: 'displacements' needs 3*n_sites entries");
        }
        g.displacements.clear();
        for (int k = 0; k < g.n_sites; ++k) {
            const Vec3 dk(d[3 * k], d[3 * k + 1], d[3 * k + 2]);
            if (dk.norm() / g.a > 0.25) {
                std::ostringstream os;
                os << "site " << k << " displacement |delta|/a = " << dk.norm() / g.a
                   << " exceeds 0.25; surrogate symmetry assumptions degrade";
                m.warnings.push_back(os.str());
            }
            g.displacements.push_back(dk);
        }
    }

    if (cfg.has("nv_axis")) {
        const auto& ax = cfg.array("nv_axis");
        if (ax.size() != 3) throw ValidationError("config: 'nv_axis' needs 3 entries");
        g.nv_axis = Vec3(ax[0], ax[1], ax[2]);
    }
    check_axis(g.nv_axis);
    m.frame = FrameTransform(g.nv_axis);
    return m;
}

}  // namespace efpsa
