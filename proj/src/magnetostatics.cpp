#include <cmath>

#include "efpsa/field_model.hpp"

namespace efpsa::field {

Vec3 biot_savart(const std::vector<Segment>& segments, const Vec3& p, double mu0) {
    Vec3 b = Vec3::Zero();
    for (const auto& s : segments) {
        Vec3 u = s.b - s.a;
        const double len = u.norm();
        if (len == 0.0) continue;
        u /= len;
        const Vec3 d = p - s.a;
        const double t = d.dot(u);
        const Vec3 radial = d - t * u;
        const double rho2 = radial.squaredNorm();
        if (rho2 == 0.0) continue;  // on the wire axis: no azimuthal field
        const double ra = d.norm();
        const double rb = (p - s.b).norm();
        // mu0 I / (4 pi rho) (cos a1 - cos a2), along u x rho_hat
        const double mag = (t / ra + (len - t) / rb) * s.current * mu0 / (4.0 * kPi);
        b += (mag / rho2) * u.cross(radial);
    }
    return b;
}

}  // namespace efpsa::field
