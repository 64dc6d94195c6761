#include "efpsa/repeater_sim.hpp"

#include <algorithm>
#include <cmath>

#include "efpsa/errors.hpp"

namespace efpsa::repeater {

void LinkParams::validate() const {
    auto prob = [](double v, const char* name) {
        if (!(v > 0.0 && v <= 1.0)) throw ValidationError(std::string("link parameter '") + name + "' must be in (0, 1]");
    };
    if (!(L_km > 0.0) || !std::isfinite(L_km)) throw ValidationError("link length must be > 0");
    if (!(gamma_fiber >= 0.0)) throw ValidationError("fiber attenuation must be >= 0");
    prob(p_d, "p_d");
    prob(p_c, "p_c");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("link parameter 'alpha' must be in [0, 1]");
    prob(mzi_eff, "mzi_eff");
    prob(swap_fidelity, "swap_fidelity");
    if (!(t_ph > 0.0)) throw ValidationError("t_ph must be > 0");
    if (n_freq < 1) throw ValidationError("n_freq must be >= 1");
    if (!(signal_velocity > 0.0)) throw ValidationError("signal_velocity must be > 0");
    if (!(swap_time >= 0.0)) throw ValidationError("swap_time must be >= 0");
}

double link_success_p1(const LinkParams& lp, double eta_wg) {
    lp.validate();
    if (!(eta_wg >= 0.0 && eta_wg <= 1.0)) throw ValidationError("eta_wg must be in [0, 1]");
    return 2.0 * lp.alpha * std::exp(-lp.gamma_fiber * lp.L_km) * lp.p_d * lp.p_c * eta_wg;
}

double local_bk_p2(const LinkParams& lp, double eta_wg) {
    lp.validate();
    if (!(eta_wg >= 0.0 && eta_wg <= 1.0)) throw ValidationError("eta_wg must be in [0, 1]");
    const double x = lp.p_d * eta_wg;
    return 0.5 * x * x;
}

long channel_capacity(const LinkParams& lp) {
    lp.validate();
    // small tolerance so t_link an exact multiple of t_ph is not floored down
    const double bins = std::floor(lp.t_link() / lp.t_ph * (1.0 + 1e-12));
    return static_cast<long>(lp.n_freq) * std::max(1L, static_cast<long>(bins));
}

Architecture parse_architecture(std::string_view name) {
    if (name == "efpsa") return Architecture::Efpsa;
    if (name == "mzi") return Architecture::Mzi;
    if (name == "hybrid") return Architecture::Hybrid;
    throw ValidationError("unknown architecture '" + std::string(name) + "' (efpsa|mzi|hybrid)");
}

std::string to_string(Architecture a) {
    switch (a) {
        case Architecture::Efpsa: return "efpsa";
        case Architecture::Mzi: return "mzi";
        case Architecture::Hybrid: return "hybrid";
    }
    return "unknown";
}

std::string to_string(Limit l) { return l == Limit::Capacity ? "capacity" : "loss"; }

namespace {

int tree_depth(long n) {
    int d = 0;
    while ((1L << d) < n) ++d;
    return d;
}

double channels(long n_qubits, const LinkParams& lp, bool apply_capacity) {
    const long n = apply_capacity ? std::min(n_qubits, channel_capacity(lp)) : n_qubits;
    return static_cast<double>(n);
}

}  // namespace

double rate_hybrid(long n_qubits, long n_dev, const LinkParams& lp, const photonic::OpticalInterface& optics,
                   bool apply_capacity) {
    if (n_qubits < 0) throw ValidationError("qubit count must be >= 0");
    if (n_qubits == 0) return 0.0;
    if (n_dev < 1 || n_dev > n_qubits) throw ValidationError("n_dev must be in [1, N]");
    optics.validate();
    const long periods = (n_qubits + n_dev - 1) / n_dev;
    const double eta = optics.eta(static_cast<double>(periods)) * std::pow(lp.mzi_eff, tree_depth(n_dev));
    return 0.5 * channels(n_qubits, lp, apply_capacity) * link_success_p1(lp, eta) / lp.t_link();
}

double rate_efpsa(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                  bool apply_capacity) {
    if (n_qubits == 0) return 0.0;
    return rate_hybrid(n_qubits, 1, lp, optics, apply_capacity);
}

double rate_mzi(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics, bool apply_capacity) {
    if (n_qubits == 0) return 0.0;
    return rate_hybrid(n_qubits, n_qubits, lp, optics, apply_capacity);
}

HybridOptimum optimize_hybrid(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                              bool apply_capacity) {
    HybridOptimum best;
    if (n_qubits <= 0) return best;
    best.rate = -1.0;
    for (long d = 1; d <= n_qubits; ++d) {
        const double r = rate_hybrid(n_qubits, d, lp, optics, apply_capacity);
        if (r > best.rate) best = {d, r};
    }
    return best;
}

RatePoint rate_point(Architecture arch, long n_qubits, const LinkParams& lp,
                     const photonic::OpticalInterface& optics, bool apply_capacity) {
    RatePoint p;
    p.n_qubits = n_qubits;
    switch (arch) {
        case Architecture::Efpsa: p.rate = rate_efpsa(n_qubits, lp, optics, apply_capacity); break;
        case Architecture::Mzi: p.rate = rate_mzi(n_qubits, lp, optics, apply_capacity); break;
        case Architecture::Hybrid: {
            const auto h = optimize_hybrid(n_qubits, lp, optics, apply_capacity);
            p.rate = h.rate;
            p.n_dev = h.n_dev;
            break;
        }
    }
    p.limit = apply_capacity && n_qubits > channel_capacity(lp) ? Limit::Capacity : Limit::Loss;
    return p;
}

long efpsa_peak(const LinkParams& lp, const photonic::OpticalInterface& optics, long n_max) {
    long best = 2;
    double best_rate = -1.0;
    for (long n = 2; n <= n_max; ++n) {
        const double r = rate_efpsa(n, lp, optics, false);
        if (r > best_rate) {
            best_rate = r;
            best = n;
        } else if (r < 0.5 * best_rate) {
            break;  // past the single maximum
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

double superradiance_fidelity(double t, double gamma_sp) {
    if (!(t >= 0.0) || !(gamma_sp > 0.0)) throw ValidationError("need t >= 0 and gamma_sp > 0");
    // e^x / (2 + e^x) written to stay finite for large x
    return 1.0 / (1.0 + 2.0 * std::exp(-gamma_sp * t));
}

double herald_density(double t, double gamma_sp) {
    if (!(t >= 0.0) || !(gamma_sp > 0.0)) throw ValidationError("need t >= 0 and gamma_sp > 0");
    return gamma_sp * std::exp(-gamma_sp * t);
}

double tradeoff(double fidelity) {
    if (!(fidelity > 1.0 / 3.0 && fidelity < 1.0)) {
        throw ValidationError("target fidelity must be in (1/3, 1) for superradiant heralding");
    }
    return (1.0 - fidelity) / (2.0 * fidelity);
}

double herald_time(double fidelity, double gamma_sp) {
    if (!(gamma_sp > 0.0)) throw ValidationError("gamma_sp must be > 0");
    return -std::log(tradeoff(fidelity)) / gamma_sp;
}

std::string SchemeRates::best() const {
    const double m = std::max({barrett_kok, single_photon, superradiance, bk_superradiance});
    if (m == bk_superradiance) return "bk+superradiance";
    if (m == barrett_kok) return "barrett-kok";
    if (m == single_photon) return "single-photon";
    return "superradiance";
}

SchemeRates scheme_rates(double f_target, double p_det) {
    if (!(p_det >= 0.0 && p_det <= 1.0)) throw ValidationError("p_det must be in [0, 1]");
    if (!(f_target > 0.0 && f_target < 1.0)) throw ValidationError("target fidelity must be in (0, 1)");
    SchemeRates r;
    r.barrett_kok = 0.5 * p_det * p_det;
    r.single_photon = 2.0 * (1.0 - f_target) * p_det;
    const double late = tradeoff(f_target);
    r.superradiance = late * p_det;
    r.bk_superradiance = r.barrett_kok + late * p_det;
    return r;
}

double bk_superradiance_crossover(double f_target) {
    // beats single photon once p/2 + tradeoff > 2 (1 - F); it always beats BK
    // and superradiance alone
    const double p = 2.0 * (2.0 * (1.0 - f_target) - tradeoff(f_target));
    return std::max(p, 0.0);
}

}  // namespace efpsa::repeater
