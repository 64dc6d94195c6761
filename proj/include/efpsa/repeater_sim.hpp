#pragma once

// Entanglement rates for the three-node repeater link: closed forms for the
// eFPSA, MZI-tree and hybrid architectures, the superradiance heralding
// trade-off and a Monte Carlo protocol engine.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "efpsa/device_model.hpp"
#include "efpsa/photonic_interface.hpp"

namespace efpsa::repeater {

inline constexpr double kFiberIndex = 1.468;

struct LinkParams {
    double L_km = 1.0;
    double gamma_fiber = 0.041;        // 1/km
    double p_d = 0.83;                 // detector efficiency
    double p_c = 0.33;                 // frequency conversion efficiency
    double alpha = 0.01;               // bright-state weight
    double t_ph = 10e-9;               // s
    int n_freq = 10;
    double mzi_eff = 0.92;
    double signal_velocity = kSpeedOfLight;  // m/s; c / kFiberIndex in fiber mode
    double swap_time = 0.0;            // s
    double swap_fidelity = 1.0;

    void validate() const;
    /// L / signal_velocity, s.
    [[nodiscard]] double t_link() const { return L_km * 1e3 / signal_velocity; }
};

/// 2 alpha exp(-gamma L) p_d p_c eta_wg.
double link_success_p1(const LinkParams& lp, double eta_wg);
/// (p_d eta_wg)^2 / 2.
double local_bk_p2(const LinkParams& lp, double eta_wg);
/// n_freq floor(t_link / t_ph).
long channel_capacity(const LinkParams& lp);

enum class Architecture { Efpsa, Mzi, Hybrid };
Architecture parse_architecture(std::string_view name);
std::string to_string(Architecture a);

enum class Limit { Loss, Capacity };
std::string to_string(Limit l);

/// Rates count ebits: every ebit consumes one A-side and one B-side link, so
/// n parallel channels deliver at most n/2 ebits per round of length t_link.
/// With apply_capacity the channel count is min(N, capacity).
double rate_efpsa(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                  bool apply_capacity = true);

/// Each emitter sits in a one-period device; the tree costs
/// mzi_eff^ceil(log2 N).
double rate_mzi(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                bool apply_capacity = true);

/// N qubits in n_dev eFPSAs of ceil(N / n_dev) periods behind a tree of
/// ceil(log2 n_dev) stages.
double rate_hybrid(long n_qubits, long n_dev, const LinkParams& lp, const photonic::OpticalInterface& optics,
                   bool apply_capacity = true);

struct HybridOptimum {
    long n_dev = 1;
    double rate = 0.0;
};

/// Exhaustive scan of n_dev over [1, N].
HybridOptimum optimize_hybrid(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                              bool apply_capacity = true);

struct RatePoint {
    long n_qubits = 0;
    double rate = 0.0;
    Limit limit = Limit::Loss;
    long n_dev = 0;                    // hybrid only
};

RatePoint rate_point(Architecture arch, long n_qubits, const LinkParams& lp,
                     const photonic::OpticalInterface& optics, bool apply_capacity = true);

/// Integer argmax of rate_efpsa over [2, n_max] without the capacity clamp.
long efpsa_peak(const LinkParams& lp, const photonic::OpticalInterface& optics, long n_max = 100000);

// ---------------------------------------------------------------------------
// Superradiant heralding

/// e^(G t) / (2 + e^(G t)).
double superradiance_fidelity(double t, double gamma_sp);
/// G e^(-G t).
double herald_density(double t, double gamma_sp);
/// (1 - F) / (2 F): the detection probability left after gating at the time
/// where fidelity F is reached. Requires F in (1/3, 1).
double tradeoff(double fidelity);
/// Gate time at which the fidelity reaches F.
double herald_time(double fidelity, double gamma_sp);

struct SchemeRates {
    double barrett_kok;
    double single_photon;
    double superradiance;
    double bk_superradiance;

    [[nodiscard]] std::string best() const;
};

/// BK: p^2/2; single photon: 2(1-F)p; superradiance: tradeoff(F) p;
/// BK + superradiance: p^2/2 + p tradeoff(F) (a late single detection already
/// heralds the pair, so the second BK round is skipped for that mass).
SchemeRates scheme_rates(double f_target, double p_det);

/// Smallest p_det at which BK + superradiance beats every other scheme.
double bk_superradiance_crossover(double f_target);

// ---------------------------------------------------------------------------
// Monte Carlo

struct McOptions {
    std::size_t trials = 100000;       // rounds of length t_link, split over replications
    std::uint64_t seed = 7;
    int replications = 10;             // independent runs, one RNG stream each
    int batches_per_replication = 10;  // batch means for the standard error
    int local_channels = 1;            // servers for the local Barrett-Kok step
    double t_local = -1.0;             // s per local attempt; negative means 2 t_ph
    unsigned threads = 0;              // 0: hardware concurrency capped by EFPSA_THREADS
};

struct McResult {
    double rate = 0.0;                 // ebits/s
    double stderr_rate = 0.0;
    std::uint64_t ebits = 0;
    std::size_t batches = 0;
    long channels = 0;
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Protocol simulation for an explicit channel count and success
/// probabilities. Every round each channel attempts one link, split between
/// the A and B sides so the side with fewer waiting links gets the extra
/// attempts. Links herald after t_link; A/B links pair first-in first-out and
/// the pair enters the local Barrett-Kok queue (geometric attempts with
/// probability p2, t_local each, plus swap_time).
McResult simulate_protocol(long channels, double p1, double p2, const LinkParams& lp, const McOptions& options);

/// simulate_protocol for N qubits in one eFPSA.
McResult monte_carlo_protocol(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                              const McOptions& options);

/// Worker count: EFPSA_THREADS if set (>= 1), else hardware concurrency.
unsigned worker_threads(unsigned requested = 0);

}  // namespace efpsa::repeater
