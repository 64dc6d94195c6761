#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <functional>
#include <queue>
#include <thread>
#include <vector>

#include "efpsa/errors.hpp"
#include "efpsa/random.hpp"
#include "efpsa/repeater_sim.hpp"

namespace efpsa::repeater {

unsigned worker_threads(unsigned requested) {
    unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EFPSA_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

namespace {

// Inversion for small means, Bernoulli sums otherwise; uses only uniform01 so
// the stream is reproducible across standard libraries.
long binomial(std::mt19937_64& rng, long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(rng, n, 1.0 - p);
    if (static_cast<double>(n) * p < 30.0) {
        const double q = 1.0 - p;
        const double ratio = p / q;
        double prob = std::pow(q, static_cast<double>(n));
        double cdf = prob;
        const double u = uniform01(rng);
        long k = 0;
        while (u > cdf && k < n) {
            prob *= ratio * static_cast<double>(n - k) / static_cast<double>(k + 1);
            ++k;
            cdf += prob;
            if (prob == 0.0 && cdf < u) break;
        }
        return k;
    }
    long k = 0;
    for (long i = 0; i < n; ++i) k += uniform01(rng) < p ? 1 : 0;
    return k;
}

// Attempts until the first success, >= 1.
long geometric(std::mt19937_64& rng, double p) {
    if (p >= 1.0) return 1;
    const double u = 1.0 - uniform01(rng);  // (0, 1]
    return 1 + static_cast<long>(std::floor(std::log(u) / std::log1p(-p)));
}

struct BatchStats {
    std::vector<double> rates;  // ebits/s per batch
    std::uint64_t ebits = 0;
};

BatchStats run_replication(std::size_t rounds, int batches, long channels, double p1, double p2,
                           const LinkParams& lp, double t_local, int servers, std::mt19937_64 rng) {
    const double t_link = lp.t_link();
    long waiting_a = 0;
    long waiting_b = 0;
    // min-heap of the time each local server becomes free
    std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
    for (int s = 0; s < servers; ++s) free_at.push(0.0);
    // pairs waiting for a server, FIFO by heralding time
    std::deque<double> queue;
    std::vector<double> completions;  // completion time of every ebit

    auto serve = [&](double until) {
        while (!queue.empty() && free_at.top() <= until) {
            const double start = std::max(free_at.top(), queue.front());
            if (start > until) break;
            free_at.pop();
            queue.pop_front();
            const double service = static_cast<double>(geometric(rng, p2)) * t_local + lp.swap_time;
            free_at.push(start + service);
            completions.push_back(start + service);
        }
    };

    for (std::size_t r = 0; r < rounds; ++r) {
        // give the side with fewer waiting links the extra attempts
        const long half = channels / 2;
        long n_a = half;
        long n_b = channels - half;
        const long deficit = waiting_b - waiting_a;
        if (deficit != 0 && p1 > 0.0) {
            const long extra = std::min<long>(half, static_cast<long>(std::ceil(std::abs(deficit) / p1)));
            if (deficit > 0) {
                n_a = std::min(channels, n_a + extra);
                n_b = channels - n_a;
            } else {
                n_b = std::min(channels, n_b + extra);
                n_a = channels - n_b;
            }
        }
        waiting_a += binomial(rng, n_a, p1);
        waiting_b += binomial(rng, n_b, p1);
        const long pairs = std::min(waiting_a, waiting_b);
        waiting_a -= pairs;
        waiting_b -= pairs;
        const double herald = static_cast<double>(r + 1) * t_link;
        for (long i = 0; i < pairs; ++i) queue.push_back(herald);
        serve(herald);
    }
    const double horizon = static_cast<double>(rounds) * t_link;
    serve(horizon);

    BatchStats stats;
    const double batch_len = horizon / batches;
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(batches), 0);
    for (double t : completions) {
        if (t > horizon * (1.0 + 1e-12)) continue;
        auto b = static_cast<std::size_t>(std::min<double>(batches - 1, std::floor(t / batch_len * (1.0 - 1e-12))));
        ++counts[b];
        ++stats.ebits;
    }
    for (auto c : counts) stats.rates.push_back(static_cast<double>(c) / batch_len);
    return stats;
}

}  // namespace

McResult simulate_protocol(long channels, double p1, double p2, const LinkParams& lp, const McOptions& options) {
    lp.validate();
    if (options.trials < 1000) throw ValidationError("Monte Carlo needs at least 1000 trials");
    if (options.replications < 1 || options.batches_per_replication < 1) {
        throw ValidationError("replications and batches must be >= 1");
    }
    if (options.local_channels < 1) throw ValidationError("local_channels must be >= 1");
    if (channels < 0) throw ValidationError("channel count must be >= 0");
    if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 > 0.0 && p2 <= 1.0)) {
        throw ValidationError("need p1 in [0, 1] and p2 in (0, 1]");
    }
    const double t_local = options.t_local < 0.0 ? 2.0 * lp.t_ph : options.t_local;
    const auto reps = static_cast<std::size_t>(options.replications);
    const std::size_t rounds = std::max<std::size_t>(options.trials / reps, 1);

    std::vector<BatchStats> results(reps);
    const unsigned workers = std::min<unsigned>(worker_threads(options.threads), static_cast<unsigned>(reps));
    auto work = [&](unsigned w) {
        for (std::size_t r = w; r < reps; r += workers) {
            results[r] = run_replication(rounds, options.batches_per_replication, channels, p1, p2, lp, t_local,
                                         options.local_channels, make_stream(options.seed, r));
        }
    };
    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }

    McResult out;
    out.channels = channels;
    out.p1 = p1;
    out.p2 = p2;
    std::vector<double> all;
    for (const auto& r : results) {
        out.ebits += r.ebits;
        all.insert(all.end(), r.rates.begin(), r.rates.end());
    }
    out.batches = all.size();
    double mean = 0.0;
    for (double x : all) mean += x;
    mean /= static_cast<double>(all.size());
    double var = 0.0;
    for (double x : all) var += (x - mean) * (x - mean);
    if (all.size() > 1) var /= static_cast<double>(all.size() - 1);
    out.rate = mean;
    out.stderr_rate = std::sqrt(var / static_cast<double>(all.size()));
    return out;
}

McResult monte_carlo_protocol(long n_qubits, const LinkParams& lp, const photonic::OpticalInterface& optics,
                              const McOptions& options) {
    if (n_qubits < 1) throw ValidationError("qubit count must be >= 1");
    optics.validate();
    const double eta = optics.eta(static_cast<double>(n_qubits));
    const long channels = std::min(n_qubits, channel_capacity(lp));
    return simulate_protocol(channels, link_success_p1(lp, eta), local_bk_p2(lp, eta), lp, options);
}

}  // namespace efpsa::repeater
