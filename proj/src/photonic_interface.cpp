#include "efpsa/photonic_interface.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "efpsa/errors.hpp"

namespace efpsa::photonic {

double beta_efficiency(double purcell, double debye_waller) {
    if (!(purcell >= 0.0) || !std::isfinite(purcell)) throw ValidationError("Purcell factor must be >= 0");
    if (!(debye_waller > 0.0 && debye_waller < 1.0)) throw ValidationError("Debye-Waller factor must be in (0, 1)");
    const double wg = purcell * debye_waller;
    return wg / (wg + 1.0 - debye_waller);
}

double collection_efficiency(double beta, double t_wg, double n_periods, LossMode mode) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must be in [0, 1]");
    if (!(t_wg >= 0.0) || !std::isfinite(t_wg)) throw ValidationError("t_wg must be >= 0");
    if (!(n_periods >= 0.0) || !std::isfinite(n_periods)) throw ValidationError("period count must be >= 0");
    const double loss = t_wg * n_periods;
    return beta * (mode == LossMode::Decibel ? std::pow(10.0, -loss / 10.0) : std::exp(-loss));
}

PurcellProfile PurcellProfile::parametric(double f_max, double band_edge, double saturation, double gap_decay,
                                          double half_domain) {
    if (!(f_max > 0.0) || !(saturation > 0.0) || !(gap_decay > 0.0) || !(half_domain > 0.0)) {
        throw ValidationError("Purcell profile parameters must be positive");
    }
    PurcellProfile p;
    p.f_max_ = f_max;
    p.edge_ = band_edge;
    p.saturation_ = saturation;
    p.gap_decay_ = gap_decay;
    p.lo_ = -half_domain;
    p.hi_ = half_domain;
    return p;
}

PurcellProfile PurcellProfile::tabulated(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) throw ValidationError("tabulated Purcell profile needs at least two samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!std::isfinite(samples[i].first) || !(samples[i].second >= 0.0)) {
            throw ValidationError("tabulated Purcell profile: invalid sample " + std::to_string(i));
        }
        if (i > 0 && !(samples[i].first > samples[i - 1].first)) {
            throw ValidationError("tabulated Purcell profile: detunings must be strictly increasing");
        }
    }
    PurcellProfile p;
    p.lo_ = samples.front().first;
    p.hi_ = samples.back().first;
    p.table_ = std::move(samples);
    return p;
}

PurcellProfile PurcellProfile::parse_csv(std::string_view text) {
    std::vector<std::pair<double, double>> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) {
            throw ValidationError("purcell csv line " + std::to_string(line_no) + ": expected two columns");
        }
        auto parse = [&](std::string_view tok, double& v) {
            while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
            while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            return ec == std::errc() && p == tok.data() + tok.size();
        };
        double d = 0.0, f = 0.0;
        const bool ok = parse(line.substr(0, comma), d) && parse(line.substr(comma + 1), f);
        if (!ok) {
            if (rows.empty()) continue;  // header row
            throw ValidationError("purcell csv line " + std::to_string(line_no) + ": invalid number");
        }
        rows.emplace_back(d, f);
    }
    return tabulated(std::move(rows));
}

double PurcellProfile::at(double detuning) const {
    if (!(detuning >= lo_ && detuning <= hi_)) {
        throw ValidationError("detuning " + std::to_string(detuning) + " Hz outside the Purcell profile domain");
    }
    if (!table_.empty()) {
        auto it = std::upper_bound(table_.begin(), table_.end(), detuning,
                                   [](double d, const auto& s) { return d < s.first; });
        if (it == table_.end()) return table_.back().second;
        if (it == table_.begin()) return table_.front().second;
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return y0 + (y1 - y0) * (detuning - x0) / (x1 - x0);
    }
    if (detuning < edge_) return f_max_ * std::exp(-(edge_ - detuning) / gap_decay_);
    const double dist = detuning - edge_;
    if (dist <= saturation_) return f_max_;
    return f_max_ * std::sqrt(saturation_ / dist);
}

void OpticalInterface::validate() const {
    (void)beta_efficiency(purcell, debye_waller);
    if (!(t_wg >= 0.0)) throw ValidationError("t_wg must be >= 0");
    if (!(t_ph > 0.0)) throw ValidationError("t_ph must be > 0");
}

double OpticalInterface::eta(double n_periods) const {
    const double n = midpoint ? 0.5 * n_periods : n_periods;
    return collection_efficiency(beta(), t_wg, n, loss_mode);
}

}  // namespace efpsa::photonic
