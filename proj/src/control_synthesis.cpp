#include "efpsa/control_synthesis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "efpsa/errors.hpp"
#include "json.hpp"

namespace efpsa::control {

using field::Components;
using field::FieldComponent;

Eigen::VectorXd target_vector(const GMatrix& g, const DriveTarget& target) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(g.values.rows());
    std::vector<bool> seen(static_cast<std::size_t>(g.n_sites), false);
    for (const auto& f : target.fields) {
        if (f.site < 0 || f.site >= g.n_sites) {
            throw ValidationError("target site " + std::to_string(f.site) + " out of range");
        }
        if (seen[static_cast<std::size_t>(f.site)]) {
            throw ValidationError("target site " + std::to_string(f.site) + " listed twice");
        }
        if (!std::isfinite(f.mu1) || !std::isfinite(f.mu2)) throw ValidationError("target field must be finite");
        seen[static_cast<std::size_t>(f.site)] = true;
        e(g.row(f.site, FieldComponent::Mu1)) = f.mu1;
        e(g.row(f.site, FieldComponent::Mu2)) = f.mu2;
    }
    return e;
}

Eigen::VectorXd solve_square(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    if (a.rows() != a.cols()) throw NumericalError("solve_square: matrix is not square");
    if (a.rows() != b.size()) throw ValidationError("solve_square: dimension mismatch");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (!(lu.rcond() > 1e-15)) throw NumericalError("singular response matrix (rcond below 1e-15)");
    Eigen::VectorXd x = lu.solve(b);
    for (int it = 0; it < 2; ++it) x += lu.solve(b - a * x);
    if (!x.allFinite()) throw NumericalError("solve_square: non-finite solution");
    return x;
}

Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    if (a.rows() != b.size()) throw ValidationError("solve_min_norm: dimension mismatch");
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    Eigen::VectorXd x = cod.solve(b);
    if (!x.allFinite()) throw NumericalError("solve_min_norm: non-finite solution");
    return x;
}

std::vector<int> dependent_rows(const Eigen::MatrixXd& a, double tol) {
    // Gram-Schmidt in row order, two passes for stability
    std::vector<Eigen::VectorXd> basis;
    std::vector<int> out;
    const double scale = a.rowwise().norm().maxCoeff();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Eigen::VectorXd r = a.row(i).transpose();
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) r -= q.dot(r) * q;
        }
        const double n = r.norm();
        if (n <= tol * scale) {
            out.push_back(static_cast<int>(i));
        } else {
            basis.push_back(r / n);
        }
    }
    return out;
}

double surface_field_bound(const FieldBasisSet& basis, const Eigen::VectorXd& voltages) {
    if (static_cast<std::size_t>(voltages.size()) != basis.size()) {
        throw ValidationError("surface_field_bound: voltage count mismatch");
    }
    double bound = 0.0;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const double v = std::abs(voltages(static_cast<Eigen::Index>(j)));
        if (v > 0.0) bound += v * basis.surface_peak(j);
    }
    return bound;
}

namespace {

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const double nb = b.norm();
    const double nr = (a * x - b).norm();
    return nb > 0.0 ? nr / nb : nr;
}

void check_breakdown(const FieldBasisSet* basis, const Eigen::VectorXd& v, const PhysicalConstants& c,
                     const SolveOptions& options, double& peak, std::vector<std::string>& advisories) {
    if (basis == nullptr) return;
    peak = surface_field_bound(*basis, v);
    const double limit = c.breakdown_field();
    if (peak > limit) {
        std::ostringstream os;
        os << "electrode surface field bound " << peak << " V/m exceeds breakdown " << limit << " V/m";
        if (options.strict) throw ValidationError(os.str());
        advisories.push_back(os.str());
    }
}

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

}  // namespace

Solution eliminate_crosstalk(const GMatrix& g, const DriveTarget& target, const PhysicalConstants& c,
                             const FieldBasisSet* basis, const SolveOptions& options) {
    if (g.values.rows() != g.values.cols()) {
        throw ValidationError("eliminate_crosstalk: G must be square, got " + std::to_string(g.values.rows()) + "x" +
                              std::to_string(g.values.cols()));
    }
    Solution s;
    s.condition_number = g.condition_number > 0.0 ? g.condition_number : field::condition_number(g.values);
    if (!(s.condition_number < options.max_condition)) {
        std::ostringstream os;
        os << "singular response matrix: condition number " << s.condition_number << " >= " << options.max_condition;
        throw NumericalError(os.str());
    }
    const Eigen::VectorXd e = target_vector(g, target);
    s.voltages = solve_square(g.values, e);
    s.residual = relative_residual(g.values, s.voltages, e);
    check_breakdown(basis, s.voltages, c, options, s.peak_surface_field, s.advisories);
    return s;
}

Solution synthesize_drive(const GMatrix& g, const DriveTarget& target, const PhysicalConstants& c,
                          const FieldBasisSet* basis, const SolveOptions& options) {
    if (g.values.rows() <= g.values.cols()) {
        const auto deficient = dependent_rows(g.values);
        if (!deficient.empty()) {
            throw NumericalError("rank-deficient response matrix: dependent rows " + join(deficient));
        }
    }
    if (g.values.rows() == g.values.cols()) return eliminate_crosstalk(g, target, c, basis, options);

    Solution s;
    s.condition_number = g.condition_number > 0.0 ? g.condition_number : field::condition_number(g.values);
    const Eigen::VectorXd e = target_vector(g, target);
    s.voltages = solve_min_norm(g.values, e);
    s.least_squares = true;
    s.residual = relative_residual(g.values, s.voltages, e);
    if (g.values.rows() > g.values.cols() && s.residual > 1e-9) {
        std::ostringstream os;
        os << "overdetermined system: target not reachable, relative residual " << s.residual;
        s.advisories.push_back(os.str());
    }
    check_breakdown(basis, s.voltages, c, options, s.peak_surface_field, s.advisories);
    return s;
}

std::vector<double> crosstalk_fidelities(const GMatrix& g, const Eigen::VectorXd& voltages, int target_site,
                                         const PhysicalConstants& c, spin::Averaging averaging) {
    if (target_site < 0 || target_site >= g.n_sites) throw ValidationError("target site out of range");
    if (voltages.size() != g.values.cols()) throw ValidationError("voltage count mismatch");
    const Eigen::VectorXd e = g.values * voltages;
    auto site_field = [&](int i) {
        NvField f;
        f.mu1 = e(g.row(i, FieldComponent::Mu1));
        f.mu2 = e(g.row(i, FieldComponent::Mu2));
        const int rp = g.row(i, FieldComponent::Par);
        if (rp >= 0) f.par = e(rp);
        return f;
    };
    spin::DriveConfig drive;
    drive.transition = spin::Transition::PlusMinus;
    drive.field = site_field(target_site);
    const double rabi = spin::rabi_frequency(drive, c);
    if (!(rabi > 0.0)) throw ValidationError("target site receives no transverse field");
    const double t_pi = 1.0 / (2.0 * rabi);

    std::vector<double> out(static_cast<std::size_t>(g.n_sites), 1.0);
    for (int i = 0; i < g.n_sites; ++i) {
        if (i == target_site) continue;
        spin::DriveConfig residual;
        residual.transition = spin::Transition::PlusMinus;
        residual.field = site_field(i);
        out[static_cast<std::size_t>(i)] = spin::crosstalk_fidelity(residual, t_pi, averaging, c);
    }
    return out;
}

// ---------------------------------------------------------------------------

double stark_shift(const NvField& e, const PhysicalConstants& c) {
    return (c.delta_mu_par() * e.par - std::sqrt(0.5) * c.mu_perp_opt() * e.perp()) / c.h;
}

void ChannelPlan::validate() const {
    if (channels.empty()) throw ValidationError("channel plan has no channels");
    if (!(linewidth > 0.0)) throw ValidationError("channel linewidth must be > 0");
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (!std::isfinite(channels[i])) throw ValidationError("channel frequency must be finite");
        for (std::size_t j = i + 1; j < channels.size(); ++j) {
            if (std::abs(channels[i] - channels[j]) < 100.0 * linewidth) {
                throw ValidationError("channels " + std::to_string(i) + " and " + std::to_string(j) +
                                      " are closer than 100 linewidths");
            }
        }
    }
    for (std::size_t s = 0; s < assignment.size(); ++s) {
        if (assignment[s] < 0 || assignment[s] >= static_cast<int>(channels.size())) {
            throw ValidationError("site " + std::to_string(s) + " assigned to unknown channel " +
                                  std::to_string(assignment[s]));
        }
    }
}

std::vector<double> ChannelPlan::required_shifts() const {
    validate();
    std::vector<double> out;
    for (int ch : assignment) out.push_back(channels[static_cast<std::size_t>(ch)] - zero_field_detuning);
    return out;
}

namespace {

std::vector<NvField> site_fields(const GMatrix& g, const Eigen::VectorXd& v) {
    const Eigen::VectorXd e = g.values * v;
    std::vector<NvField> out;
    for (int i = 0; i < g.n_sites; ++i) {
        out.push_back({e(g.row(i, FieldComponent::Par)), e(g.row(i, FieldComponent::Mu1)),
                       e(g.row(i, FieldComponent::Mu2))});
    }
    return out;
}

double zeroed_ratio(const std::vector<NvField>& f) {
    double mu1 = 0.0, other = 0.0;
    for (const auto& x : f) {
        mu1 = std::max(mu1, std::abs(x.mu1));
        other = std::max({other, std::abs(x.par), std::abs(x.mu2)});
    }
    if (mu1 == 0.0) return other == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return other / mu1;
}

}  // namespace

ChannelSolution allocate_shifts(const GMatrix& g3, const std::vector<double>& shifts, const PhysicalConstants& c,
                                const FieldBasisSet* basis, const SolveOptions& options) {
    if (g3.components != Components::Full3) throw ValidationError("allocate_shifts needs a Full3 response matrix");
    const int n = g3.n_sites;
    if (static_cast<int>(shifts.size()) != n) {
        throw ValidationError("expected " + std::to_string(n) + " shifts, got " + std::to_string(shifts.size()));
    }
    if (g3.values.cols() != 2 * n) throw ValidationError("allocate_shifts needs two electrodes per site");

    const double per_field = std::sqrt(0.5) * c.mu_perp_opt() / c.h;  // Hz per V/m
    const double max_shift = per_field * c.breakdown_field();
    Eigen::VectorXd target(n);
    for (int i = 0; i < n; ++i) {
        const double s = shifts[static_cast<std::size_t>(i)];
        if (!std::isfinite(s) || s > 0.0) {
            throw ValidationError("site " + std::to_string(i) + ": shift must be <= 0 (perpendicular Stark term lowers the frequency)");
        }
        if (-s > max_shift) {
            std::ostringstream os;
            os << "infeasible plan: site " << i << " needs " << -s / per_field << " V/m, above breakdown "
               << c.breakdown_field() << " V/m";
            throw ValidationError(os.str());
        }
        target(i) = -s / per_field;
    }

    ChannelSolution out;
    Eigen::MatrixXd reduced(n, n);
    for (int i = 0; i < n; ++i) {
        const int r = g3.row(i, FieldComponent::Mu1);
        for (int k = 0; k < n; ++k) reduced(i, k) = g3.values(r, 2 * k) - g3.values(r, 2 * k + 1);
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
    if (target.cwiseAbs().maxCoeff() > 0.0) {
        const Eigen::VectorXd x = solve_square(reduced, target);
        for (int k = 0; k < n; ++k) {
            v(2 * k) = x(k);
            v(2 * k + 1) = -x(k);
        }
    }
    out.fields = site_fields(g3, v);
    out.zeroed_ratio = zeroed_ratio(out.fields);

    if (out.zeroed_ratio > 0.01) {
        Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * n);
        for (int i = 0; i < n; ++i) full(g3.row(i, FieldComponent::Mu1)) = target(i);
        v = solve_min_norm(g3.values, full);
        out.least_squares = true;
        out.fields = site_fields(g3, v);
        out.zeroed_ratio = zeroed_ratio(out.fields);
        if (out.zeroed_ratio > 0.01) {
            std::ostringstream os;
            os << "tolerance failure: parallel/mu2 residual is " << 100.0 * out.zeroed_ratio << "% of |E_mu1|";
            throw ValidationError(os.str());
        }
    }
    out.voltages = v;
    for (const auto& f : out.fields) out.shifts.push_back(stark_shift(f, c));
    check_breakdown(basis, v, c, options, out.peak_surface_field, out.advisories);
    return out;
}

ChannelSolution allocate_channels(const GMatrix& g3, const ChannelPlan& plan, const PhysicalConstants& c,
                                  const FieldBasisSet* basis, const SolveOptions& options) {
    if (static_cast<int>(plan.assignment.size()) != g3.n_sites) {
        throw ValidationError("channel plan assigns " + std::to_string(plan.assignment.size()) + " sites, array has " +
                              std::to_string(g3.n_sites));
    }
    return allocate_shifts(g3, plan.required_shifts(), c, basis, options);
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw NumericalError("number formatting failed");
    return std::string(buf, end);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        const auto pos = s.find(sep);
        out.push_back(s.substr(0, pos));
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double number(std::string_view tok, std::size_t line) {
    tok = trim(tok);
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ValidationError("gmatrix line " + std::to_string(line) + ": invalid number '" + std::string(tok) + "'");
    }
    return v;
}

}  // namespace

std::string write_gmatrix_csv(const GMatrix& g) {
    std::ostringstream os;
    os << "# efpsa-gmatrix v1\n";
    os << "# condition_number " << fmt(g.condition_number) << "\n";
    os << "site,component";
    for (const auto& l : g.column_labels) os << ',' << l;
    os << '\n';
    for (Eigen::Index r = 0; r < g.values.rows(); ++r) {
        os << g.row_site[static_cast<std::size_t>(r)] << ',' << field::to_string(g.row_component[static_cast<std::size_t>(r)]);
        for (Eigen::Index j = 0; j < g.values.cols(); ++j) os << ',' << fmt(g.values(r, j));
        os << '\n';
    }
    return os.str();
}

GMatrix parse_gmatrix_csv(std::string_view text) {
    GMatrix g;
    bool magic = false;
    bool header = false;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line == "# efpsa-gmatrix v1") magic = true;
            continue;
        }
        const auto cols = split(line, ',');
        if (!header) {
            if (cols.size() < 3 || trim(cols[0]) != "site" || trim(cols[1]) != "component") {
                throw ValidationError("gmatrix line " + std::to_string(line_no) + ": expected header 'site,component,...'");
            }
            for (std::size_t j = 2; j < cols.size(); ++j) g.column_labels.emplace_back(trim(cols[j]));
            header = true;
            continue;
        }
        if (cols.size() != g.column_labels.size() + 2) {
            throw ValidationError("gmatrix line " + std::to_string(line_no) + ": wrong column count");
        }
        const double site = number(cols[0], line_no);
        if (site < 0 || site != std::floor(site)) {
            throw ValidationError("gmatrix line " + std::to_string(line_no) + ": invalid site index");
        }
        const auto comp = trim(cols[1]);
        FieldComponent fc;
        if (comp == "par") fc = FieldComponent::Par;
        else if (comp == "mu1") fc = FieldComponent::Mu1;
        else if (comp == "mu2") fc = FieldComponent::Mu2;
        else throw ValidationError("gmatrix line " + std::to_string(line_no) + ": unknown component '" + std::string(comp) + "'");
        g.row_site.push_back(static_cast<int>(site));
        g.row_component.push_back(fc);
        std::vector<double> r;
        for (std::size_t j = 2; j < cols.size(); ++j) r.push_back(number(cols[j], line_no));
        rows.push_back(std::move(r));
    }
    if (!magic) throw ValidationError("gmatrix: missing '# efpsa-gmatrix v1' marker");
    if (!header || rows.empty()) throw ValidationError("gmatrix: no data rows");

    const bool full = std::find(g.row_component.begin(), g.row_component.end(), FieldComponent::Par) !=
                      g.row_component.end();
    g.components = full ? Components::Full3 : Components::Perp2;
    const int per = g.rows_per_site();
    if (rows.size() % static_cast<std::size_t>(per) != 0) throw ValidationError("gmatrix: incomplete site block");
    g.n_sites = static_cast<int>(rows.size()) / per;
    g.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(g.column_labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int site = g.row_site[r];
        if (g.row(site, g.row_component[r]) != static_cast<int>(r)) {
            throw ValidationError("gmatrix: rows must be site-major in (" + std::string(full ? "par," : "") +
                                  "mu1,mu2) order");
        }
        for (std::size_t j = 0; j < rows[r].size(); ++j) {
            g.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = rows[r][j];
        }
    }
    g.condition_number = field::condition_number(g.values);
    return g;
}

TargetRequest parse_target_json(std::string_view text, int n_sites) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("target json: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("target json: top level must be an object");
    TargetRequest req;
    const std::string mode = doc.value("mode", std::string("drive"));
    try {
        if (mode == "drive") {
            req.mode = TargetRequest::Mode::Drive;
            if (!doc.contains("fields") || !doc["fields"].is_array()) {
                throw ValidationError("target json: drive mode needs a 'fields' array");
            }
            for (const auto& f : doc["fields"]) {
                SiteField sf;
                sf.site = f.at("site").get<int>();
                sf.mu1 = f.value("mu1", 0.0);
                sf.mu2 = f.value("mu2", 0.0);
                if (sf.site < 0 || sf.site >= n_sites) {
                    throw ValidationError("target json: site " + std::to_string(sf.site) + " out of range");
                }
                req.drive.fields.push_back(sf);
            }
            if (doc.contains("channels") || doc.contains("shifts")) {
                throw ValidationError("target json: drive mode cannot carry channels or shifts");
            }
        } else if (mode == "stark") {
            req.mode = TargetRequest::Mode::Stark;
            if (doc.contains("fields")) throw ValidationError("target json: stark mode cannot carry fields");
            const bool has_channels = doc.contains("channels");
            const bool has_shifts = doc.contains("shifts");
            if (has_channels == has_shifts) {
                throw ValidationError("target json: stark mode needs exactly one of 'channels' or 'shifts'");
            }
            if (doc.contains("plan")) {
                const auto& p = doc["plan"];
                if (p.contains("channels")) req.plan.channels = p["channels"].get<std::vector<double>>();
                req.plan.linewidth = p.value("linewidth", req.plan.linewidth);
                req.plan.zero_field_detuning = p.value("zero_field_detuning", req.plan.zero_field_detuning);
            }
            if (has_channels) {
                const auto& ch = doc["channels"];
                if (ch.is_array()) {
                    req.plan.assignment = ch.get<std::vector<int>>();
                } else if (ch.is_object()) {
                    // sparse site -> channel map; unlisted sites park in Ch0
                    req.plan.assignment.assign(static_cast<std::size_t>(n_sites), 0);
                    for (const auto& [key, val] : ch.items()) {
                        int site = -1;
                        auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), site);
                        if (ec != std::errc() || p != key.data() + key.size() || site < 0 || site >= n_sites) {
                            throw ValidationError("target json: invalid site key '" + key + "'");
                        }
                        req.plan.assignment[static_cast<std::size_t>(site)] = val.get<int>();
                    }
                } else {
                    throw ValidationError("target json: 'channels' must be an array or object");
                }
                if (static_cast<int>(req.plan.assignment.size()) != n_sites) {
                    throw ValidationError("target json: channel assignment length must equal n_sites");
                }
                req.plan.validate();
            } else {
                req.shifts = doc["shifts"].get<std::vector<double>>();
                if (static_cast<int>(req.shifts.size()) != n_sites) {
                    throw ValidationError("target json: shifts length must equal n_sites");
                }
            }
        } else {
            throw ValidationError("target json: unknown mode '" + mode + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("target json: ") + e.what());
    }
    return req;
}

}  // namespace efpsa::control
