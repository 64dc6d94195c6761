#include "efpsa/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "efpsa/control_synthesis.hpp"
#include "efpsa/device_model.hpp"
#include "efpsa/errors.hpp"
#include "efpsa/field_model.hpp"
#include "efpsa/manifest.hpp"
#include "efpsa/photonic_interface.hpp"
#include "efpsa/repeater_sim.hpp"
#include "efpsa/spin_dynamics.hpp"
#include "efpsa/thermal_model.hpp"

namespace efpsa::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::pair<double, double> parse_range(const std::string& text, const char* flag) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ValidationError(std::string(flag) + " expects LO:HI");
    try {
        std::size_t a = 0, b = 0;
        const double lo = std::stod(text.substr(0, colon), &a);
        const double hi = std::stod(text.substr(colon + 1), &b);
        if (a != colon || b != text.size() - colon - 1) throw std::invalid_argument("trailing");
        if (!(lo > 0.0) || !(hi >= lo)) throw ValidationError(std::string(flag) + " needs 0 < LO <= HI");
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ValidationError(std::string(flag) + " expects LO:HI, got '" + text + "'");
    }
}

std::vector<double> log_grid(double lo, double hi, int points) {
    if (points < 2) throw ValidationError("grid needs at least two points");
    std::vector<double> out;
    for (int i = 0; i < points; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
    return out;
}

long count_option(double v, const char* name, long min_value) {
    if (!std::isfinite(v) || v != std::floor(v) || v < static_cast<double>(min_value)) {
        throw ValidationError(std::string(name) + " must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<long>(v);
}

struct Output {
    std::string name;
    std::string body;
};

// Global options and the state derived from them.
struct Context {
    std::string config_path;
    std::string gmatrix_path;
    std::vector<std::string> field_map_paths;
    std::string out = "-";
    std::uint64_t seed = 7;
    bool strict = false;

    DeviceModel device = default_device();
    std::vector<std::pair<std::string, std::string>> input_digests;
    std::ostream* out_stream = nullptr;
    std::ostream* err_stream = nullptr;

    void load() {
        if (!config_path.empty()) {
            const std::string text = read_file(config_path);
            input_digests.emplace_back(config_path, sha256_hex(text));
            device = load_device(text);
            for (const auto& w : device.warnings) *err_stream << "warning: " << w << '\n';
        }
    }

    Manifest manifest(const std::string& sub, const std::string& output) const {
        Manifest m;
        m.subcommand = sub;
        m.output = output;
        m.inputs = input_digests;
        if (strict) m.param("strict", "true");
        return m;
    }

    void emit(const std::vector<Output>& outputs) const {
        if (out == "-" || out == "csv") {
            for (std::size_t i = 0; i < outputs.size(); ++i) {
                if (i) *out_stream << '\n';
                *out_stream << outputs[i].body;
            }
            return;
        }
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw ValidationError("cannot create output directory '" + out + "': " + ec.message());
        for (const auto& o : outputs) {
            std::ofstream f(fs::path(out) / o.name, std::ios::binary);
            if (!f) throw ValidationError("cannot write '" + (fs::path(out) / o.name).string() + "'");
            f << o.body;
        }
    }
};

struct BasisOptions {
    bool bare = false;
    double fin_confinement = field::kFinConfinement;
    double image_fraction = field::kImageFraction;
};

field::FieldBasisSet make_basis(Context& ctx, const BasisOptions& b, Manifest& m) {
    if (!ctx.field_map_paths.empty()) {
        std::vector<field::FieldMap> maps;
        for (const auto& p : ctx.field_map_paths) {
            const std::string text = read_file(p);
            m.input(p, text);
            maps.push_back(field::parse_field_map(text));
        }
        m.param("basis", "imported");
        return field::import_field_maps(maps);
    }
    const double kappa = b.bare ? 1.0 : b.fin_confinement;
    m.param("basis", b.bare ? "surrogate-bare" : "surrogate-fin");
    m.param("fin_confinement", kappa);
    m.param("image_fraction", b.image_fraction);
    return field::surrogate_basis(ctx.device.geometry, kappa, b.image_fraction);
}

void add_basis_flags(CLI::App* sub, BasisOptions& b) {
    sub->add_flag("--bare", b.bare, "Bare electrodes (no fin confinement)");
    sub->add_option("--fin-confinement", b.fin_confinement, "Fin confinement factor (>= 1)");
    sub->add_option("--image-fraction", b.image_fraction, "Grounded-neighbour image charge fraction");
}

std::string with_manifest(const Manifest& m, const std::string& body) { return m.header() + body; }

// ---------------------------------------------------------------------------

struct LinkOptions {
    double L = 1.0;
    double t_ph = 10e-9;
    int n_freq = 10;
    double purcell = 10.0;
    double t_wg = 4e-3;
    std::string loss = "db";
    std::string velocity = "vacuum";
    bool midpoint = false;
    bool no_capacity = false;
    double gamma_fiber = 0.041;
    double p_d = 0.83;
    double p_c = 0.33;
    double alpha = 0.01;
    double mzi_eff = 0.92;
    double swap_time = 0.0;

    repeater::LinkParams link() const {
        repeater::LinkParams lp;
        lp.L_km = L;
        lp.t_ph = t_ph;
        lp.n_freq = n_freq;
        lp.gamma_fiber = gamma_fiber;
        lp.p_d = p_d;
        lp.p_c = p_c;
        lp.alpha = alpha;
        lp.mzi_eff = mzi_eff;
        lp.swap_time = swap_time;
        if (velocity == "vacuum") {
            lp.signal_velocity = kSpeedOfLight;
        } else if (velocity == "fiber") {
            lp.signal_velocity = kSpeedOfLight / repeater::kFiberIndex;
        } else {
            throw ValidationError("--velocity must be vacuum or fiber");
        }
        lp.validate();
        return lp;
    }

    photonic::OpticalInterface optics(const PhysicalConstants& c) const {
        photonic::OpticalInterface o;
        o.purcell = purcell;
        o.debye_waller = c.debye_waller;
        o.t_wg = t_wg;
        o.t_ph = t_ph;
        o.midpoint = midpoint;
        if (loss == "db") {
            o.loss_mode = photonic::LossMode::Decibel;
        } else if (loss == "natural") {
            o.loss_mode = photonic::LossMode::Natural;
        } else {
            throw ValidationError("--loss must be db or natural");
        }
        o.validate();
        return o;
    }

    void record(Manifest& m) const {
        m.param("L_km", L);
        m.param("t_ph", t_ph);
        m.param("n_freq", static_cast<double>(n_freq));
        m.param("gamma_fiber", gamma_fiber);
        m.param("p_d", p_d);
        m.param("p_c", p_c);
        m.param("alpha", alpha);
        m.param("mzi_eff", mzi_eff);
        m.param("swap_time", swap_time);
        m.param("purcell", purcell);
        m.param("t_wg", t_wg);
        m.param("loss", loss);
        m.param("velocity", velocity);
        m.param("midpoint", midpoint ? "true" : "false");
        m.param("capacity_clamp", no_capacity ? "false" : "true");
    }
};

void add_link_flags(CLI::App* sub, LinkOptions& o) {
    sub->add_option("--L", o.L, "Link length, km");
    sub->add_option("--tph", o.t_ph, "Photon lifetime, s");
    sub->add_option("--nfreq", o.n_freq, "Frequency channels");
    sub->add_option("--purcell", o.purcell, "Purcell factor at the operating channel");
    sub->add_option("--twg", o.t_wg, "Waveguide loss per period");
    sub->add_option("--loss", o.loss, "Loss conversion: db|natural");
    sub->add_option("--velocity", o.velocity, "Signal velocity: vacuum|fiber");
    sub->add_flag("--midpoint", o.midpoint, "Emitters at the device midpoint (half the periods)");
    sub->add_flag("--no-capacity", o.no_capacity, "Disable the channel-capacity clamp");
    sub->add_option("--gamma-fiber", o.gamma_fiber, "Fiber attenuation, 1/km");
    sub->add_option("--pd", o.p_d, "Detector efficiency");
    sub->add_option("--pc", o.p_c, "Conversion efficiency");
    sub->add_option("--alpha", o.alpha, "Bright-state weight");
    sub->add_option("--mzi-eff", o.mzi_eff, "Transmission per MZI stage");
    sub->add_option("--swap-time", o.swap_time, "Nuclear swap time, s");
}

// ---------------------------------------------------------------------------

struct GateOptions {
    double rabi = 1.7e6;
    double field = 0.0;
    double t2 = 0.0;
    double samples = 1e5;
    std::string model = "exp";
};

void cmd_gate(Context& ctx, const GateOptions& o) {
    const auto& c = ctx.device.constants;
    const double rabi = o.field > 0.0 ? c.d_perp * o.field : o.rabi;
    const double t2 = o.t2 > 0.0 ? o.t2 : c.T2_star;
    spin::DephasingModel model;
    if (o.model == "exp") model = spin::DephasingModel::Exponential;
    else if (o.model == "gauss") model = spin::DephasingModel::Gaussian;
    else throw ValidationError("--model must be exp or gauss");
    const long samples = count_option(o.samples, "--samples", 1000);

    Manifest m = ctx.manifest("gate-fidelity", "gate_fidelity.csv");
    m.seed = ctx.seed;
    m.param("rabi_Hz", rabi);
    m.param("T2_star_s", t2);
    m.param("samples", static_cast<double>(samples));
    m.param("model", o.model);
    CsvTable t({"rabi_Hz", "T2_star_s", "t_pi_s", "equator_fidelity", "average_fidelity", "samples"});
    t.row_numbers({rabi, t2, 1.0 / (2.0 * rabi), spin::dephasing_pi_fidelity(rabi, t2),
                   spin::average_gate_fidelity(rabi, t2, static_cast<std::size_t>(samples), ctx.seed, model),
                   static_cast<double>(samples)});
    ctx.emit({{m.output, with_manifest(m, t.str())}});
}

struct ProfileOptions {
    std::string kind = "all";
    double r_min = 50e-9;
    double r_max = 1e-3;
    int points = 81;
};

void cmd_field_profile(Context& ctx, const ProfileOptions& o) {
    std::vector<field::ProfileKind> kinds;
    if (o.kind == "all") {
        kinds = {field::ProfileKind::SingleLine, field::ProfileKind::TwoLines, field::ProfileKind::Loop,
                 field::ProfileKind::LoopWithFeeds, field::ProfileKind::ElectrodePair, field::ProfileKind::EfpsaArray};
    } else {
        kinds = {field::parse_profile_kind(o.kind)};
    }
    if (!(o.r_min >= field::kProfileMinDistance) || !(o.r_max > o.r_min)) {
        throw ValidationError("need 50 nm <= rmin < rmax");
    }
    const auto grid = log_grid(o.r_min, o.r_max, o.points);
    std::vector<Output> outputs;
    for (auto k : kinds) {
        Manifest m = ctx.manifest("field-profile", "field_profile_" + field::to_string(k) + ".csv");
        m.param("kind", field::to_string(k));
        m.param("r_min_m", o.r_min);
        m.param("r_max_m", o.r_max);
        m.param("points", static_cast<double>(o.points));
        m.notes.push_back("normalised to 1 at r = 500 nm; far-field slope over the last decade " +
                          format_number(field::far_field_slope(k, o.r_max)));
        CsvTable t({"r_m", "normalized_field"});
        for (double r : grid) t.row_numbers({r, field::appendix_c_profile(k, r)});
        outputs.push_back({m.output, with_manifest(m, t.str())});
    }
    ctx.emit(outputs);
}

field::Components parse_components(const std::string& s) {
    if (s == "perp2") return field::Components::Perp2;
    if (s == "full3") return field::Components::Full3;
    throw ValidationError("--components must be perp2 or full3");
}

void cmd_gmatrix(Context& ctx, const BasisOptions& b, const std::string& components) {
    Manifest m = ctx.manifest("gmatrix", "gmatrix.csv");
    const auto comp = parse_components(components);
    m.param("components", components);
    const auto basis = make_basis(ctx, b, m);
    const auto g = field::assemble_g(basis, ctx.device.geometry.nv_positions(), comp, ctx.device.frame);
    m.notes.push_back("condition number " + format_number(g.condition_number));
    ctx.emit({{m.output, with_manifest(m, control::write_gmatrix_csv(g))}});
}

void cmd_synthesize(Context& ctx, const BasisOptions& b, const std::string& target_path) {
    if (target_path.empty()) throw ValidationError("synthesize needs --target FILE");
    Manifest mv = ctx.manifest("synthesize", "synthesize_voltages.csv");
    const std::string target_text = read_file(target_path);
    mv.input(target_path, target_text);
    const auto& c = ctx.device.constants;
    const int n_sites = ctx.device.geometry.n_sites;

    std::optional<field::FieldBasisSet> basis;
    field::GMatrix g;
    const auto req = control::parse_target_json(target_text, n_sites);
    const auto comp = req.mode == control::TargetRequest::Mode::Stark ? field::Components::Full3
                                                                     : field::Components::Perp2;
    if (!ctx.gmatrix_path.empty()) {
        const std::string text = read_file(ctx.gmatrix_path);
        mv.input(ctx.gmatrix_path, text);
        g = control::parse_gmatrix_csv(text);
        if (g.n_sites != n_sites) {
            throw ValidationError("G-matrix has " + std::to_string(g.n_sites) + " sites, device has " +
                                  std::to_string(n_sites));
        }
        if (comp == field::Components::Full3 && g.components != comp) {
            throw ValidationError("stark targets need a full3 G-matrix");
        }
        if (!ctx.field_map_paths.empty()) basis = make_basis(ctx, b, mv);
        else mv.notes.push_back("breakdown check skipped: no field basis for a G-matrix file");
    } else {
        basis = make_basis(ctx, b, mv);
        g = field::assemble_g(*basis, ctx.device.geometry.nv_positions(), comp, ctx.device.frame);
    }
    control::SolveOptions opts;
    opts.strict = ctx.strict;
    const field::FieldBasisSet* bp = basis ? &*basis : nullptr;

    Eigen::VectorXd v;
    std::vector<std::string> advisories;
    CsvTable sites({"site", "E_par_V_per_m", "E_mu1_V_per_m", "E_mu2_V_per_m", "E_perp_V_per_m", "rabi_Hz",
                    "stark_shift_Hz"});
    if (req.mode == control::TargetRequest::Mode::Drive) {
        mv.param("mode", "drive");
        const auto s = control::synthesize_drive(g, req.drive, c, bp, opts);
        v = s.voltages;
        advisories = s.advisories;
        mv.notes.push_back("relative residual " + format_number(s.residual));
        mv.notes.push_back("condition number " + format_number(s.condition_number));
        mv.notes.push_back(std::string("solver ") + (s.least_squares ? "least-squares" : "lu"));
        if (bp) mv.notes.push_back("electrode surface field bound " + format_number(s.peak_surface_field) + " V/m");
        if (req.drive.fields.size() == 1) {
            const auto f = control::crosstalk_fidelities(g, v, req.drive.fields.front().site, c);
            double worst = 1.0;
            for (double x : f) worst = std::min(worst, x);
            mv.notes.push_back("worst non-target cross-talk fidelity " + format_number(worst));
        }
    } else {
        mv.param("mode", "stark");
        const auto s = req.shifts.empty() ? control::allocate_channels(g, req.plan, c, bp, opts)
                                          : control::allocate_shifts(g, req.shifts, c, bp, opts);
        v = s.voltages;
        advisories = s.advisories;
        mv.notes.push_back("zeroed-component ratio " + format_number(s.zeroed_ratio));
        mv.notes.push_back(std::string("solver ") + (s.least_squares ? "least-squares" : "antisymmetric-lu"));
        if (bp) mv.notes.push_back("electrode surface field bound " + format_number(s.peak_surface_field) + " V/m");
    }
    for (const auto& a : advisories) {
        mv.notes.push_back("advisory: " + a);
        *ctx.err_stream << "warning: " << a << '\n';
    }

    const Eigen::VectorXd e = g.values * v;
    for (int i = 0; i < g.n_sites; ++i) {
        NvField f;
        f.mu1 = e(g.row(i, field::FieldComponent::Mu1));
        f.mu2 = e(g.row(i, field::FieldComponent::Mu2));
        const int rp = g.row(i, field::FieldComponent::Par);
        if (rp >= 0) f.par = e(rp);
        sites.row_numbers({static_cast<double>(i), f.par, f.mu1, f.mu2, f.perp(), c.d_perp * f.perp(),
                           control::stark_shift(f, c)});
    }
    CsvTable volts({"electrode", "voltage_V"});
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        volts.row({g.column_labels[static_cast<std::size_t>(j)], format_number(v(j))});
    }
    Manifest ms = mv;
    ms.output = "synthesize_sites.csv";
    ctx.emit({{mv.output, with_manifest(mv, volts.str())}, {ms.output, with_manifest(ms, sites.str())}});
}

struct HeatOptions {
    double rabi = 2e6;
    std::string sweep = "1e6:2e9";
    int points = 61;
    double C = 2.8e-17;
    double R = 1e20;
    double R_w = 1e-2;
    double Z0 = 50.0;
    double Lambda = 1e-6;
    double l2 = 1e-3;
    bool single_quantum = false;
};

void cmd_heat(Context& ctx, const HeatOptions& o) {
    const auto& c = ctx.device.constants;
    thermal::CircuitParams p;
    p.C = o.C;
    p.R = o.R;
    p.R_w = o.R_w;
    p.Z0 = o.Z0;
    p.Lambda = o.Lambda;
    p.l2 = o.l2;
    p.validate();
    const auto [f_lo, f_hi] = parse_range(o.sweep, "--omega-sweep");
    const double d = o.single_quantum ? c.d_perp_prime / std::sqrt(2.0) : c.d_perp;

    Manifest m = ctx.manifest("heat-budget", "heat_budget.csv");
    m.param("rabi_Hz", o.rabi);
    m.param("frequency_sweep_Hz", o.sweep);
    m.param("points", static_cast<double>(o.points));
    m.param("C_F", p.C);
    m.param("R_ohm", p.R);
    m.param("R_w_ohm", p.R_w);
    m.param("Z0_ohm", p.Z0);
    m.param("Lambda_m", p.Lambda);
    m.param("l2_m", p.l2);
    m.param("transition", o.single_quantum ? "single-quantum" : "plus-minus");
    const auto rows = thermal::heat_sweep(p, o.rabi, 2.0 * kPi * f_lo, 2.0 * kPi * f_hi, o.points, d, c.gamma, c.mu0);
    CsvTable t({"f_Hz", "omega_rad_per_s", "J_E_J", "J_B_J", "ratio", "abs_Z_C_ohm"});
    for (const auto& r : rows) {
        t.row_numbers({r.omega / (2.0 * kPi), r.omega, r.heat_electric, r.heat_magnetic, r.ratio,
                       r.abs_device_impedance});
    }
    const auto z = thermal::efpsa_impedance(p, 2.0 * kPi * f_hi);
    for (const auto& w : z.warnings) m.notes.push_back("warning: " + w);

    // where the published values are reached, for both leakage regimes and transitions
    Manifest mt = ctx.manifest("heat-budget", "heat_targets.csv");
    mt.parameters = m.parameters;
    CsvTable targets({"quantity", "target", "R_ohm", "transition", "reached", "f_Hz"});
    const std::vector<std::pair<std::string, double>> wanted = {
        {"J_E", 1.1e-21}, {"ratio", 3.4e-6}, {"ratio", 1.7e-2}, {"ratio", 2.7e-5}, {"ratio", 1.4e-1}};
    for (double r_leak : {p.R, 1e15}) {
        for (bool sq : {false, true}) {
            thermal::CircuitParams q = p;
            q.R = r_leak;
            const double dd = sq ? c.d_perp_prime / std::sqrt(2.0) : c.d_perp;
            const auto sweep = thermal::heat_sweep(q, o.rabi, 2.0 * kPi * f_lo, 2.0 * kPi * f_hi, 2001, dd, c.gamma, c.mu0);
            for (const auto& [name, value] : wanted) {
                double w = -1.0;
                if (name == "J_E") {
                    w = thermal::omega_reaching(sweep, value);
                } else {
                    for (std::size_t i = 0; i < sweep.size(); ++i) {
                        if (sweep[i].ratio >= value) {
                            if (i == 0) {
                                w = sweep[0].omega;
                            } else {
                                const auto& a = sweep[i - 1];
                                const auto& b = sweep[i];
                                const double f = (std::log(value) - std::log(a.ratio)) /
                                                 (std::log(b.ratio) - std::log(a.ratio));
                                w = std::exp(std::log(a.omega) + f * (std::log(b.omega) - std::log(a.omega)));
                            }
                            break;
                        }
                    }
                }
                const double first = name == "J_E" ? sweep.front().heat_electric : sweep.front().ratio;
                const char* reached = w <= 0.0 ? "no" : first >= value ? "below-sweep" : "yes";
                targets.row({name, format_number(value), format_number(r_leak), sq ? "single-quantum" : "plus-minus",
                             reached, w > 0.0 && first < value ? format_number(w / (2.0 * kPi)) : ""});
            }
        }
    }
    ctx.emit({{m.output, with_manifest(m, t.str())}, {mt.output, with_manifest(mt, targets.str())}});
}

struct RatesOptions {
    std::string arch = "all";
    double n_min = 1;
    double n_max = 5000;
    double n_step = 1;
    LinkOptions link;
};

void cmd_rates(Context& ctx, const RatesOptions& o) {
    const auto lp = o.link.link();
    const auto optics = o.link.optics(ctx.device.constants);
    const long lo = count_option(o.n_min, "--Nmin", 1);
    const long hi = count_option(o.n_max, "--Nmax", lo);
    const long step = count_option(o.n_step, "--Nstep", 1);
    std::vector<repeater::Architecture> archs;
    if (o.arch == "all") {
        archs = {repeater::Architecture::Efpsa, repeater::Architecture::Mzi, repeater::Architecture::Hybrid};
    } else {
        archs = {repeater::parse_architecture(o.arch)};
    }
    std::vector<Output> outputs;
    for (auto a : archs) {
        Manifest m = ctx.manifest("rates", "rates_" + repeater::to_string(a) + ".csv");
        m.param("arch", repeater::to_string(a));
        m.param("N_min", static_cast<double>(lo));
        m.param("N_max", static_cast<double>(hi));
        m.param("N_step", static_cast<double>(step));
        o.link.record(m);
        m.notes.push_back("channel capacity " + std::to_string(repeater::channel_capacity(lp)));
        const bool hybrid = a == repeater::Architecture::Hybrid;
        CsvTable t = hybrid ? CsvTable({"N", "rate_ebits_per_s", "limit", "n_dev"})
                            : CsvTable({"N", "rate_ebits_per_s", "limit"});
        for (long n = lo; n <= hi; n += step) {
            const auto p = repeater::rate_point(a, n, lp, optics, !o.link.no_capacity);
            std::vector<std::string> row{std::to_string(n), format_number(p.rate), repeater::to_string(p.limit)};
            if (hybrid) row.push_back(std::to_string(p.n_dev));
            t.row(std::move(row));
        }
        outputs.push_back({m.output, with_manifest(m, t.str())});
    }
    ctx.emit(outputs);
}

struct SchemeOptions {
    std::string sweep = "1e-4:1";
    int points = 81;
    double fidelity = 0.99;
};

CsvTable scheme_table(const SchemeOptions& o) {
    const auto [lo, hi] = parse_range(o.sweep, "--pdet-sweep");
    if (hi > 1.0) throw ValidationError("--pdet-sweep upper bound must be <= 1");
    CsvTable t({"p_det", "barrett_kok", "single_photon", "superradiance", "bk_superradiance", "best"});
    for (double p : log_grid(lo, hi, o.points)) {
        const auto r = repeater::scheme_rates(o.fidelity, p);
        t.row({format_number(p), format_number(r.barrett_kok), format_number(r.single_photon),
               format_number(r.superradiance), format_number(r.bk_superradiance), r.best()});
    }
    return t;
}

void cmd_schemes(Context& ctx, const SchemeOptions& o) {
    Manifest m = ctx.manifest("schemes", "schemes.csv");
    m.param("pdet_sweep", o.sweep);
    m.param("points", static_cast<double>(o.points));
    m.param("fidelity", o.fidelity);
    const CsvTable t = scheme_table(o);
    m.notes.push_back("bk+superradiance best above p_det = " +
                      format_number(repeater::bk_superradiance_crossover(o.fidelity)));
    ctx.emit({{m.output, with_manifest(m, t.str())}});
}

struct McCliOptions {
    double trials = 1e5;
    std::string qubits = "10,100,800";
    int local_channels = 1;
    int replications = 10;
    int batches = 10;
    LinkOptions link;
};

std::vector<long> parse_list(const std::string& s, const char* flag) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size() || v < 1) throw std::invalid_argument("bad");
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw ValidationError(std::string(flag) + " expects a comma-separated list of positive integers");
        }
    }
    if (out.empty()) throw ValidationError(std::string(flag) + " is empty");
    return out;
}

void cmd_mc(Context& ctx, const McCliOptions& o) {
    const auto lp = o.link.link();
    const auto optics = o.link.optics(ctx.device.constants);
    repeater::McOptions mo;
    mo.trials = static_cast<std::size_t>(count_option(o.trials, "--trials", 1000));
    mo.seed = ctx.seed;
    mo.local_channels = o.local_channels;
    mo.replications = o.replications;
    mo.batches_per_replication = o.batches;
    Manifest m = ctx.manifest("mc", "mc.csv");
    m.seed = ctx.seed;
    m.param("trials", static_cast<double>(mo.trials));
    m.param("N", o.qubits);
    m.param("local_channels", static_cast<double>(o.local_channels));
    m.param("replications", static_cast<double>(o.replications));
    m.param("batches_per_replication", static_cast<double>(o.batches));
    o.link.record(m);
    CsvTable t({"N", "channels", "p1", "p2", "mc_rate", "stderr", "closed_form", "z"});
    for (long n : parse_list(o.qubits, "--N")) {
        const auto r = repeater::monte_carlo_protocol(n, lp, optics, mo);
        const double cf = repeater::rate_efpsa(n, lp, optics, true);
        const double z = r.stderr_rate > 0.0 ? (r.rate - cf) / r.stderr_rate : 0.0;
        t.row_numbers({static_cast<double>(n), static_cast<double>(r.channels), r.p1, r.p2, r.rate, r.stderr_rate, cf, z});
    }
    ctx.emit({{m.output, with_manifest(m, t.str())}});
}

void cmd_fig2(Context& ctx, const BasisOptions& b, bool imported, int samples_per_site) {
    if (imported && ctx.field_map_paths.empty()) throw ValidationError("--imported needs --field-map FILE");
    if (samples_per_site < 1) throw ValidationError("--samples-per-site must be >= 1");
    const auto& geo = ctx.device.geometry;
    const auto& c = ctx.device.constants;
    Manifest base = ctx.manifest("fig2", "");
    const auto basis = make_basis(ctx, b, base);
    const auto sites = geo.nv_positions();
    const auto g = field::assemble_g(basis, sites, field::Components::Perp2, ctx.device.frame);
    const int k0 = geo.n_sites / 2;
    base.param("target_site", static_cast<double>(k0));
    base.param("samples_per_site", static_cast<double>(samples_per_site));

    Eigen::VectorXd single = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    single(2 * k0) = 0.5;
    single(2 * k0 + 1) = -0.5;
    const Eigen::VectorXd e_single = g.values * single;
    control::DriveTarget target;
    target.fields.push_back({k0, e_single(2 * k0), e_single(2 * k0 + 1)});
    control::SolveOptions opts;
    opts.strict = ctx.strict;
    const auto ce = control::eliminate_crosstalk(g, target, c, &basis, opts);
    for (const auto& a : ce.advisories) *ctx.err_stream << "warning: " << a << '\n';

    auto profile = [&](const Eigen::VectorXd& v, const std::string& name, const std::string& label) {
        Manifest m = base;
        m.output = name;
        m.param("voltages", label);
        std::vector<Vec3> points;
        const double z0 = sites.front().z() - 0.5 * geo.a;
        const double z1 = sites.back().z() + 0.5 * geo.a;
        const int n = samples_per_site * geo.n_sites;
        for (int i = 0; i <= n; ++i) points.emplace_back(0.0, 0.0, z0 + (z1 - z0) * i / n);
        if (basis.domain()) {
            for (auto& p : points) p = p.cwiseMax(basis.domain()->min()).cwiseMin(basis.domain()->max());
        }
        const auto fields = field::superpose(basis, v, points);
        CsvTable t({"z_m", "E_perp_V_per_m", "rabi_Hz"});
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double ep = ctx.device.frame.lab_to_nv(fields[i]).perp();
            t.row_numbers({points[i].z(), ep, c.d_perp * ep});
        }
        return Output{name, with_manifest(m, t.str())};
    };

    const auto f_single = control::crosstalk_fidelities(g, single, k0, c);
    const auto f_ce = control::crosstalk_fidelities(g, ce.voltages, k0, c);
    const Eigen::VectorXd e_ce = g.values * ce.voltages;
    Manifest ms = base;
    ms.output = "fig2_sites.csv";
    ms.notes.push_back("CE relative residual " + format_number(ce.residual));
    ms.notes.push_back("condition number " + format_number(g.condition_number));
    CsvTable t({"site", "E_perp_single_V_per_m", "E_perp_ce_V_per_m", "fidelity_single", "fidelity_ce"});
    for (int i = 0; i < geo.n_sites; ++i) {
        t.row_numbers({static_cast<double>(i), std::hypot(e_single(2 * i), e_single(2 * i + 1)),
                       std::hypot(e_ce(2 * i), e_ce(2 * i + 1)), f_single[static_cast<std::size_t>(i)],
                       f_ce[static_cast<std::size_t>(i)]});
    }
    ctx.emit({profile(single, "fig2_single.csv", "single pair +-0.5 V"),
              profile(ce.voltages, "fig2_ce.csv", "cross-talk eliminated"),
              {ms.output, with_manifest(ms, t.str())}});
}

struct Fig4Options {
    double n_max = 5000;
    double n_step = 10;
    LinkOptions link;
};

void cmd_fig4(Context& ctx, const Fig4Options& o) {
    const auto lp = o.link.link();
    const auto optics = o.link.optics(ctx.device.constants);
    const long hi = count_option(o.n_max, "--Nmax", 2);
    const long step = count_option(o.n_step, "--Nstep", 1);
    const bool clamp = !o.link.no_capacity;

    Manifest m = ctx.manifest("fig4", "fig4_rates.csv");
    m.param("N_max", static_cast<double>(hi));
    m.param("N_step", static_cast<double>(step));
    o.link.record(m);
    CsvTable t({"N", "efpsa", "mzi", "hybrid", "hybrid_n_dev", "limit"});
    std::vector<long> ns{1};
    for (long n = step; n <= hi; n += step) {
        if (n > 1) ns.push_back(n);
    }
    for (long n : ns) {
        const auto h = repeater::optimize_hybrid(n, lp, optics, clamp);
        const bool capped = clamp && n > repeater::channel_capacity(lp);
        t.row({std::to_string(n), format_number(repeater::rate_efpsa(n, lp, optics, clamp)),
               format_number(repeater::rate_mzi(n, lp, optics, clamp)), format_number(h.rate),
               std::to_string(h.n_dev), capped ? "capacity" : "loss"});
    }

    Manifest ml = ctx.manifest("fig4", "fig4_lsweep.csv");
    o.link.record(ml);
    CsvTable lt({"L_km", "N", "hybrid", "hybrid_n_dev", "efpsa", "mzi"});
    for (double L : {0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
        auto lq = lp;
        lq.L_km = L;
        for (long n : {10L, 20L, 50L, 100L, 200L, 500L, 1000L, 2000L, 5000L}) {
            const auto h = repeater::optimize_hybrid(n, lq, optics, clamp);
            lt.row({format_number(L), std::to_string(n), format_number(h.rate), std::to_string(h.n_dev),
                    format_number(repeater::rate_efpsa(n, lq, optics, clamp)),
                    format_number(repeater::rate_mzi(n, lq, optics, clamp))});
        }
    }

    Manifest msum = ctx.manifest("fig4", "fig4_summary.csv");
    o.link.record(msum);
    const long cap = repeater::channel_capacity(lp);
    const long peak = repeater::efpsa_peak(lp, optics);
    std::vector<double> r, v;
    for (long n = 64; n <= 4096; n *= 2) {
        r.push_back(static_cast<double>(n));
        v.push_back(repeater::rate_mzi(n, lp, optics, false));
    }
    const double exponent = field::log_log_slope(r, v);
    const double at_cap_efpsa = repeater::optimize_hybrid(cap, lp, optics, clamp).rate;
    const double at_cap_mzi = repeater::rate_mzi(cap, lp, optics, clamp);
    CsvTable st({"quantity", "value"});
    st.row({"channel_capacity", std::to_string(cap)});
    st.row({"efpsa_peak_N", std::to_string(peak)});
    st.row({"efpsa_peak_rate", format_number(repeater::rate_efpsa(peak, lp, optics, clamp))});
    st.row({"mzi_exponent_64_4096", format_number(exponent)});
    st.row({"hybrid_over_mzi_at_capacity", format_number(at_cap_efpsa / at_cap_mzi)});
    ctx.emit({{m.output, with_manifest(m, t.str())},
              {ml.output, with_manifest(ml, lt.str())},
              {msum.output, with_manifest(msum, st.str())}});
}

void cmd_appendix(Context& ctx, double gamma_sp, double fidelity, double r_max) {
    const std::vector<field::ProfileKind> kinds = {
        field::ProfileKind::SingleLine, field::ProfileKind::TwoLines, field::ProfileKind::Loop,
        field::ProfileKind::LoopWithFeeds, field::ProfileKind::ElectrodePair, field::ProfileKind::EfpsaArray};
    const std::map<field::ProfileKind, double> expected = {
        {field::ProfileKind::SingleLine, -1.0}, {field::ProfileKind::TwoLines, -2.0},
        {field::ProfileKind::Loop, -3.0},       {field::ProfileKind::LoopWithFeeds, -2.0},
        {field::ProfileKind::ElectrodePair, -3.0}, {field::ProfileKind::EfpsaArray, -3.0}};

    Manifest mp = ctx.manifest("appendix", "appendix_profiles.csv");
    mp.param("r_max_m", r_max);
    std::vector<std::string> cols{"r_m"};
    for (auto k : kinds) cols.push_back(field::to_string(k));
    CsvTable prof(cols);
    for (double r : log_grid(field::kProfileMinDistance, r_max, 81)) {
        std::vector<double> row{r};
        for (auto k : kinds) row.push_back(field::appendix_c_profile(k, r));
        prof.row_numbers(row);
    }

    Manifest msl = ctx.manifest("appendix", "appendix_slopes.csv");
    msl.param("r_max_m", r_max);
    CsvTable sl({"kind", "slope", "expected"});
    for (auto k : kinds) {
        sl.row({field::to_string(k), format_number(field::far_field_slope(k, r_max)), format_number(expected.at(k))});
    }

    Manifest msr = ctx.manifest("appendix", "appendix_superradiance.csv");
    msr.param("gamma_sp_per_s", gamma_sp);
    msr.param("fidelity", fidelity);
    msr.notes.push_back("fidelity reached at t0 = " + format_number(repeater::herald_time(fidelity, gamma_sp)) + " s");
    msr.notes.push_back("tradeoff at target fidelity " + format_number(repeater::tradeoff(fidelity)));
    CsvTable sr({"t_s", "fidelity", "herald_density_per_s", "detection_after_t"});
    for (int i = 0; i <= 200; ++i) {
        const double t = 1e-9 * i;
        sr.row_numbers({t, repeater::superradiance_fidelity(t, gamma_sp), repeater::herald_density(t, gamma_sp),
                        std::exp(-gamma_sp * t)});
    }

    Manifest msc = ctx.manifest("appendix", "appendix_schemes.csv");
    SchemeOptions so;
    so.fidelity = fidelity;
    msc.param("pdet_sweep", so.sweep);
    msc.param("fidelity", fidelity);
    msc.notes.push_back("bk+superradiance best above p_det = " +
                        format_number(repeater::bk_superradiance_crossover(fidelity)));
    ctx.emit({{mp.output, with_manifest(mp, prof.str())},
              {msl.output, with_manifest(msl, sl.str())},
              {msr.output, with_manifest(msr, sr.str())},
              {msc.output, with_manifest(msc, scheme_table(so).str())}});
}

std::string one_line(std::string s) {
    for (auto& ch : s) {
        if (ch == '\n' || ch == '\r') ch = ' ';
    }
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Electric-field programmable spin array toolkit", "efpsa"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    Context ctx;
    ctx.out_stream = &out;
    ctx.err_stream = &err;
    app.add_option("--config", ctx.config_path, "Device configuration file");
    app.add_option("--gmatrix", ctx.gmatrix_path, "G-matrix CSV");
    app.add_option("--field-map", ctx.field_map_paths, "Field-map file (repeat once per electrode)");
    app.add_option("--out", ctx.out, "Output directory, or '-' / 'csv' for stdout");
    app.add_option("--seed", ctx.seed, "Random seed");
    app.add_flag("--strict", ctx.strict, "Treat breakdown advisories as errors");

    GateOptions gate;
    auto* s_gate = app.add_subcommand("gate-fidelity", "pi-pulse fidelity under dephasing");
    s_gate->add_option("--rabi", gate.rabi, "Rabi frequency, Hz");
    s_gate->add_option("--field", gate.field, "Transverse field, V/m (overrides --rabi)");
    s_gate->add_option("--t2", gate.t2, "T2*, s (default from config)");
    s_gate->add_option("--samples", gate.samples, "Monte Carlo samples");
    s_gate->add_option("--model", gate.model, "Dephasing model: exp|gauss");

    ProfileOptions prof;
    auto* s_prof = app.add_subcommand("field-profile", "Normalised far-field profiles");
    s_prof->add_option("--kind", prof.kind,
                       "single-line|two-lines|loop|loop-with-feeds|electrode-pair|efpsa-array|all");
    s_prof->add_option("--rmin", prof.r_min, "Smallest distance, m");
    s_prof->add_option("--rmax", prof.r_max, "Largest distance, m");
    s_prof->add_option("--points", prof.points, "Log-spaced samples");

    BasisOptions basis;
    std::string components = "perp2";
    auto* s_g = app.add_subcommand("gmatrix", "Export the response matrix");
    add_basis_flags(s_g, basis);
    s_g->add_option("--components", components, "perp2|full3");

    std::string target_path;
    auto* s_syn = app.add_subcommand("synthesize", "Solve electrode voltages for a target");
    add_basis_flags(s_syn, basis);
    s_syn->add_option("--target", target_path, "Target JSON");

    HeatOptions heat;
    auto* s_heat = app.add_subcommand("heat-budget", "Heat per pi pulse, electric vs magnetic");
    s_heat->add_option("--rabi", heat.rabi, "Rabi frequency, Hz");
    s_heat->add_option("--omega-sweep", heat.sweep, "Drive frequency range LO:HI in Hz (omega = 2 pi f)");
    s_heat->add_option("--points", heat.points, "Sweep points");
    s_heat->add_option("--C", heat.C, "Device capacitance, F");
    s_heat->add_option("--R", heat.R, "Leakage resistance, ohm");
    s_heat->add_option("--Rw", heat.R_w, "Wire resistance, ohm");
    s_heat->add_option("--Z0", heat.Z0, "Line impedance, ohm");
    s_heat->add_option("--Lambda", heat.Lambda, "Voltage-to-field length, m");
    s_heat->add_option("--l2", heat.l2, "Cold line length, m");
    s_heat->add_flag("--single-quantum", heat.single_quantum, "Use d_perp' / sqrt 2");

    RatesOptions rates;
    auto* s_rates = app.add_subcommand("rates", "Entanglement rate curves");
    s_rates->add_option("--arch", rates.arch, "efpsa|mzi|hybrid|all");
    s_rates->add_option("--Nmin", rates.n_min, "Smallest qubit count");
    s_rates->add_option("--Nmax", rates.n_max, "Largest qubit count");
    s_rates->add_option("--Nstep", rates.n_step, "Qubit count step");
    add_link_flags(s_rates, rates.link);

    SchemeOptions schemes;
    auto* s_sch = app.add_subcommand("schemes", "Heralding scheme comparison");
    s_sch->add_option("--pdet-sweep", schemes.sweep, "Detection probability range LO:HI");
    s_sch->add_option("--points", schemes.points, "Log-spaced points");
    s_sch->add_option("--fidelity", schemes.fidelity, "Target fidelity");

    McCliOptions mc;
    auto* s_mc = app.add_subcommand("mc", "Monte Carlo protocol simulation");
    s_mc->add_option("--trials", mc.trials, "Rounds per qubit count");
    s_mc->add_option("--N", mc.qubits, "Comma-separated qubit counts");
    s_mc->add_option("--local-channels", mc.local_channels, "Parallel local Barrett-Kok servers");
    s_mc->add_option("--replications", mc.replications, "Independent replications");
    s_mc->add_option("--batches", mc.batches, "Batches per replication");
    add_link_flags(s_mc, mc.link);

    bool imported = false;
    int samples_per_site = 20;
    auto* s_fig2 = app.add_subcommand("fig2", "Field profiles with and without cross-talk elimination");
    add_basis_flags(s_fig2, basis);
    s_fig2->add_flag("--imported", imported, "Require an imported field map");
    s_fig2->add_option("--samples-per-site", samples_per_site, "Profile samples per lattice period");

    Fig4Options fig4;
    auto* s_fig4 = app.add_subcommand("fig4", "Rate curves, hybrid envelope and length sweep");
    s_fig4->add_option("--Nmax", fig4.n_max, "Largest qubit count");
    s_fig4->add_option("--Nstep", fig4.n_step, "Qubit count step");
    add_link_flags(s_fig4, fig4.link);

    double gamma_sp = 1e8;
    double app_fidelity = 0.99;
    double app_rmax = 1e-3;
    auto* s_app = app.add_subcommand("appendix", "Field localisation and heralding appendix data");
    s_app->add_option("--gamma-sp", gamma_sp, "Superradiant decay rate, 1/s");
    s_app->add_option("--fidelity", app_fidelity, "Target fidelity");
    s_app->add_option("--rmax", app_rmax, "Largest profile distance, m");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::CallForVersion&) {
            out << kVersion << '\n';
            return 0;
        } catch (const CLI::ParseError& e) {
            throw ValidationError(e.what());
        }
        ctx.load();

        if (s_gate->parsed()) cmd_gate(ctx, gate);
        else if (s_prof->parsed()) cmd_field_profile(ctx, prof);
        else if (s_g->parsed()) cmd_gmatrix(ctx, basis, components);
        else if (s_syn->parsed()) cmd_synthesize(ctx, basis, target_path);
        else if (s_heat->parsed()) cmd_heat(ctx, heat);
        else if (s_rates->parsed()) cmd_rates(ctx, rates);
        else if (s_sch->parsed()) cmd_schemes(ctx, schemes);
        else if (s_mc->parsed()) cmd_mc(ctx, mc);
        else if (s_fig2->parsed()) cmd_fig2(ctx, basis, imported, samples_per_site);
        else if (s_fig4->parsed()) cmd_fig4(ctx, fig4);
        else if (s_app->parsed()) cmd_appendix(ctx, gamma_sp, app_fidelity, app_rmax);
        return 0;
    } catch (const ValidationError& e) {
        err << "error: kind=validation msg=" << one_line(e.what()) << '\n';
        return 2;
    } catch (const NumericalError& e) {
        err << "error: kind=numerical msg=" << one_line(e.what()) << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: kind=numerical msg=" << one_line(e.what()) << '\n';
        return 3;
    }
}

}  // namespace efpsa::cli
