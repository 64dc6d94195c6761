#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "efpsa/errors.hpp"
#include "efpsa/field_model.hpp"

namespace efpsa::field {

namespace {

constexpr std::string_view kMagic = "# efpsa-field-map v1";
constexpr std::string_view kUnits = "V/m per V";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
    throw ValidationError("field map line " + std::to_string(line) + ": " + msg);
}

double parse_double(std::string_view tok, std::size_t line) {
    tok = trim(tok);
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) fail(line, "invalid number '" + std::string(tok) + "'");
    if (!std::isfinite(v)) fail(line, "non-finite value '" + std::string(tok) + "'");
    return v;
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

std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t j = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > j) out.push_back(s.substr(j, i - j));
    }
    return out;
}

// Cell index and fraction along one axis; throws outside [front, back].
std::pair<std::size_t, double> locate(const std::vector<double>& axis, double v, char name) {
    if (axis.size() == 1) {
        if (v != axis.front()) {
            throw ValidationError(std::string("field map query outside grid hull along ") + name);
        }
        return {0, 0.0};
    }
    if (!(v >= axis.front() && v <= axis.back())) {
        throw ValidationError(std::string("field map query outside grid hull along ") + name);
    }
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t i = static_cast<std::size_t>(std::distance(axis.begin(), it));
    i = std::clamp<std::size_t>(i, 1, axis.size() - 1) - 1;
    return {i, (v - axis[i]) / (axis[i + 1] - axis[i])};
}

std::string format(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw NumericalError("field map: number formatting failed");
    return std::string(buf, end);
}

}  // namespace

Vec3 FieldMap::interpolate(const Vec3& p) const {
    const auto [i, fx] = locate(x, p.x(), 'x');
    const auto [j, fy] = locate(y, p.y(), 'y');
    const auto [k, fz] = locate(z, p.z(), 'z');
    const std::size_t i1 = std::min(i + 1, x.size() - 1);
    const std::size_t j1 = std::min(j + 1, y.size() - 1);
    const std::size_t k1 = std::min(k + 1, z.size() - 1);
    const Vec3 c00 = (1 - fx) * at(i, j, k) + fx * at(i1, j, k);
    const Vec3 c10 = (1 - fx) * at(i, j1, k) + fx * at(i1, j1, k);
    const Vec3 c01 = (1 - fx) * at(i, j, k1) + fx * at(i1, j, k1);
    const Vec3 c11 = (1 - fx) * at(i, j1, k1) + fx * at(i1, j1, k1);
    const Vec3 c0 = (1 - fy) * c00 + fy * c10;
    const Vec3 c1 = (1 - fy) * c01 + fy * c11;
    return (1 - fz) * c0 + fz * c1;
}

FieldMap parse_field_map(std::string_view text) {
    std::vector<std::string_view> lines = split(text, '\n');
    if (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

    FieldMap m;
    std::size_t n = 0;
    auto next = [&](const char* block) -> std::string_view {
        if (n >= lines.size()) {
            throw ValidationError(std::string("field map truncated: missing '") + block + "' block");
        }
        return trim(lines[n++]);
    };

    if (next("header") != kMagic) fail(n, "expected header '" + std::string(kMagic) + "'");

    auto keyword = [&](const char* key) {
        const std::string_view line = next(key);
        const auto w = words(line);
        if (w.empty() || w.front() != key) fail(n, std::string("expected '") + key + "' line");
        return std::pair{line, w};
    };

    {
        auto [line, w] = keyword("electrode");
        if (w.size() != 2) fail(n, "electrode line needs exactly one identifier");
        m.electrode = std::string(w[1]);
    }
    {
        auto [line, w] = keyword("units");
        if (trim(line.substr(5)) != kUnits) fail(n, "units must be '" + std::string(kUnits) + "'");
    }
    std::size_t dims[3] = {0, 0, 0};
    {
        auto [line, w] = keyword("grid");
        if (w.size() != 4) fail(n, "grid line needs nx ny nz");
        for (int a = 0; a < 3; ++a) {
            const double d = parse_double(w[a + 1], n);
            if (d < 1 || d != std::floor(d)) fail(n, "grid dimensions must be positive integers");
            dims[a] = static_cast<std::size_t>(d);
        }
    }
    std::vector<double>* axes[3] = {&m.x, &m.y, &m.z};
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        auto [line, w] = keyword(names[a]);
        if (w.size() - 1 != dims[a]) {
            fail(n, std::string("axis ") + names[a] + " has " + std::to_string(w.size() - 1) + " values, grid says " +
                        std::to_string(dims[a]));
        }
        for (std::size_t i = 1; i < w.size(); ++i) axes[a]->push_back(parse_double(w[i], n));
        for (std::size_t i = 1; i < axes[a]->size(); ++i) {
            if (!((*axes[a])[i] > (*axes[a])[i - 1])) fail(n, std::string("axis ") + names[a] + " is not strictly increasing");
        }
    }
    if (next("data") != "data") fail(n, "expected 'data' line");

    const std::size_t count = dims[0] * dims[1] * dims[2];
    m.values.reserve(count);
    for (std::size_t r = 0; r < count; ++r) {
        if (n >= lines.size()) {
            throw ValidationError("field map truncated: data block has " + std::to_string(r) + " of " +
                                  std::to_string(count) + " rows");
        }
        const std::string_view line = trim(lines[n++]);
        if (line == "end") {
            throw ValidationError("field map truncated: data block has " + std::to_string(r) + " of " +
                                  std::to_string(count) + " rows");
        }
        const auto cols = split(line, ',');
        if (cols.size() != 3) fail(n, "data row needs Ex,Ey,Ez");
        m.values.emplace_back(parse_double(cols[0], n), parse_double(cols[1], n), parse_double(cols[2], n));
    }
    if (next("end") != "end") fail(n, "expected 'end' after data block");
    while (n < lines.size()) {
        if (!trim(lines[n]).empty()) fail(n + 1, "content after 'end'");
        ++n;
    }
    return m;
}

std::string write_field_map(const FieldMap& m) {
    std::ostringstream os;
    os << kMagic << '\n';
    os << "electrode " << m.electrode << '\n';
    os << "units " << kUnits << '\n';
    os << "grid " << m.x.size() << ' ' << m.y.size() << ' ' << m.z.size() << '\n';
    const std::vector<double>* axes[3] = {&m.x, &m.y, &m.z};
    const char* names[3] = {"x", "y", "z"};
    for (int a = 0; a < 3; ++a) {
        os << names[a];
        for (double v : *axes[a]) os << ' ' << format(v);
        os << '\n';
    }
    os << "data\n";
    for (const auto& v : m.values) os << format(v.x()) << ',' << format(v.y()) << ',' << format(v.z()) << '\n';
    os << "end\n";
    return os.str();
}

FieldMap sample_field_map(const FieldBasisSet& basis, std::size_t j, const std::vector<double>& x,
                          const std::vector<double>& y, const std::vector<double>& z) {
    FieldMap m;
    m.electrode = basis.label(j);
    m.x = x;
    m.y = y;
    m.z = z;
    for (double zz : z) {
        for (double yy : y) {
            for (double xx : x) m.values.push_back(basis.response(j, Vec3(xx, yy, zz)));
        }
    }
    return m;
}

FieldBasisSet import_field_maps(const std::vector<FieldMap>& maps) {
    if (maps.empty()) throw ValidationError("import_field_maps: no maps");
    const auto& ref = maps.front();
    std::vector<Electrode> electrodes;
    for (const auto& m : maps) {
        if (m.x != ref.x || m.y != ref.y || m.z != ref.z) {
            throw ValidationError("field map '" + m.electrode + "' uses a different grid");
        }
        if (m.values.size() != m.x.size() * m.y.size() * m.z.size()) {
            throw ValidationError("field map '" + m.electrode + "' has the wrong number of values");
        }
        for (const auto& e : electrodes) {
            if (e.label == m.electrode) throw ValidationError("duplicate field map electrode '" + m.electrode + "'");
        }
        auto shared = std::make_shared<const FieldMap>(m);
        electrodes.push_back({m.electrode, [shared](const Vec3& p) { return shared->interpolate(p); }, {}});
    }
    const Eigen::AlignedBox3d box(Vec3(ref.x.front(), ref.y.front(), ref.z.front()),
                                  Vec3(ref.x.back(), ref.y.back(), ref.z.back()));
    return FieldBasisSet(std::move(electrodes), Provenance::Imported, box);
}

}  // namespace efpsa::field
