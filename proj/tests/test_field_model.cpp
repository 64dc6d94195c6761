#include <doctest.h>

#include <cmath>
#include <random>

#include "efpsa/device_model.hpp"
#include "efpsa/errors.hpp"
#include "efpsa/field_model.hpp"

using namespace efpsa;
using namespace efpsa::field;

namespace {

std::vector<double> axis(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

FieldMap linear_map(const std::string& id) {
    FieldMap m;
    m.electrode = id;
    m.x = axis(-1e-6, 1e-6, 3);
    m.y = axis(-1e-6, 1e-6, 4);
    m.z = axis(0.0, 2e-6, 5);
    for (double z : m.z) {
        for (double y : m.y) {
            for (double x : m.x) m.values.emplace_back(1e6 * x + 2.0, -3e6 * y, 5e5 * z - 1.0);
        }
    }
    return m;
}

}  // namespace

TEST_CASE("Biot-Savart: long wire approaches mu0 I / (2 pi r)") {
    const std::vector<Segment> wire{{Vec3(-1.0, 0, 0), Vec3(1.0, 0, 0), 1.0}};
    const Vec3 b = biot_savart(wire, Vec3(0, 0, 1e-6));
    CHECK(b.norm() == doctest::Approx(2e-7 / 1e-6).epsilon(1e-9));
    // right-hand rule: current along +x, probe at +z, field along -y
    CHECK(b.y() < 0.0);
}

TEST_CASE("Biot-Savart: loop centre field is mu0 I / (2R)") {
    std::vector<Segment> loop;
    const int n = 2000;
    const double r = 1e-3;
    for (int i = 0; i < n; ++i) {
        const double a0 = 2 * kPi * i / n;
        const double a1 = 2 * kPi * (i + 1) / n;
        loop.push_back({Vec3(r * std::cos(a0), r * std::sin(a0), 0), Vec3(r * std::cos(a1), r * std::sin(a1), 0), 1.0});
    }
    const double mu0 = 1.25663706212e-6;
    CHECK(biot_savart(loop, Vec3::Zero()).z() == doctest::Approx(mu0 / (2 * r)).epsilon(1e-5));
}

TEST_CASE("profiles are normalised and decay with the expected powers") {
    const std::vector<std::pair<ProfileKind, double>> kinds{
        {ProfileKind::SingleLine, -1.0}, {ProfileKind::TwoLines, -2.0},      {ProfileKind::Loop, -3.0},
        {ProfileKind::LoopWithFeeds, -2.0}, {ProfileKind::ElectrodePair, -3.0}, {ProfileKind::EfpsaArray, -3.0}};
    for (const auto& [k, slope] : kinds) {
        CAPTURE(to_string(k));
        CHECK(appendix_c_profile(k, 500e-9) == doctest::Approx(1.0));
        CHECK(far_field_slope(k, 1e-3) == doctest::Approx(slope).epsilon(0.15 / 3));
        CHECK(parse_profile_kind(to_string(k)) == k);
        CHECK(appendix_c_profile(k, 1e-6) > appendix_c_profile(k, 2e-6));
    }
    CHECK(is_magnetic(ProfileKind::Loop));
    CHECK_FALSE(is_magnetic(ProfileKind::EfpsaArray));
    CHECK_THROWS_AS(parse_profile_kind("coil"), ValidationError);
    CHECK_THROWS_AS(appendix_c_profile(ProfileKind::Loop, 10e-9), ValidationError);
}

TEST_CASE("log-log slope of an exact power law") {
    std::vector<double> r, v;
    for (int i = 1; i <= 10; ++i) {
        r.push_back(i * 1e-6);
        v.push_back(std::pow(i * 1e-6, -2.5));
    }
    CHECK(log_log_slope(r, v) == doctest::Approx(-2.5));
}

TEST_CASE("surrogate basis: labels, normalisation and symmetry") {
    const auto d = default_device();
    const auto basis = surrogate_basis(d.geometry);
    REQUIRE(basis.size() == 20);
    CHECK(basis.label(0) == "e0t");
    CHECK(basis.label(1) == "e0b");
    CHECK(basis.provenance() == Provenance::Surrogate);

    const auto sites = d.geometry.nv_positions();
    const auto g = assemble_g(basis, sites, Components::Perp2, d.frame);
    CHECK(g.values.rows() == 20);
    CHECK(g.values.cols() == 20);
    // a +-1/2 V pair at the middle site gives 1/drive_length there
    Eigen::VectorXd v = Eigen::VectorXd::Zero(20);
    v(10) = 0.5;
    v(11) = -0.5;
    const Eigen::VectorXd e = g.values * v;
    CHECK(std::hypot(e(10), e(11)) == doctest::Approx(1.0 / d.geometry.drive_length).epsilon(1e-9));
    // mirror symmetry about the middle of the array
    CHECK(std::hypot(e(8), e(9)) == doctest::Approx(std::hypot(e(12), e(13))).epsilon(1e-6));
    CHECK(g.condition_number > 1.0);
    CHECK(std::isfinite(g.condition_number));
}

TEST_CASE("fin confinement reduces neighbour leakage and conditioning") {
    const auto d = default_device();
    const auto sites = d.geometry.nv_positions();
    const auto bare = assemble_g(surrogate_basis(d.geometry, 1.0), sites, Components::Perp2, d.frame);
    const auto fin = assemble_g(surrogate_basis(d.geometry), sites, Components::Perp2, d.frame);
    CHECK(fin.condition_number < bare.condition_number);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(20);
    v(10) = 0.5;
    v(11) = -0.5;
    const Eigen::VectorXd eb = bare.values * v;
    const Eigen::VectorXd ef = fin.values * v;
    const double rb = std::hypot(eb(8), eb(9)) / std::hypot(eb(10), eb(11));
    const double rf = std::hypot(ef(8), ef(9)) / std::hypot(ef(10), ef(11));
    CHECK(rf < rb);
    CHECK_THROWS_AS(surrogate_basis(d.geometry, 0.5), ValidationError);
}

TEST_CASE("G is linear: superposition matches G V") {
    const auto d = default_device();
    const auto basis = surrogate_basis(d.geometry);
    const auto sites = d.geometry.nv_positions();
    const auto g = assemble_g(basis, sites, Components::Full3, d.frame);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(20);
    for (int j = 0; j < 20; ++j) v(j) = u(rng);
    const auto fields = superpose(basis, v, sites);
    const Eigen::VectorXd e = g.values * v;
    for (int k = 0; k < 10; ++k) {
        const auto n = d.frame.lab_to_nv(fields[k]);
        CHECK(e(g.row(k, FieldComponent::Par)) == doctest::Approx(n.par));
        CHECK(e(g.row(k, FieldComponent::Mu1)) == doctest::Approx(n.mu1));
        CHECK(e(g.row(k, FieldComponent::Mu2)) == doctest::Approx(n.mu2));
    }
    const auto g2 = assemble_g(basis, sites, Components::Perp2, d.frame);
    CHECK(g2.row(3, FieldComponent::Par) == -1);
}

TEST_CASE("permuting electrodes permutes G columns") {
    const auto d = default_device();
    const auto basis = surrogate_basis(d.geometry);
    std::vector<std::size_t> order(basis.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = (i * 7) % order.size();
    const auto p = basis.permuted(order);
    const auto sites = d.geometry.nv_positions();
    const auto g = assemble_g(basis, sites, Components::Perp2, d.frame);
    const auto gp = assemble_g(p, sites, Components::Perp2, d.frame);
    for (std::size_t i = 0; i < order.size(); ++i) {
        CHECK((gp.values.col(static_cast<Eigen::Index>(i)) - g.values.col(static_cast<Eigen::Index>(order[i]))).norm() ==
              doctest::Approx(0.0));
        CHECK(gp.column_labels[i] == g.column_labels[order[i]]);
    }
    CHECK_THROWS_AS((void)basis.permuted({0, 0}), ValidationError);
}

TEST_CASE("uniform basis and domain checks") {
    const auto b = uniform_basis({Vec3(1, 0, 0), Vec3(0, 1, 0)}, {"a", "b"});
    CHECK(b.response(1, Vec3(5, 5, 5)).y() == 1.0);
    CHECK_THROWS_AS(uniform_basis({Vec3(1, 0, 0)}, {"a", "b"}), ValidationError);
    CHECK_THROWS_AS(assemble_g(b, {}, Components::Perp2), ValidationError);
}

TEST_CASE("condition number") {
    Eigen::Matrix2d m;
    m << 2, 0, 0, 0.5;
    CHECK(condition_number(m) == doctest::Approx(4.0));
    m << 1, 1, 1, 1;
    CHECK(std::isinf(condition_number(m)));
}

TEST_CASE("field map write/parse round trip") {
    const auto m = linear_map("e0t");
    const std::string text = write_field_map(m);
    CHECK(text.rfind("# efpsa-field-map v1\n", 0) == 0);
    const auto p = parse_field_map(text);
    CHECK(p.electrode == "e0t");
    CHECK(p.x == m.x);
    CHECK(p.y == m.y);
    CHECK(p.z == m.z);
    REQUIRE(p.values.size() == m.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) CHECK((p.values[i] - m.values[i]).norm() == 0.0);
    CHECK(write_field_map(p) == text);
}

TEST_CASE("trilinear interpolation is exact for linear fields") {
    const auto m = linear_map("e0t");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        const Vec3 p(-1e-6 + 2e-6 * u(rng), -1e-6 + 2e-6 * u(rng), 2e-6 * u(rng));
        const Vec3 e = m.interpolate(p);
        CHECK(e.x() == doctest::Approx(1e6 * p.x() + 2.0));
        CHECK(e.y() == doctest::Approx(-3e6 * p.y()));
        CHECK(e.z() == doctest::Approx(5e5 * p.z() - 1.0));
    }
    CHECK((m.interpolate(Vec3(1e-6, 1e-6, 2e-6)) - m.at(2, 3, 4)).norm() < 1e-12);
    CHECK_THROWS_AS((void)m.interpolate(Vec3(0, 0, 3e-6)), ValidationError);
}

TEST_CASE("malformed field maps are rejected with a useful message") {
    const std::string good = write_field_map(linear_map("e0t"));
    auto expect_message = [](const std::string& text, const std::string& needle) {
        try {
            parse_field_map(text);
            FAIL("expected a ValidationError");
        } catch (const ValidationError& e) {
            CAPTURE(e.what());
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_message(good.substr(0, good.find("data")), "data");
    expect_message(good.substr(0, good.rfind("end")), "end");
    expect_message("electrode x\n", "efpsa-field-map");
    std::string swapped = good;
    swapped.replace(swapped.find("x -1e-06 0 1e-06"), 16, "x 0 -1e-06 1e-6 ");
    expect_message(swapped, "increasing");
    std::string bad_row = good;
    const auto pos = bad_row.find("data\n") + 5;
    bad_row.replace(pos, bad_row.find('\n', pos) - pos, "1,2");
    expect_message(bad_row, "line");
}

TEST_CASE("importing maps builds a bounded basis") {
    const auto a = linear_map("a");
    const auto b = linear_map("b");
    const auto basis = import_field_maps({a, b});
    CHECK(basis.provenance() == Provenance::Imported);
    CHECK(basis.size() == 2);
    CHECK(basis.contains(Vec3(0, 0, 1e-6)));
    CHECK_FALSE(basis.contains(Vec3(0, 0, 5e-6)));
    CHECK_THROWS_AS((void)basis.response(0, Vec3(0, 0, 5e-6)), ValidationError);
    CHECK_THROWS_AS(import_field_maps({a, a}), ValidationError);
    auto c = linear_map("c");
    c.z = axis(0.0, 3e-6, 5);
    CHECK_THROWS_AS(import_field_maps({a, c}), ValidationError);
    CHECK_THROWS_AS(import_field_maps({}), ValidationError);
}

TEST_CASE("sampling the surrogate and re-importing reproduces G at grid nodes") {
    auto d = default_device();
    d.geometry.n_sites = 2;
    const auto basis = surrogate_basis(d.geometry);
    const auto x = axis(-0.1e-6, 0.1e-6, 3);
    const auto y = axis(-0.1e-6, 0.1e-6, 3);
    const auto z = axis(-0.183e-6, 2 * 0.183e-6, 4);
    std::vector<FieldMap> maps;
    for (std::size_t j = 0; j < basis.size(); ++j) {
        maps.push_back(parse_field_map(write_field_map(sample_field_map(basis, j, x, y, z))));
    }
    const auto imported = import_field_maps(maps);
    const auto sites = d.geometry.nv_positions();
    const auto g0 = assemble_g(basis, sites, Components::Full3, d.frame);
    const auto g1 = assemble_g(imported, sites, Components::Full3, d.frame);
    CHECK((g0.values - g1.values).norm() / g0.values.norm() < 1e-12);
    CHECK(g1.column_labels == g0.column_labels);
}
