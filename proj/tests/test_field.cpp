// Sphere-valued fields and initial-data generators.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "fharmonic/diagnostics.hpp"
#include "fharmonic/field.hpp"

using namespace fharm;
using Catch::Approx;

namespace {

// Oracle: energy of the degree-one bubble on the whole plane, by radial
// quadrature of 8 / (lambda^2 (1 + r^2/lambda^2)^2) * 2 pi r. Independent of
// the grid code; converges to 8 pi.
double plane_bubble_energy(double lambda, double r_max, int n) {
    double sum = 0.0;
    const double dr = r_max / n;
    for (int i = 0; i < n; ++i) {
        const double r = (i + 0.5) * dr;
        const double q = 1.0 + r * r / (lambda * lambda);
        sum += 8.0 / (lambda * lambda * q * q) * 2.0 * std::numbers::pi * r * dr;
    }
    return sum;
}

double max_abs_norm_error(const SphereField& u) { return u.max_norm_deviation(); }

}  // namespace

TEST_CASE("plane bubble energy oracle equals 8 pi", "[field][oracle]") {
    CHECK(plane_bubble_energy(1.0, 2000.0, 2000000) == Approx(8.0 * std::numbers::pi).epsilon(1e-5));
    CHECK(bubble_energy == Approx(8.0 * std::numbers::pi));
}

TEST_CASE("constant field", "[field]") {
    const Grid g(16, 16, 1.0, 1.0);
    const SphereField u = constant_field(g, {0.0, 3.0, 4.0});
    CHECK(u.size() == g.size());
    CHECK(u[7].y == Approx(0.6));
    CHECK(u[7].z == Approx(0.8));
    CHECK(max_abs_norm_error(u) <= 1e-15);
    CHECK_THROWS_AS(constant_field(g, {0.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(SphereField(g, std::vector<Vec3>(3)), std::invalid_argument);
}

TEST_CASE("great circle field", "[field]") {
    const Grid g(64, 32, 1.0, 0.5);
    const SphereField u = great_circle_field(g, 0, 1);
    CHECK(max_abs_norm_error(u) <= 1e-15);
    CHECK(u.at(0, 5).z == Approx(1.0));
    CHECK(u.at(16, 3).x == Approx(1.0));
    CHECK(u.at(32, 0).z == Approx(-1.0));
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(u[k].y == 0.0);

    const SphereField v = great_circle_field(g, 1, 2);
    CHECK(v.at(3, 4).x == Approx(std::sin(2.0 * std::numbers::pi * 2 * 4 * g.hy() / 0.5)));
}

TEST_CASE("great circle discrete energy is the exact edge sum", "[field][oracle]") {
    // |D+ u|^2 = (2 sin(k h / 2) / h)^2 for u = (sin ks, 0, cos ks).
    for (std::size_t n : {32u, 64u, 128u}) {
        const Grid g(n, n, 1.0, 1.0);
        const Coupling one = make_coupling(g, {});
        const double h = 1.0 / static_cast<double>(n);
        const double expected = std::pow(2.0 * std::sin(std::numbers::pi * h) / h, 2);
        CHECK(energy(great_circle_field(g), one) == Approx(expected).epsilon(1e-12));
        CHECK(std::abs(expected - 4.0 * std::numbers::pi * std::numbers::pi) <=
              4.0 * std::pow(std::numbers::pi, 4) * h * h / 3.0 * 1.01);
    }
}

TEST_CASE("bubble field energy is close to 8 pi", "[field]") {
    const Grid g(256, 256, 1.0, 1.0);
    const Coupling one = make_coupling(g, {});
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.05, {0.0, 0.0, -1.0}});
    CHECK(max_abs_norm_error(u) <= 1e-14);
    const double e = energy(u, one);
    CHECK(std::abs(e - bubble_energy) <= 0.03 * bubble_energy);
}

TEST_CASE("bubble field geometry", "[field]") {
    const Grid g(64, 64, 1.0, 1.0);
    const Vec3 bg = normalized(Vec3{1.0, -2.0, 0.5});
    const SphereField u = bubble_field(g, {{0.25, 0.75}, 0.05, bg});
    CHECK(max_abs_norm_error(u) <= 1e-14);
    // Antipode of the background at the center, background far away.
    const Vec3 c = u.at(16, 48);
    CHECK(c.x == Approx(-bg.x).margin(1e-12));
    CHECK(c.y == Approx(-bg.y).margin(1e-12));
    CHECK(c.z == Approx(-bg.z).margin(1e-12));
    const Vec3 far = u.at(48, 16);
    CHECK(far.x == Approx(bg.x).margin(1e-12));
    CHECK(far.z == Approx(bg.z).margin(1e-12));
}

TEST_CASE("bubble field rejects bad parameters", "[field]") {
    const Grid g(32, 32, 1.0, 1.0);
    CHECK_THROWS_AS(bubble_field(g, {{0.5, 0.5}, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(bubble_field(g, {{0.5, 0.5}, 0.25}), std::invalid_argument);
    CHECK_THROWS_AS(bubble_field(g, {{0.5, 0.5}, 0.05, {0.0, 0.0, -2.0}}), std::invalid_argument);
}

TEST_CASE("bubble energy concentrates at the center", "[field]") {
    const Grid g(128, 128, 1.0, 1.0);
    const Coupling one = make_coupling(g, {});
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.05});
    const double total = energy(u, one);
    CHECK(local_energy(u, one, {0.5, 0.5}, 0.25) >= 0.9 * total);
}

TEST_CASE("perturb is deterministic and bounded", "[field]") {
    const Grid g(32, 32, 1.0, 1.0);
    const SphereField base = great_circle_field(g);
    const SphereField a = perturb(base, 0.1, 42);
    const SphereField b = perturb(base, 0.1, 42);
    const SphereField c = perturb(base, 0.1, 43);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK(max_abs_norm_error(a) <= 1e-15);
    for (std::size_t k = 0; k < a.size(); ++k) {
        // Tangent displacement of length <= 0.1 turns u by at most atan(0.1).
        CHECK(std::acos(std::clamp(dot(a[k], base[k]), -1.0, 1.0)) <= std::atan(0.1) + 1e-12);
    }
    CHECK(perturb(base, 0.0, 1) == base);
    CHECK_THROWS_AS(perturb(base, -1.0, 1), std::invalid_argument);
}

TEST_CASE("perturb realization is frozen", "[field][regression]") {
    // Platform-independent RNG draw: pins the first perturbed node.
    const Grid g(16, 16, 1.0, 1.0);
    const SphereField a = perturb(constant_field(g, {0.0, 0.0, 1.0}), 0.5, 7);
    const Vec3 expected[3] = {{0.11053138256291313, 0.33516614424234831, 0.93565296409643695},
                              {0.036811509355287417, 0.045602668433079328, 0.99828117753004253},
                              {-0.16803060850816709, 0.048560401102410833, 0.98458498975413411}};
    const std::size_t nodes[3] = {0, 1, 255};
    for (int i = 0; i < 3; ++i) {
        CHECK(a[nodes[i]].x == Approx(expected[i].x).margin(1e-14));
        CHECK(a[nodes[i]].y == Approx(expected[i].y).margin(1e-14));
        CHECK(a[nodes[i]].z == Approx(expected[i].z).margin(1e-14));
    }
}

TEST_CASE("rotation acts nodewise", "[field]") {
    const Grid g(16, 16, 1.0, 1.0);
    const SphereField u = bubble_field(g, {{0.5, 0.5}, 0.1});
    const double r[3][3] = {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}};
    const SphereField v = rotate(u, r);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(v[k].x == Approx(-u[k].y).margin(1e-15));
        CHECK(v[k].y == Approx(u[k].x).margin(1e-15));
        CHECK(v[k].z == u[k].z);
    }
}
