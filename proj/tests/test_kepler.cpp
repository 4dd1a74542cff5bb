#include "doctest.h"
#include "kepmix/kepler.hpp"

#include <cmath>
#include <random>

using namespace kepmix;
using namespace kepmix::kepler;

namespace {

const LinearSupportSpec SPEC{0.05, 0.1, 0.5, 1.0, 0.1, 0.05};

// Random element sets strictly inside the support window of SPEC.
DelaunayState random_support_elements(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double lsq = 0.55 + 0.4 * uni(rng);
    const double hLo = -0.5 / lsq + 0.06, hHi = -0.11;
    const double H = hLo + (hHi - hLo) * uni(rng);
    const double cosi = -0.9 + 1.8 * uni(rng);
    const double wMax = std::acos(-0.94), wMin = std::acos(0.94);
    double thetaLz = wMin + (wMax - wMin) * uni(rng);
    if (uni(rng) < 0.5)
        thetaLz = -thetaLz;
    DelaunayState d;
    d.J  = 1.0 / std::sqrt(-2.0 * H);
    d.L  = std::sqrt(lsq);
    d.Lz = d.L * cosi;
    d.Q  = -PI + TWO_PI * uni(rng);
    d.thetaL  = -PI + TWO_PI * uni(rng);
    d.thetaLz = thetaLz;
    return d;
}

double angle_diff(double a, double b) { return wrap_angle(a - b); }

}  // namespace

TEST_CASE("hamiltonian of the reference state") {
    CartesianState s{{1.0, 0.0, 0.0}, {0.0, 0.8, 0.3}};
    CHECK(kepler_hamiltonian(s) == doctest::Approx(-0.635).epsilon(1e-14));
}

TEST_CASE("kepler equation: frozen value and residual sweep") {
    // bisection oracle for Q=1, ecc=0.5
    CHECK(std::fabs(solve_kepler_equation(1.0, 0.5) - 1.4987011335178484) < 1e-10);
    for (int i = 0; i < 100; ++i) {
        const double ecc = 0.01 + 0.98 * i / 99.0;
        for (int j = 0; j < 100; ++j) {
            const double Q = -PI + TWO_PI * (j + 0.5) / 100.0;
            const double E = solve_kepler_equation(Q, ecc);
            CHECK(std::fabs(E - ecc * std::sin(E) - Q) < 1e-12);
        }
    }
    CHECK_THROWS_AS(solve_kepler_equation(1.0, 1.0), DegenerateOrbit);
}

TEST_CASE("element transform of the reference state") {
    CartesianState s{{1.0, 0.0, 0.0}, {0.0, 0.8, 0.3}};
    DelaunayState d = cartesian_to_delaunay(s);
    CHECK(std::fabs(d.J - 0.8873565094161139) < 1e-14);
    CHECK(std::fabs(d.L - std::sqrt(0.73)) < 1e-14);
    CHECK(std::fabs(d.Lz - 0.8) < 1e-14);
    CHECK(std::fabs(d.Q - PI) < 1e-13);
    CHECK(std::fabs(d.thetaL) < 1e-13);
    CHECK(std::fabs(d.thetaLz - PI) < 1e-13);

    CartesianState back = delaunay_to_cartesian(d);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(back.x[i] - s.x[i]) < 1e-12);
        CHECK(std::fabs(back.v[i] - s.v[i]) < 1e-12);
    }
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(cartesian_to_delaunay({{1, 0, 0}, {0, 1, 0}}), DegenerateOrbit);   // circular
    CHECK_THROWS_AS(cartesian_to_delaunay({{1, 0, 0}, {0, 0.9, 0}}), DegenerateOrbit); // equatorial
    CHECK_THROWS_AS(cartesian_to_delaunay({{1, 0, 0}, {0, 2.0, 0}}), DegenerateOrbit); // unbound
    CHECK_THROWS_AS(kepler_period(0.0), DegenerateOrbit);
}

TEST_CASE("kepler period values") {
    CHECK(std::fabs(kepler_period(-1.0) - PI) < 1e-15);
    CHECK(std::fabs(kepler_period(-0.5) - 8.885765876316732) < 1e-14);
}

TEST_CASE("free streaming advances the mean anomaly at rate 1/J^3") {
    CartesianState s{{1.0, 0.0, 0.0}, {0.0, 0.8, 0.3}};
    DelaunayState d = cartesian_to_delaunay(s);
    const double rate = std::pow(1.27, 1.5);   // (-2H)^(3/2), H = -0.635
    DelaunayState e = free_stream_exact(d, 0.5);
    CHECK(std::fabs(angle_diff(e.Q, d.Q + 0.5 * rate)) < 1e-12);
    CHECK(e.J == d.J);
    CHECK(e.thetaL == d.thetaL);
    // one full anomaly cycle returns Q
    DelaunayState f = free_stream_exact(d, TWO_PI / rate);
    CHECK(std::fabs(angle_diff(f.Q, d.Q)) < 1e-12);
}

TEST_CASE("support membership") {
    // reference state: pericentre anti-aligned with the node, margin fails
    CHECK(!in_linear_support({{1.0, 0.0, 0.0}, {0.0, 0.8, 0.3}}, SPEC));
    // constructed interior state
    DelaunayState d;
    d.J = 1.0 / std::sqrt(0.8);
    d.L = std::sqrt(0.75);
    d.Lz = d.L * std::sqrt(0.75);
    d.Q = 0.7;
    d.thetaL = -2.0;
    d.thetaLz = 1.0;
    CHECK(in_linear_support(delaunay_to_cartesian(d), SPEC));
    // circular and equatorial states are simply outside
    CHECK(!in_linear_support({{1, 0, 0}, {0, 1, 0}}, SPEC));
    CHECK(!in_linear_support({{1, 0, 0}, {0, 0.9, 0}}, SPEC));
}

TEST_CASE("round trips over random support states") {
    std::mt19937_64 rng(20260818u);
    for (int k = 0; k < 1000; ++k) {
        DelaunayState d = random_support_elements(rng);
        CartesianState s = delaunay_to_cartesian(d);
        CHECK(in_linear_support(s, SPEC));

        DelaunayState d2 = cartesian_to_delaunay(s);
        CHECK(std::fabs(d2.J - d.J) < 1e-9);
        CHECK(std::fabs(d2.L - d.L) < 1e-9);
        CHECK(std::fabs(d2.Lz - d.Lz) < 1e-9);
        CHECK(std::fabs(angle_diff(d2.Q, d.Q)) < 1e-9);
        CHECK(std::fabs(angle_diff(d2.thetaL, d.thetaL)) < 1e-9);
        CHECK(std::fabs(angle_diff(d2.thetaLz, d.thetaLz)) < 1e-9);

        CartesianState s2 = delaunay_to_cartesian(d2);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::fabs(s2.x[i] - s.x[i]) < 1e-9);
            CHECK(std::fabs(s2.v[i] - s.v[i]) < 1e-9);
        }

        // eccentricity identity |e|^2 = 1 + 2 H Lsq from the cartesian side
        const double v2 = dot(s.v, s.v), r = norm(s.x), xv = dot(s.x, s.v);
        const double H = 0.5 * v2 - 1.0 / r;
        const double eccSq = sq(v2 * r - 1.0) + (2.0 / r - v2) * sq(xv);
        CHECK(std::fabs(eccSq - (1.0 + 2.0 * H * sq(d.L))) < 1e-12);
    }
}

TEST_CASE("radial angle closed forms") {
    const double H = -0.635, Lsq = 0.73;
    CHECK(std::fabs(kepler_radial_angle(H, Lsq, 1.0, 0.0) - PI) < 1e-13);

    std::mt19937_64 rng(7u);
    std::uniform_real_distribution<double> uni(-PI, PI);
    for (int k = 0; k < 200; ++k) {
        const double Q = uni(rng);
        double r, w;
        kepler_radial_state(H, Lsq, Q, r, w);
        CHECK(std::fabs(angle_diff(kepler_radial_angle(H, Lsq, r, w), Q)) < 1e-12);
        // odd in the radial velocity
        CHECK(std::fabs(angle_diff(kepler_radial_angle(H, Lsq, r, -w),
                                   -kepler_radial_angle(H, Lsq, r, w))) < 1e-12);
        // energy of the reconstructed state is H
        CHECK(std::fabs(0.5 * (w * w + Lsq / (r * r)) - 1.0 / r - H) < 1e-13);
    }

    // agreement with the full three dimensional transform
    std::mt19937_64 rng2(8u);
    for (int k = 0; k < 200; ++k) {
        DelaunayState d = random_support_elements(rng2);
        CartesianState s = delaunay_to_cartesian(d);
        const double r = norm(s.x), wrad = dot(s.x, s.v) / r;
        const double Hs = kepler_hamiltonian(s);
        const double Lsqs = sq(d.L);
        CHECK(std::fabs(angle_diff(kepler_radial_angle(Hs, Lsqs, r, wrad), d.Q)) < 1e-10);
    }
}
