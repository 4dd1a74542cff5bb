#pragma once

#include "kepmix/common.hpp"

namespace kepmix::kepler {

struct CartesianState {
    Vec3 x;
    Vec3 v;
};

/// Orbital elements of a bound, non-circular, inclined Kepler orbit.
/// Actions: J = 1/sqrt(-2H), L = |x cross v|, Lz its vertical component.
/// Angles (all in (-pi, pi]): Q mean anomaly, thetaL node longitude,
/// thetaLz angle from the node to pericentre.  thetaLz carries the sign of
/// the vertical pericentre component so that the transform is invertible;
/// orbits with pericentre above the equatorial plane have thetaLz in [0, pi].
struct DelaunayState {
    double J, L, Lz;
    double Q, thetaL, thetaLz;
};

/// Acceptance window for the linear theory: bounds on energy, squared
/// angular momentum, node length and the pericentre-node alignment margin.
struct LinearSupportSpec {
    double c0, h0;   // energy window: -1/(2 Lsq) + c0 <= H <= -h0
    double l1, l2;   // squared angular momentum window
    double n0;       // require |n| > n0
    double n1;       // require -1 + n1 <= cos(thetaLz) <= 1 - n1
};

/// Energy |v|^2/2 - 1/|x| of the point-mass potential.
double kepler_hamiltonian(const CartesianState& s);

/// Solve E - ecc*sin(E) = Q for the eccentric anomaly, Q in any branch.
/// Newton iteration seeded at Q + ecc*sin(Q), falling back to bisection on
/// the bracket [Q - ecc, Q + ecc]; residual below 1e-13.
double solve_kepler_equation(double Q, double ecc);

DelaunayState cartesian_to_delaunay(const CartesianState& s);
CartesianState delaunay_to_cartesian(const DelaunayState& d);

/// Radial period in the half-speed time unit, 2*Int dr/sqrt(H-U): equals
/// pi/(-H)^(3/2) and is independent of angular momentum.  The wall-clock
/// radial period is this value divided by sqrt(2).
double kepler_period(double H);

bool in_linear_support(const CartesianState& s, const LinearSupportSpec& spec);

/// Exact transport under the point-mass flow for time t: the mean anomaly
/// advances by t/J^3, every other element is constant.
DelaunayState free_stream_exact(const DelaunayState& d, double t);

/// Mean anomaly of the radial state (r, w) on the orbit (H, Lsq), field
/// free.  Odd in w, so inbound states map to (-pi, 0).
double kepler_radial_angle(double H, double Lsq, double r, double w);

/// Inverse of kepler_radial_angle: radius and radial velocity at mean
/// anomaly Q on the orbit (H, Lsq).
void kepler_radial_state(double H, double Lsq, double Q, double& r, double& w);

}  // namespace kepmix::kepler
