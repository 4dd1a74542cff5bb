#include "kepmix/kepler.hpp"

#include <algorithm>
#include <cmath>

namespace kepmix::kepler {

namespace {

const double ECC_SQ_MIN   = 1e-14;  // below this 1 + 2*H*Lsq the orbit counts as circular
const double NODE_REL_MIN = 1e-14;  // |n|/L below this counts as equatorial
const int    MAX_ITER     = 200;

double clamp1(double c) { return std::clamp(c, -1.0, 1.0); }

}  // namespace

double kepler_hamiltonian(const CartesianState& s) {
    return 0.5 * dot(s.v, s.v) - 1.0 / norm(s.x);
}

double solve_kepler_equation(double Q, double ecc) {
    if (!(ecc >= 0.0 && ecc < 1.0))
        throw DegenerateOrbit("solve_kepler_equation: eccentricity outside [0,1)");
    Q = wrap_angle(Q);
    if (ecc == 0.0)
        return Q;
    // f(E) = E - ecc sin E - Q is increasing with f' >= 1 - ecc > 0 and
    // changes sign on [Q - ecc, Q + ecc].
    double lo = Q - ecc, hi = Q + ecc;
    double E  = Q + ecc * std::sin(Q);
    for (int it = 0; it < MAX_ITER; ++it) {
        double f = E - ecc * std::sin(E) - Q;
        if (std::fabs(f) < 1e-14)
            return E;
        if (f > 0)
            hi = E;
        else
            lo = E;
        double step = f / (1.0 - ecc * std::cos(E));
        E -= step;
        if (E <= lo || E >= hi)          // Newton left the bracket: bisect
            E = 0.5 * (lo + hi);
        if (hi - lo < 1e-15)
            return E;
    }
    throw NonConvergence("solve_kepler_equation: no convergence after 200 iterations");
}

DelaunayState cartesian_to_delaunay(const CartesianState& s) {
    const double r = norm(s.x);
    if (!(r > 0.0))
        throw DegenerateOrbit("cartesian_to_delaunay: state at the origin");
    const double v2 = dot(s.v, s.v);
    const double xv = dot(s.x, s.v);
    const double H  = 0.5 * v2 - 1.0 / r;
    if (!(H < 0.0))
        throw DegenerateOrbit("cartesian_to_delaunay: orbit is unbound");

    const Vec3 Lvec = cross(s.x, s.v);
    const double Lmag = norm(Lvec);
    const double Lsq  = Lmag * Lmag;
    const double eccSq = 1.0 + 2.0 * H * Lsq;
    if (eccSq <= ECC_SQ_MIN)
        throw DegenerateOrbit("cartesian_to_delaunay: orbit is (near) circular");

    // node vector zhat cross L and its length; vanishing node means the
    // orbit plane is equatorial and the node angle is undefined
    const Vec3 nvec = {-Lvec[1], Lvec[0], 0.0};
    const double nmag = std::hypot(Lvec[0], Lvec[1]);
    if (nmag <= NODE_REL_MIN * Lmag)
        throw DegenerateOrbit("cartesian_to_delaunay: orbit plane is equatorial");

    // |e| from the cancellation-free combination; identical to the length
    // of the Laplace vector (v2 - 1/r) x - (x.v) v
    const double ecc = std::sqrt(sq(v2 * r - 1.0) + (2.0 / r - v2) * sq(xv));
    const Vec3 evec = {(v2 - 1.0 / r) * s.x[0] - xv * s.v[0],
                       (v2 - 1.0 / r) * s.x[1] - xv * s.v[1],
                       (v2 - 1.0 / r) * s.x[2] - xv * s.v[2]};

    // eccentric anomaly: unnormalized (cos, sin) have hypot exactly ecc
    const double cosEr = v2 * r - 1.0;
    const double sinEr = xv * std::sqrt(-2.0 * H);
    const double E = std::atan2(sinEr, cosEr);

    DelaunayState d;
    d.J  = 1.0 / std::sqrt(-2.0 * H);
    d.L  = Lmag;
    d.Lz = Lvec[2];
    d.Q  = wrap_angle(E - sinEr);         // E - ecc sin E, with ecc sin E = sinEr
    d.thetaL = std::atan2(nvec[1], nvec[0]);
    // the principal value of the pericentre angle, signed by the vertical
    // pericentre component so that mirror orbits stay distinguishable
    const double w = std::acos(clamp1(dot(nvec, evec) / (nmag * ecc)));
    d.thetaLz = (evec[2] < 0.0) ? wrap_angle(-w) : w;
    return d;
}

CartesianState delaunay_to_cartesian(const DelaunayState& d) {
    if (!(d.J > 0.0) || !(d.L > 0.0))
        throw DegenerateOrbit("delaunay_to_cartesian: nonpositive action");
    if (!(d.L < d.J))
        throw DegenerateOrbit("delaunay_to_cartesian: L >= J leaves no eccentricity");
    if (!(std::fabs(d.Lz) < d.L))
        throw DegenerateOrbit("delaunay_to_cartesian: |Lz| >= L is equatorial");

    const double a    = d.J * d.J;
    const double ecc  = std::sqrt(1.0 - sq(d.L / d.J));
    const double E    = solve_kepler_equation(d.Q, ecc);
    const double cosE = std::cos(E), sinE = std::sin(E);
    const double rho  = 1.0 - ecc * cosE;

    const double cosi = d.Lz / d.L;
    const double sini = std::sqrt(1.0 - cosi * cosi);
    const double cn = std::cos(d.thetaL), sn = std::sin(d.thetaL);
    const Vec3 nhat = {cn, sn, 0.0};
    const Vec3 lhat = {sn * sini, -cn * sini, cosi};
    const Vec3 mhat = cross(lhat, nhat);  // in-plane normal to the node, positive z
    const double cw = std::cos(d.thetaLz), sw = std::sin(d.thetaLz);
    const Vec3 phat = {cw * nhat[0] + sw * mhat[0],
                       cw * nhat[1] + sw * mhat[1],
                       cw * nhat[2] + sw * mhat[2]};
    const Vec3 qhat = cross(lhat, phat);

    const double b  = a * std::sqrt(1.0 - ecc * ecc);
    const double xp = a * (cosE - ecc), xq = b * sinE;
    const double vscale = 1.0 / (std::sqrt(a) * rho);
    const double vp = -sinE * vscale, vq = std::sqrt(1.0 - ecc * ecc) * cosE * vscale;

    CartesianState s;
    for (int i = 0; i < 3; ++i) {
        s.x[i] = xp * phat[i] + xq * qhat[i];
        s.v[i] = vp * phat[i] + vq * qhat[i];
    }
    return s;
}

double kepler_period(double H) {
    if (!(H < 0.0))
        throw DegenerateOrbit("kepler_period: orbit is unbound");
    return PI / std::pow(-H, 1.5);
}

bool in_linear_support(const CartesianState& s, const LinearSupportSpec& spec) {
    const double r = norm(s.x);
    if (!(r > 0.0))
        return false;
    const double v2 = dot(s.v, s.v);
    const double xv = dot(s.x, s.v);
    const double H  = 0.5 * v2 - 1.0 / r;
    const Vec3 Lvec = cross(s.x, s.v);
    const double Lsq = dot(Lvec, Lvec);

    if (!(Lsq >= spec.l1 && Lsq <= spec.l2))
        return false;
    if (!(H >= -0.5 / Lsq + spec.c0 && H <= -spec.h0))
        return false;
    const double nmag = std::hypot(Lvec[0], Lvec[1]);
    if (!(nmag > spec.n0))
        return false;
    // H >= -1/(2 Lsq) + c0 bounds the eccentricity away from zero here
    const double ecc = std::sqrt(sq(v2 * r - 1.0) + (2.0 / r - v2) * sq(xv));
    const double ne  = -Lvec[1] * ((v2 - 1.0 / r) * s.x[0] - xv * s.v[0])
                     +  Lvec[0] * ((v2 - 1.0 / r) * s.x[1] - xv * s.v[1]);
    const double c   = ne / (nmag * ecc);
    return c >= -1.0 + spec.n1 && c <= 1.0 - spec.n1;
}

DelaunayState free_stream_exact(const DelaunayState& d, double t) {
    DelaunayState out = d;
    out.Q = wrap_angle(d.Q + t / (d.J * d.J * d.J));
    return out;
}

double kepler_radial_angle(double H, double Lsq, double r, double w) {
    if (!(H < 0.0))
        throw DegenerateOrbit("kepler_radial_angle: orbit is unbound");
    if (1.0 + 2.0 * H * Lsq <= ECC_SQ_MIN)
        throw DegenerateOrbit("kepler_radial_angle: orbit is (near) circular");
    const double v2 = w * w + Lsq / (r * r);
    const double cosEr = v2 * r - 1.0;
    const double sinEr = r * w * std::sqrt(-2.0 * H);
    return wrap_angle(std::atan2(sinEr, cosEr) - sinEr);
}

void kepler_radial_state(double H, double Lsq, double Q, double& r, double& w) {
    if (!(H < 0.0))
        throw DegenerateOrbit("kepler_radial_state: orbit is unbound");
    const double eccSq = 1.0 + 2.0 * H * Lsq;
    if (eccSq <= ECC_SQ_MIN)
        throw DegenerateOrbit("kepler_radial_state: orbit is (near) circular");
    const double ecc = std::sqrt(eccSq);
    const double a   = -0.5 / H;
    const double E   = solve_kepler_equation(Q, ecc);
    const double rho = 1.0 - ecc * std::cos(E);
    r = a * rho;
    w = ecc * std::sin(E) * std::sqrt(-2.0 * H) / rho;
}

}  // namespace kepmix::kepler
