#pragma once

#include "kepmix/common.hpp"

#include <map>
#include <memory>
#include <shared_mutex>
#include <utility>
#include <vector>

namespace kepmix::effpot {

/// Construction-time validation failure of a profile or support window.
class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& msg) : Error(msg) {}
};

/// No sign change found on the search interval for a turning point.
class RootBracketFailure : public Error {
public:
    explicit RootBracketFailure(const std::string& msg) : Error(msg) {}
};

/// The split quadrature cannot be set up, typically because the orbit is
/// too close to circular for the configured margins.
class QuadratureFailure : public Error {
public:
    explicit QuadratureFailure(const std::string& msg) : Error(msg) {}
};

/// State handed to the angle evaluator is not on a bound orbit.
class OutOfOrbit : public Error {
public:
    explicit OutOfOrbit(const std::string& msg) : Error(msg) {}
};

/// Radial field sampled on a grid, interpolated as a C1 piecewise cubic
/// from stored values and derivatives; identically zero outside the grid.
class FieldProfile {
public:
    FieldProfile() = default;
    FieldProfile(std::vector<double> r, std::vector<double> phi, std::vector<double> dphi);

    double phi(double r) const;
    double dphi(double r) const;
    bool empty() const { return r_.empty(); }
    const std::vector<double>& grid() const { return r_; }
    const std::vector<double>& values() const { return phi_; }
    const std::vector<double>& derivatives() const { return dphi_; }

private:
    std::vector<double> r_, phi_, dphi_;
    size_t locate(double r) const;
};

/// Window in the (H, Lsq) plane: -1/(2 Lsq) + c <= H <= -h, l1 <= Lsq <= l2.
struct SupportSpec {
    double c, h, l1, l2;

    double hLo(double lsq) const { return -0.5 / lsq + c; }
    double hHi() const { return -h; }
    bool contains(double H, double lsq) const {
        return lsq >= l1 && lsq <= l2 && H >= hLo(lsq) && H <= hHi();
    }
};

/// Geometry of one radial orbit in the effective potential.
struct OrbitGeometry {
    double H = 0, Lsq = 0;
    double rMin = 0, rMax = 0;        // turning radii
    double splitLo = 0, splitHi = 0;  // boundaries of the central quadrature piece
    double period = 0;                // 2 Int dr / sqrt(H - U)
    double frequency = 0;             // 2 sqrt(2) pi / period
    double innerTime = 0, midTime = 0;  // Int dr/sqrt(H-U) up to splitLo / splitHi
};

struct QuadratureConfig {
    int nGauss = 64;        // nodes per quadrature piece
    int nMarginGrid = 24;   // support-plane scan resolution for the margins
};

/// Orbit machinery for U(r, Lsq) = Lsq/(2 r^2) - 1/r + phi(r).
///
/// The margin b (distance of the turning radii from the circular radius
/// r = Lsq) and the slope floor d are measured over a grid on the support
/// window at construction and halved.  Period and angle integrals split
/// each orbit at Lsq -/+ b/2; the two outer pieces run in a variable that
/// clusters nodes at the turning radius, where the square-root zero of
/// the integrand cancels against the volume factor of the substitution.
class OrbitContext {
public:
    OrbitContext(FieldProfile field, SupportSpec spec, QuadratureConfig cfg = {});

    double effective_potential(double r, double lsq) const;
    double dU_dr(double r, double lsq) const;

    /// Both turning radii by bisection, seeded on the support bracket and
    /// widened geometrically if the energy is outside it.
    std::pair<double, double> turning_points(double H, double lsq) const;

    double radial_period(double H, double lsq) const;
    double frequency(double H, double lsq) const;

    /// d(frequency)/dH and d(frequency)/dLsq by central differences.
    std::array<double, 2> frequency_gradient(double H, double lsq) const;

    /// Radial angle of the state (r, w) in (-pi, pi], odd in w: outbound
    /// states map to (0, pi), the pericentre to 0, the apocentre to pi.
    double angle(double r, double w, double lsq) const;

    /// Angle evaluated against a previously built geometry (saves the
    /// turning point and period work when the orbit is known).
    double angle_on(const OrbitGeometry& geo, double r, double w) const;

    /// Build the geometry of one orbit without touching the shared cache.
    OrbitGeometry make_orbit(double H, double lsq) const;

    /// Cached geometry, keyed by the exact (H, Lsq) pair.
    const OrbitGeometry& orbit(double H, double lsq) const;

    double margin_b() const { return marginB_; }
    double margin_d() const { return marginD_; }
    const FieldProfile& field() const { return field_; }
    const SupportSpec& support() const { return spec_; }
    const QuadratureConfig& config() const { return cfg_; }

private:
    FieldProfile field_;
    SupportSpec spec_;
    QuadratureConfig cfg_;
    double marginB_ = 0, marginD_ = 0;

    mutable std::shared_mutex cacheMutex_;
    mutable std::map<std::pair<double, double>, std::unique_ptr<OrbitGeometry>> cache_;

    double turning_piece(double lsq, double rTurn, double rReg) const;
    void compute_margins();
};

}  // namespace kepmix::effpot
