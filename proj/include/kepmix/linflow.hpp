#pragma once

#include "kepmix/common.hpp"
#include "kepmix/effpot.hpp"

#include <complex>
#include <functional>
#include <utility>
#include <vector>

namespace kepmix::linflow {

/// Point in the orbit-adapted coordinates: angle Q in (-pi, pi], energy H,
/// squared angular momentum M.
struct ActionAngleState {
    double Q = 0.0;
    double H = 0.0;
    double M = 0.0;
};

/// Orbit family behind the angle coordinates: closed-form Kepler orbits or
/// orbits of a frozen radial field.
class OrbitModel {
public:
    virtual ~OrbitModel() = default;

    /// Angular rate of Q along the flow.
    virtual double frequency(double H, double lsq) const = 0;
    virtual std::pair<double, double> turning_radii(double H, double lsq) const = 0;
    virtual double effective_potential(double r, double lsq) const = 0;
    /// Angle in (-pi, pi] of the state (r, w) on the (H, lsq) orbit, odd in w.
    virtual double angle(double H, double lsq, double r, double w) const = 0;
    /// Radius and radial velocity at angle Q on the (H, lsq) orbit.
    virtual void radial_state(double H, double lsq, double Q, double& r,
                              double& w) const = 0;
};

/// Bare point-mass orbits, everything in closed form.
class KeplerOrbitModel : public OrbitModel {
public:
    double frequency(double H, double lsq) const override;
    std::pair<double, double> turning_radii(double H, double lsq) const override;
    double effective_potential(double r, double lsq) const override;
    double angle(double H, double lsq, double r, double w) const override;
    void radial_state(double H, double lsq, double Q, double& r,
                      double& w) const override;
};

/// Orbits of a frozen radial field, delegated to an OrbitContext the caller
/// keeps alive; the angle inverse runs by bisection on the outbound branch.
class FrozenOrbitModel : public OrbitModel {
public:
    explicit FrozenOrbitModel(const effpot::OrbitContext& ctx) : ctx_(&ctx) {}

    double frequency(double H, double lsq) const override;
    std::pair<double, double> turning_radii(double H, double lsq) const override;
    double effective_potential(double r, double lsq) const override;
    double angle(double H, double lsq, double r, double w) const override;
    void radial_state(double H, double lsq, double Q, double& r,
                      double& w) const override;

private:
    const effpot::OrbitContext* ctx_;
};

struct TableConfig {
    int K = 32;       ///< mode cutoff; modes above it must carry < 1e-16 of the mass
    int nH = 64;      ///< Gauss-Legendre column height in H
    int nM = 64;      ///< Gauss-Legendre columns in M
    int nQ = 256;     ///< uniform angle samples per node for the mode analysis
    int workers = 1;
};

/// Fourier coefficients in the angle, sampled on a Gauss-Legendre grid over
/// the support window: columns in M, each column spanning [hLo(M), hHi] in H.
/// Only k >= 0 is stored; real data fixes the negative modes by conjugation.
class AngleFourierTable {
public:
    AngleFourierTable() = default;
    /// Analyze f(Q, H, M).  Throws InvalidSpec when the spectral mass beyond
    /// the cutoff (estimated on the band (K, 2K]) exceeds 1e-16 of the total.
    AngleFourierTable(const std::function<double(double, double, double)>& f,
                      const effpot::SupportSpec& spec, TableConfig cfg = {});

    int cutoff() const { return cfg_.K; }
    int nodes() const { return static_cast<int>(weights_.size()); }
    const TableConfig& config() const { return cfg_; }
    const effpot::SupportSpec& support() const { return spec_; }

    double hNode(int n) const { return hNodes_[n]; }
    double mNode(int n) const { return mNodes_[n]; }
    /// Quadrature weight of node n for integrals dH dM over the window.
    double weight(int n) const { return weights_[n]; }

    /// Coefficient of e^{ikQ} at node n, any k in [-K, K].
    std::complex<double> mode(int k, int n) const;

    /// Weighted spectral mass Int dH dM Sum_k |h_k|^2.
    double spectral_mass() const;

    /// Table with every coefficient replaced, keeping the grid; sizes must
    /// match the layout (K+1 rows of nodes() values each).
    AngleFourierTable with_modes(std::vector<std::complex<double>> modes) const;

private:
    TableConfig cfg_;
    effpot::SupportSpec spec_{};
    std::vector<double> hNodes_, mNodes_, weights_;
    std::vector<std::complex<double>> modes_;  // (K+1) x nodes, k major

    friend AngleFourierTable semigroup_apply(const AngleFourierTable&, double,
                                             const OrbitModel&);
};

/// Exact flow on the table: h_k multiplied by e^{-ik Omega(H,M) t} at every
/// node.  The k = 0 row is untouched and moduli are preserved.
AngleFourierTable semigroup_apply(const AngleFourierTable& table, double t,
                                  const OrbitModel& model);

struct FieldSample {
    std::vector<double> phi;     ///< potential at the probe radii
    std::vector<double> dphiDt;  ///< exact time derivative of the mode sum
};

/// Field of the evolving linear density at fixed probe radii.  The radial
/// and angle integrals collapse into per-node kernel modes
/// G_k(r) = Int e^{ikQ} / max(r, r1(Q)) dQ computed once at construction;
/// evaluation at any time is then a phase-weighted sum, so the time
/// derivative is analytic, not a finite difference.
class LinearFieldEvaluator {
public:
    LinearFieldEvaluator(const AngleFourierTable& table, const OrbitModel& model,
                         std::vector<double> rProbe, int nGauss = 48,
                         int workers = 1);

    /// Field and its rate at time t past the table's epoch.
    FieldSample at(double t) const;

    const std::vector<double>& probes() const { return rProbe_; }

private:
    int K_ = 0;
    std::vector<double> rProbe_;
    std::vector<double> omega_, weight_;
    std::vector<std::complex<double>> modes_;  // node major, k = 0..K
    std::vector<double> kernel_;               // node major, then k, then probe
};

/// One-shot evaluation; build a LinearFieldEvaluator instead when sampling
/// many times.
FieldSample field_from_table(const AngleFourierTable& table, const OrbitModel& model,
                             double t, const std::vector<double>& rProbe,
                             int nGauss = 48, int workers = 1);

/// Refinement-doubling guard: analyzes f on the requested grid and on one
/// with half the nodes per direction, compares the t = 0 field on the probes,
/// and throws QuadratureFailure when the gap exceeds tol of the field scale.
void check_field_convergence(const std::function<double(double, double, double)>& f,
                             const effpot::SupportSpec& spec, const OrbitModel& model,
                             const std::vector<double>& rProbe, TableConfig cfg = {},
                             double tol = 0.02);

/// Rate of the free-streaming density at fixed probe radii: the v-integral
/// (1/2r^2) dL dw dtheta of the exact mode solution, with the angle part
/// integrated out and the (L, w) part on a per-probe Gauss-Legendre grid.
class DensityRateEvaluator {
public:
    DensityRateEvaluator(const std::function<double(double, double, double)>& f,
                         const effpot::SupportSpec& spec, std::vector<double> rProbe,
                         TableConfig cfg = {});

    /// d rho / dt at the probes at time t.
    std::vector<double> at(double t) const;
    /// rho itself, for finite-difference cross checks.
    std::vector<double> density_at(double t) const;

    const std::vector<double>& probes() const { return rProbe_; }

private:
    int K_ = 0;
    std::vector<double> rProbe_;
    std::vector<int> start_;                   // per-probe node offsets
    std::vector<double> angle_, omega_, weight_;
    std::vector<std::complex<double>> modes_;  // node major, k = 0..K
};

/// One-shot convenience for a single time.
std::vector<double> free_stream_density_rate(
    const std::function<double(double, double, double)>& f,
    const effpot::SupportSpec& spec, double t, const std::vector<double>& rProbe,
    TableConfig cfg = {});

}  // namespace kepmix::linflow
