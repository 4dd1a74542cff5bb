#pragma once

#include "kepmix/common.hpp"
#include "kepmix/effpot.hpp"

#include <vector>

namespace kepmix::vlasov {

/// A marker left the deposition grid; the support guarantee is broken upstream.
class MarkerOutOfGrid : public Error {
public:
    explicit MarkerOutOfGrid(const std::string& msg) : Error(msg) {}
};

/// A drift would move some marker across r = 0; the step is too large.
class StepRejected : public Error {
public:
    explicit StepRejected(const std::string& msg) : Error(msg) {}
};

/// Spherically reduced phase-space point. L is the squared angular momentum
/// |x|^2|v|^2 - (x.v)^2, constant along trajectories.
struct RadialState {
    double r = 0.0;
    double w = 0.0;
    double L = 0.0;
};

struct Marker {
    RadialState state;
    double weight = 0.0;  ///< f times the measure pi dL dw dr carried here
    double fValue = 0.0;  ///< value of f along this characteristic, never rewritten
};

struct MarkerEnsemble {
    std::vector<Marker> markers;
    int signCoupling = +1;  ///< +1 attractive self-field, -1 repulsive
    double totalMass = 0.0;
};

/// Uniform radial bins with sigma samples indexed by bin.
struct RadialGrid {
    double rLo = 0.0, rHi = 1.0;
    int nBins = 1;

    RadialGrid() = default;
    RadialGrid(double lo, double hi, int n);
    /// Default grid covering the support annulus with margin.
    static RadialGrid for_support(const effpot::SupportSpec& spec, int n = 512);

    double dr() const { return (rHi - rLo) / nBins; }
    double edge(int i) const { return rLo + dr() * i; }
    double center(int i) const { return rLo + dr() * (i + 0.5); }
};

/// Separable bump data f_in(H, L) = amplitude bump_p(H) bump_p(L) on the
/// support window, where bump_p(u) = (1 - u^2)^p on the normalized window.
struct BumpProfile {
    double amplitude = 1.0;
    int exponent = 3;
};

/// (1 - u^2)^p with u the position of x in [lo, hi] mapped to [-1, 1];
/// zero outside.
double bump_window(double x, double lo, double hi, int p);

double f_in(const effpot::SupportSpec& spec, const BumpProfile& prof,
            double H, double lsq);

struct GridCounts {
    int nH = 16, nL = 16, nQ = 32;
};

/// Markers on a midpoint tensor grid in (H, L, Q), placed by the closed-form
/// Kepler angle map, weighted with the dr dw = dQ dH / Omega Jacobian.
MarkerEnsemble init_ensemble(const effpot::SupportSpec& spec, const BumpProfile& prof,
                             GridCounts counts, int signCoupling = +1);

/// Cloud-in-cell deposition of sigma(r) = Int f dL dw onto bin centers;
/// sum over bins of sigma dr equals totalMass / pi.
std::vector<double> deposit_sigma(const MarkerEnsemble& ens, const RadialGrid& grid,
                                  int workers = 1);

/// Radial Poisson solve for piecewise-constant sigma. phi comes from the
/// double-integral representation, dphi independently from the enclosed-mass
/// form; with exact per-bin primitives the two agree identically.
effpot::FieldProfile solve_field(const std::vector<double>& sigma,
                                 const RadialGrid& grid, int signCoupling);

enum class PushMode { linear, nonlinear };

/// One kick-drift-kick step of r' = w, w' = L/r^3 - 1/r^2 - dphi(r).
/// Linear mode ignores the field. Negative dt steps backward.
void push(MarkerEnsemble& ens, const effpot::FieldProfile& field, double dt,
          PushMode mode, int workers = 1);

struct RunConfig {
    effpot::SupportSpec spec{0.05, 0.1, 0.5, 1.0};
    BumpProfile profile;
    GridCounts counts;
    PushMode mode = PushMode::nonlinear;
    int signCoupling = +1;
    int nBins = 512;
    double tEnd = 1.0;
    int outputEvery = 50;    ///< steps between snapshots
    double dtFactor = 0.02;  ///< step as a fraction of the fastest radial period
    int trackCount = 0;      ///< markers whose trajectories are recorded
    int workers = 1;
    bool storeEnsemble = false;
};

struct Snapshot {
    double time = 0.0;
    std::vector<double> sigma;
    effpot::FieldProfile field;
    double totalMass = 0.0;
    long supportViolations = 0;  ///< against the halved-margin window
    double supportMarginH = 0.0;
    std::vector<RadialState> tracked;
    std::vector<double> trackedEnergy;  ///< w^2/2 + L/(2r^2) - 1/r, plus phi when the field acts
    std::vector<Marker> ensemble;       ///< only when RunConfig::storeEnsemble
};

struct RunResult {
    RadialGrid grid;
    double dt = 0.0;
    std::vector<size_t> trackedIndex;
    std::vector<Snapshot> snapshots;
};

/// Self-consistent deposit / solve / push loop with snapshot capture.
RunResult run(const RunConfig& config);

}  // namespace kepmix::vlasov
