#pragma once

#include "kepmix/common.hpp"
#include "kepmix/effpot.hpp"
#include "kepmix/vlasov.hpp"

#include <vector>

namespace kepmix::diag {

/// The series to fit contains zero or negative values inside the window.
class NonPositiveValues : public Error {
public:
    explicit NonPositiveValues(const std::string& msg) : Error(msg) {}
};

/// Too few samples for the requested estimator.
class InsufficientSnapshots : public Error {
public:
    explicit InsufficientSnapshots(const std::string& msg) : Error(msg) {}
};

/// Result of a log-log power-law fit over a time window.
struct DecayFit {
    double t0 = 0.0, t1 = 0.0;
    double exponent = 0.0;  ///< slope of log|y| against log t
    double residual = 0.0;  ///< RMS of the fit residuals
    bool floorFlag = false; ///< tail slope flattened out: series hit a floor
};

/// rho(r) = pi sigma(r) / r^2 per bin.
std::vector<double> rho_of_r(const vlasov::MarkerEnsemble& ens,
                             const vlasov::RadialGrid& grid, int workers = 1);

/// Time derivative of phi at the probe radii from uniformly spaced snapshots:
/// centered differences inside, second-order one-sided at the ends.
/// Returns one row per snapshot.
std::vector<std::vector<double>>
dphi_dt_fd(const std::vector<effpot::FieldProfile>& fields, double cadence,
           const std::vector<double>& probes);

/// Least-squares power-law fit of y against t restricted to [t0, t1].
/// The window must satisfy t0 >= 1 and t1 > 2 t0 and contain at least
/// eight samples. floorFlag reports a flat (|slope| < 0.2) last quartile.
DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y,
                   double t0, double t1);

/// Central-difference determinant of d(Q_T, H)/d(r, w) at fixed L for the
/// orbit family of ctx; equals the radial frequency up to O(field) terms.
double jacobian_probe(const vlasov::RadialState& state,
                      const effpot::OrbitContext& ctx, double scale = 1e-4);

struct SupportReport {
    long violations = 0;         ///< markers with fValue != 0 outside the window
    double worstMarginH = 0.0;   ///< smallest distance of H to the window edges
    double worstMarginL = 0.0;   ///< smallest distance of L to the window edges
};

/// Checks every marker with nonzero fValue against the (H, L) window, with
/// H = w^2/2 + L/(2r^2) - 1/r + phi(r) for the supplied field.
SupportReport support_monitor(const vlasov::MarkerEnsemble& ens,
                              const effpot::SupportSpec& spec,
                              const effpot::FieldProfile& field = {});

}  // namespace kepmix::diag
