#include "kepmix/diag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kepmix::diag {

namespace {

const double FLOOR_SLOPE = 0.2;  // |tail slope| below this marks a floor

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 size_t lo, size_t hi) {
    const double n = static_cast<double>(hi - lo);
    double mx = 0.0, my = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double ss = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        const double e = y[i] - out.intercept - out.slope * x[i];
        ss += e * e;
    }
    out.rms = std::sqrt(ss / n);
    return out;
}

}  // namespace

std::vector<double> rho_of_r(const vlasov::MarkerEnsemble& ens,
                             const vlasov::RadialGrid& grid, int workers) {
    std::vector<double> rho = vlasov::deposit_sigma(ens, grid, workers);
    for (int i = 0; i < grid.nBins; ++i) {
        const double rc = grid.center(i);
        rho[i] *= PI / (rc * rc);
    }
    return rho;
}

std::vector<std::vector<double>>
dphi_dt_fd(const std::vector<effpot::FieldProfile>& fields, double cadence,
           const std::vector<double>& probes) {
    const size_t n = fields.size();
    if (n < 3)
        throw InsufficientSnapshots("dphi_dt_fd: need at least three snapshots");
    if (!(cadence > 0.0))
        throw effpot::InvalidSpec("dphi_dt_fd: cadence must be positive");

    std::vector<std::vector<double>> y(n, std::vector<double>(probes.size()));
    for (size_t s = 0; s < n; ++s)
        for (size_t p = 0; p < probes.size(); ++p)
            y[s][p] = fields[s].phi(probes[p]);

    const double inv = 1.0 / (2.0 * cadence);
    std::vector<std::vector<double>> out(n, std::vector<double>(probes.size()));
    for (size_t p = 0; p < probes.size(); ++p) {
        out[0][p] = (-3.0 * y[0][p] + 4.0 * y[1][p] - y[2][p]) * inv;
        for (size_t s = 1; s + 1 < n; ++s)
            out[s][p] = (y[s + 1][p] - y[s - 1][p]) * inv;
        out[n - 1][p] = (3.0 * y[n - 1][p] - 4.0 * y[n - 2][p] + y[n - 3][p]) * inv;
    }
    return out;
}

DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& y,
                   double t0, double t1) {
    if (t.size() != y.size())
        throw effpot::InvalidSpec("decay_fit: time and value arrays differ in size");
    if (!(t0 >= 1.0) || !(t1 > 2.0 * t0))
        throw effpot::InvalidSpec("decay_fit: window must satisfy t0 >= 1, t1 > 2 t0");

    std::vector<double> lt, ly;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t0 || t[i] > t1)
            continue;
        if (!(y[i] > 0.0))
            throw NonPositiveValues("decay_fit: series not positive inside the window");
        lt.push_back(std::log(t[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lt.size() < 8)
        throw InsufficientSnapshots("decay_fit: fewer than eight samples in the window");

    const LineFit full = fit_line(lt, ly, 0, lt.size());
    const size_t tail = std::max<size_t>(2, lt.size() / 4);
    const LineFit last = fit_line(lt, ly, lt.size() - tail, lt.size());

    DecayFit out;
    out.t0 = t0;
    out.t1 = t1;
    out.exponent = full.slope;
    out.residual = full.rms;
    out.floorFlag = std::fabs(last.slope) < FLOOR_SLOPE;
    return out;
}

double jacobian_probe(const vlasov::RadialState& state,
                      const effpot::OrbitContext& ctx, double scale) {
    const double lsq = state.L;
    const double H = 0.5 * state.w * state.w + ctx.effective_potential(state.r, lsq);
    const effpot::OrbitGeometry& geo = ctx.orbit(H, lsq);
    const double span = geo.rMax - geo.rMin;
    if (state.r - geo.rMin < 1e-3 * span || geo.rMax - state.r < 1e-3 * span)
        throw effpot::OutOfOrbit("jacobian_probe: state too close to a turning radius");

    const double rMid = 0.5 * (geo.rMin + geo.rMax);
    const double wChar =
        std::sqrt(2.0 * std::max(H - ctx.effective_potential(rMid, lsq), 1e-12));
    const double hr = scale * span;
    const double hw = scale * wChar;

    auto angle = [&](double r, double w) { return ctx.angle(r, w, lsq); };
    auto energy = [&](double r, double w) {
        return 0.5 * w * w + ctx.effective_potential(r, lsq);
    };
    const double dQdr =
        wrap_angle(angle(state.r + hr, state.w) - angle(state.r - hr, state.w)) / (2.0 * hr);
    const double dQdw =
        wrap_angle(angle(state.r, state.w + hw) - angle(state.r, state.w - hw)) / (2.0 * hw);
    const double dHdr =
        (energy(state.r + hr, state.w) - energy(state.r - hr, state.w)) / (2.0 * hr);
    const double dHdw =
        (energy(state.r, state.w + hw) - energy(state.r, state.w - hw)) / (2.0 * hw);
    return dQdr * dHdw - dQdw * dHdr;
}

SupportReport support_monitor(const vlasov::MarkerEnsemble& ens,
                              const effpot::SupportSpec& spec,
                              const effpot::FieldProfile& field) {
    SupportReport out;
    double worstH = std::numeric_limits<double>::infinity();
    double worstL = std::numeric_limits<double>::infinity();
    bool any = false;
    for (const vlasov::Marker& m : ens.markers) {
        if (m.fValue == 0.0)
            continue;
        any = true;
        const vlasov::RadialState& s = m.state;
        const double H = 0.5 * s.w * s.w + 0.5 * s.L / (s.r * s.r) - 1.0 / s.r +
                         field.phi(s.r);
        const double marginH = std::min(H - spec.hLo(s.L), spec.hHi() - H);
        const double marginL = std::min(s.L - spec.l1, spec.l2 - s.L);
        if (marginH < 0.0 || marginL < 0.0)
            ++out.violations;
        worstH = std::min(worstH, marginH);
        worstL = std::min(worstL, marginL);
    }
    if (any) {
        out.worstMarginH = worstH;
        out.worstMarginL = worstL;
    }
    return out;
}

}  // namespace kepmix::diag
