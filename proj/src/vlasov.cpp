#include "kepmix/vlasov.hpp"

#include "kepmix/diag.hpp"
#include "kepmix/kepler.hpp"
#include "kepmix/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kepmix::vlasov {

namespace {

double kepler_energy(const RadialState& s) {
    return 0.5 * s.w * s.w + 0.5 * s.L / (s.r * s.r) - 1.0 / s.r;
}

}  // namespace

RadialGrid::RadialGrid(double lo, double hi, int n) : rLo(lo), rHi(hi), nBins(n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw effpot::InvalidSpec("RadialGrid: need 0 < rLo < rHi and at least two bins");
}

RadialGrid RadialGrid::for_support(const effpot::SupportSpec& spec, int n) {
    return {0.45 * spec.l1, 2.2 / spec.h, n};
}

double bump_window(double x, double lo, double hi, int p) {
    const double u = (2.0 * x - lo - hi) / (hi - lo);
    const double g = 1.0 - u * u;
    return g > 0.0 ? std::pow(g, p) : 0.0;
}

double f_in(const effpot::SupportSpec& spec, const BumpProfile& prof,
            double H, double lsq) {
    return prof.amplitude * bump_window(H, spec.hLo(lsq), spec.hHi(), prof.exponent) *
           bump_window(lsq, spec.l1, spec.l2, prof.exponent);
}

MarkerEnsemble init_ensemble(const effpot::SupportSpec& spec, const BumpProfile& prof,
                             GridCounts counts, int signCoupling) {
    if (counts.nH < 2 || counts.nL < 2 || counts.nQ < 2)
        throw effpot::InvalidSpec("init_ensemble: need at least two cells per axis");
    if (!(spec.l1 > 0.0 && spec.l1 < spec.l2) || !(spec.hLo(spec.l2) < spec.hHi()))
        throw effpot::InvalidSpec("init_ensemble: empty support window");
    if (signCoupling != 1 && signCoupling != -1)
        throw effpot::InvalidSpec("init_ensemble: signCoupling must be +1 or -1");
    if (prof.exponent < 1)
        throw effpot::InvalidSpec("init_ensemble: bump exponent must be positive");

    MarkerEnsemble ens;
    ens.signCoupling = signCoupling;
    ens.markers.reserve(static_cast<size_t>(counts.nH) * counts.nL * counts.nQ);
    const double dL = (spec.l2 - spec.l1) / counts.nL;
    const double dQ = TWO_PI / counts.nQ;
    for (int j = 0; j < counts.nL; ++j) {
        const double lsq = spec.l1 + dL * (j + 0.5);
        const double hLo = spec.hLo(lsq);
        const double dH = (spec.hHi() - hLo) / counts.nH;
        for (int i = 0; i < counts.nH; ++i) {
            const double H = hLo + dH * (i + 0.5);
            const double f = f_in(spec, prof, H, lsq);
            // dr dw = dQ dH / Omega at fixed L, so each cell carries
            // f * pi * dL * dH * dQ / Omega of the measure
            const double omega = std::pow(-2.0 * H, 1.5);
            const double wgt = f * PI * dL * dH * dQ / omega;
            for (int k = 0; k < counts.nQ; ++k) {
                const double Q = -PI + dQ * (k + 0.5);
                Marker m;
                kepler::kepler_radial_state(H, lsq, Q, m.state.r, m.state.w);
                m.state.L = lsq;
                m.weight = wgt;
                m.fValue = f;
                ens.totalMass += m.weight;
                ens.markers.push_back(m);
            }
        }
    }
    return ens;
}

std::vector<double> deposit_sigma(const MarkerEnsemble& ens, const RadialGrid& grid,
                                  int workers) {
    const int n = grid.nBins;
    const double dr = grid.dr();
    std::vector<std::vector<double>> partials(std::max(workers, 1),
                                              std::vector<double>(n, 0.0));
    parallel_chunks(ens.markers.size(), workers, [&](size_t k, size_t b, size_t e) {
        auto& bins = partials[k];
        for (size_t idx = b; idx < e; ++idx) {
            const Marker& m = ens.markers[idx];
            const double x = (m.state.r - grid.rLo) / dr - 0.5;
            const double fi = std::floor(x);
            const int i0 = static_cast<int>(fi);
            const double frac = x - fi;
            const double wgt = m.weight / PI;
            if (i0 >= 0 && i0 + 1 < n) {
                bins[i0] += wgt * (1.0 - frac);
                bins[i0 + 1] += wgt * frac;
            } else if (i0 + 1 == n && frac == 0.0) {
                bins[i0] += wgt;
            } else {
                throw MarkerOutOfGrid("deposit_sigma: marker radius outside the grid");
            }
        }
    });
    std::vector<double> sigma(n, 0.0);
    for (const auto& bins : partials)
        for (int i = 0; i < n; ++i)
            sigma[i] += bins[i];
    for (double& s : sigma)
        s /= dr;
    return sigma;
}

effpot::FieldProfile solve_field(const std::vector<double>& sigma,
                                 const RadialGrid& grid, int signCoupling) {
    const int n = grid.nBins;
    if (static_cast<int>(sigma.size()) != n)
        throw effpot::InvalidSpec("solve_field: sigma does not match the grid");
    for (double s : sigma)
        if (!(s >= 0.0))
            throw effpot::InvalidSpec("solve_field: sigma must be nonnegative");

    // exact primitives of the piecewise-constant sigma:
    //   m(r) = Int_0^r sigma,  G(r) = Int_r^inf sigma/r1,  P(r) = Int_0^r G,
    // related by P = r G + m, which keeps the double-integral phi and the
    // enclosed-mass dphi exactly consistent
    const double dr = grid.dr();
    std::vector<double> mE(n + 1, 0.0), gE(n + 1, 0.0), pE(n + 1, 0.0);
    for (int i = 0; i < n; ++i)
        mE[i + 1] = mE[i] + sigma[i] * dr;
    for (int i = n - 1; i >= 0; --i)
        gE[i] = gE[i + 1] + sigma[i] * std::log(grid.edge(i + 1) / grid.edge(i));
    pE[0] = grid.edge(0) * gE[0];
    for (int i = 0; i < n; ++i) {
        const double a = grid.edge(i), b = grid.edge(i + 1);
        pE[i + 1] = pE[i] + gE[i + 1] * dr + sigma[i] * (b - a - a * std::log(b / a));
    }

    std::vector<double> rs(n + 1), phi(n + 1), dphi(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double r = grid.edge(i);
        rs[i] = r;
        phi[i] = -signCoupling * PI * pE[i] / r;
        dphi[i] = signCoupling * PI * mE[i] / (r * r);
    }
    return {std::move(rs), std::move(phi), std::move(dphi)};
}

void push(MarkerEnsemble& ens, const effpot::FieldProfile& field, double dt,
          PushMode mode, int workers) {
    if (dt == 0.0)
        throw effpot::InvalidSpec("push: zero step");
    const bool selfField = (mode == PushMode::nonlinear);
    auto accel = [&](double r, double lsq) {
        double a = lsq / (r * r * r) - 1.0 / (r * r);
        if (selfField)
            a -= field.dphi(r);
        return a;
    };
    parallel_chunks(ens.markers.size(), workers, [&](size_t, size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            RadialState& s = ens.markers[i].state;
            const double wHalf = s.w + 0.5 * dt * accel(s.r, s.L);
            const double rNew = s.r + dt * wHalf;
            if (!(rNew > 0.0))
                throw StepRejected("push: a marker would cross r = 0; reduce dt");
            s.r = rNew;
            s.w = wHalf + 0.5 * dt * accel(rNew, s.L);
        }
    });
}

RunResult run(const RunConfig& config) {
    MarkerEnsemble ens =
        init_ensemble(config.spec, config.profile, config.counts, config.signCoupling);

    RunResult out;
    out.grid = RadialGrid::for_support(config.spec, config.nBins);

    double minPeriod = std::numeric_limits<double>::infinity();
    for (const Marker& m : ens.markers)
        minPeriod = std::min(minPeriod,
                             TWO_PI * std::pow(-2.0 * kepler_energy(m.state), -1.5));
    out.dt = config.dtFactor * minPeriod;
    const long nSteps =
        config.tEnd > 0.0
            ? static_cast<long>(std::ceil(config.tEnd / out.dt - 1e-12))
            : 0;

    if (config.trackCount > 0 && !ens.markers.empty()) {
        const size_t stride = std::max<size_t>(1, ens.markers.size() / config.trackCount);
        for (size_t i = 0;
             i < ens.markers.size() && out.trackedIndex.size() < static_cast<size_t>(config.trackCount);
             i += stride)
            out.trackedIndex.push_back(i);
    }

    const effpot::SupportSpec halved{0.5 * config.spec.c, 0.5 * config.spec.h,
                                     config.spec.l1, config.spec.l2};
    const bool selfField = (config.mode == PushMode::nonlinear);

    auto capture = [&](double t, std::vector<double> sigma,
                       const effpot::FieldProfile& field) {
        Snapshot snap;
        snap.time = t;
        snap.sigma = std::move(sigma);
        snap.field = field;
        snap.totalMass = ens.totalMass;
        const auto report = diag::support_monitor(
            ens, halved, selfField ? field : effpot::FieldProfile{});
        snap.supportViolations = report.violations;
        snap.supportMarginH = report.worstMarginH;
        snap.tracked.reserve(out.trackedIndex.size());
        for (size_t idx : out.trackedIndex) {
            const RadialState& s = ens.markers[idx].state;
            snap.tracked.push_back(s);
            snap.trackedEnergy.push_back(kepler_energy(s) +
                                         (selfField ? field.phi(s.r) : 0.0));
        }
        if (config.storeEnsemble)
            snap.ensemble = ens.markers;
        out.snapshots.push_back(std::move(snap));
    };

    std::vector<double> sigma = deposit_sigma(ens, out.grid, config.workers);
    effpot::FieldProfile field = solve_field(sigma, out.grid, config.signCoupling);
    capture(0.0, sigma, field);

    for (long step = 1; step <= nSteps; ++step) {
        push(ens, field, out.dt, config.mode, config.workers);
        const bool wantSnap =
            (config.outputEvery > 0 && step % config.outputEvery == 0) || step == nSteps;
        if (selfField || wantSnap) {
            sigma = deposit_sigma(ens, out.grid, config.workers);
            field = solve_field(sigma, out.grid, config.signCoupling);
        }
        if (wantSnap)
            capture(step * out.dt, sigma, field);
    }
    return out;
}

}  // namespace kepmix::vlasov
