#include "kepmix/effpot.hpp"
#include "kepmix/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <tuple>

namespace kepmix::effpot {

namespace {

const double ROOT_WIDTH   = 1e-13;  // bisection width for turning radii
const double DEGEN_REL    = 1e-14;  // relative energy gap below which an orbit counts as circular
const int    BRACKET_WALK = 60;     // geometric widening attempts for a failed bracket

}  // namespace

// ---------------------------------------------------------------- FieldProfile

FieldProfile::FieldProfile(std::vector<double> r, std::vector<double> phi,
                           std::vector<double> dphi)
    : r_(std::move(r)), phi_(std::move(phi)), dphi_(std::move(dphi)) {
    if (r_.size() < 2 || phi_.size() != r_.size() || dphi_.size() != r_.size())
        throw InvalidSpec("FieldProfile: need matching arrays with at least two nodes");
    if (!(r_.front() > 0.0))
        throw InvalidSpec("FieldProfile: grid must start at positive radius");
    for (size_t i = 0; i + 1 < r_.size(); ++i)
        if (!(r_[i] < r_[i + 1]))
            throw InvalidSpec("FieldProfile: grid must be strictly increasing");
    for (size_t i = 0; i < r_.size(); ++i)
        if (!std::isfinite(phi_[i]) || !std::isfinite(dphi_[i]))
            throw InvalidSpec("FieldProfile: non-finite sample");
}

size_t FieldProfile::locate(double r) const {
    size_t hi = std::upper_bound(r_.begin(), r_.end(), r) - r_.begin();
    return std::min(std::max<size_t>(hi, 1) - 1, r_.size() - 2);
}

double FieldProfile::phi(double r) const {
    if (empty() || r < r_.front() || r > r_.back())
        return 0.0;
    const size_t i = locate(r);
    const double h = r_[i + 1] - r_[i], t = (r - r_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * phi_[i] + (t3 - 2 * t2 + t) * h * dphi_[i]
         + (-2 * t3 + 3 * t2) * phi_[i + 1] + (t3 - t2) * h * dphi_[i + 1];
}

double FieldProfile::dphi(double r) const {
    if (empty() || r < r_.front() || r > r_.back())
        return 0.0;
    const size_t i = locate(r);
    const double h = r_[i + 1] - r_[i], t = (r - r_[i]) / h;
    const double t2 = t * t;
    return (6 * t2 - 6 * t) / h * (phi_[i] - phi_[i + 1])
         + (3 * t2 - 4 * t + 1) * dphi_[i] + (3 * t2 - 2 * t) * dphi_[i + 1];
}

// ---------------------------------------------------------------- OrbitContext

OrbitContext::OrbitContext(FieldProfile field, SupportSpec spec, QuadratureConfig cfg)
    : field_(std::move(field)), spec_(spec), cfg_(cfg) {
    if (!(spec_.l1 > 0.0 && spec_.l1 < spec_.l2))
        throw InvalidSpec("OrbitContext: need 0 < l1 < l2");
    if (!(spec_.h > 0.0 && spec_.c > 0.0))
        throw InvalidSpec("OrbitContext: need positive window margins c, h");
    if (!(spec_.hLo(spec_.l2) < spec_.hHi()))
        throw InvalidSpec("OrbitContext: empty energy window at l2");
    if (cfg_.nGauss < 4 || cfg_.nMarginGrid < 2)
        throw InvalidSpec("OrbitContext: quadrature configuration too coarse");
    compute_margins();
}

double OrbitContext::effective_potential(double r, double lsq) const {
    return 0.5 * lsq / (r * r) - 1.0 / r + field_.phi(r);
}

double OrbitContext::dU_dr(double r, double lsq) const {
    return -lsq / (r * r * r) + 1.0 / (r * r) + field_.dphi(r);
}

std::pair<double, double> OrbitContext::turning_points(double H, double lsq) const {
    if (!(H < 0.0))
        throw DegenerateOrbit("turning_points: unbound energy");
    if (!(lsq > 0.0))
        throw DegenerateOrbit("turning_points: vanishing angular momentum");

    // any radius with U < H separates the two roots; the circular radius of
    // the bare problem is the natural first candidate
    double rStar = lsq;
    if (!(effective_potential(rStar, lsq) < H)) {
        double best = rStar, bestU = effective_potential(rStar, lsq);
        for (int i = 0; i <= 256; ++i) {
            const double r = 0.45 * spec_.l1 * std::pow(2.4 / (0.45 * spec_.l1 * spec_.h), i / 256.0);
            const double u = effective_potential(r, lsq);
            if (u < bestU) {
                best = r;
                bestU = u;
            }
        }
        if (!(bestU < H - DEGEN_REL * std::fabs(H)))
            throw DegenerateOrbit("turning_points: no radial oscillation at this energy");
        rStar = best;
    }

    double lo = std::min(0.45 * spec_.l1, 0.5 * rStar);
    for (int i = 0; !(effective_potential(lo, lsq) > H); ++i) {
        if (i >= BRACKET_WALK)
            throw RootBracketFailure("turning_points: no inner bracket");
        lo *= 0.7;
    }
    double hi = std::max(1.1 / spec_.h, 2.0 * rStar);
    for (int i = 0; !(effective_potential(hi, lsq) > H); ++i) {
        if (i >= BRACKET_WALK)
            throw RootBracketFailure("turning_points: no outer bracket");
        hi *= 1.4;
    }

    auto bisect = [&](double a, double b) {
        // U(a) > H > is not assumed; only that H - U changes sign on [a, b]
        double fa = H - effective_potential(a, lsq);
        while (b - a > ROOT_WIDTH) {
            const double m = 0.5 * (a + b);
            const double fm = H - effective_potential(m, lsq);
            if ((fa <= 0.0) == (fm <= 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };
    return {bisect(lo, rStar), bisect(rStar, hi)};
}

double OrbitContext::turning_piece(double lsq, double rTurn, double rReg) const {
    // Int drho / sqrt(H - U) between a turning radius and a regular one.
    // rho = rTurn + (rReg - rTurn) sin^2(theta) clusters nodes at the
    // turning end, where the simple zero of H - U cancels against the
    // sin(theta) of the volume factor and the integrand stays smooth.
    // Writing H - U as U(rTurn) - U(rho) pins the zero to the anchor even
    // though the root carries bisection error, at the cost of an energy
    // offset on the order of roundoff.
    const double delta = rReg - rTurn;
    if (delta == 0.0)
        return 0.0;
    const double uTurn = effective_potential(rTurn, lsq);
    return integrate_gl(
        [&](double th) {
            const double s = std::sin(th), c = std::cos(th);
            const double rho = rTurn + delta * s * s;
            const double g = uTurn - effective_potential(rho, lsq);
            return 2.0 * std::fabs(delta) * s * c /
                   std::sqrt(std::max(g, 1e-30));
        },
        0.0, 0.5 * PI, cfg_.nGauss);
}

OrbitGeometry OrbitContext::make_orbit(double H, double lsq) const {
    OrbitGeometry geo;
    geo.H = H;
    geo.Lsq = lsq;
    std::tie(geo.rMin, geo.rMax) = turning_points(H, lsq);
    geo.splitLo = lsq - 0.5 * marginB_;
    geo.splitHi = lsq + 0.5 * marginB_;
    if (!(geo.rMin < geo.splitLo && geo.splitHi < geo.rMax))
        throw QuadratureFailure("make_orbit: turning radii inside the split window; "
                                "orbit too close to circular for the configured margins");
    if (!(effective_potential(geo.splitLo, lsq) < H &&
          effective_potential(geo.splitHi, lsq) < H))
        throw QuadratureFailure("make_orbit: split radius is classically forbidden");

    geo.innerTime = turning_piece(lsq, geo.rMin, geo.splitLo);
    const double mid = integrate_gl(
        [&](double rho) { return 1.0 / std::sqrt(H - effective_potential(rho, lsq)); },
        geo.splitLo, geo.splitHi, cfg_.nGauss);
    geo.midTime = geo.innerTime + mid;
    const double outer = turning_piece(lsq, geo.rMax, geo.splitHi);
    geo.period = 2.0 * (geo.midTime + outer);
    geo.frequency = 2.0 * std::sqrt(2.0) * PI / geo.period;
    return geo;
}

const OrbitGeometry& OrbitContext::orbit(double H, double lsq) const {
    const std::pair<double, double> key{H, lsq};
    {
        std::shared_lock lock(cacheMutex_);
        auto it = cache_.find(key);
        if (it != cache_.end())
            return *it->second;
    }
    auto geo = std::make_unique<OrbitGeometry>(make_orbit(H, lsq));
    std::unique_lock lock(cacheMutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(geo));
    return *it->second;
}

double OrbitContext::radial_period(double H, double lsq) const {
    return orbit(H, lsq).period;
}

double OrbitContext::frequency(double H, double lsq) const {
    return orbit(H, lsq).frequency;
}

std::array<double, 2> OrbitContext::frequency_gradient(double H, double lsq) const {
    const double hH = 1e-4 * std::max(std::fabs(H), 0.1);
    const double hL = 1e-4 * std::max(lsq, 0.1);
    const double dH = (make_orbit(H + hH, lsq).frequency -
                       make_orbit(H - hH, lsq).frequency) / (2.0 * hH);
    const double dL = (make_orbit(H, lsq + hL).frequency -
                       make_orbit(H, lsq - hL).frequency) / (2.0 * hL);
    return {dH, dL};
}

double OrbitContext::angle_on(const OrbitGeometry& geo, double r, double w) const {
    const double rc = std::clamp(r, geo.rMin, geo.rMax);
    if (std::fabs(rc - r) > 1e-6 * std::max(1.0, geo.rMax))
        throw OutOfOrbit("angle: radius outside the orbit of this geometry");

    // Within a whisker of a turning radius the radial offset is dominated by
    // root-finding error while w is exact on shell, so the leading-order
    // relation t = sqrt(2)|w| / |dU/dr| gives the time increment instead.
    const double whisker = 1e-8 * std::max(1.0, geo.rMax);
    double time;  // Int_{rMin}^{r} drho / sqrt(H - U)
    if (rc - geo.rMin < whisker) {
        time = std::sqrt(2.0) * std::fabs(w) / std::fabs(dU_dr(geo.rMin, geo.Lsq));
    } else if (geo.rMax - rc < whisker) {
        time = 0.5 * geo.period -
               std::sqrt(2.0) * std::fabs(w) / std::fabs(dU_dr(geo.rMax, geo.Lsq));
    } else if (rc <= geo.splitLo) {
        time = turning_piece(geo.Lsq, geo.rMin, rc);
    } else if (rc <= geo.splitHi) {
        time = geo.innerTime + integrate_gl(
            [&](double rho) {
                return 1.0 / std::sqrt(geo.H - effective_potential(rho, geo.Lsq));
            },
            geo.splitLo, rc, cfg_.nGauss);
    } else {
        time = 0.5 * geo.period - turning_piece(geo.Lsq, geo.rMax, rc);
    }
    const double qt = TWO_PI * time / geo.period;
    return wrap_angle(w >= 0.0 ? qt : -qt);
}

double OrbitContext::angle(double r, double w, double lsq) const {
    if (!(r > 0.0))
        throw OutOfOrbit("angle: nonpositive radius");
    const double H = 0.5 * w * w + effective_potential(r, lsq);
    if (!(H < 0.0))
        throw OutOfOrbit("angle: unbound state");
    return angle_on(orbit(H, lsq), r, w);
}

void OrbitContext::compute_margins() {
    const int n = cfg_.nMarginGrid;
    std::vector<double> hs(n * n), ls(n * n), rlo(n * n), rhi(n * n);
    double bRaw = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double lsq = spec_.l1 + (spec_.l2 - spec_.l1) * i / (n - 1.0);
        for (int j = 0; j < n; ++j) {
            const double H = spec_.hLo(lsq) +
                             (spec_.hHi() - spec_.hLo(lsq)) * j / (n - 1.0);
            auto [rm, rp] = turning_points(H, lsq);
            const int k = i * n + j;
            hs[k] = H; ls[k] = lsq; rlo[k] = rm; rhi[k] = rp;
            bRaw = std::min({bRaw, lsq - rm, rp - lsq});
        }
    }
    if (!(bRaw > 0.0))
        throw InvalidSpec("OrbitContext: support window reaches circular orbits");
    marginB_ = 0.5 * bRaw;

    // slope floor away from the circular radius, energy gap near it
    double dRaw = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n * n; ++k) {
        for (int s = 0; s <= 64; ++s) {
            const double r = rlo[k] + (rhi[k] - rlo[k]) * s / 64.0;
            if (std::fabs(r - ls[k]) >= 0.5 * marginB_)
                dRaw = std::min(dRaw, std::fabs(dU_dr(r, ls[k])));
            else
                dRaw = std::min(dRaw, hs[k] - effective_potential(r, ls[k]));
        }
    }
    marginD_ = 0.5 * dRaw;
    if (!(marginD_ > 0.0))
        throw InvalidSpec("OrbitContext: degenerate slope margin on the support window");
}

}  // namespace kepmix::effpot
