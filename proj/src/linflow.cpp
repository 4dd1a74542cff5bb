#include "kepmix/linflow.hpp"

#include "kepmix/kepler.hpp"
#include "kepmix/parallel.hpp"
#include "kepmix/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace kepmix::linflow {

namespace {

const double SPECTRAL_TAIL_TOL = 1e-16;

/// Coefficients of e^{ikQ}, k = 0..kMax, from nQ midpoint angle samples.
std::vector<std::complex<double>> angle_modes(
    const std::function<double(double, double, double)>& f, double H, double M,
    int nQ, int kMax) {
    std::vector<std::complex<double>> out(kMax + 1, 0.0);
    const double step = TWO_PI / nQ;
    for (int s = 0; s < nQ; ++s) {
        const double q = -PI + (s + 0.5) * step;
        const double val = f(q, H, M);
        if (val == 0.0)
            continue;
        const std::complex<double> z = std::polar(1.0, -q);
        std::complex<double> zk{1.0, 0.0};
        for (int k = 0; k <= kMax; ++k) {
            out[k] += val * zk;
            zk *= z;
        }
    }
    for (auto& c : out)
        c *= 1.0 / nQ;
    return out;
}

}  // namespace

double KeplerOrbitModel::frequency(double H, double) const {
    if (!(H < 0.0))
        throw DegenerateOrbit("frequency: orbit is unbound");
    return std::pow(-2.0 * H, 1.5);
}

std::pair<double, double> KeplerOrbitModel::turning_radii(double H, double lsq) const {
    if (!(H < 0.0))
        throw DegenerateOrbit("turning_radii: orbit is unbound");
    const double eccSq = 1.0 + 2.0 * H * lsq;
    if (!(eccSq >= 0.0))
        throw DegenerateOrbit("turning_radii: no orbit at this angular momentum");
    const double ecc = std::sqrt(eccSq);
    const double a = -0.5 / H;
    return {a * (1.0 - ecc), a * (1.0 + ecc)};
}

double KeplerOrbitModel::effective_potential(double r, double lsq) const {
    return 0.5 * lsq / (r * r) - 1.0 / r;
}

double KeplerOrbitModel::angle(double H, double lsq, double r, double w) const {
    return kepler::kepler_radial_angle(H, lsq, r, w);
}

void KeplerOrbitModel::radial_state(double H, double lsq, double Q, double& r,
                                    double& w) const {
    kepler::kepler_radial_state(H, lsq, Q, r, w);
}

double FrozenOrbitModel::frequency(double H, double lsq) const {
    return ctx_->frequency(H, lsq);
}

std::pair<double, double> FrozenOrbitModel::turning_radii(double H, double lsq) const {
    const auto& geo = ctx_->orbit(H, lsq);
    return {geo.rMin, geo.rMax};
}

double FrozenOrbitModel::effective_potential(double r, double lsq) const {
    return ctx_->effective_potential(r, lsq);
}

double FrozenOrbitModel::angle(double H, double lsq, double r, double w) const {
    return ctx_->angle_on(ctx_->orbit(H, lsq), r, w);
}

void FrozenOrbitModel::radial_state(double H, double lsq, double Q, double& r,
                                    double& w) const {
    const auto& geo = ctx_->orbit(H, lsq);
    const double q = std::fabs(wrap_angle(Q));
    double lo = geo.rMin, hi = geo.rMax;
    // the outbound angle grows monotonically from 0 at rMin to pi at rMax
    while (hi - lo > 1e-15 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        const double wm = std::sqrt(
            2.0 * std::max(H - ctx_->effective_potential(mid, lsq), 0.0));
        if (ctx_->angle_on(geo, mid, wm) < q)
            lo = mid;
        else
            hi = mid;
    }
    r = 0.5 * (lo + hi);
    const double wm =
        std::sqrt(2.0 * std::max(H - ctx_->effective_potential(r, lsq), 0.0));
    w = wrap_angle(Q) >= 0.0 ? wm : -wm;
}

AngleFourierTable::AngleFourierTable(
    const std::function<double(double, double, double)>& f,
    const effpot::SupportSpec& spec, TableConfig cfg)
    : cfg_(cfg), spec_(spec) {
    if (cfg.K < 1 || cfg.nH < 2 || cfg.nM < 2 || cfg.workers < 1)
        throw effpot::InvalidSpec("AngleFourierTable: nonpositive sizes");
    if (cfg.nQ < 4 * cfg.K + 2)
        throw effpot::InvalidSpec(
            "AngleFourierTable: nQ must resolve the checked band up to 2K");
    if (!(spec.l1 > 0.0 && spec.l1 < spec.l2 && spec.hLo(spec.l2) < spec.hHi()))
        throw effpot::InvalidSpec("AngleFourierTable: empty support window");

    const auto& glH = gauss_legendre(cfg.nH);
    const auto& glM = gauss_legendre(cfg.nM);
    const int N = cfg.nH * cfg.nM;
    hNodes_.resize(N);
    mNodes_.resize(N);
    weights_.resize(N);
    const double mMid = 0.5 * (spec.l1 + spec.l2);
    const double mHalf = 0.5 * (spec.l2 - spec.l1);
    for (int j = 0; j < cfg.nM; ++j) {
        const double m = mMid + mHalf * glM.node[j];
        const double hMid = 0.5 * (spec.hLo(m) + spec.hHi());
        const double hHalf = 0.5 * (spec.hHi() - spec.hLo(m));
        for (int i = 0; i < cfg.nH; ++i) {
            const int n = j * cfg.nH + i;
            hNodes_[n] = hMid + hHalf * glH.node[i];
            mNodes_[n] = m;
            weights_[n] = glM.weight[j] * mHalf * glH.weight[i] * hHalf;
        }
    }

    // analyze out to 2K so the band above the cutoff can be inspected
    const int kMax = 2 * cfg.K;
    modes_.assign(static_cast<size_t>(cfg.K + 1) * N, 0.0);
    const int nw = std::max(cfg.workers, 1);
    std::vector<double> bandMass(nw, 0.0), totalMass(nw, 0.0);
    parallel_chunks(N, nw, [&](std::size_t wk, std::size_t b, std::size_t e) {
        for (std::size_t n = b; n < e; ++n) {
            const auto h = angle_modes(f, hNodes_[n], mNodes_[n], cfg_.nQ, kMax);
            double inside = std::norm(h[0]), beyond = 0.0;
            for (int k = 1; k <= kMax; ++k)
                (k <= cfg_.K ? inside : beyond) += 2.0 * std::norm(h[k]);
            bandMass[wk] += weights_[n] * beyond;
            totalMass[wk] += weights_[n] * (inside + beyond);
            for (int k = 0; k <= cfg_.K; ++k)
                modes_[static_cast<size_t>(k) * N + n] = h[k];
        }
    });
    double band = 0.0, total = 0.0;
    for (int wk = 0; wk < nw; ++wk) {
        band += bandMass[wk];
        total += totalMass[wk];
    }
    if (band > SPECTRAL_TAIL_TOL * total)
        throw effpot::InvalidSpec(
            "AngleFourierTable: spectral mass beyond the mode cutoff; raise K");
}

std::complex<double> AngleFourierTable::mode(int k, int n) const {
    const int N = nodes();
    const std::complex<double> c = modes_[static_cast<size_t>(std::abs(k)) * N + n];
    return k >= 0 ? c : std::conj(c);
}

double AngleFourierTable::spectral_mass() const {
    const int N = nodes();
    double total = 0.0;
    for (int n = 0; n < N; ++n) {
        double s = std::norm(modes_[n]);
        for (int k = 1; k <= cfg_.K; ++k)
            s += 2.0 * std::norm(modes_[static_cast<size_t>(k) * N + n]);
        total += weights_[n] * s;
    }
    return total;
}

AngleFourierTable AngleFourierTable::with_modes(
    std::vector<std::complex<double>> modes) const {
    if (modes.size() != modes_.size())
        throw effpot::InvalidSpec("with_modes: coefficient count does not match");
    AngleFourierTable out = *this;
    out.modes_ = std::move(modes);
    return out;
}

AngleFourierTable semigroup_apply(const AngleFourierTable& table, double t,
                                  const OrbitModel& model) {
    AngleFourierTable out = table;
    const int N = out.nodes(), K = out.cfg_.K;
    for (int n = 0; n < N; ++n) {
        const double om = model.frequency(out.hNodes_[n], out.mNodes_[n]);
        for (int k = 1; k <= K; ++k)
            out.modes_[static_cast<size_t>(k) * N + n] *= std::polar(1.0, -k * om * t);
    }
    return out;
}

LinearFieldEvaluator::LinearFieldEvaluator(const AngleFourierTable& table,
                                           const OrbitModel& model,
                                           std::vector<double> rProbe, int nGauss,
                                           int workers)
    : K_(table.cutoff()), rProbe_(std::move(rProbe)) {
    if (rProbe_.empty())
        throw effpot::InvalidSpec("LinearFieldEvaluator: no probe radii");
    for (double r : rProbe_)
        if (!(r > 0.0))
            throw effpot::InvalidSpec("LinearFieldEvaluator: nonpositive probe radius");
    if (nGauss < 2)
        throw effpot::InvalidSpec("LinearFieldEvaluator: nGauss below 2");

    const int N = table.nodes();
    const int P = static_cast<int>(rProbe_.size());
    omega_.resize(N);
    weight_.resize(N);
    modes_.resize(static_cast<size_t>(N) * (K_ + 1));
    for (int n = 0; n < N; ++n) {
        weight_[n] = table.weight(n);
        for (int k = 0; k <= K_; ++k)
            modes_[static_cast<size_t>(n) * (K_ + 1) + k] = table.mode(k, n);
    }
    kernel_.assign(static_cast<size_t>(N) * (K_ + 1) * P, 0.0);

    const auto& gl = gauss_legendre(nGauss);
    parallel_chunks(N, workers, [&](std::size_t, std::size_t b, std::size_t e) {
        std::vector<double> inv(P);
        for (std::size_t n = b; n < e; ++n) {
            const double H = table.hNode(static_cast<int>(n));
            const double M = table.mNode(static_cast<int>(n));
            const double om = model.frequency(H, M);
            omega_[n] = om;
            const auto [ra, rb] = model.turning_radii(H, M);
            const double sa = ra + 0.25 * (rb - ra);
            const double sb = rb - 0.25 * (rb - ra);
            const double uLo = model.effective_potential(ra, M);
            const double uHi = model.effective_potential(rb, M);
            double* G = &kernel_[n * (K_ + 1) * P];

            auto add_point = [&](double rho, double fac, double q) {
                const double cq = std::cos(q);
                for (int p = 0; p < P; ++p)
                    inv[p] = fac / std::max(rProbe_[p], rho);
                for (int p = 0; p < P; ++p)
                    G[p] += inv[p];
                double ckm = 1.0, ck = cq;
                for (int k = 1; k <= K_; ++k) {
                    double* row = G + static_cast<size_t>(k) * P;
                    for (int p = 0; p < P; ++p)
                        row[p] += ck * inv[p];
                    const double cn = 2.0 * cq * ck - ckm;
                    ckm = ck;
                    ck = cn;
                }
            };

            // probes inside the orbit break the radial integral so every
            // piece sees a smooth integrand despite the kink of 1/max(r, rho)
            std::vector<double> cuts;
            for (double rp : rProbe_)
                if (rp > ra && rp < rb)
                    cuts.push_back(rp);
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

            // turning pieces run in theta with rho = rTurn -/+ span sin^2;
            // the volume factor sin(2 theta) cancels the square-root zero of
            // 1/w at the turning radius
            auto turning_piece = [&](double rTurn, double rReg, double uTurn) {
                const double span = rReg - rTurn;
                std::vector<double> ts{0.0};
                for (double b2 : cuts) {
                    const double frac = (b2 - rTurn) / span;
                    if (frac > 0.0 && frac < 1.0)
                        ts.push_back(std::asin(std::sqrt(frac)));
                }
                std::sort(ts.begin(), ts.end());
                ts.push_back(0.5 * PI);
                for (size_t s = 0; s + 1 < ts.size(); ++s) {
                    const double mid = 0.5 * (ts[s] + ts[s + 1]);
                    const double half = 0.5 * (ts[s + 1] - ts[s]);
                    for (int g = 0; g < nGauss; ++g) {
                        const double theta = mid + half * gl.node[g];
                        const double sinT = std::sin(theta);
                        const double rho = rTurn + span * sinT * sinT;
                        const double gap = uTurn - model.effective_potential(rho, M);
                        if (!(gap > 0.0))
                            continue;
                        const double wv = std::sqrt(2.0 * gap);
                        const double drho = std::fabs(span) * std::sin(2.0 * theta);
                        const double fac = gl.weight[g] * half * drho * 2.0 * om / wv;
                        add_point(rho, fac, model.angle(H, M, rho, wv));
                    }
                }
            };

            turning_piece(ra, sa, uLo);
            turning_piece(rb, sb, uHi);

            std::vector<double> xs{sa};
            for (double b2 : cuts)
                if (b2 > sa && b2 < sb)
                    xs.push_back(b2);
            xs.push_back(sb);
            for (size_t s = 0; s + 1 < xs.size(); ++s) {
                const double mid = 0.5 * (xs[s] + xs[s + 1]);
                const double half = 0.5 * (xs[s + 1] - xs[s]);
                for (int g = 0; g < nGauss; ++g) {
                    const double rho = mid + half * gl.node[g];
                    const double gap = H - model.effective_potential(rho, M);
                    if (!(gap > 0.0))
                        continue;
                    const double wv = std::sqrt(2.0 * gap);
                    const double fac = gl.weight[g] * half * 2.0 * om / wv;
                    add_point(rho, fac, model.angle(H, M, rho, wv));
                }
            }
        }
    });
}

FieldSample LinearFieldEvaluator::at(double t) const {
    const int P = static_cast<int>(rProbe_.size());
    const int N = static_cast<int>(omega_.size());
    FieldSample out;
    out.phi.assign(P, 0.0);
    out.dphiDt.assign(P, 0.0);
    for (int n = 0; n < N; ++n) {
        const double om = omega_[n], wt = weight_[n];
        const std::complex<double>* h = &modes_[static_cast<size_t>(n) * (K_ + 1)];
        const double* G = &kernel_[static_cast<size_t>(n) * (K_ + 1) * P];
        const double c0 = wt / om * h[0].real();
        for (int p = 0; p < P; ++p)
            out.phi[p] += c0 * G[p];
        for (int k = 1; k <= K_; ++k) {
            const std::complex<double> hk = h[k] * std::polar(1.0, -k * om * t);
            const double cPhi = wt / om * 2.0 * hk.real();
            const double cRate = wt * k * 2.0 * hk.imag();
            const double* row = G + static_cast<size_t>(k) * P;
            for (int p = 0; p < P; ++p) {
                out.phi[p] += cPhi * row[p];
                out.dphiDt[p] += cRate * row[p];
            }
        }
    }
    for (int p = 0; p < P; ++p) {
        out.phi[p] *= -PI;
        out.dphiDt[p] *= -PI;
    }
    return out;
}

FieldSample field_from_table(const AngleFourierTable& table, const OrbitModel& model,
                             double t, const std::vector<double>& rProbe, int nGauss,
                             int workers) {
    return LinearFieldEvaluator(table, model, rProbe, nGauss, workers).at(t);
}

void check_field_convergence(const std::function<double(double, double, double)>& f,
                             const effpot::SupportSpec& spec, const OrbitModel& model,
                             const std::vector<double>& rProbe, TableConfig cfg,
                             double tol) {
    TableConfig coarse = cfg;
    coarse.nH = std::max(2, cfg.nH / 2);
    coarse.nM = std::max(2, cfg.nM / 2);
    const AngleFourierTable fine(f, spec, cfg);
    const AngleFourierTable half(f, spec, coarse);
    const LinearFieldEvaluator evalA(fine, model, rProbe, 48, cfg.workers);
    const LinearFieldEvaluator evalB(half, model, rProbe, 48, cfg.workers);

    double omMax = 0.0;
    for (int n = 0; n < fine.nodes(); ++n)
        omMax = std::max(omMax, model.frequency(fine.hNode(n), fine.mNode(n)));

    // sample across a phase cycle so a zero crossing at one instant cannot
    // hide a disagreement, and collect the scales over all samples first
    const std::vector<double> times{0.0, 0.8 / omMax, 2.3 / omMax};
    std::vector<FieldSample> a, b;
    double phiScale = 0.0, rateScale = 0.0;
    for (double t : times) {
        a.push_back(evalA.at(t));
        b.push_back(evalB.at(t));
        for (size_t p = 0; p < rProbe.size(); ++p) {
            phiScale = std::max(phiScale, std::fabs(a.back().phi[p]));
            rateScale = std::max(rateScale, std::fabs(a.back().dphiDt[p]));
        }
    }
    const bool rateIsZero = rateScale <= 1e-12 * omMax * phiScale;
    for (size_t i = 0; i < times.size(); ++i) {
        for (size_t p = 0; p < rProbe.size(); ++p) {
            if (std::fabs(a[i].phi[p] - b[i].phi[p]) > tol * phiScale)
                throw effpot::QuadratureFailure(
                    "check_field_convergence: potential not converged on the node grid");
            if (!rateIsZero &&
                std::fabs(a[i].dphiDt[p] - b[i].dphiDt[p]) > tol * rateScale)
                throw effpot::QuadratureFailure(
                    "check_field_convergence: field rate not converged on the node grid");
        }
    }
}

DensityRateEvaluator::DensityRateEvaluator(
    const std::function<double(double, double, double)>& f,
    const effpot::SupportSpec& spec, std::vector<double> rProbe, TableConfig cfg)
    : K_(cfg.K), rProbe_(std::move(rProbe)) {
    if (rProbe_.empty())
        throw effpot::InvalidSpec("DensityRateEvaluator: no probe radii");
    for (double r : rProbe_)
        if (!(r > 0.0))
            throw effpot::InvalidSpec("DensityRateEvaluator: nonpositive probe radius");
    if (cfg.K < 1 || cfg.nH < 2 || cfg.nM < 2)
        throw effpot::InvalidSpec("DensityRateEvaluator: nonpositive sizes");
    if (cfg.nQ < 2 * cfg.K + 2)
        throw effpot::InvalidSpec("DensityRateEvaluator: nQ below the mode cutoff");
    if (!(spec.l1 > 0.0 && spec.l1 < spec.l2 && spec.hLo(spec.l2) < spec.hHi()))
        throw effpot::InvalidSpec("DensityRateEvaluator: empty support window");

    const auto& glL = gauss_legendre(cfg.nM);
    const auto& glW = gauss_legendre(cfg.nH);
    const double mMid = 0.5 * (spec.l1 + spec.l2);
    const double mHalf = 0.5 * (spec.l2 - spec.l1);

    auto add_node = [&](double r, double L, double wv, double wt) {
        const double H = 0.5 * wv * wv + 0.5 * L / (r * r) - 1.0 / r;
        const auto h = angle_modes(f, H, L, cfg.nQ, K_);
        angle_.push_back(kepler::kepler_radial_angle(H, L, r, wv));
        omega_.push_back(std::pow(-2.0 * H, 1.5));
        weight_.push_back(wt);
        modes_.insert(modes_.end(), h.begin(), h.end());
    };

    for (double r : rProbe_) {
        start_.push_back(static_cast<int>(angle_.size()));
        for (int j = 0; j < cfg.nM; ++j) {
            const double L = mMid + mHalf * glL.node[j];
            const double wL = glL.weight[j] * mHalf;
            const double uK = 0.5 * L / (r * r) - 1.0 / r;
            const double wTopSq = 2.0 * (spec.hHi() - uK);
            if (!(wTopSq > 0.0))
                continue;
            const double wTop = std::sqrt(wTopSq);
            const double wBotSq = 2.0 * (spec.hLo(L) - uK);
            // velocity pieces follow the support band in H so the quadrature
            // never straddles the edge where f switches on
            std::vector<std::pair<double, double>> pieces;
            if (wBotSq > 0.0) {
                const double wBot = std::sqrt(wBotSq);
                pieces = {{-wTop, -wBot}, {wBot, wTop}};
            } else {
                pieces = {{-wTop, wTop}};
            }
            const double pref = PI / (r * r) * wL;
            for (const auto& [w1, w2] : pieces) {
                const double mid = 0.5 * (w1 + w2), half = 0.5 * (w2 - w1);
                for (int i = 0; i < cfg.nH; ++i)
                    add_node(r, L, mid + half * glW.node[i],
                             pref * glW.weight[i] * half);
            }
        }
    }
    start_.push_back(static_cast<int>(angle_.size()));
}

std::vector<double> DensityRateEvaluator::at(double t) const {
    const int P = static_cast<int>(rProbe_.size());
    std::vector<double> out(P, 0.0);
    for (int p = 0; p < P; ++p) {
        double acc = 0.0;
        for (int n = start_[p]; n < start_[p + 1]; ++n) {
            const std::complex<double>* h = &modes_[static_cast<size_t>(n) * (K_ + 1)];
            const double base = angle_[n] - omega_[n] * t;
            double s = 0.0;
            for (int k = 1; k <= K_; ++k)
                s += 2.0 * k * (h[k] * std::polar(1.0, k * base)).imag();
            acc += weight_[n] * omega_[n] * s;
        }
        out[p] = acc;
    }
    return out;
}

std::vector<double> DensityRateEvaluator::density_at(double t) const {
    const int P = static_cast<int>(rProbe_.size());
    std::vector<double> out(P, 0.0);
    for (int p = 0; p < P; ++p) {
        double acc = 0.0;
        for (int n = start_[p]; n < start_[p + 1]; ++n) {
            const std::complex<double>* h = &modes_[static_cast<size_t>(n) * (K_ + 1)];
            const double base = angle_[n] - omega_[n] * t;
            double s = h[0].real();
            for (int k = 1; k <= K_; ++k)
                s += 2.0 * (h[k] * std::polar(1.0, k * base)).real();
            acc += weight_[n] * s;
        }
        out[p] = acc;
    }
    return out;
}

std::vector<double> free_stream_density_rate(
    const std::function<double(double, double, double)>& f,
    const effpot::SupportSpec& spec, double t, const std::vector<double>& rProbe,
    TableConfig cfg) {
    return DensityRateEvaluator(f, spec, rProbe, cfg).at(t);
}

}  // namespace kepmix::linflow
