#include "kepmix/cli.hpp"
#include "kepmix/diag.hpp"
#include "kepmix/kepler.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <random>
#include <vector>

namespace kepmix::cli {

namespace {

namespace fs = std::filesystem;

const double PERIOD_REL_TOL = 1e-8;
const double ECC_IDENTITY_TOL = 1e-12;
const double ROUNDTRIP_TOL = 1e-9;
const int DECAY_PROBES = 5;

/// Comma-separated rows with '\n' line ends; doubles in shortest
/// round-trip form so identical runs emit identical bytes.
class CsvFile {
public:
    explicit CsvFile(const fs::path& path) : out_(path, std::ios::binary) {
        if (!out_)
            throw ConfigError("cannot write output file '" + path.string() + "'");
        path_ = path.string();
    }

    CsvFile& cell(const std::string& text) {
        if (!first_)
            out_ << ',';
        out_ << text;
        first_ = false;
        return *this;
    }
    CsvFile& cell(double v) { return cell(format_double(v)); }
    CsvFile& cell(long v) { return cell(std::to_string(v)); }
    void endRow() {
        out_ << '\n';
        first_ = true;
    }
    void close() {
        out_.flush();
        if (!out_)
            throw ConfigError("write failed on '" + path_ + "'");
        out_.close();
    }

private:
    std::ofstream out_;
    std::string path_;
    bool first_ = true;
};

void fail(std::string& message, const std::string& what) {
    if (message.empty())
        message = what;
}

double kepler_energy(const vlasov::RadialState& s) {
    return 0.5 * s.w * s.w + 0.5 * s.L / (s.r * s.r) - 1.0 / s.r;
}

/// Self-consistent field of the bump data at the configured amplitude.
effpot::FieldProfile deposited_field(const RunConfig& c) {
    const vlasov::MarkerEnsemble ens =
        vlasov::init_ensemble(c.spec, c.profile, c.counts, c.signCoupling);
    const vlasov::RadialGrid grid = vlasov::RadialGrid::for_support(c.spec, c.bins);
    return vlasov::solve_field(vlasov::deposit_sigma(ens, grid, c.workers), grid,
                               c.signCoupling);
}

/// Radial band [max rMin, min rMax] common to every orbit of the window,
/// padded inward; probes there see smooth node-grid integrands.
std::vector<double> band_probes(const effpot::SupportSpec& spec,
                                const linflow::OrbitModel& model) {
    const int n = 9;
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        const double M = spec.l1 + (j + 0.5) * (spec.l2 - spec.l1) / n;
        for (int i = 0; i < n; ++i) {
            const double H = spec.hLo(M) + (i + 0.5) * (spec.hHi() - spec.hLo(M)) / n;
            const auto [ra, rb] = model.turning_radii(H, M);
            lo = std::max(lo, ra);
            hi = std::min(hi, rb);
        }
    }
    if (!(lo < hi))
        throw ConfigError("field 'support.*': no radial band is interior to every "
                          "orbit of the window");
    const double pad = 0.05 * (hi - lo);
    std::vector<double> probes(DECAY_PROBES);
    for (int p = 0; p < DECAY_PROBES; ++p)
        probes[p] = (lo + pad) + p * (hi - lo - 2.0 * pad) / (DECAY_PROBES - 1);
    return probes;
}

std::vector<double> log_times(double t0, double t1, int n) {
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i)
        ts[i] = t0 * std::pow(t1 / t0, i / (n - 1.0));
    return ts;
}

int scenario_period_table(const RunConfig& c, const fs::path& dir) {
    const effpot::OrbitContext ctx(effpot::FieldProfile{}, c.spec);
    CsvFile csv(dir / "period_table.csv");
    csv.cell("H").cell("L").cell("periodNumeric").cell("periodKepler").cell("relErr");
    csv.endRow();
    std::string message;
    for (int j = 0; j < c.counts.nL; ++j) {
        const double L = c.spec.l1 + (j + 0.5) * (c.spec.l2 - c.spec.l1) / c.counts.nL;
        for (int i = 0; i < c.counts.nH; ++i) {
            const double H =
                c.spec.hLo(L) + (i + 0.5) * (c.spec.hHi() - c.spec.hLo(L)) / c.counts.nH;
            const double pn = ctx.radial_period(H, L);
            const double pk = kepler::kepler_period(H);
            const double rel = std::fabs(pn - pk) / pk;
            csv.cell(H).cell(L).cell(pn).cell(pk).cell(rel);
            csv.endRow();
            if (!(rel < PERIOD_REL_TOL))
                fail(message, "period off the field-free value by " + format_double(rel));
        }
    }
    csv.close();
    if (!message.empty()) {
        std::fprintf(stderr, "period-table: %s\n", message.c_str());
        return 1;
    }
    return 0;
}

int scenario_orbit_check(const RunConfig& c, const fs::path& dir) {
    const effpot::FieldProfile field =
        c.profile.amplitude > 0.0 ? deposited_field(c) : effpot::FieldProfile{};
    const effpot::OrbitContext ctx(field, c.spec);

    const double L0 = 0.5 * (c.spec.l1 + c.spec.l2);
    const double H0 = 0.5 * (c.spec.hLo(L0) + c.spec.hHi());
    const effpot::OrbitGeometry geo = ctx.make_orbit(H0, L0);
    const double physPeriod = geo.period / std::sqrt(2.0);

    vlasov::MarkerEnsemble ens;
    ens.markers.push_back({});
    vlasov::Marker& m = ens.markers.back();
    linflow::FrozenOrbitModel(ctx).radial_state(H0, L0, 0.9, m.state.r, m.state.w);
    m.state.L = L0;
    m.weight = 1.0;
    m.fValue = 1.0;

    const double dt = c.dtFactor * physPeriod;
    const long rows = static_cast<long>(std::ceil(c.tFinal / (dt * c.cadence)));
    const long steps = rows * c.cadence;

    CsvFile csv(dir / "orbit.csv");
    csv.cell("t").cell("r").cell("w").cell("Q").cell("H").cell("Jdet");
    csv.endRow();
    std::string message;
    std::vector<double> rowTime, rowDrift;
    const auto emit = [&](double t) {
        const vlasov::RadialState& s = ens.markers[0].state;
        const double Hnow = 0.5 * s.w * s.w + ctx.effective_potential(s.r, s.L);
        double jdet = std::numeric_limits<double>::quiet_NaN();
        try {
            jdet = diag::jacobian_probe(s, ctx);
        } catch (const Error&) {
        }
        csv.cell(t).cell(s.r).cell(s.w).cell(ctx.angle(s.r, s.w, s.L)).cell(Hnow).cell(
            jdet);
        csv.endRow();
        if (!std::isfinite(Hnow))
            fail(message, "energy not finite at t = " + format_double(t));
        rowTime.push_back(t);
        rowDrift.push_back(std::fabs(Hnow - H0));
    };

    emit(0.0);
    for (long step = 1; step <= steps; ++step) {
        vlasov::push(ens, field, dt, vlasov::PushMode::nonlinear, c.workers);
        if (step % c.cadence == 0)
            emit(step * dt);
    }
    csv.close();

    // the stepper's energy error is a bounded dt^2 oscillation; secular
    // growth past a few times the first-period excursion is an integrator
    // failure at any step size
    const double calibWindow = std::max(physPeriod, 3.0 * dt * c.cadence);
    double calib = 0.0;
    for (size_t i = 0; i < rowTime.size(); ++i)
        if (rowTime[i] <= calibWindow)
            calib = std::max(calib, rowDrift[i]);
    for (size_t i = 0; i < rowTime.size(); ++i)
        if (rowDrift[i] > 5.0 * calib + 1e-12 * std::fabs(H0))
            fail(message, "energy drifted at t = " + format_double(rowTime[i]));
    if (!message.empty()) {
        std::fprintf(stderr, "orbit-check: %s\n", message.c_str());
        return 1;
    }
    return 0;
}

int scenario_transform_check(const RunConfig& c, const fs::path& dir) {
    const kepler::LinearSupportSpec lin{c.spec.c, c.spec.h, c.spec.l1,
                                        c.spec.l2, 0.01,     0.02};
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> angle(-PI, PI);

    const int samples = c.counts.nH * c.counts.nL;
    CsvFile csv(dir / "transform_check.csv");
    csv.cell("idx").cell("H").cell("Lsq").cell("eccSq").cell("identityErr").cell(
        "roundTripErr");
    csv.endRow();
    std::string message;
    for (int i = 0; i < samples; ++i) {
        kepler::CartesianState s;
        for (int tries = 0;; ++tries) {
            if (tries > 10000)
                throw ConfigError("field 'support.*': cannot sample the linear "
                                  "support window");
            const double M = c.spec.l1 + unit(rng) * (c.spec.l2 - c.spec.l1);
            const double H = c.spec.hLo(M) + unit(rng) * (c.spec.hHi() - c.spec.hLo(M));
            kepler::DelaunayState d;
            d.J = 1.0 / std::sqrt(-2.0 * H);
            d.L = std::sqrt(M);
            d.Lz = d.L * (2.0 * unit(rng) - 1.0) * 0.9;
            d.Q = angle(rng);
            d.thetaL = angle(rng);
            d.thetaLz = angle(rng);
            s = kepler::delaunay_to_cartesian(d);
            if (kepler::in_linear_support(s, lin))
                break;
        }

        const double H = kepler::kepler_hamiltonian(s);
        const Vec3 n = cross(s.x, s.v);
        const double Lsq = dot(n, n);
        const Vec3 vn = cross(s.v, n);
        const double rNorm = norm(s.x);
        const Vec3 ecc{vn[0] - s.x[0] / rNorm, vn[1] - s.x[1] / rNorm,
                       vn[2] - s.x[2] / rNorm};
        const double identityErr = std::fabs(dot(ecc, ecc) - (1.0 + 2.0 * H * Lsq));

        const kepler::CartesianState back =
            kepler::delaunay_to_cartesian(kepler::cartesian_to_delaunay(s));
        double roundTripErr = 0.0;
        for (int k = 0; k < 3; ++k) {
            roundTripErr = std::max(roundTripErr, std::fabs(back.x[k] - s.x[k]));
            roundTripErr = std::max(roundTripErr, std::fabs(back.v[k] - s.v[k]));
        }

        csv.cell(static_cast<long>(i))
            .cell(H)
            .cell(Lsq)
            .cell(1.0 + 2.0 * H * Lsq)
            .cell(identityErr)
            .cell(roundTripErr);
        csv.endRow();
        if (identityErr > ECC_IDENTITY_TOL)
            fail(message, "eccentricity identity broke: " + format_double(identityErr));
        if (roundTripErr > ROUNDTRIP_TOL)
            fail(message, "element round trip broke: " + format_double(roundTripErr));
    }
    csv.close();
    if (!message.empty()) {
        std::fprintf(stderr, "transform-check: %s\n", message.c_str());
        return 1;
    }
    return 0;
}

int scenario_decay(const RunConfig& c, const fs::path& dir, bool frozen) {
    auto f = [&](double q, double H, double M) {
        return vlasov::f_in(c.spec, c.profile, H, M) * (1.0 + std::cos(q));
    };
    linflow::TableConfig tcfg = c.table;
    tcfg.workers = c.workers;

    std::optional<effpot::OrbitContext> ctx;
    std::unique_ptr<linflow::OrbitModel> model;
    if (frozen) {
        ctx.emplace(deposited_field(c), c.spec);
        model = std::make_unique<linflow::FrozenOrbitModel>(*ctx);
    } else {
        model = std::make_unique<linflow::KeplerOrbitModel>();
    }

    const std::vector<double> probes = band_probes(c.spec, *model);
    linflow::check_field_convergence(f, c.spec, *model, probes, tcfg, 0.05);

    const linflow::AngleFourierTable table(f, c.spec, tcfg);
    const linflow::LinearFieldEvaluator eval(table, *model, probes, 48, c.workers);

    const int nT = std::max(c.cadence, 9);
    const double t0 = std::max(1.0, c.tFinal / 100.0);
    const std::vector<double> ts = log_times(t0, c.tFinal, nT);

    CsvFile csv(dir / "decay.csv");
    csv.cell("t");
    for (double r : probes)
        csv.cell("phi(" + format_double(r) + ")");
    for (double r : probes)
        csv.cell("dphiDt(" + format_double(r) + ")");
    csv.cell("supRate");
    csv.endRow();

    std::string message;
    std::vector<double> env;
    for (double t : ts) {
        const linflow::FieldSample s = eval.at(t);
        csv.cell(t);
        double sup = 0.0;
        for (double v : s.phi) {
            csv.cell(v);
            if (!std::isfinite(v))
                fail(message, "non-finite potential at t = " + format_double(t));
        }
        for (double v : s.dphiDt) {
            csv.cell(v);
            sup = std::max(sup, std::fabs(v));
            if (!std::isfinite(v))
                fail(message, "non-finite field rate at t = " + format_double(t));
        }
        csv.cell(sup);
        csv.endRow();
        env.push_back(sup);
    }
    csv.close();

    const double fitLo = std::max(t0, c.tFinal / 10.0);
    long inWindow = 0;
    for (double t : ts)
        if (t >= fitLo && t <= c.tFinal)
            ++inWindow;
    if (c.tFinal > 2.0 * fitLo && fitLo >= 1.0 && inWindow >= 8) {
        const diag::DecayFit fit = diag::decay_fit(ts, env, fitLo, c.tFinal);
        CsvFile fcsv(dir / "decay_fit.csv");
        fcsv.cell("t0").cell("t1").cell("exponent").cell("residual").cell("floorFlag");
        fcsv.endRow();
        fcsv.cell(fit.t0)
            .cell(fit.t1)
            .cell(fit.exponent)
            .cell(fit.residual)
            .cell(static_cast<long>(fit.floorFlag));
        fcsv.endRow();
        fcsv.close();
        if (!(fit.exponent < 0.0))
            fail(message, "field rate is not decaying: fitted exponent " +
                              format_double(fit.exponent));
    }
    if (!message.empty()) {
        std::fprintf(stderr, "%s: %s\n", frozen ? "frozen-decay" : "linear-decay",
                     message.c_str());
        return 1;
    }
    return 0;
}

int scenario_nonlinear_run(const RunConfig& c, const fs::path& dir) {
    vlasov::RunConfig vcfg;
    vcfg.spec = c.spec;
    vcfg.profile = c.profile;
    vcfg.counts = c.counts;
    vcfg.mode = vlasov::PushMode::nonlinear;
    vcfg.signCoupling = c.signCoupling;
    vcfg.nBins = c.bins;
    vcfg.outputEvery = c.cadence;
    vcfg.dtFactor = c.dtFactor;
    vcfg.trackCount = 8;
    vcfg.workers = c.workers;

    {
        // pick tEnd so the step count is the next multiple of the cadence
        const vlasov::MarkerEnsemble probeEns =
            vlasov::init_ensemble(c.spec, c.profile, c.counts, c.signCoupling);
        double minPeriod = std::numeric_limits<double>::infinity();
        for (const vlasov::Marker& m : probeEns.markers)
            minPeriod = std::min(
                minPeriod, TWO_PI * std::pow(-2.0 * kepler_energy(m.state), -1.5));
        const double dt = c.dtFactor * minPeriod;
        const long raw = static_cast<long>(std::ceil(c.tFinal / dt));
        const long steps = c.cadence * ((raw + c.cadence - 1) / c.cadence);
        vcfg.tEnd = (steps - 0.5) * dt;
    }

    const vlasov::RunResult res = vlasov::run(vcfg);

    CsvFile summary(dir / "summary.csv");
    summary.cell("t").cell("mass").cell("supportViolations").cell("supportMarginH");
    summary.endRow();
    std::string message;
    for (const vlasov::Snapshot& snap : res.snapshots) {
        summary.cell(snap.time)
            .cell(snap.totalMass)
            .cell(snap.supportViolations)
            .cell(snap.supportMarginH);
        summary.endRow();
        if (snap.totalMass != res.snapshots.front().totalMass)
            fail(message, "mass drifted at t = " + format_double(snap.time));
        if (snap.supportViolations != 0)
            fail(message, std::to_string(snap.supportViolations) +
                              " support violations at t = " + format_double(snap.time));
    }
    summary.close();

    CsvFile tracks(dir / "tracks.csv");
    tracks.cell("t");
    for (size_t k = 0; k < res.trackedIndex.size(); ++k) {
        const std::string tag = std::to_string(k);
        tracks.cell("r" + tag).cell("w" + tag).cell("E" + tag);
    }
    tracks.endRow();
    for (const vlasov::Snapshot& snap : res.snapshots) {
        tracks.cell(snap.time);
        for (size_t k = 0; k < snap.tracked.size(); ++k)
            tracks.cell(snap.tracked[k].r)
                .cell(snap.tracked[k].w)
                .cell(snap.trackedEnergy[k]);
        tracks.endRow();
    }
    tracks.close();

    const std::vector<double> probes = band_probes(c.spec, linflow::KeplerOrbitModel{});
    std::vector<effpot::FieldProfile> fields;
    std::vector<double> times;
    for (const vlasov::Snapshot& snap : res.snapshots) {
        fields.push_back(snap.field);
        times.push_back(snap.time);
    }
    CsvFile rate(dir / "decay.csv");
    rate.cell("t").cell("supRate");
    rate.endRow();
    if (fields.size() >= 3) {
        const double cadenceTime = times[1] - times[0];
        const auto rows = diag::dphi_dt_fd(fields, cadenceTime, probes);
        for (size_t i = 0; i < rows.size(); ++i) {
            double sup = 0.0;
            for (double v : rows[i])
                sup = std::max(sup, std::fabs(v));
            rate.cell(times[i]).cell(sup);
            rate.endRow();
        }
    }
    rate.close();

    if (!message.empty()) {
        std::fprintf(stderr, "nonlinear-run: %s\n", message.c_str());
        return 1;
    }
    return 0;
}

}  // namespace

int run_scenario(const RunConfig& c) {
    try {
        const fs::path dir(c.outDir.empty() ? "." : c.outDir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir))
            throw ConfigError("field 'run.outDir': cannot create '" + dir.string() +
                              "'");
        {
            std::ofstream echo(dir / "config.resolved", std::ios::binary);
            echo << render_config(c);
            if (!echo)
                throw ConfigError("field 'run.outDir': cannot write the resolved "
                                  "config echo");
        }
        if (c.scenario == "period-table")
            return scenario_period_table(c, dir);
        if (c.scenario == "orbit-check")
            return scenario_orbit_check(c, dir);
        if (c.scenario == "transform-check")
            return scenario_transform_check(c, dir);
        if (c.scenario == "linear-decay")
            return scenario_decay(c, dir, false);
        if (c.scenario == "frozen-decay")
            return scenario_decay(c, dir, true);
        if (c.scenario == "nonlinear-run")
            return scenario_nonlinear_run(c, dir);
        throw ConfigError("field 'run.scenario': unknown scenario '" + c.scenario + "'");
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s: %s\n", c.scenario.c_str(), e.what());
        return 1;
    }
}

}  // namespace kepmix::cli
