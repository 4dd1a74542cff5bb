#include "kepmix/cli.hpp"
#include "kepmix/diag.hpp"
#include "kepmix/kepler.hpp"
#include "kepmix/linflow.hpp"
#include "kepmix/vlasov.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace kepmix;

namespace {

/// Table analysis calls back into Python, so it must stay on this thread.
linflow::TableConfig serial(linflow::TableConfig cfg) {
    cfg.workers = 1;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_kepmix, m) {
    m.doc() = "Action-angle machinery and spherically symmetric Vlasov-Poisson "
              "flows in an external Kepler potential";

    py::register_exception<Error>(m, "KepmixError");

    py::class_<kepler::CartesianState>(m, "CartesianState")
        .def(py::init([](Vec3 x, Vec3 v) { return kepler::CartesianState{x, v}; }),
             "x"_a, "v"_a)
        .def_readwrite("x", &kepler::CartesianState::x)
        .def_readwrite("v", &kepler::CartesianState::v);

    py::class_<kepler::DelaunayState>(m, "DelaunayState")
        .def(py::init([](double J, double L, double Lz, double Q, double thetaL,
                         double thetaLz) {
                 return kepler::DelaunayState{J, L, Lz, Q, thetaL, thetaLz};
             }),
             "J"_a, "L"_a, "Lz"_a, "Q"_a, "thetaL"_a, "thetaLz"_a)
        .def_readwrite("J", &kepler::DelaunayState::J)
        .def_readwrite("L", &kepler::DelaunayState::L)
        .def_readwrite("Lz", &kepler::DelaunayState::Lz)
        .def_readwrite("Q", &kepler::DelaunayState::Q)
        .def_readwrite("thetaL", &kepler::DelaunayState::thetaL)
        .def_readwrite("thetaLz", &kepler::DelaunayState::thetaLz);

    py::class_<kepler::LinearSupportSpec>(m, "LinearSupportSpec")
        .def(py::init([](double c0, double h0, double l1, double l2, double n0,
                         double n1) {
                 return kepler::LinearSupportSpec{c0, h0, l1, l2, n0, n1};
             }),
             "c0"_a, "h0"_a, "l1"_a, "l2"_a, "n0"_a, "n1"_a);

    m.def("kepler_hamiltonian", &kepler::kepler_hamiltonian, "state"_a);
    m.def("solve_kepler_equation", &kepler::solve_kepler_equation, "Q"_a, "ecc"_a);
    m.def("cartesian_to_delaunay", &kepler::cartesian_to_delaunay, "state"_a);
    m.def("delaunay_to_cartesian", &kepler::delaunay_to_cartesian, "elements"_a);
    m.def("kepler_period", &kepler::kepler_period, "H"_a);
    m.def("in_linear_support", &kepler::in_linear_support, "state"_a, "spec"_a);
    m.def("free_stream_exact", &kepler::free_stream_exact, "elements"_a, "t"_a);
    m.def("kepler_radial_angle", &kepler::kepler_radial_angle, "H"_a, "Lsq"_a, "r"_a,
          "w"_a);
    m.def(
        "kepler_radial_state",
        [](double H, double Lsq, double Q) {
            double r = 0.0, w = 0.0;
            kepler::kepler_radial_state(H, Lsq, Q, r, w);
            return py::make_tuple(r, w);
        },
        "H"_a, "Lsq"_a, "Q"_a);
    m.def("wrap_angle", &wrap_angle, "angle"_a);

    py::class_<effpot::SupportSpec>(m, "SupportSpec")
        .def(py::init([](double c, double h, double l1, double l2) {
                 return effpot::SupportSpec{c, h, l1, l2};
             }),
             "c"_a, "h"_a, "l1"_a, "l2"_a)
        .def_readwrite("c", &effpot::SupportSpec::c)
        .def_readwrite("h", &effpot::SupportSpec::h)
        .def_readwrite("l1", &effpot::SupportSpec::l1)
        .def_readwrite("l2", &effpot::SupportSpec::l2)
        .def("hLo", &effpot::SupportSpec::hLo, "lsq"_a)
        .def("hHi", &effpot::SupportSpec::hHi)
        .def("contains", &effpot::SupportSpec::contains, "H"_a, "lsq"_a);

    py::class_<effpot::FieldProfile>(m, "FieldProfile")
        .def(py::init<>())
        .def(py::init<std::vector<double>, std::vector<double>, std::vector<double>>(),
             "r"_a, "phi"_a, "dphi"_a)
        .def("phi", &effpot::FieldProfile::phi, "r"_a)
        .def("dphi", &effpot::FieldProfile::dphi, "r"_a)
        .def("empty", &effpot::FieldProfile::empty)
        .def("grid", &effpot::FieldProfile::grid)
        .def("values", &effpot::FieldProfile::values)
        .def("derivatives", &effpot::FieldProfile::derivatives);

    py::class_<effpot::OrbitGeometry>(m, "OrbitGeometry")
        .def_readonly("H", &effpot::OrbitGeometry::H)
        .def_readonly("Lsq", &effpot::OrbitGeometry::Lsq)
        .def_readonly("rMin", &effpot::OrbitGeometry::rMin)
        .def_readonly("rMax", &effpot::OrbitGeometry::rMax)
        .def_readonly("period", &effpot::OrbitGeometry::period)
        .def_readonly("frequency", &effpot::OrbitGeometry::frequency);

    py::class_<effpot::QuadratureConfig>(m, "QuadratureConfig")
        .def(py::init<>())
        .def_readwrite("nGauss", &effpot::QuadratureConfig::nGauss)
        .def_readwrite("nMarginGrid", &effpot::QuadratureConfig::nMarginGrid);

    py::class_<effpot::OrbitContext>(m, "OrbitContext")
        .def(py::init<effpot::FieldProfile, effpot::SupportSpec,
                      effpot::QuadratureConfig>(),
             "field"_a, "spec"_a, "config"_a = effpot::QuadratureConfig{},
             py::call_guard<py::gil_scoped_release>())
        .def("effective_potential", &effpot::OrbitContext::effective_potential, "r"_a,
             "lsq"_a)
        .def("dU_dr", &effpot::OrbitContext::dU_dr, "r"_a, "lsq"_a)
        .def("turning_points", &effpot::OrbitContext::turning_points, "H"_a, "lsq"_a)
        .def("radial_period", &effpot::OrbitContext::radial_period, "H"_a, "lsq"_a)
        .def("frequency", &effpot::OrbitContext::frequency, "H"_a, "lsq"_a)
        .def("frequency_gradient", &effpot::OrbitContext::frequency_gradient, "H"_a,
             "lsq"_a)
        .def("angle", &effpot::OrbitContext::angle, "r"_a, "w"_a, "lsq"_a)
        .def("make_orbit", &effpot::OrbitContext::make_orbit, "H"_a, "lsq"_a);

    py::class_<vlasov::RadialState>(m, "RadialState")
        .def(py::init([](double r, double w, double L) {
                 return vlasov::RadialState{r, w, L};
             }),
             "r"_a, "w"_a, "L"_a)
        .def_readwrite("r", &vlasov::RadialState::r)
        .def_readwrite("w", &vlasov::RadialState::w)
        .def_readwrite("L", &vlasov::RadialState::L);

    py::class_<vlasov::Marker>(m, "Marker")
        .def(py::init([](vlasov::RadialState s, double weight, double fValue) {
                 return vlasov::Marker{s, weight, fValue};
             }),
             "state"_a, "weight"_a, "fValue"_a)
        .def_readwrite("state", &vlasov::Marker::state)
        .def_readwrite("weight", &vlasov::Marker::weight)
        .def_readwrite("fValue", &vlasov::Marker::fValue);

    py::class_<vlasov::MarkerEnsemble>(m, "MarkerEnsemble")
        .def(py::init<>())
        .def_readwrite("markers", &vlasov::MarkerEnsemble::markers)
        .def_readwrite("signCoupling", &vlasov::MarkerEnsemble::signCoupling)
        .def_readwrite("totalMass", &vlasov::MarkerEnsemble::totalMass);

    py::class_<vlasov::RadialGrid>(m, "RadialGrid")
        .def(py::init<double, double, int>(), "rLo"_a, "rHi"_a, "nBins"_a)
        .def_static("for_support", &vlasov::RadialGrid::for_support, "spec"_a,
                    "nBins"_a = 512)
        .def_readonly("rLo", &vlasov::RadialGrid::rLo)
        .def_readonly("rHi", &vlasov::RadialGrid::rHi)
        .def_readonly("nBins", &vlasov::RadialGrid::nBins)
        .def("dr", &vlasov::RadialGrid::dr)
        .def("center", &vlasov::RadialGrid::center, "i"_a);

    py::class_<vlasov::BumpProfile>(m, "BumpProfile")
        .def(py::init([](double amplitude, int exponent) {
                 return vlasov::BumpProfile{amplitude, exponent};
             }),
             "amplitude"_a = 1.0, "exponent"_a = 3)
        .def_readwrite("amplitude", &vlasov::BumpProfile::amplitude)
        .def_readwrite("exponent", &vlasov::BumpProfile::exponent);

    py::class_<vlasov::GridCounts>(m, "GridCounts")
        .def(py::init([](int nH, int nL, int nQ) {
                 return vlasov::GridCounts{nH, nL, nQ};
             }),
             "nH"_a = 16, "nL"_a = 16, "nQ"_a = 32)
        .def_readwrite("nH", &vlasov::GridCounts::nH)
        .def_readwrite("nL", &vlasov::GridCounts::nL)
        .def_readwrite("nQ", &vlasov::GridCounts::nQ);

    py::enum_<vlasov::PushMode>(m, "PushMode")
        .value("linear", vlasov::PushMode::linear)
        .value("nonlinear", vlasov::PushMode::nonlinear);

    m.def("bump_window", &vlasov::bump_window, "x"_a, "lo"_a, "hi"_a, "p"_a);
    m.def("f_in", &vlasov::f_in, "spec"_a, "profile"_a, "H"_a, "lsq"_a);
    m.def("init_ensemble", &vlasov::init_ensemble, "spec"_a, "profile"_a, "counts"_a,
          "signCoupling"_a = +1, py::call_guard<py::gil_scoped_release>());
    m.def("deposit_sigma", &vlasov::deposit_sigma, "ensemble"_a, "grid"_a,
          "workers"_a = 1, py::call_guard<py::gil_scoped_release>());
    m.def("solve_field", &vlasov::solve_field, "sigma"_a, "grid"_a, "signCoupling"_a,
          py::call_guard<py::gil_scoped_release>());
    m.def("push", &vlasov::push, "ensemble"_a, "field"_a, "dt"_a, "mode"_a,
          "workers"_a = 1, py::call_guard<py::gil_scoped_release>());

    py::class_<vlasov::RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("spec", &vlasov::RunConfig::spec)
        .def_readwrite("profile", &vlasov::RunConfig::profile)
        .def_readwrite("counts", &vlasov::RunConfig::counts)
        .def_readwrite("mode", &vlasov::RunConfig::mode)
        .def_readwrite("signCoupling", &vlasov::RunConfig::signCoupling)
        .def_readwrite("nBins", &vlasov::RunConfig::nBins)
        .def_readwrite("tEnd", &vlasov::RunConfig::tEnd)
        .def_readwrite("outputEvery", &vlasov::RunConfig::outputEvery)
        .def_readwrite("dtFactor", &vlasov::RunConfig::dtFactor)
        .def_readwrite("trackCount", &vlasov::RunConfig::trackCount)
        .def_readwrite("workers", &vlasov::RunConfig::workers)
        .def_readwrite("storeEnsemble", &vlasov::RunConfig::storeEnsemble);

    py::class_<vlasov::Snapshot>(m, "Snapshot")
        .def_readonly("time", &vlasov::Snapshot::time)
        .def_readonly("sigma", &vlasov::Snapshot::sigma)
        .def_readonly("field", &vlasov::Snapshot::field)
        .def_readonly("totalMass", &vlasov::Snapshot::totalMass)
        .def_readonly("supportViolations", &vlasov::Snapshot::supportViolations)
        .def_readonly("supportMarginH", &vlasov::Snapshot::supportMarginH)
        .def_readonly("tracked", &vlasov::Snapshot::tracked)
        .def_readonly("trackedEnergy", &vlasov::Snapshot::trackedEnergy)
        .def_readonly("ensemble", &vlasov::Snapshot::ensemble);

    py::class_<vlasov::RunResult>(m, "RunResult")
        .def_readonly("grid", &vlasov::RunResult::grid)
        .def_readonly("dt", &vlasov::RunResult::dt)
        .def_readonly("trackedIndex", &vlasov::RunResult::trackedIndex)
        .def_readonly("snapshots", &vlasov::RunResult::snapshots);

    m.def("run", &vlasov::run, "config"_a, py::call_guard<py::gil_scoped_release>());

    py::class_<linflow::TableConfig>(m, "TableConfig")
        .def(py::init([](int K, int nH, int nM, int nQ, int workers) {
                 return linflow::TableConfig{K, nH, nM, nQ, workers};
             }),
             "K"_a = 32, "nH"_a = 64, "nM"_a = 64, "nQ"_a = 256, "workers"_a = 1)
        .def_readwrite("K", &linflow::TableConfig::K)
        .def_readwrite("nH", &linflow::TableConfig::nH)
        .def_readwrite("nM", &linflow::TableConfig::nM)
        .def_readwrite("nQ", &linflow::TableConfig::nQ)
        .def_readwrite("workers", &linflow::TableConfig::workers);

    py::class_<linflow::OrbitModel>(m, "OrbitModel");

    py::class_<linflow::KeplerOrbitModel, linflow::OrbitModel>(m, "KeplerOrbitModel")
        .def(py::init<>())
        .def("frequency", &linflow::KeplerOrbitModel::frequency, "H"_a, "lsq"_a)
        .def("turning_radii", &linflow::KeplerOrbitModel::turning_radii, "H"_a, "lsq"_a)
        .def("angle", &linflow::KeplerOrbitModel::angle, "H"_a, "lsq"_a, "r"_a, "w"_a)
        .def(
            "radial_state",
            [](const linflow::KeplerOrbitModel& self, double H, double lsq, double Q) {
                double r = 0.0, w = 0.0;
                self.radial_state(H, lsq, Q, r, w);
                return py::make_tuple(r, w);
            },
            "H"_a, "lsq"_a, "Q"_a);

    py::class_<linflow::FrozenOrbitModel, linflow::OrbitModel>(m, "FrozenOrbitModel")
        .def(py::init<const effpot::OrbitContext&>(), "context"_a,
             py::keep_alive<1, 2>())
        .def("frequency", &linflow::FrozenOrbitModel::frequency, "H"_a, "lsq"_a)
        .def("turning_radii", &linflow::FrozenOrbitModel::turning_radii, "H"_a, "lsq"_a)
        .def("angle", &linflow::FrozenOrbitModel::angle, "H"_a, "lsq"_a, "r"_a, "w"_a)
        .def(
            "radial_state",
            [](const linflow::FrozenOrbitModel& self, double H, double lsq, double Q) {
                double r = 0.0, w = 0.0;
                self.radial_state(H, lsq, Q, r, w);
                return py::make_tuple(r, w);
            },
            "H"_a, "lsq"_a, "Q"_a);

    py::class_<linflow::AngleFourierTable>(m, "AngleFourierTable")
        .def(py::init([](const std::function<double(double, double, double)>& f,
                         const effpot::SupportSpec& spec, linflow::TableConfig cfg) {
                 return linflow::AngleFourierTable(f, spec, serial(cfg));
             }),
             "f"_a, "spec"_a, "config"_a = linflow::TableConfig{})
        .def("cutoff", &linflow::AngleFourierTable::cutoff)
        .def("nodes", &linflow::AngleFourierTable::nodes)
        .def("hNode", &linflow::AngleFourierTable::hNode, "n"_a)
        .def("mNode", &linflow::AngleFourierTable::mNode, "n"_a)
        .def("weight", &linflow::AngleFourierTable::weight, "n"_a)
        .def("mode", &linflow::AngleFourierTable::mode, "k"_a, "n"_a)
        .def("spectral_mass", &linflow::AngleFourierTable::spectral_mass);

    m.def("semigroup_apply", &linflow::semigroup_apply, "table"_a, "t"_a, "model"_a);

    py::class_<linflow::FieldSample>(m, "FieldSample")
        .def_readonly("phi", &linflow::FieldSample::phi)
        .def_readonly("dphiDt", &linflow::FieldSample::dphiDt);

    py::class_<linflow::LinearFieldEvaluator>(m, "LinearFieldEvaluator")
        .def(py::init<const linflow::AngleFourierTable&, const linflow::OrbitModel&,
                      std::vector<double>, int, int>(),
             "table"_a, "model"_a, "probes"_a, "nGauss"_a = 48, "workers"_a = 1,
             py::call_guard<py::gil_scoped_release>())
        .def("at", &linflow::LinearFieldEvaluator::at, "t"_a)
        .def("probes", &linflow::LinearFieldEvaluator::probes);

    m.def("field_from_table", &linflow::field_from_table, "table"_a, "model"_a, "t"_a,
          "probes"_a, "nGauss"_a = 48, "workers"_a = 1);

    py::class_<linflow::DensityRateEvaluator>(m, "DensityRateEvaluator")
        .def(py::init([](const std::function<double(double, double, double)>& f,
                         const effpot::SupportSpec& spec, std::vector<double> probes,
                         linflow::TableConfig cfg) {
                 return linflow::DensityRateEvaluator(f, spec, std::move(probes),
                                                      serial(cfg));
             }),
             "f"_a, "spec"_a, "probes"_a, "config"_a = linflow::TableConfig{})
        .def("at", &linflow::DensityRateEvaluator::at, "t"_a)
        .def("density_at", &linflow::DensityRateEvaluator::density_at, "t"_a)
        .def("probes", &linflow::DensityRateEvaluator::probes);

    m.def(
        "free_stream_density_rate",
        [](const std::function<double(double, double, double)>& f,
           const effpot::SupportSpec& spec, double t, const std::vector<double>& probes,
           linflow::TableConfig cfg) {
            return linflow::free_stream_density_rate(f, spec, t, probes, serial(cfg));
        },
        "f"_a, "spec"_a, "t"_a, "probes"_a, "config"_a = linflow::TableConfig{});

    m.def(
        "check_field_convergence",
        [](const std::function<double(double, double, double)>& f,
           const effpot::SupportSpec& spec, const linflow::OrbitModel& model,
           const std::vector<double>& probes, linflow::TableConfig cfg, double tol) {
            linflow::check_field_convergence(f, spec, model, probes, serial(cfg), tol);
        },
        "f"_a, "spec"_a, "model"_a, "probes"_a, "config"_a = linflow::TableConfig{},
        "tol"_a = 0.02);

    py::class_<diag::DecayFit>(m, "DecayFit")
        .def_readonly("t0", &diag::DecayFit::t0)
        .def_readonly("t1", &diag::DecayFit::t1)
        .def_readonly("exponent", &diag::DecayFit::exponent)
        .def_readonly("residual", &diag::DecayFit::residual)
        .def_readonly("floorFlag", &diag::DecayFit::floorFlag);

    m.def("decay_fit", &diag::decay_fit, "t"_a, "y"_a, "t0"_a, "t1"_a);
    m.def("dphi_dt_fd", &diag::dphi_dt_fd, "fields"_a, "cadence"_a, "probes"_a);
    m.def("jacobian_probe", &diag::jacobian_probe, "state"_a, "context"_a,
          "scale"_a = 1e-4);
    m.def("rho_of_r", &diag::rho_of_r, "ensemble"_a, "grid"_a, "workers"_a = 1);

    py::class_<diag::SupportReport>(m, "SupportReport")
        .def_readonly("violations", &diag::SupportReport::violations)
        .def_readonly("worstMarginH", &diag::SupportReport::worstMarginH)
        .def_readonly("worstMarginL", &diag::SupportReport::worstMarginL);

    m.def("support_monitor", &diag::support_monitor, "ensemble"_a, "spec"_a,
          "field"_a = effpot::FieldProfile{});

    py::class_<cli::RunConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &cli::RunConfig::scenario)
        .def_readwrite("spec", &cli::RunConfig::spec)
        .def_readwrite("profile", &cli::RunConfig::profile)
        .def_readwrite("counts", &cli::RunConfig::counts)
        .def_readwrite("bins", &cli::RunConfig::bins)
        .def_readwrite("table", &cli::RunConfig::table)
        .def_readwrite("dtFactor", &cli::RunConfig::dtFactor)
        .def_readwrite("tFinal", &cli::RunConfig::tFinal)
        .def_readwrite("cadence", &cli::RunConfig::cadence)
        .def_readwrite("outDir", &cli::RunConfig::outDir)
        .def_readwrite("seed", &cli::RunConfig::seed)
        .def_readwrite("signCoupling", &cli::RunConfig::signCoupling)
        .def_readwrite("workers", &cli::RunConfig::workers);

    m.def(
        "parse_config",
        [](const std::string& text) { return cli::parse_config(text); }, "text"_a);
    m.def("render_config", &cli::render_config, "config"_a);
    m.def("run_scenario", &cli::run_scenario, "config"_a,
          py::call_guard<py::gil_scoped_release>());
}
