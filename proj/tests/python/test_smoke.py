import math

import pytest

import kepmix as km

SPEC = dict(c=0.25, h=0.35, l1=0.5, l2=0.7)


def support():
    return km.SupportSpec(**SPEC)


def test_delaunay_roundtrip():
    d0 = km.DelaunayState(J=1.1, L=0.8, Lz=0.3, Q=0.7, thetaL=-1.2, thetaLz=0.9)
    s = km.delaunay_to_cartesian(d0)
    d1 = km.cartesian_to_delaunay(s)
    for name in ("J", "L", "Lz", "Q", "thetaL", "thetaLz"):
        assert getattr(d1, name) == pytest.approx(getattr(d0, name), abs=1e-10)


def test_kepler_period_closed_form():
    H = -0.5
    assert km.kepler_period(H) == pytest.approx(math.pi / (-H) ** 1.5, rel=1e-14)
    ctx = km.OrbitContext(km.FieldProfile(), support())
    assert ctx.radial_period(-0.5, 0.6) == pytest.approx(km.kepler_period(-0.5), rel=1e-8)


def test_radial_angle_inverse():
    H, lsq, q = -0.55, 0.6, 1.2
    r, w = km.kepler_radial_state(H, lsq, q)
    assert km.kepler_radial_angle(H, lsq, r, w) == pytest.approx(q, abs=1e-10)


def test_unit_shell_field_oracle():
    grid = km.RadialGrid(0.5, 2.5, 512)
    sigma = [0.0] * 512
    sigma[127] = 0.5 / grid.dr()
    sigma[128] = 0.5 / grid.dr()
    field = km.solve_field(sigma, grid, 1)
    assert field.phi(2.0) == pytest.approx(-math.pi / 2, abs=1e-3)
    assert field.dphi(2.0) == pytest.approx(math.pi / 4, abs=1e-3)


def test_ensemble_mass_relation():
    spec = support()
    ens = km.init_ensemble(spec, km.BumpProfile(amplitude=1.0, exponent=3),
                           km.GridCounts(8, 8, 8))
    grid = km.RadialGrid.for_support(spec, 512)
    sigma = km.deposit_sigma(ens, grid)
    assert sum(sigma) * grid.dr() == pytest.approx(ens.totalMass / math.pi, rel=1e-12)
    field = km.solve_field(sigma, grid, 1)
    assert field.phi(1.0) < 0.0


def test_static_field_for_angle_independent_data():
    spec = support()

    def f(q, H, M):
        return km.f_in(spec, km.BumpProfile(1.0, 3), H, M)

    table = km.AngleFourierTable(f, spec, km.TableConfig(K=2, nH=16, nM=6, nQ=16))
    ev = km.LinearFieldEvaluator(table, km.KeplerOrbitModel(), [0.8, 1.2])
    early, late = ev.at(0.0), ev.at(7.5)
    for a, b in zip(early.phi, late.phi):
        assert a == pytest.approx(b, abs=1e-12)
    for rate in late.dphiDt:
        assert abs(rate) < 1e-12


def test_vlasov_run_conserves_mass():
    cfg = km.RunConfig()
    cfg.spec = support()
    cfg.profile = km.BumpProfile(amplitude=1e-4, exponent=3)
    cfg.counts = km.GridCounts(8, 8, 8)
    cfg.tEnd = 0.5
    cfg.outputEvery = 10
    result = km.run(cfg)
    assert result.dt > 0.0
    assert len(result.snapshots) >= 2
    masses = {snap.totalMass for snap in result.snapshots}
    assert len(masses) == 1
    for snap in result.snapshots:
        assert snap.supportViolations == 0


def test_decay_fit_recovers_power_law():
    t = [1.0 * 1.122 ** i for i in range(50)]
    y = [ti ** -3.0 for ti in t]
    fit = km.decay_fit(t, y, 2.0, max(t))
    assert fit.exponent == pytest.approx(-3.0, abs=1e-6)
    assert not fit.floorFlag


def test_jacobian_matches_frequency():
    ctx = km.OrbitContext(km.FieldProfile(), support())
    geo = ctx.make_orbit(-0.55, 0.6)
    r = 0.5 * (geo.rMin + geo.rMax)
    w = math.sqrt(2.0 * (-0.55 - ctx.effective_potential(r, 0.6)))
    det = km.jacobian_probe(km.RadialState(r=r, w=w, L=0.6), ctx)
    assert det == pytest.approx(geo.frequency, rel=1e-4)


def test_config_roundtrip_and_errors():
    cfg = km.parse_config("[run]\nscenario = period-table\ntFinal = 5\n")
    assert cfg.scenario == "period-table"
    assert cfg.bins == 512
    again = km.parse_config(km.render_config(cfg))
    assert km.render_config(again) == km.render_config(cfg)
    with pytest.raises(km.KepmixError):
        km.parse_config("[run]\nscenario = bogus\ntFinal = 5\n")
