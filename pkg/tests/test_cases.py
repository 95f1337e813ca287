import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atgj.cases import (
    PRESETS,
    CavityCase,
    CylinderCase,
    GeometryError,
    extract_centerline,
    laplace_oracle,
    laplace_relaxation,
    node_budget_ratio,
    preset,
    read_field_csv,
    table1_case,
    write_field_csv,
    write_profile_csv,
)
from atgj.quadrature import ParameterError
from atgj.solver import DIFFUSE_WALL, FREESTREAM, OUTFLOW


class TestCavitySets:
    @pytest.mark.parametrize("kn, n_theta, lam", [(0.001, 16, 500.0), (0.1, 45, 5.0),
                                                  (1, 60, 5.0), (10, 90, 5.0)])
    def test_rows(self, kn, n_theta, lam):
        c = table1_case(kn)
        v = c.velocity
        assert (v.n, v.n_theta, v.lam) == (8, n_theta, lam)
        assert v.alpha == pytest.approx(math.pi / 2 * lam, rel=1e-15)
        assert c.Kn == kn
        assert c.T_h == pytest.approx(4 / 3) and c.T_c == pytest.approx(2 / 3)

    def test_unknown(self):
        with pytest.raises(ParameterError, match="cavity-kn10"):
            table1_case(0.5)
        with pytest.raises(ParameterError, match="available"):
            preset("nope")

    @pytest.mark.parametrize("kn, ratio", [(1, 161 ** 2 / 480), (10, 201 ** 2 / 720),
                                           (0.1, 28 ** 2 / 360), (0.001, 12 ** 2 / 128)])
    def test_node_budget(self, kn, ratio):
        assert node_budget_ratio(kn) == pytest.approx(ratio, rel=1e-15)

    def test_node_budget_published(self):
        assert round(node_budget_ratio(1), 1) == 54.0
        assert round(node_budget_ratio(10), 1) == 56.1

    def test_near_continuum_variants(self):
        for name, kn in [("cavity-kn0.001-analytic", 0.001), ("cavity-kn0.0001-analytic", 0.0001)]:
            c = preset(name)
            assert c.analytic and c.Kn == kn
            assert c.T_h == pytest.approx(301 / 300) and c.T_c == 1.0
            assert c.velocity.lam == 500.0

    def test_cavity_walls(self):
        c = preset("cavity-kn10")
        bcs = c.boundaries()
        assert all(b.kind == DIFFUSE_WALL and tuple(b.wall_u) == (0, 0) for b in bcs.values())
        assert bcs["north"].wall_T == c.T_h
        assert {bcs[s].wall_T for s in ("west", "east", "south")} == {c.T_c}
        m = c.mesh()
        assert (m.nx, m.ny) == (30, 30)
        assert c.mesh("full").nx == 60
        assert c.mesh(cells=15).nx == 15
        with pytest.raises(ParameterError):
            c.mesh("huge")

    def test_every_preset_builds(self):
        for name, c in PRESETS.items():
            vs = c.velocity.build()
            assert vs.K == c.velocity.K
            assert c.gas().Kn == c.Kn


class TestCylinder:
    def test_published_values(self):
        c = CylinderCase()
        assert (c.Ma, c.Kn, c.T_inf, c.rho_inf, c.u_inf, c.T_W, c.D) == (5.0, 0.1, 1.0, 1.0, 4.56, 1.0, 1.0)
        assert c.velocity.alpha == 20.0
        assert c.velocity.lam == pytest.approx(2 * 20 / math.pi + 20)

    def test_node_radius(self):
        vs = preset("cylinder-ma5").velocity.build()
        rmax = np.hypot(vs.xi_x, vs.xi_y).max()
        assert abs(rmax - 11) <= 0.15 * 11

    def test_boundaries(self):
        b = CylinderCase().boundaries()
        assert b["west"].kind == FREESTREAM and b["east"].kind == OUTFLOW
        assert b["solid"].kind == DIFFUSE_WALL

    def test_mesh(self):
        c = CylinderCase()
        desk = c.mesh()
        assert (desk.nx, desk.ny) == (45, 40)
        assert desk.solid.sum() == 4
        full = c.mesh("full")
        assert abs(full.nx * full.ny - 33300) <= 0.2 * 33300
        # the square's faces sit on grid lines
        xc, yc = full.cell_centers()
        inside = full.solid.any(axis=1)
        assert np.all(np.abs(xc[inside]) < 0.5)
        assert full.solid.sum() == 64

    def test_config(self):
        cfg = CylinderCase().solver_config()
        assert cfg.max_steps == 200 and cfg.cfl == 0.8
        assert cfg.limiter == "vanleer"
        assert preset("cavity-kn10").solver_config().limiter == "none"


class TestLaplace:
    def test_cold_corners(self):
        for x, y in [(0, 0), (1, 0), (0, 0.5), (1, 0.3), (0.4, 0)]:
            assert laplace_oracle(x, y, 2.0, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_top_midpoint(self):
        for terms in (200, 2000):
            assert abs(laplace_oracle(0.5, 1.0, 2.0, 1.0, terms) - 2.0) < 1.0 / terms

    def test_center(self):
        # rotating the hot wall round all four sides sums to the uniform hot field
        assert laplace_oracle(0.5, 0.5, 2.0, 1.0) == pytest.approx(1.25, abs=1e-14)

    def test_relaxation_cross_check(self):
        x, y, T = laplace_relaxation(511, 2.0, 1.0)
        assert T[255, 255] == pytest.approx(1.25, abs=1e-12)
        X, Y = np.meshgrid(x, y, indexing="ij")
        sel = (slice(31, None, 32), slice(31, None, 32))
        np.testing.assert_allclose(laplace_oracle(X[sel], Y[sel], 2.0, 1.0), T[sel], atol=2e-5)

    def test_bad_terms(self):
        with pytest.raises(ParameterError):
            laplace_oracle(0.5, 0.5, 2, 1, terms=0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_maximum_principle(self, x, y):
        T = laplace_oracle(x, y, 4 / 3, 2 / 3)
        assert 2 / 3 - 1e-12 <= T <= 4 / 3 + 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 2 ** 52 - 1), st.integers(1, 2 ** 52 - 1))
    def test_rotations_sum_to_one(self, i, j):
        # heating each wall in turn and adding up gives the all-hot state;
        # multiples of 2^-52 reflect exactly (1 - 1e-300 would land on the wall)
        x, y = i / 2 ** 52, j / 2 ** 52
        total = sum(laplace_oracle(a, b, 1.0, 0.0) for a, b in ((x, y), (x, 1 - y), (y, 1 - x), (y, x)))
        assert total == pytest.approx(1.0, abs=1e-13)

    def test_hot_wall_exact(self):
        x = np.linspace(0.001, 0.999, 999)
        np.testing.assert_allclose(laplace_oracle(x, np.ones_like(x), 4 / 3, 2 / 3), 4 / 3, rtol=0, atol=1e-14)
        near = laplace_oracle(x, np.full_like(x, 1 - 1e-9), 1.0, 0.0)
        assert near.max() <= 1.0 + 1e-15 and near.min() > 0.99

    def test_case_oracle_scales(self):
        c = preset("cavity-kn0.001-analytic")
        assert c.oracle(0.5, 0.5) == pytest.approx(c.T_c + 0.25 * (c.T_h - c.T_c), abs=1e-14)


def _uniform_fields(mesh, **vals):
    base = dict(rho=1.0, ux=0.0, uy=0.0, T=1.0, qx=0.0, qy=0.0)
    base.update(vals)
    out = {k: np.full((mesh.nx, mesh.ny), float(v)) for k, v in base.items()}
    for v in out.values():
        v[np.asarray(mesh.solid)] = np.nan
    return out


class TestCenterline:
    def test_uniform(self):
        m = preset("cavity-kn1").mesh(cells=10)
        f = _uniform_fields(m, T=0.7, ux=0.1)
        for axis in ("horizontal", "vertical"):
            p = extract_centerline(f, m, axis)
            assert p.columns == ["s", "T", "ux", "uy"]
            assert np.all(np.diff(p.s) > 0)
            np.testing.assert_array_equal(p.values["T"], 0.7)

    def test_symmetric_field(self):
        m = preset("cavity-kn1").mesh(cells=12)
        xc, yc = m.cell_centers()
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        f = _uniform_fields(m)
        f["ux"] = np.sin(2 * np.pi * X) * Y
        f["T"] = 1 + (X - 0.5) ** 2
        p = extract_centerline(f, m, "vertical")
        assert np.abs(p.values["ux"]).max() < 1e-15

    def test_linear_interpolation(self):
        m = preset("cavity-kn1").mesh(cells=10)
        xc, yc = m.cell_centers()
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        f = _uniform_fields(m)
        f["T"] = 2 * X + 3 * Y
        p = extract_centerline(f, m, "horizontal", position=0.33)
        np.testing.assert_allclose(p.values["T"], 2 * p.s + 0.99, atol=1e-14)

    def test_outside(self):
        m = preset("cavity-kn1").mesh(cells=6)
        with pytest.raises(GeometryError):
            extract_centerline(_uniform_fields(m), m, "vertical", position=1.5)
        with pytest.raises(ParameterError):
            extract_centerline(_uniform_fields(m), m, "diagonal")

    def test_upstream(self):
        c = CylinderCase()
        m = c.mesh()
        f = _uniform_fields(m, rho=2.0, ux=3.0)
        p = extract_centerline(f, m, "upstream")
        assert p.columns == ["s", "T", "u", "rho_flux"]
        assert p.s[-1] < -0.5 and p.s[0] < p.s[-1]
        np.testing.assert_array_equal(p.values["rho_flux"], 6.0)

    def test_crossing_obstacle(self):
        m = CylinderCase().mesh()
        with pytest.raises(GeometryError):
            extract_centerline(_uniform_fields(m), m, "horizontal")
        m2 = CylinderCase().mesh(obstacle=False)
        with pytest.raises(GeometryError):
            extract_centerline(_uniform_fields(m2), m2, "upstream")


class TestExport:
    def test_field_round_trip(self, tmp_path):
        m = CylinderCase().mesh()
        rng = np.random.default_rng(3)
        f = {k: rng.random((m.nx, m.ny)) for k in ("rho", "ux", "uy", "T", "qx", "qy")}
        for v in f.values():
            v[np.asarray(m.solid)] = np.nan
        path = tmp_path / "f.csv"
        write_field_csv(path, f, m)
        assert path.read_text().splitlines()[0] == "x,y,rho,ux,uy,T,qx,qy"
        g, m2 = read_field_csv(path)
        assert (m2.nx, m2.ny) == (m.nx, m.ny)
        np.testing.assert_array_equal(np.asarray(m2.solid), np.asarray(m.solid))
        for k in f:
            np.testing.assert_array_equal(g[k], f[k])
        np.testing.assert_allclose(m2.cell_centers()[0], m.cell_centers()[0], atol=1e-12)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ParameterError):
            read_field_csv(path)

    def test_profile_csv(self, tmp_path):
        m = preset("cavity-kn1").mesh(cells=8)
        p = extract_centerline(_uniform_fields(m, T=1.5), m, "vertical")
        path = tmp_path / "p.csv"
        write_profile_csv(path, p)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert path.read_text().splitlines()[0] == "s,T,ux,uy"
        np.testing.assert_array_equal(data[:, 0], p.s)
        np.testing.assert_array_equal(data[:, 1], 1.5)


def test_case_types():
    assert isinstance(preset("cavity-kn0.1"), CavityCase)
    assert isinstance(preset("cylinder-ma5"), CylinderCase)
