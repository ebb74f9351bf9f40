import logging

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from raildyn.errors import CalibrationError, ConfigError
from raildyn.track_model import (
    TrackProperties,
    assemble_track,
    build_dof_map,
    calibrate_element_length,
    dof_labels,
    rail_damping_matrix,
    rail_mass_matrix,
    rail_mass_pattern,
    rail_stiffness_matrix,
    rail_stiffness_pattern,
    rayleigh_coefficients,
    reduce_pattern,
    reduced_rail_matrices,
    section_frequencies,
    section_matrices,
)

L = sp.Symbol("L", positive=True)

# transcribed from the printed element matrices
PRINTED_MR = sp.Matrix([
    [156, 22 * L, 54, -13 * L, 0, 0],
    [22 * L, 4 * L**2, 13 * L, -3 * L**2, 0, 0],
    [54, 13 * L, 312, 0, 54, -13 * L],
    [-13 * L, -3 * L**2, 0, 8 * L**2, 13 * L, -3 * L**2],
    [0, 0, 54, 13 * L, 156, -22 * L],
    [0, 0, -13 * L, -3 * L**2, -22 * L, 4 * L**2],
])
PRINTED_KR = sp.Matrix([
    [12, 6 * L, -12, 6 * L, 0, 0],
    [6 * L, 4 * L**2, -6 * L, 2 * L**2, 0, 0],
    [-12, -6 * L, 24, 0, -12, 6 * L],
    [6 * L, 2 * L**2, 0, 8 * L**2, -6 * L, 2 * L**2],
    [0, 0, -12, -6 * L, 12, -6 * L],
    [0, 0, 6 * L, 2 * L**2, -6 * L, 4 * L**2],
])
PRINTED_MR_STAR = sp.Matrix([
    [4 * L**2, 13 * L, -3 * L**2, 0],
    [13 * L, 312, 0, -13 * L],
    [-3 * L**2, 0, 8 * L**2, -3 * L**2],
    [0, 13 * L, -3 * L**2, 4 * L**2],
])
PRINTED_KR_STAR = sp.Matrix([
    [4 * L**2, -6 * L, 2 * L**2, 0],
    [-6 * L, 24, 0, 6 * L],
    [2 * L**2, 0, 8 * L**2, 2 * L**2],
    [0, 6 * L, 2 * L**2, 4 * L**2],
])


def props_strategy():
    pos = st.floats(min_value=0.1, max_value=10.0)
    return st.builds(
        lambda a, b, c, d, e, f, g, h, i, z1, z2, ell: TrackProperties(
            rho_r=7850 * a, A_r=76.7e-4 * b, E_r=210e9 * c, I_r=3038.6e-8 * d, m_T=90.84 * e,
            k_s=90e6 * f, c_s=30e3 * g, k_b=25.5e6 * h, c_b=40e3 * i, zeta1=z1, zeta2=min(z1 * z2, 0.99), L=ell,
        ),
        pos, pos, pos, pos, pos, pos, pos, pos, pos,
        st.floats(0.0, 0.3), st.floats(0.8, 1.25), st.floats(0.1, 1.0),
    )


class TestProperties:
    def test_defaults_are_table_values_in_si(self):
        p = TrackProperties()
        assert p.A_r == pytest.approx(76.70e-4)
        assert p.I_r == pytest.approx(3038.6e-8)
        assert p.k_s == 90e6 and p.c_b == 40e3

    @pytest.mark.parametrize("name,value", [("k_s", 0.0), ("L", -1.0), ("m_T", np.nan), ("c_s", -1.0), ("zeta1", 1.0)])
    def test_invalid_values_rejected_with_field(self, name, value):
        with pytest.raises(ConfigError) as info:
            TrackProperties(**{name: value})
        assert info.value.field == name

    def test_undamped_strips_all_damping(self):
        p = TrackProperties().undamped()
        assert (p.c_s, p.c_b, p.zeta1, p.zeta2) == (0, 0, 0, 0)


class TestRailMatrices:
    def test_patterns_match_printed_full_matrices(self):
        assert sp.simplify(sp.Matrix(rail_mass_pattern(L)) - PRINTED_MR) == sp.zeros(6, 6)
        assert sp.simplify(sp.Matrix(rail_stiffness_pattern(L)) - PRINTED_KR) == sp.zeros(6, 6)

    def test_reduced_patterns_match_printed_except_known_typo(self):
        mstar = sp.Matrix(reduce_pattern(rail_mass_pattern(L)))
        kstar = sp.Matrix(reduce_pattern(rail_stiffness_pattern(L)))
        assert sp.simplify(kstar - PRINTED_KR_STAR) == sp.zeros(4, 4)
        diff = sp.Matrix(sp.simplify(mstar - PRINTED_MR_STAR))
        assert diff[3, 1] == -26 * L
        diff[3, 1] = 0
        assert diff == sp.zeros(4, 4)
        # the printed reduced mass matrix is the only asymmetric one
        assert PRINTED_MR_STAR != PRINTED_MR_STAR.T
        assert mstar == mstar.T

    def test_numeric_entries(self):
        p = TrackProperties(L=0.6)
        c = p.rho_r * p.A_r * p.L / 420
        s = p.E_r * p.I_r / p.L**3
        M, K = rail_mass_matrix(p), rail_stiffness_matrix(p)
        assert M[0, 0] == pytest.approx(156 * c)
        assert M[2, 2] == pytest.approx(312 * c)
        assert M[3, 3] == pytest.approx(8 * p.L**2 * c)
        assert M[0, 4] == M[4, 0] == 0
        assert K[0, 0] == pytest.approx(12 * s)
        assert K[2, 2] == pytest.approx(24 * s)
        assert K[1, 1] == pytest.approx(4 * p.L**2 * s)

    def test_rigid_body_modes_of_free_rail(self):
        p = TrackProperties(L=0.45)
        K = rail_stiffness_matrix(p)
        scale = np.abs(K).max()
        assert np.abs(K @ np.array([1, 0, 1, 0, 1, 0.0])).max() < 1e-12 * scale
        assert np.abs(K @ np.array([0, 1, p.L, 1, 2 * p.L, 1.0])).max() < 1e-12 * scale
        eig = np.linalg.eigvalsh(K)
        assert np.sum(np.abs(eig) < 1e-9 * eig.max()) == 2
        assert eig.min() > -1e-9 * eig.max()

    @settings(max_examples=30, deadline=None)
    @given(props_strategy())
    def test_rail_matrices_symmetric(self, p):
        M, K = rail_mass_matrix(p), rail_stiffness_matrix(p)
        np.testing.assert_array_equal(M, M.T)
        np.testing.assert_array_equal(K, K.T)
        assert np.linalg.eigvalsh(M).min() > 0

    def test_reduced_matrices(self):
        p = TrackProperties()
        Mstar, Kstar = reduced_rail_matrices(rail_mass_matrix(p), rail_stiffness_matrix(p))
        assert Mstar[1, 1] == pytest.approx(312 * p.mass_scale)
        assert Kstar[0, 0] == pytest.approx(4 * p.L**2 * p.stiffness_scale)

    def test_reduction_is_a_projection(self):
        p = TrackProperties()
        M = rail_mass_matrix(p)
        Mstar, _ = reduced_rail_matrices(M, M)
        embedded = rail_damping_matrix(Mstar, Mstar, 1.0, 0.0)
        again, _ = reduced_rail_matrices(embedded, embedded)
        np.testing.assert_array_equal(again, Mstar)


class TestRayleigh:
    def test_zero_damping(self):
        assert rayleigh_coefficients(10.0, 20.0, 0.0, 0.0) == (0.0, 0.0)

    def test_equal_ratios_match_symbolic_solution(self):
        w1, w2, z, a0, a1 = sp.symbols("w1 w2 z a0 a1", positive=True)
        sol = sp.solve([a0 / (2 * w1) + a1 * w1 / 2 - z, a0 / (2 * w2) + a1 * w2 / 2 - z], [a0, a1])
        values = {w1: 123.4, w2: 987.6, z: 0.05}
        got = rayleigh_coefficients(123.4, 987.6, 0.05, 0.05)
        assert got[0] == pytest.approx(float(sol[a0].subs(values)), rel=1e-12)
        assert got[1] == pytest.approx(float(sol[a1].subs(values)), rel=1e-12)
        assert got[0] == pytest.approx(2 * 0.05 * 123.4 * 987.6 / (123.4 + 987.6), rel=1e-12)

    @settings(max_examples=200)
    @given(st.floats(0.1, 1e4), st.floats(1.01, 100.0), st.floats(0, 0.5), st.floats(0, 0.5))
    def test_round_trip(self, w1, ratio, z1, z2):
        w2 = w1 * ratio
        a0, a1 = rayleigh_coefficients(w1, w2, z1, z2)
        assert a0 / (2 * w1) + a1 * w1 / 2 == pytest.approx(z1, abs=1e-12)
        assert a0 / (2 * w2) + a1 * w2 / 2 == pytest.approx(z2, abs=1e-12)

    def test_negative_coefficient_rejected_by_track(self):
        with pytest.raises(ConfigError):
            section_matrices(TrackProperties(zeta1=0.25, zeta2=0.0))

    def test_equal_frequencies_rejected(self):
        with pytest.raises(ConfigError):
            rayleigh_coefficients(5.0, 5.0, 0.05, 0.05)


class TestRailDamping:
    def test_zero_coefficients_give_zero(self):
        p = TrackProperties()
        Mstar, Kstar = reduced_rail_matrices(rail_mass_matrix(p), rail_stiffness_matrix(p))
        assert not rail_damping_matrix(Mstar, Kstar, 0.0, 0.0).any()

    def test_embedding(self):
        p = TrackProperties()
        Mstar, Kstar = reduced_rail_matrices(rail_mass_matrix(p), rail_stiffness_matrix(p))
        C = rail_damping_matrix(Mstar, Kstar, 3.0, 2e-4)
        assert not C[[0, 4], :].any() and not C[:, [0, 4]].any()
        assert C[1, 1] == pytest.approx(3.0 * Mstar[0, 0] + 2e-4 * Kstar[0, 0])


class TestSection:
    def test_coupling_entries(self):
        p = TrackProperties()
        s = section_matrices(p)
        assert s.K[6, 6] == pytest.approx(p.k_s + p.k_b)
        assert s.K[0, 6] == -p.k_s
        assert s.C[4, 7] == -p.c_s
        assert s.C[7, 7] == pytest.approx(p.c_s + p.c_b)
        assert s.M[6, 6] == s.M[7, 7] == p.m_T

    def test_decoupled_limit_recovers_bare_rail(self):
        p = TrackProperties()
        s = section_matrices(p)
        np.testing.assert_array_equal(s.M[:6, :6], rail_mass_matrix(p))
        K_rail = s.K[:6, :6].copy()
        K_rail[0, 0] -= p.k_s
        K_rail[4, 4] -= p.k_s
        np.testing.assert_allclose(K_rail, rail_stiffness_matrix(p), rtol=1e-15, atol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(props_strategy())
    def test_section_symmetric_and_dissipative(self, p):
        s = section_matrices(p)
        for A in (s.M, s.C, s.K):
            assert np.abs(A - A.T).max() <= 1e-10 * max(np.abs(A).max(), 1.0)
        assert np.linalg.eigvalsh(s.M).min() > 0
        c_eig = np.linalg.eigvalsh(s.C)
        assert c_eig.min() >= -1e-9 * max(abs(c_eig).max(), 1.0)


class TestAssembly:
    @pytest.mark.parametrize("N,n_dof", [(1, 8), (2, 13), (4, 23), (30, 153)])
    def test_dof_count(self, N, n_dof):
        assert assemble_track(TrackProperties(), N).n_dof == n_dof

    def test_sharing_rule(self):
        dof_map = build_dof_map(5)
        for j in range(1, 5):
            assert list(dof_map[j, [0, 1, 6]]) == list(dof_map[j - 1, [4, 5, 7]])
        fresh = dof_map[1:, [2, 3, 4, 5, 7]].ravel()
        assert len(set(fresh)) == fresh.size and fresh.min() == 8
        assert len(np.unique(dof_map)) == 5 * 5 + 3

    def test_labels(self):
        labels = dof_labels(build_dof_map(2))
        assert [str(x) for x in labels] == [
            "u1", "theta1", "u2", "theta2", "u3", "theta3", "uT1", "uT2",
            "u4", "theta4", "u5", "theta5", "uT3",
        ]

    @pytest.mark.parametrize("N", range(1, 11))
    def test_global_mass_cholesky(self, N):
        s = assemble_track(TrackProperties(), N)
        np.linalg.cholesky(s.M)
        for A in (s.M, s.C, s.K):
            assert np.abs(A - A.T).max() <= 1e-10 * np.abs(A).max()
        assert np.linalg.eigvalsh(s.K).min() > -1e-9 * np.abs(s.K).max()

    def test_zero_damping_path_is_exact(self):
        s = assemble_track(TrackProperties().undamped(), 6)
        assert not s.C.any()
        assert s.is_undamped

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 8), st.lists(st.floats(-1, 1), min_size=43, max_size=43))
    def test_energy_dissipation(self, N, v):
        s = assemble_track(TrackProperties(), N)
        vel = np.array(v[: s.n_dof])
        assert vel @ s.C @ vel >= -1e-9 * np.abs(s.C).max() * (vel @ vel)

    def test_summation_order_irrelevant(self):
        p = TrackProperties()
        a = assemble_track(p, 7)
        b = assemble_track(p, 7, order=range(6, -1, -1))
        np.testing.assert_allclose(a.K, b.K, rtol=0, atol=1e-12 * np.abs(a.K).max())

    def test_rejects_bad_n(self):
        with pytest.raises(ConfigError):
            assemble_track(TrackProperties(), 0)


class TestCalibration:
    def test_fixed_point(self):
        p = TrackProperties()
        target = section_frequencies(p.with_length(0.6))[1]
        result = calibrate_element_length(p, target, tol=1e-6)
        assert result.L == pytest.approx(0.6, abs=1e-4)

    def test_sweep_is_monotone_and_logged(self, caplog):
        with caplog.at_level(logging.INFO, logger="raildyn.track_model"):
            result = calibrate_element_length(TrackProperties(), 81.62)
        freqs = [f for _, f in result.sweep]
        assert len(result.sweep) == 24
        assert all(a > b for a, b in zip(freqs, freqs[1:]))
        assert sum("calibration sweep" in r.message for r in caplog.records) == 24

    def test_reference_target(self):
        result = calibrate_element_length(TrackProperties(), 81.62)
        assert result.L == pytest.approx(0.3, abs=2e-3)
        assert result.frequencies_hz[2] == pytest.approx(381.1, rel=2e-3)

    def test_out_of_range_reports_sweep(self):
        with pytest.raises(CalibrationError) as info:
            calibrate_element_length(TrackProperties(), 500.0)
        assert len(info.value.sweep) == 24
        assert "f(0.05)" in str(info.value)
