import numpy as np
import pytest

from raildyn.errors import ConfigError
from raildyn.loading import PulseLoad, tonnes_to_newtons
from raildyn.postprocess import (
    CASES,
    central_sleeper,
    format_percent,
    peak_summary,
    repartition_table,
    sleeper_dofs,
    sleeper_multiplicity,
    substructure_forces,
)
from raildyn.solvers import ResponseHistory, TimeGrid, solve
from raildyn.track_model import TrackProperties, assemble_track, build_dof_map

P0 = tonnes_to_newtons(10)


@pytest.fixture(scope="module")
def table_loads():
    """The four damping and pulse cases on a 30-section track."""
    props = TrackProperties()
    grid = TimeGrid.for_pulse(0.01)
    out = {}
    for damping, kind in CASES:
        track = props if damping == "damped" else props.undamped()
        system = assemble_track(track, 30)
        history = solve(system, PulseLoad(kind, P0, 0.01), grid=grid)
        out[(damping, kind)] = substructure_forces(history, track, system.dof_map, window=0.01)
    return out


def test_sleeper_dofs_and_multiplicity():
    dof_map = build_dof_map(3)
    labels_idx = sleeper_dofs(dof_map)
    assert len(labels_idx) == 4 and len(set(labels_idx)) == 4
    np.testing.assert_array_equal(sleeper_multiplicity(dof_map), [1, 2, 2, 1])


def test_zero_history_gives_zero_forces():
    system = assemble_track(TrackProperties(), 2)
    grid = TimeGrid.for_pulse(0.01)
    zeros = np.zeros((len(grid.times), system.n_dof))
    loads = substructure_forces(ResponseHistory(grid, zeros, zeros.copy()), system.props, system.dof_map, P0=P0)
    assert not loads.forces.any() and not loads.percent.any() and not loads.impulse_share.any()


def test_missing_velocity_rejected():
    system = assemble_track(TrackProperties(), 2)
    grid = TimeGrid.for_pulse(0.01)
    U = np.zeros((len(grid.times), system.n_dof))
    with pytest.raises(ConfigError):
        substructure_forces(ResponseHistory(grid, U, None), system.props, system.dof_map, P0=P0)


def test_reactions_balance_static_load():
    props = TrackProperties()
    system = assemble_track(props, 6)
    dof = 16
    F = np.zeros(system.n_dof)
    F[dof - 1] = P0
    u = np.linalg.solve(system.K, F)
    grid = TimeGrid(dt=1.0, n_steps=1, t_d=1.0)
    U = np.vstack([u, u])
    loads = substructure_forces(ResponseHistory(grid, U, np.zeros_like(U)), props, system.dof_map, P0=P0)
    assert loads.reactions[-1].sum() == pytest.approx(P0, rel=1e-10)
    assert loads.forces[-1].sum() < loads.reactions[-1].sum()


def test_table_symmetric_about_loaded_sleeper(table_loads):
    centre = central_sleeper(30)
    assert centre == 16
    for loads in table_loads.values():
        for d in range(1, 4):
            assert loads.percent_of(centre - d) == pytest.approx(loads.percent_of(centre + d), rel=1e-6)


def test_table_decays_away_from_load(table_loads):
    for loads in table_loads.values():
        right = [loads.percent_of(s) for s in range(16, 20)]
        assert all(a > b for a, b in zip(right, right[1:]))


def test_undamped_dominates_damped_at_centre(table_loads):
    for kind in ("half_sine", "rectangular"):
        assert table_loads[("undamped", kind)].percent_of(16) >= table_loads[("damped", kind)].percent_of(16)


def test_repartition_rows(table_loads):
    rows = repartition_table(table_loads)
    assert [r.sleeper for r in rows] == list(range(13, 20))
    assert all(len(r.values) == 4 for r in rows)
    assert rows[3].values[0] == pytest.approx(30.78, abs=0.1)


def test_repartition_requires_all_cases(table_loads):
    partial = {k: v for k, v in table_loads.items() if k != CASES[0]}
    with pytest.raises(ConfigError):
        repartition_table(partial)


def test_format_percent_threshold():
    assert format_percent(1.49) == "-"
    assert format_percent(1.5) == "1.50%"
    assert format_percent(30.784) == "30.78%"


def test_peak_summary_analytic_argmax():
    grid = TimeGrid.for_pulse(1.0, dt=1e-3, duration=2.0)
    t = grid.times
    U = np.column_stack([np.sin(np.pi * t), -3 * t * np.exp(-t)])
    peaks = peak_summary(ResponseHistory(grid, U, np.zeros_like(U)))
    assert peaks[0].value == pytest.approx(1.0) and peaks[0].time == pytest.approx(0.5)
    assert peaks[1].value == pytest.approx(3 / np.e, rel=1e-6) and peaks[1].time == pytest.approx(1.0)
    assert peaks[0].dof == 1 and peaks[0].label == "q1"
