import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brakeplan import (FieldFormatError, ParameterError, PenaltyField, PlanParams,
                       generate_brownian, generate_scenario, read_csv, write_csv)
from brakeplan.field import Band, ScenarioSpec, TrajectoryFan, Zone, render_pgm, sample


def test_sample_interpolates_midpoint():
    vals = np.zeros((2, 6))
    vals[0, 1] = 1.0
    f = PenaltyField(vals, 0.1, 1.0)
    assert sample(f, 0, 0.5) == 0.5
    assert sample(f, 0, 1.0) == 1.0


def test_sample_outside_arc_length_is_zero():
    f = PenaltyField.constant(1.0, 3, 5, 0.1, 0.5)
    assert sample(f, 1, -3.0) == 0.0
    assert sample(f, 1, f.s_end + 0.1) == 0.0


@given(row=st.integers(0, 3), s=st.floats(0.0, 4.5))
def test_sample_constant_field(row, s):
    f = PenaltyField.constant(1.0, 4, 10, 0.1, 0.5)
    assert sample(f, row, s) == pytest.approx(1.0, abs=1e-15)


def test_sample_row_out_of_range():
    f = PenaltyField.zeros(3, 4, 0.1, 0.5)
    with pytest.raises(IndexError):
        sample(f, 3, 0.0)


def test_field_rejects_negative_values():
    with pytest.raises(ParameterError):
        PenaltyField(np.array([[0.0, -1.0], [0.0, 0.0]]), 0.1, 0.5)


def test_field_is_read_only():
    f = PenaltyField.zeros(3, 4, 0.1, 0.5)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_brownian_deterministic():
    a = generate_brownian(3, 20, 50, 0.1, 0.25)
    b = generate_brownian(3, 20, 50, 0.1, 0.25)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, generate_brownian(4, 20, 50, 0.1, 0.25).values)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_brownian_normalized(seed):
    f = generate_brownian(seed, 15, 40, 0.1, 0.25)
    assert abs(f.values.min()) <= 1e-12
    assert abs(f.values.max() - 1.0) <= 1e-12


def test_brownian_mean_is_moderate():
    f = generate_brownian(1, 100, 400, 0.1, 0.25)
    assert 0.2 < f.values.mean() < 0.8


def test_brownian_rejects_empty_grid():
    with pytest.raises(ParameterError):
        generate_brownian(0, 0, 10, 0.1, 0.25)


def test_scenario_empty_is_zero():
    f = generate_scenario(ScenarioSpec(n_t=5, n_s=30, dt_grid=0.1, ds_grid=1.0))
    assert not f.values.any()


def test_scenario_static_zone():
    spec = ScenarioSpec(n_t=4, n_s=80, dt_grid=0.1, ds_grid=1.0, zones=[Zone(40.0, 50.0, 1.0)])
    f = generate_scenario(spec)
    s = np.arange(80.0)
    inside = (s >= 40) & (s <= 50)
    assert np.all(f.values[:, inside] == 1.0)
    assert np.all(f.values[:, ~inside] == 0.0)


def test_scenario_moving_band_center():
    spec = ScenarioSpec(n_t=3, n_s=100, dt_grid=0.1, ds_grid=0.5,
                        bands=[Band(s=20.0, speed=10.0, width=1.0, weight=1.0)])
    f = generate_scenario(spec)
    lit = np.flatnonzero(f.values[1])
    assert lit.mean() * 0.5 == pytest.approx(21.0)


def test_scenario_negative_weight():
    spec = ScenarioSpec(n_t=3, n_s=10, dt_grid=0.1, ds_grid=1.0, zones=[Zone(1.0, 2.0, -1.0)])
    with pytest.raises(ParameterError):
        generate_scenario(spec)


def test_scenario_from_dict():
    spec = ScenarioSpec.from_dict({"n_t": 3, "n_s": 10, "dt_grid": 0.1, "ds_grid": 1.0,
                                   "zones": [{"s_lo": 2, "s_hi": 3, "weight": 0.5}]})
    assert generate_scenario(spec).values[0, 2] == 0.5


def test_csv_round_trip(tmp_path):
    f = generate_brownian(5, 12, 30, 0.1, 0.25)
    path = tmp_path / "f.csv"
    write_csv(f, path)
    g = read_csv(path)
    assert np.max(np.abs(f.values - g.values)) <= 1e-9
    assert (g.dt_grid, g.ds_grid, g.t0) == (f.dt_grid, f.ds_grid, f.t0)


def _write(path, text):
    path.write_text(text)
    return path


def test_csv_row_count_mismatch(tmp_path):
    p = _write(tmp_path / "a.csv", "# t0=0 dt=0.1 ds=0.5 nt=3 ns=2\n0,1\n1,0\n")
    with pytest.raises(FieldFormatError):
        read_csv(p)


def test_csv_negative_cell_names_line(tmp_path):
    p = _write(tmp_path / "a.csv", "# t0=0 dt=0.1 ds=0.5 nt=2 ns=2\n0,1\n1,-2\n")
    with pytest.raises(FieldFormatError) as exc:
        read_csv(p)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_csv_row_length_mismatch(tmp_path):
    p = _write(tmp_path / "a.csv", "# t0=0 dt=0.1 ds=0.5 nt=2 ns=3\n0,1,2\n1,0\n")
    with pytest.raises(FieldFormatError) as exc:
        read_csv(p)
    assert exc.value.line == 3


def test_csv_bad_header(tmp_path):
    p = _write(tmp_path / "a.csv", "t0=0 dt=0.1\n0,1\n")
    with pytest.raises(FieldFormatError) as exc:
        read_csv(p)
    assert exc.value.line == 1


def _read_pgm(path):
    data = path.read_bytes()
    head, rest = data.split(b"\n", 1)
    dims, rest = rest.split(b"\n", 1)
    maxval, pixels = rest.split(b"\n", 1)
    w, h = map(int, dims.split())
    assert head == b"P5" and maxval == b"255"
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w)


def test_render_black_and_white(tmp_path):
    render_pgm(PenaltyField.zeros(4, 7, 0.1, 0.5), tmp_path / "z.pgm")
    img = _read_pgm(tmp_path / "z.pgm")
    assert img.shape == (4, 7) and not img.any()
    render_pgm(PenaltyField.constant(1.0, 4, 7, 0.1, 0.5), tmp_path / "o.pgm")
    assert np.all(_read_pgm(tmp_path / "o.pgm") == 255)


def test_render_overlay_marks_cruise_position(tmp_path):
    params = PlanParams(v0=15.0, a_prev=-4.0)
    fan = TrajectoryFan.for_plan(params, -4.0, 10, 0.1)
    render_pgm(PenaltyField.zeros(10, 100, 0.1, 0.5), tmp_path / "f.pgm", fan)
    img = _read_pgm(tmp_path / "f.pgm")
    assert img[1, 3] == 255
