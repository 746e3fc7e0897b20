import numpy as np
import pytest

from brakeplan import ConfigurationError, PlanParams, generate_brownian, plan, plan_direct
from brakeplan import _backend

compiled = pytest.mark.skipif("compiled" not in _backend.available(),
                              reason="compiled extension not built")


def test_python_backend_always_available():
    assert "python" in _backend.available()
    assert _backend.get("python").NAME == "python"


def test_unknown_backend():
    with pytest.raises(ConfigurationError):
        _backend.get("fortran")


def test_environment_override(monkeypatch):
    monkeypatch.setenv("BRAKEPLAN_BACKEND", "python")
    assert _backend.default_name() == "python"


@compiled
def test_compiled_is_default(monkeypatch):
    monkeypatch.delenv("BRAKEPLAN_BACKEND", raising=False)
    assert _backend.default_name() == "compiled"


@compiled
@pytest.mark.parametrize("v0,a_prev", [(5.0, -1.0), (15.0, -4.0), (30.0, -8.7), (1.0, -2.0)])
def test_fast_backends_agree(v0, a_prev):
    field = generate_brownian(int(v0 * 10), 100, 800, 0.1, 0.25)
    params = PlanParams(v0=v0, a_prev=a_prev)
    a = plan(field, params, backend="compiled")
    b = plan(field, params, backend="python")
    assert np.max(np.abs(a.totals - b.totals)) <= 1e-12 * max(1.0, b.totals.max())
    assert a.a_star == b.a_star


@compiled
def test_direct_backends_agree():
    field = generate_brownian(5, 100, 800, 0.1, 0.25)
    params = PlanParams(v0=15.0, a_prev=-4.0, da=0.5)
    a = plan_direct(field, params, backend="compiled")
    b = plan_direct(field, params, backend="python")
    assert np.max(np.abs(a.totals - b.totals)) <= 1e-12 * max(1.0, b.totals.max())
    assert a.pre_fail == pytest.approx(b.pre_fail, abs=1e-15)


@compiled
def test_kernel_helpers_agree():
    c, p = _backend.get("compiled"), _backend.get("python")
    for args in [(1.0, 0.03, 15.0, -4.0, -100.0), (0.2, 0.05, 30.0, -9.0, 100.0)]:
        assert c.b_position(*args) == pytest.approx(p.b_position(*args), abs=1e-12)
    args = (1.0, 15.0, -4.0, -100.0, 0.05)
    assert np.allclose(c.b_image(*args), p.b_image(*args), atol=1e-12)
