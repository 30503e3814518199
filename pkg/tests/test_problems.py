import math

import pytest

from equiharmonic.grid import harmonic_projection
from equiharmonic.linear import check_spectral_condition
from equiharmonic.problems import BUILTINS, UnknownProblem, get_builtin, list_builtins


def test_registry_names():
    assert [b.name for b in list_builtins()] == ["fig1", "fig2", "fig3", "higher-ev"]


@pytest.mark.parametrize("name", list(BUILTINS))
def test_builtins_construct(name):
    p = get_builtin(name)
    assert p.length == math.pi and p.grid.n_intervals == 1024
    assert p.harmonics == ((1, 2) if name == "higher-ev" else (1,))
    for k in p.harmonics:
        assert abs(harmonic_projection(p.forcing, k)) <= 1e-10


def test_fig1_forcing_orthogonal():
    assert abs(harmonic_projection(get_builtin("fig1").forcing, 1)) <= 1e-12


def test_fig3_spectral_pass():
    p = get_builtin("fig3")
    r = check_spectral_condition(p.nonlinearity, p.harmonics)
    assert r.passed and r.derivative_max == pytest.approx(2.0)


def test_higher_ev_spectral_pass():
    p = get_builtin("higher-ev")
    assert check_spectral_condition(p.nonlinearity, p.harmonics).passed


def test_unknown_name_lists_available():
    with pytest.raises(UnknownProblem) as info:
        get_builtin("nope")
    for name in BUILTINS:
        assert name in str(info.value)
