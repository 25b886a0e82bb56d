import numba as nb
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from odensemble import EventControls, OdeControls, SolverConfig, SystemDefinition, integrate_system
from odensemble.models import duffing_rhs, duffing_system, valve_system
from odensemble.system import DefinitionError, validate_definition

from .conftest import zero_rhs


@nb.njit
def one_value(t, y, p, f):
    f[0] = y[0]


@nb.njit
def three_values(t, y, p, f):
    f[0] = y[0]
    f[1] = y[1]
    f[2] = t


def test_duffing_definition_passes():
    defn = duffing_system()
    assert (defn.system_dim, defn.event_count) == (2, 0)
    validate_definition(defn)


def test_short_event_function_rejected():
    defn = SystemDefinition(
        system_dim=2, ode_rhs=duffing_rhs, param_count=4, event_count=2,
        event_values=one_value, event_controls=EventControls([0, 0], [1e-6, 1e-6], [0, 0]),
    )
    with pytest.raises(DefinitionError):
        validate_definition(defn)


def test_long_event_function_rejected():
    defn = SystemDefinition(
        system_dim=2, ode_rhs=duffing_rhs, param_count=4, event_count=2,
        event_values=three_values, event_controls=EventControls([0, 0], [1e-6, 1e-6], [0, 0]),
    )
    with pytest.raises(DefinitionError):
        validate_definition(defn)


def test_valve_definition_passes():
    defn = valve_system()
    direction, tol, stop = defn.event_controls.arrays()
    assert direction.tolist() == [-1, -1]
    assert tol.tolist() == [1e-6, 1e-6]
    assert stop.tolist() == [1, 0]
    validate_definition(defn, state=[0.2, 0.0, 10.2], params=[1.25, 10, 20, 1, 0.8])


@pytest.mark.parametrize(
    "controls",
    [
        OdeControls(min_step=1.0, max_step=0.5),
        OdeControls(rel_tol=0.0),
        OdeControls(abs_tol=[1e-9, -1e-9]),
        OdeControls(step_grow_limit=1.0),
        OdeControls(step_shrink_limit=1.0),
    ],
)
def test_bad_ode_controls(controls):
    defn = duffing_system()
    defn.ode_controls = controls
    with pytest.raises(DefinitionError):
        validate_definition(defn)


@pytest.mark.parametrize(
    "controls",
    [
        EventControls([-1], [1e-6], [1, 0]),
        EventControls([2], [1e-6], [0]),
        EventControls([0], [0.0], [0]),
        EventControls([0], [1e-6], [-1]),
        EventControls([0], [1e-6], [0], max_steps_in_zone=0),
    ],
)
def test_bad_event_controls(controls):
    defn = SystemDefinition(system_dim=2, ode_rhs=duffing_rhs, param_count=4, event_count=1,
                            event_values=one_value, event_controls=controls)
    with pytest.raises(DefinitionError):
        validate_definition(defn)


def test_per_component_tolerances():
    rel, abs_, scalars = OdeControls(rel_tol=[1e-6, 1e-8], abs_tol=1e-9).arrays(2)
    assert rel.tolist() == [1e-6, 1e-8]
    assert abs_.tolist() == [1e-9, 1e-9]
    assert scalars.tolist() == [1e6, 1e-12, 5.0, 0.1]


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=2),
       st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(-10, 10))
def test_rhs_purity(y, p, t):
    y, p = np.array(y), np.array(p)
    a, b = np.empty(2), np.empty(2)
    duffing_rhs(t, y, p, a)
    duffing_rhs(t, y, p, b)
    assert np.array_equal(a, b)


def test_noop_hooks_leave_data_unchanged():
    defn = SystemDefinition(system_dim=3, ode_rhs=zero_rhs, accessory_count=2)
    state = np.array([0.1, -2.0, 3.5])
    acc = np.array([7.0, -1.0])
    out = integrate_system(defn, 0.0, 1.0, state, accessories=acc, cfg=SolverConfig(worker_count=1))
    assert np.array_equal(out.final_state, state)
    assert np.array_equal(out.accessories, acc)
