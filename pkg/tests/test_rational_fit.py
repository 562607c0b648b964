"""Sampling, vector fitting, mode refinement and residue extraction."""

import numpy as np
import pytest

from impedmodal.admittance_assembly import WholeSystemModel
from impedmodal.mass_oracle import interconnect
from impedmodal.rational_fit import (
    DuplicateModeError,
    FitError,
    RationalModel,
    RefinementError,
    ResidueError,
    ResponseSamples,
    admittance_residue,
    critical_resonance_mode,
    find_modes,
    frequency_grid,
    initial_poles,
    read_response_csv,
    refine_mode,
    residue_at_mode,
    sample_response,
    vector_fit,
    write_response_csv,
)

from conftest import W0, rl_shunt_admittance, rl_shunt_impedance

RC_MODE = complex(-10.0, W0)  # mode of the parallel-RC bus benchmark


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def test_sample_capacitive_shunt_analytic(rc_bus_net):
    from impedmodal.network_model import NetworkDescription, ShuntElement

    net = NetworkDescription(
        n_buses=1, omega0=W0,
        shunts=(ShuntElement(bus=1, kind="capacitive", value=0.01),),
    )
    model = WholeSystemModel(net)
    grid = np.array([40.0, 90.0, 500.0])
    samples = sample_response(model, grid)
    for w, Z in zip(samples.omegas, samples.values):
        y = 0.01 * np.array([[1j * w, -W0], [W0, 1j * w]])
        assert np.allclose(Z, np.linalg.inv(y))


def test_sample_single_point(rc_bus_net):
    samples = sample_response(WholeSystemModel(rc_bus_net), [75.0])
    assert samples.omegas.shape == (1,)
    assert samples.values.shape == (1, 2, 2)


def test_sample_at_exact_resonance_fails():
    """A lossless LC bus is singular at its resonance frequency."""
    from impedmodal.admittance_assembly import SingularSystemError
    from impedmodal.network_model import NetworkDescription, ShuntElement

    net = NetworkDescription(
        n_buses=1, omega0=0.0,
        shunts=(
            ShuntElement(bus=1, kind="capacitive", value=0.01),
            ShuntElement(bus=1, kind="inductive", value=1.0),
        ),
    )
    w_res = 1.0 / np.sqrt(0.01 * 1.0)
    with pytest.raises(SingularSystemError):
        sample_response(WholeSystemModel(net), [w_res])


def test_sample_grid_must_increase(rc_bus_net):
    with pytest.raises(FitError, match="strictly increasing"):
        sample_response(WholeSystemModel(rc_bus_net), [10.0, 5.0])


# ---------------------------------------------------------------------------
# Vector fitting
# ---------------------------------------------------------------------------


def test_fit_scalar_single_pole():
    w = np.geomspace(0.1, 100.0, 120)
    vals = (1.0 / (1j * w + 10.0)).reshape(-1, 1, 1)
    model = vector_fit(ResponseSamples(omegas=w, values=vals), order=2, n_iterations=12)
    k = int(np.argmin(np.abs(model.poles + 10.0)))
    assert abs(model.poles[k] + 10.0) <= 1e-6 * 10.0
    assert abs(model.residues[k][0, 0] - 1.0) <= 1e-6
    assert model.rms_rel_error <= 1e-10


def test_fit_rl_shunt_admittance_recovers_modes():
    grid = frequency_grid(1.0, 1e4, 240)
    vals = np.array([rl_shunt_admittance(1j * w) for w in grid])
    model = vector_fit(ResponseSamples(omegas=grid, values=vals), order=4, n_iterations=12)
    target = complex(-10.0, W0)
    k = int(np.argmin(np.abs(model.poles - target)))
    assert abs(model.poles[k] - target) <= 1e-3 * abs(target)
    assert model.rms_rel_error <= 1e-4
    assert model.max_rel_deviation <= 1e-4


def test_fit_underfit_warns():
    grid = frequency_grid(1.0, 1e4, 200)
    vals = np.array([rl_shunt_admittance(1j * w) for w in grid])
    model = vector_fit(ResponseSamples(omegas=grid, values=vals), order=1, n_iterations=8)
    assert model.warning is not None
    assert model.max_rel_deviation > 1e-4


def test_fit_needs_enough_samples():
    with pytest.raises(FitError, match="samples"):
        vector_fit(
            ResponseSamples(omegas=np.array([1.0, 2.0]), values=np.zeros((2, 1, 1))),
            order=4,
        )


def test_fit_conjugate_symmetry():
    """Real-coefficient data yields conjugate pole/residue pairs, and the
    enforced pairing leaves the reconstruction unchanged."""
    grid = frequency_grid(1.0, 1e4, 200)
    vals = np.array([rl_shunt_admittance(1j * w) for w in grid])
    model = vector_fit(ResponseSamples(omegas=grid, values=vals), order=4, n_iterations=10)
    cplx = [p for p in model.poles if p.imag != 0]
    for k in range(0, len(cplx), 2):
        assert cplx[k + 1] == np.conj(cplx[k])
    for k, p in enumerate(model.poles):
        partners = [m for m, q in enumerate(model.poles) if q == np.conj(p)]
        assert partners, "missing conjugate partner"
        m = partners[0]
        assert np.allclose(model.residues[m], np.conj(model.residues[k]), atol=1e-12)
    # reconstruction at a sample stays within the fit error after pairing
    s0 = 1j * grid[57]
    rel = np.linalg.norm(model.evaluate(s0) - vals[57]) / np.linalg.norm(vals[57])
    assert rel <= 1e-10


def test_fit_whole_system_quality_gate(three_bus_net):
    """On self-generated responses, sufficient order reaches 1e-4 deviation."""
    model = WholeSystemModel(three_bus_net)
    samples = sample_response(model, frequency_grid(5.0, 5e3, 320))
    fit = vector_fit(samples, order=18, n_iterations=12)
    assert fit.max_rel_deviation <= 1e-4
    assert fit.warning is None


def test_initial_poles_layout():
    poles = initial_poles(1.0, 1e3, 6)
    assert poles.size == 6
    pos = poles[poles.imag > 0]
    assert np.all(pos.real == -pos.imag / 100.0)
    assert np.all(np.diff(pos.imag) > 0)


# ---------------------------------------------------------------------------
# Mode refinement
# ---------------------------------------------------------------------------


def test_refine_mode_rl_shunt_impedance_zero():
    lam = refine_mode(rl_shunt_impedance, seed=-8.0 + 300.0j)
    assert abs(lam - RC_MODE) <= 1e-8 * abs(RC_MODE)


def test_refine_mode_on_whole_system(rc_bus_net):
    model = WholeSystemModel(rc_bus_net)
    lam = refine_mode(model.admittance, seed=-8.0 + 300.0j)
    assert abs(lam - RC_MODE) <= 1e-8 * abs(RC_MODE)


def test_refine_mode_immediate_convergence(rc_bus_net):
    model = WholeSystemModel(rc_bus_net)
    lam0 = refine_mode(model.admittance, seed=-8.0 + 300.0j)
    lam1 = refine_mode(model.admittance, seed=lam0)
    assert lam1 == lam0


def test_refine_mode_divergence():
    # constant nonsingular response: no zeros anywhere
    flat = lambda s: np.diag([2.0 + 0.0j, 3.0 + 0.0j])
    with pytest.raises(RefinementError):
        refine_mode(flat, seed=0.0 + 0.0j, max_iterations=10)


def test_refine_mode_duplicate_detection(rc_bus_net):
    model = WholeSystemModel(rc_bus_net)
    with pytest.raises(DuplicateModeError):
        refine_mode(model.admittance, seed=-8.0 + 300.0j, known_modes=[RC_MODE])


def test_find_modes_deduplicates(rc_bus_net):
    model = WholeSystemModel(rc_bus_net)
    modes = find_modes(model.admittance, [-8 + 300j, -12 + 320j, -8 + 300j])
    assert len(modes) == 1
    assert abs(modes[0] - RC_MODE) <= 1e-8 * abs(RC_MODE)


def test_refined_zeros_match_state_space(two_bus_net):
    from impedmodal.mass_oracle import eigendecompose

    eig = eigendecompose(interconnect(two_bus_net).A)
    model = WholeSystemModel(two_bus_net)
    for lam_true in eig.eigenvalues:
        if lam_true.imag <= 0:
            continue
        seed = complex(lam_true) * (1.0 + 0.02) + 5.0
        lam = refine_mode(model.admittance, seed)
        assert abs(lam - lam_true) <= 1e-8 * abs(lam_true)


# ---------------------------------------------------------------------------
# Critical resonance mode
# ---------------------------------------------------------------------------


def test_critical_mode_diagonal():
    crit = critical_resonance_mode(np.diag([0.0, 5.0, 7.0, 9.0]).astype(complex))
    assert crit.eigenvalue == 0.0
    v = np.abs(crit.eigenvector)
    assert np.isclose(v[0], 1.0) and np.allclose(v[1:], 0.0)
    assert crit.ties == ()


def test_critical_mode_at_refined_mode(rc_bus_net):
    model = WholeSystemModel(rc_bus_net)
    lam = refine_mode(model.admittance, seed=-8.0 + 300.0j)
    Y = model.admittance(lam)
    crit = critical_resonance_mode(Y)
    assert abs(crit.eigenvalue) <= 1e-8
    # null-vector property, the ModeRecord invariant
    resid = np.linalg.norm(Y @ crit.eigenvector)
    assert resid <= 1e-6 * np.linalg.norm(Y) * np.linalg.norm(crit.eigenvector)


def test_critical_mode_tie_reported():
    crit = critical_resonance_mode(np.diag([1e-12, 1.4e-12, 5.0, 7.0]).astype(complex))
    assert len(crit.ties) == 1


# ---------------------------------------------------------------------------
# Residues
# ---------------------------------------------------------------------------


def test_residue_from_rational_model_definitional():
    R = np.array([[1.0 + 2.0j]])
    model = RationalModel(
        poles=np.array([-4.0 + 9.0j]),
        residues=np.array([R]),
        const=np.zeros((1, 1), dtype=complex),
        linear=np.zeros((1, 1), dtype=complex),
    )
    assert np.array_equal(residue_at_mode(model, -4.0 + 9.0j), R)
    with pytest.raises(ResidueError):
        residue_at_mode(model, -4.0 + 20.0j)


def test_residue_numeric_limit_oracle(two_bus_net):
    from impedmodal.mass_oracle import eigendecompose

    ss = interconnect(two_bus_net)
    eig = eigendecompose(ss.A)
    lam = complex(eig.eigenvalues[int(np.argmax(eig.eigenvalues.imag))])
    R = residue_at_mode(ss, lam)
    model = WholeSystemModel(two_bus_net)
    s = lam + 1e-6 * (1.0 + 1.0j)
    R_lim = (s - lam) * model.impedance(s)
    assert np.linalg.norm(R_lim - R) <= 1e-4 * np.linalg.norm(R)


def test_residue_state_space_vs_vector_fit(two_bus_net):
    ss = interconnect(two_bus_net)
    model = WholeSystemModel(two_bus_net)
    samples = sample_response(model, frequency_grid(5.0, 5e3, 260))
    fit = vector_fit(samples, order=8, n_iterations=12)
    from impedmodal.mass_oracle import eigendecompose

    eig = eigendecompose(ss.A)
    for lam_true in eig.eigenvalues:
        if lam_true.imag <= 0:
            continue
        lam = complex(lam_true)
        R_ss = residue_at_mode(ss, lam)
        R_fit = residue_at_mode(fit, lam, match_tol=1e-3)
        assert np.linalg.norm(R_fit - R_ss) <= 1e-6 * np.linalg.norm(R_ss)


def test_admittance_residue_matches_state_space(three_bus_net):
    from impedmodal.mass_oracle import eigendecompose

    ss = interconnect(three_bus_net)
    model = WholeSystemModel(three_bus_net)
    eig = eigendecompose(ss.A)
    lam = complex(eig.eigenvalues[int(np.argmax(eig.eigenvalues.real))])
    if lam.imag < 0:
        lam = np.conj(lam)
    R_imp = admittance_residue(model.admittance, lam)
    R_ss = residue_at_mode(ss, lam)
    assert np.linalg.norm(R_imp - R_ss) <= 1e-6 * np.linalg.norm(R_ss)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def test_response_csv_round_trip(two_bus_net):
    model = WholeSystemModel(two_bus_net)
    samples = sample_response(model, frequency_grid(10.0, 1e3, 7))
    again = read_response_csv(write_response_csv(samples))
    assert np.array_equal(samples.omegas, again.omegas)
    assert np.array_equal(samples.values, again.values)


def test_response_csv_rejects_ragged():
    with pytest.raises(FitError):
        read_response_csv("omega,re_1_1,im_1_1\n1.0,2.0\n")
