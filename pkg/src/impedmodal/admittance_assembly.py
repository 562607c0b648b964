"""dq-frame admittance stamps and whole-system matrix assembly.

Every element maps to a 2x2 complex dq block; the network matrices are
2n x 2n with bus-major ordering: block (i, j) occupies rows 2(i-1)..2i-1
and columns 2(j-1)..2j-1 (0-based slices, 1-based bus numbering).

The whole-system admittance is Y(s) = Y_G(s) + Y_N(s), where Y_G is the
block-diagonal apparatus admittance and Y_N the passive nodal admittance;
the whole-system impedance is Z(s) = Y(s)^{-1}.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .network_model import (
    NetworkDescription,
    RationalMatrix,
    SampledResponse,
    SeriesBranch,
    ShuntElement,
    StateSpaceRealization,
)

__all__ = [
    "AssemblyError",
    "EvaluationError",
    "SingularSystemError",
    "frame_rotation",
    "dq_series_impedance",
    "transformer_stamp",
    "shunt_admittance",
    "apparatus_admittance",
    "assemble_nodal_admittance",
    "assemble_apparatus_admittance",
    "whole_system_matrices",
    "WholeSystemModel",
    "ElementRef",
    "network_elements",
    "element_label",
    "element_admittance",
    "element_stamp",
]

_J = np.array([[0.0, -1.0], [1.0, 0.0]])
_I2 = np.eye(2)


class AssemblyError(Exception):
    """Base class for admittance-assembly failures."""


class EvaluationError(AssemblyError):
    """An element model cannot be evaluated at the requested s."""


class SingularSystemError(AssemblyError):
    """Y(s) is numerically singular: s sits (almost) exactly on a mode."""

    def __init__(self, s: complex, cond: float):
        super().__init__(f"whole-system admittance is singular at s = {s} (cond = {cond:.3e})")
        self.s = s
        self.cond = cond


def block_slice(bus: int) -> slice:
    """Row/column slice of the 2x2 dq block belonging to 1-based bus index."""
    return slice(2 * (bus - 1), 2 * bus)


def frame_rotation(theta: float) -> np.ndarray:
    """Rotation T(theta) aligning a local dq frame to the global frame."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def dq_series_impedance(R: float, L: float, omega0: float, s: complex) -> np.ndarray:
    """dq impedance block of a series RL element: [[R+sL, -w0 L], [w0 L, R+sL]]."""
    return np.array(
        [[R + s * L, -omega0 * L], [omega0 * L, R + s * L]], dtype=complex
    )


def transformer_stamp(y: np.ndarray, k: float):
    """Four nodal blocks (ii, ij, ji, jj) of a branch with series admittance y
    behind an ideal k:1 transformer on the i side.

    A line is the k = 1 case, which reduces to the symmetric (y, -y, -y, y)
    stamp.
    """
    if k == 0:
        raise AssemblyError("degenerate transformer ratio k = 0")
    y = np.asarray(y, dtype=complex)
    return y / k**2, -y / k, -y / k, y.copy()


def shunt_admittance(shunt: ShuntElement, omega0: float, s: complex) -> np.ndarray:
    """dq admittance block of a single passive shunt."""
    if shunt.kind == "resistive":
        return _I2.astype(complex) / shunt.value
    if shunt.kind == "capacitive":
        return shunt.value * (s * _I2 + omega0 * _J).astype(complex)
    if shunt.kind == "inductive":
        z = shunt.value * (s * _I2 + omega0 * _J).astype(complex)
        det = z[0, 0] * z[1, 1] - z[0, 1] * z[1, 0]
        if det == 0:
            raise EvaluationError(
                f"inductive shunt at bus {shunt.bus} is singular at s = {s}"
            )
        return np.array([[z[1, 1], -z[0, 1]], [-z[1, 0], z[0, 0]]]) / det
    raise AssemblyError(f"unknown shunt kind '{shunt.kind}'")


def _evaluate_rational(model: RationalMatrix, s: complex) -> np.ndarray:
    out = np.empty((2, 2), dtype=complex)
    for p in range(2):
        for q in range(2):
            num, den = model.entry_coeffs(p, q)
            dv = np.polyval(den, s)
            if dv == 0:
                raise EvaluationError(f"rational model entry ({p},{q}) has a pole at s = {s}")
            out[p, q] = np.polyval(num, s) / dv
    return out


def _evaluate_sampled(model: SampledResponse, s: complex) -> np.ndarray:
    # Only evaluable on the imaginary axis; analytic continuation of measured
    # data comes from the rational-fit module instead.
    if abs(s.real) > 1e-12 * (1.0 + abs(s)):
        raise EvaluationError(
            "sampled apparatus response is only defined on the imaginary axis; "
            "fit a rational surrogate for complex s"
        )
    w = s.imag
    f = model.frequencies
    if w < f[0] or w > f[-1]:
        raise EvaluationError(
            f"frequency {w:g} rad/s outside sampled range [{f[0]:g}, {f[-1]:g}]"
        )
    idx = int(np.searchsorted(f, w))
    if idx < f.size and f[idx] == w:
        return model.blocks[idx].copy()
    lo, hi = idx - 1, idx
    t = (w - f[lo]) / (f[hi] - f[lo])
    return (1.0 - t) * model.blocks[lo] + t * model.blocks[hi]


def _evaluate_state_space(model: StateSpaceRealization, s: complex) -> np.ndarray:
    n = model.n_states
    if n == 0:
        return model.D.astype(complex)
    M = s * np.eye(n) - model.A
    try:
        X = np.linalg.solve(M, model.B.astype(complex))
    except np.linalg.LinAlgError:
        raise EvaluationError(f"(sI - A) is singular at s = {s}: apparatus resonance")
    return model.C @ X + model.D


def apparatus_admittance(model, s: complex, theta: float = 0.0) -> np.ndarray:
    """Apparatus dq admittance at s, rotated into the global frame.

    The local response Y_local(s) is similarity-transformed by the frame
    rotation: T(theta) Y_local T(theta)^{-1}.
    """
    if isinstance(model, StateSpaceRealization):
        y = _evaluate_state_space(model, s)
    elif isinstance(model, RationalMatrix):
        y = _evaluate_rational(model, s)
    elif isinstance(model, SampledResponse):
        y = _evaluate_sampled(model, s)
    else:
        raise AssemblyError(f"unknown apparatus model type {type(model)!r}")
    if theta == 0.0:
        return y
    T = frame_rotation(theta)
    return T @ y @ T.T  # T^{-1} = T^T for a rotation


def _branch_series_admittance(branch: SeriesBranch, omega0: float, s: complex) -> np.ndarray:
    z = dq_series_impedance(branch.R, branch.L, omega0, s)
    det = z[0, 0] * z[1, 1] - z[0, 1] * z[1, 0]
    if det == 0:
        raise EvaluationError(
            f"branch {branch.from_bus}-{branch.to_bus} series impedance singular at s = {s}"
        )
    return np.array([[z[1, 1], -z[0, 1]], [-z[1, 0], z[0, 0]]]) / det


def assemble_nodal_admittance(net: NetworkDescription, s: complex) -> np.ndarray:
    """Nodal admittance Y_N(s) of the passive network (branches + shunts)."""
    n = net.n_buses
    Y = np.zeros((2 * n, 2 * n), dtype=complex)
    for branch in net.branches:
        try:
            y = _branch_series_admittance(branch, net.omega0, s)
            bii, bij, bji, bjj = transformer_stamp(y, branch.ratio)
        except AssemblyError as exc:
            raise type(exc)(
                f"branch {branch.from_bus}-{branch.to_bus} ({branch.kind}): {exc}"
            ) from exc
        si, sj = block_slice(branch.from_bus), block_slice(branch.to_bus)
        Y[si, si] += bii
        Y[si, sj] += bij
        Y[sj, si] += bji
        Y[sj, sj] += bjj
    for shunt in net.shunts:
        try:
            y = shunt_admittance(shunt, net.omega0, s)
        except AssemblyError as exc:
            raise type(exc)(f"shunt at bus {shunt.bus} ({shunt.kind}): {exc}") from exc
        sb = block_slice(shunt.bus)
        Y[sb, sb] += y
    return Y


def assemble_apparatus_admittance(
    net: NetworkDescription,
    s: complex,
    overrides: Optional[dict[int, Callable[[complex], np.ndarray]]] = None,
) -> np.ndarray:
    """Block-diagonal apparatus admittance Y_G(s); zero block where no apparatus.

    ``overrides`` maps apparatus indices to replacement evaluators (already in
    the global frame), used e.g. to substitute rational surrogates for
    sampled models at complex s.
    """
    n = net.n_buses
    Y = np.zeros((2 * n, 2 * n), dtype=complex)
    for idx, app in enumerate(net.apparatus):
        if overrides and idx in overrides:
            y = np.asarray(overrides[idx](s), dtype=complex)
        else:
            try:
                y = apparatus_admittance(app.model, s, app.theta)
            except AssemblyError as exc:
                raise type(exc)(f"apparatus at bus {app.bus}: {exc}") from exc
        sb = block_slice(app.bus)
        Y[sb, sb] += y
    return Y


def whole_system_matrices(net: NetworkDescription, s: complex, cond_limit: float = 1e13):
    """Whole-system (Y(s), Z(s)). Raises SingularSystemError near a mode."""
    model = WholeSystemModel(net)
    Y = model.admittance(s)
    return Y, model._invert(Y, s, cond_limit)


class WholeSystemModel:
    """Evaluator for Y_N(s), Y_G(s), Y(s) and Z(s) over one network.

    Pure functions of s; safe for concurrent evaluation. ``apparatus_overrides``
    substitutes per-apparatus admittance evaluators (global frame), which keeps
    networks with measured (sampled) apparatus evaluable at complex s.
    """

    def __init__(
        self,
        net: NetworkDescription,
        apparatus_overrides: Optional[dict[int, Callable[[complex], np.ndarray]]] = None,
    ):
        self.net = net
        self.apparatus_overrides = dict(apparatus_overrides or {})

    @property
    def n_buses(self) -> int:
        return self.net.n_buses

    @property
    def dim(self) -> int:
        return 2 * self.net.n_buses

    def nodal_admittance(self, s: complex) -> np.ndarray:
        return assemble_nodal_admittance(self.net, s)

    def apparatus_admittance_matrix(self, s: complex) -> np.ndarray:
        return assemble_apparatus_admittance(self.net, s, self.apparatus_overrides)

    def admittance(self, s: complex) -> np.ndarray:
        return self.nodal_admittance(s) + self.apparatus_admittance_matrix(s)

    def _invert(self, Y: np.ndarray, s: complex, cond_limit: float) -> np.ndarray:
        cond = np.linalg.cond(Y)
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularSystemError(s, cond)
        return np.linalg.inv(Y)

    def impedance(self, s: complex, cond_limit: float = 1e13) -> np.ndarray:
        return self._invert(self.admittance(s), s, cond_limit)


# ---------------------------------------------------------------------------
# Element enumeration (shared by the sensitivity layers and reporting)
# ---------------------------------------------------------------------------

# An element reference is ("branch" | "shunt" | "apparatus", index into the
# corresponding NetworkDescription tuple).
ElementRef = tuple[str, int]


def network_elements(net: NetworkDescription) -> list[ElementRef]:
    """Stable enumeration of all stampable elements of the network."""
    refs: list[ElementRef] = []
    refs.extend(("branch", i) for i in range(len(net.branches)))
    refs.extend(("shunt", i) for i in range(len(net.shunts)))
    refs.extend(("apparatus", i) for i in range(len(net.apparatus)))
    return refs


def element_label(net: NetworkDescription, ref: ElementRef) -> str:
    kind, idx = ref
    if kind == "branch":
        b = net.branches[idx]
        return f"{b.kind}:{b.from_bus}-{b.to_bus}#{idx}"
    if kind == "shunt":
        s = net.shunts[idx]
        return f"shunt-{s.kind}:{s.bus}#{idx}"
    if kind == "apparatus":
        return f"apparatus:{net.apparatus[idx].bus}"
    raise AssemblyError(f"unknown element kind '{kind}'")


def element_admittance(net: NetworkDescription, ref: ElementRef, s: complex,
                       overrides=None) -> np.ndarray:
    """The element's own 2x2 admittance block y(s); for branches this is the
    series admittance that enters the transformer stamp."""
    kind, idx = ref
    if kind == "branch":
        return _branch_series_admittance(net.branches[idx], net.omega0, s)
    if kind == "shunt":
        return shunt_admittance(net.shunts[idx], net.omega0, s)
    if kind == "apparatus":
        if overrides and idx in overrides:
            return np.asarray(overrides[idx](s), dtype=complex)
        app = net.apparatus[idx]
        return apparatus_admittance(app.model, s, app.theta)
    raise AssemblyError(f"unknown element kind '{kind}'")


def element_stamp(net: NetworkDescription, ref: ElementRef, s: complex,
                  overrides=None) -> np.ndarray:
    """Contribution of one element to the whole-system Y(s), as a full
    2n x 2n matrix (used to overlay scaled-element perturbations)."""
    n = net.n_buses
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    kind, idx = ref
    if kind == "branch":
        b = net.branches[idx]
        y = _branch_series_admittance(b, net.omega0, s)
        bii, bij, bji, bjj = transformer_stamp(y, b.ratio)
        si, sj = block_slice(b.from_bus), block_slice(b.to_bus)
        out[si, si] += bii
        out[si, sj] += bij
        out[sj, si] += bji
        out[sj, sj] += bjj
    else:
        y = element_admittance(net, ref, s, overrides)
        bus = net.shunts[idx].bus if kind == "shunt" else net.apparatus[idx].bus
        sb = block_slice(bus)
        out[sb, sb] += y
    return out


class PerturbedModel(WholeSystemModel):
    """Whole-system model with one element's admittance scaled by a factor.

    ``Y'(s) = Y(s) + (factor - 1) * stamp_of(element, s)``; the scaling is
    uniform over s, so it corresponds to a physical parameter scaling of the
    element (conductance/capacitance up, or series impedance down).
    """

    def __init__(self, net, element: ElementRef, factor: float, apparatus_overrides=None):
        super().__init__(net, apparatus_overrides)
        self.element = element
        self.factor = factor

    def admittance(self, s: complex) -> np.ndarray:
        Y = super().admittance(s)
        if self.factor != 1.0:
            Y += (self.factor - 1.0) * element_stamp(
                self.net, self.element, s, self.apparatus_overrides
            )
        return Y
