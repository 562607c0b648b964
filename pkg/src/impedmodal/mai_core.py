"""Three-layer impedance-model participation analysis.

From the residue matrix of the whole-system impedance at a mode, this
module derives per-element admittance sensitivities (with the transformer
ratio correction), the three participation layers, per-parameter
sensitivities via branch impedance splitting with closed-form virtual-node
impedances, first-order mode-shift predictions, and sweep/validation
bookkeeping against re-solved modes.

Layer semantics: layer 1 bounds/estimates an element's total participation
in a mode, layer 2 resolves it into damping (real) and frequency
(imaginary) effects, layer 3 projects it onto individual parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import admittance_assembly as assembly
from . import mass_oracle, rational_fit
from .admittance_assembly import ElementRef, WholeSystemModel, block_slice
from .network_model import NetworkDescription, StateSpaceRealization
from .rational_fit import ModeRecord

__all__ = [
    "AnalysisError",
    "TrackingError",
    "DegenerateSplitError",
    "Location",
    "SensitivityRecord",
    "LayerReport",
    "SplitBranch",
    "SplitNodeImpedances",
    "ValidationRecord",
    "SweepStep",
    "frobenius_inner",
    "admittance_sensitivity",
    "transformer_admittance_sensitivity",
    "predict_mode_shift",
    "layer1_cauchy",
    "layer2",
    "enhanced_layer1",
    "layer3",
    "split_branch",
    "split_node_impedances",
    "split_node_residues",
    "split_parameter_derivatives",
    "validate_prediction",
    "element_location",
    "element_sensitivity",
    "element_layer_report",
    "branch_parameter_sensitivity",
    "scale_element_admittance",
    "solve_modes",
    "track_mode",
    "min_mode_spacing",
    "validate_element_prediction",
    "parameter_sweep",
]

_I2 = np.eye(2)


class AnalysisError(Exception):
    """Base class for participation-analysis failures."""


class TrackingError(AnalysisError):
    """Mode continuation lost its branch (two modes collided)."""


class DegenerateSplitError(AnalysisError):
    """A split part is singular (R = 0 or L = 0); use the unsplit formula."""


@dataclass(frozen=True)
class Location:
    """Where an element sits: a node, a branch, or a transformer branch.

    Bus index 0 denotes ground; its impedance blocks are zero, which makes
    the branch formula degenerate gracefully to the node formula.
    """

    kind: str  # "node" | "branch" | "transformer"
    i: int
    j: int = 0
    ratio: float = 1.0


@dataclass(frozen=True, eq=False)
class SensitivityRecord:
    """Eigenvalue sensitivity of one element: dlambda/dy and its conjugate
    transpose, the admittance sensitivity factor pairing with admittance
    perturbations through the Frobenius inner product."""

    element: str
    location: Location
    dlambda_dy: np.ndarray  # (2, 2)
    s_factor: np.ndarray  # (2, 2), conjugate transpose of dlambda_dy


@dataclass(frozen=True, eq=False)
class LayerReport:
    """All three participation layers of one element at one mode.

    ``layer1_cauchy`` is the epsilon-free index ||s|| * ||y||, directly
    comparable with ``layer1_enhanced`` = |layer2|; the worst-case shift for
    a relative admittance change eps is eps * layer1_cauchy. Cauchy-Schwarz
    guarantees layer1_enhanced <= layer1_cauchy.
    """

    element: str
    location: Location
    layer1_cauchy: float  # ||s|| * ||y||
    layer2: complex  # sigma2 + j omega2
    layer1_enhanced: float  # |layer2|
    layer3: dict  # parameter name -> sensitivity s_{lambda,rho}
    epsilon: float


@dataclass(frozen=True, eq=False)
class SplitBranch:
    """Series branch split at a virtual node into inductive z1 and resistive
    z2 parts, both evaluated at s = lambda."""

    z1: np.ndarray
    z2: np.ndarray
    R: float
    L: float
    omega0: float
    lam: complex

    @property
    def total_impedance(self) -> np.ndarray:
        return self.z1 + self.z2


@dataclass(frozen=True, eq=False)
class SplitNodeImpedances:
    """Blocks of the augmented whole-system impedance touching the virtual
    node f, computed purely from the original matrix (no re-factorization).

    ``row`` is Z_f* (2 x 2n) and ``col`` is Z_*f (2n x 2); named accessors
    pick the 2x2 blocks against a given bus.
    """

    row: np.ndarray
    col: np.ndarray
    Z_ff: np.ndarray
    j: int
    k: int

    def Z_fi(self, i: int) -> np.ndarray:
        return self.row[:, block_slice(i)]

    def Z_if(self, i: int) -> np.ndarray:
        return self.col[block_slice(i), :]

    @property
    def Z_fj(self) -> np.ndarray:
        return self.Z_fi(self.j)

    @property
    def Z_jf(self) -> np.ndarray:
        return self.Z_if(self.j)

    @property
    def Z_kf(self) -> np.ndarray:
        return self.Z_if(self.k)


@dataclass(frozen=True)
class ValidationRecord:
    """Predicted vs re-solved mode change with the relative error
    |predicted - actual| / |predicted|."""

    predicted: complex
    actual: complex
    error: float


@dataclass(frozen=True)
class SweepStep:
    """One step of a parameter sweep: prediction made at ``rho_before``,
    actual mode re-solved at ``rho_after``."""

    step: int
    rho_before: float
    rho_after: float
    lam_before: complex
    predicted: complex
    actual: complex
    error: float


# ---------------------------------------------------------------------------
# Core sensitivity algebra
# ---------------------------------------------------------------------------


def frobenius_inner(X: np.ndarray, Y: np.ndarray) -> complex:
    """Frobenius inner product with conjugation on the first argument."""
    return complex(np.sum(np.conj(X) * Y))


def _residue_block(res: np.ndarray, i: int, j: int) -> np.ndarray:
    """2x2 block of the residue matrix; bus index 0 means ground (zero)."""
    if i == 0 or j == 0:
        return np.zeros((2, 2), dtype=complex)
    return res[block_slice(i), block_slice(j)]


def admittance_sensitivity(res: np.ndarray, location: Location) -> SensitivityRecord:
    """Eigenvalue sensitivity to an element admittance from the residue matrix.

    Node element at bus i:   dlambda/dy = -Res_ii
    Branch between i and j:  dlambda/dy = -(Res_ii + Res_jj - Res_ij - Res_ji)

    Transformer locations are dispatched to the ratio-corrected formula.
    """
    if location.kind == "transformer":
        return transformer_admittance_sensitivity(
            res, location.i, location.j, location.ratio
        )
    if location.kind == "node":
        d = -_residue_block(res, location.i, location.i)
    elif location.kind == "branch":
        i, j = location.i, location.j
        d = -(
            _residue_block(res, i, i)
            + _residue_block(res, j, j)
            - _residue_block(res, i, j)
            - _residue_block(res, j, i)
        )
    else:
        raise AnalysisError(f"unknown location kind '{location.kind}'")
    return SensitivityRecord(
        element=f"{location.kind}({location.i},{location.j})",
        location=location,
        dlambda_dy=d,
        s_factor=d.conj().T,
    )


def transformer_admittance_sensitivity(
    res: np.ndarray, i: int, j: int, k: float
) -> SensitivityRecord:
    """Ratio-corrected branch sensitivity for an ideal k:1 transformer on the
    i side: dlambda/dy = -(Res_ii/k^2 + Res_jj - Res_ij/k - Res_ji/k).

    Reduces to the plain branch formula at k = 1.
    """
    if k == 0:
        raise AnalysisError("degenerate transformer ratio k = 0")
    d = -(
        _residue_block(res, i, i) / k**2
        + _residue_block(res, j, j)
        - _residue_block(res, i, j) / k
        - _residue_block(res, j, i) / k
    )
    loc = Location(kind="transformer", i=i, j=j, ratio=k)
    return SensitivityRecord(
        element=f"transformer({i},{j},k={k})", location=loc,
        dlambda_dy=d, s_factor=d.conj().T,
    )


def predict_mode_shift(s_factor: np.ndarray, delta_y: np.ndarray) -> complex:
    """First-order mode shift for an element admittance change:
    delta_lambda = <s_factor, delta_y>."""
    return frobenius_inner(s_factor, delta_y)


def layer1_cauchy(s_factor: np.ndarray, y_at_lambda: np.ndarray, epsilon: float) -> float:
    """Cauchy-Schwarz participation bound eps * ||s|| * ||y|| for a relative
    admittance change of size eps."""
    if epsilon <= 0:
        raise AnalysisError(f"epsilon must be positive, got {epsilon}")
    return float(
        epsilon * np.linalg.norm(s_factor) * np.linalg.norm(y_at_lambda)
    )


def layer2(s_factor: np.ndarray, y_at_lambda: np.ndarray) -> complex:
    """Signed participation sigma2 + j omega2 = <s, y>: the real part is the
    damping effect, the imaginary part the frequency effect of growing the
    element admittance."""
    return frobenius_inner(s_factor, y_at_lambda)


def enhanced_layer1(sigma2: float, omega2: Optional[float] = None) -> float:
    """Enhanced total-participation index |sigma2 + j omega2|: the magnitude
    of layer 2, replacing the loose Cauchy bound."""
    if omega2 is None:
        return float(abs(sigma2))
    return float(np.hypot(sigma2, omega2))


def layer3(
    s_factor: np.ndarray,
    dy_drho: np.ndarray,
    delta_rho: Optional[float] = None,
):
    """Parameter sensitivity s_{lambda,rho} = <s, dy/drho> and, when a step
    is given, the predicted shift s_{lambda,rho} * delta_rho."""
    s_rho = frobenius_inner(s_factor, dy_drho)
    return s_rho, (s_rho * delta_rho if delta_rho is not None else None)


# ---------------------------------------------------------------------------
# Branch splitting and virtual-node impedances
# ---------------------------------------------------------------------------


def _omega_block(lam: complex, omega0: float) -> np.ndarray:
    return np.array([[lam, -omega0], [omega0, lam]], dtype=complex)


def split_branch(R: float, L: float, omega0: float, lam: complex) -> SplitBranch:
    """Split a series RL branch at s = lambda into inductive z1 = L[[s,-w0],[w0,s]]
    and resistive z2 = R I parts joined at a virtual node."""
    if not L > 0:
        raise AnalysisError(f"branch inductance must be positive, got {L}")
    z1 = L * _omega_block(lam, omega0)
    z2 = R * _I2.astype(complex)
    return SplitBranch(z1=z1, z2=z2, R=R, L=L, omega0=omega0, lam=lam)


def _inv2(M: np.ndarray, what: str) -> np.ndarray:
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if det == 0 or not np.isfinite(det):
        raise DegenerateSplitError(f"{what} is singular; fall back to the unsplit branch")
    return np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]], dtype=complex) / det


def _split_node_blocks(
    Z: np.ndarray,
    j: int,
    k: int,
    z1: np.ndarray,
    z2: np.ndarray,
    y: Optional[np.ndarray],
    with_identity: bool,
) -> SplitNodeImpedances:
    if y is None:
        y = _inv2(z1 + z2, "split branch impedance z1 + z2")
    z1_inv = _inv2(z1, "inductive part z1")
    z2_inv = _inv2(z2, "resistive part z2")
    row_j = Z[block_slice(j), :]
    row_k = Z[block_slice(k), :]
    col_j = Z[:, block_slice(j)]
    col_k = Z[:, block_slice(k)]
    # voltage at f from an injection anywhere: f sits past z1 from node j
    row_f = row_j - z1 @ y @ (row_j - row_k)
    # injection at f splits over z1/z2 toward nodes j and k
    mix = _inv2(z1_inv + z2_inv, "parallel split admittance")
    col_f = (col_j @ z1_inv + col_k @ z2_inv) @ mix
    Z_jf = col_f[block_slice(j), :]
    Z_kf = col_f[block_slice(k), :]
    core = z1_inv @ Z_jf + z2_inv @ Z_kf
    if with_identity:
        core = core + _I2
    Z_ff = mix @ core
    return SplitNodeImpedances(row=row_f, col=col_f, Z_ff=Z_ff, j=j, k=k)


def split_node_impedances(
    Z_at_lambda: np.ndarray,
    j: int,
    k: int,
    z1: np.ndarray,
    z2: np.ndarray,
    y_branch: Optional[np.ndarray] = None,
) -> SplitNodeImpedances:
    """Impedance blocks of the system augmented with the virtual split node f
    of branch (j, k), from the original whole-system impedance only.

    Row blocks follow the voltage-divider identity, column blocks the
    current-splitting identity, and Z_ff the KCL closure at f; all agree
    with the explicit (2n+2)-dimensional augmented-matrix inversion.
    """
    return _split_node_blocks(Z_at_lambda, j, k, z1, z2, y_branch, with_identity=True)


def split_node_residues(
    res: np.ndarray,
    j: int,
    k: int,
    z1: np.ndarray,
    z2: np.ndarray,
    y_branch: Optional[np.ndarray] = None,
) -> SplitNodeImpedances:
    """Same block algebra applied to the residue matrix at a mode.

    The branch impedances are analytic at the mode, so taking residues of
    the augmentation identities just drops the constant (identity) term in
    the Z_ff closure.
    """
    return _split_node_blocks(res, j, k, z1, z2, y_branch, with_identity=False)


def split_parameter_derivatives(split: SplitBranch):
    """Analytic admittance derivatives of the split parts:
    dy1/dL = -z1^{-1} (dz1/dL) z1^{-1} and dy2/dR = -z2^{-1} z2^{-1}."""
    z1_inv = _inv2(split.z1, "inductive part z1")
    z2_inv = _inv2(split.z2, "resistive part z2")
    dz1_dL = _omega_block(split.lam, split.omega0)
    dy1_dL = -z1_inv @ dz1_dL @ z1_inv
    dy2_dR = -z2_inv @ z2_inv
    return dy1_dL, dy2_dR


def validate_prediction(predicted: complex, actual: complex) -> ValidationRecord:
    """Relative estimation error |predicted - actual| / |predicted|."""
    if predicted == 0:
        raise AnalysisError("predicted shift is zero: relative error undefined")
    err = abs(predicted - actual) / abs(predicted)
    return ValidationRecord(predicted=complex(predicted), actual=complex(actual), error=float(err))


# ---------------------------------------------------------------------------
# Elements of a network
# ---------------------------------------------------------------------------


def element_location(net: NetworkDescription, ref: ElementRef) -> Location:
    kind, idx = ref
    if kind == "branch":
        b = net.branches[idx]
        if b.ratio != 1.0:
            return Location(kind="transformer", i=b.from_bus, j=b.to_bus, ratio=b.ratio)
        return Location(kind="branch", i=b.from_bus, j=b.to_bus)
    if kind == "shunt":
        return Location(kind="node", i=net.shunts[idx].bus)
    if kind == "apparatus":
        return Location(kind="node", i=net.apparatus[idx].bus)
    raise AnalysisError(f"unknown element kind '{kind}'")


def element_sensitivity(
    net: NetworkDescription, ref: ElementRef, res: np.ndarray
) -> SensitivityRecord:
    """Sensitivity record for one network element, with the transformer
    correction applied automatically for ratio != 1 branches."""
    loc = element_location(net, ref)
    rec = admittance_sensitivity(res, loc)
    return SensitivityRecord(
        element=assembly.element_label(net, ref),
        location=loc,
        dlambda_dy=rec.dlambda_dy,
        s_factor=rec.s_factor,
    )


def _shunt_parameter_derivative(net, idx, lam):
    sh = net.shunts[idx]
    if sh.kind == "resistive":
        return {"value": -_I2.astype(complex) / sh.value**2}
    if sh.kind == "capacitive":
        return {"value": _omega_block(lam, net.omega0)}
    z_inv = _inv2(sh.value * _omega_block(lam, net.omega0), "inductive shunt impedance")
    return {"value": -z_inv @ _omega_block(lam, net.omega0) @ z_inv}


def branch_parameter_sensitivity(
    net: NetworkDescription,
    branch_index: int,
    res: np.ndarray,
    lam: complex,
    param: str,
    via: str = "auto",
) -> complex:
    """Parameter sensitivity s_{lambda,rho} of a series branch, rho in {L, R}.

    ``via="split"`` goes through the virtual-node machinery: the split part
    carrying the parameter is treated as its own branch against node f, with
    residue blocks from the closed-form augmentation. ``via="direct"``
    differentiates the unsplit series admittance. Both are exact first-order
    and agree to numerical precision; ``auto`` uses the split for lines and
    the direct route for transformers (where the parameter sits behind the
    ideal-ratio stamp) or degenerate splits.
    """
    if param not in ("L", "R"):
        raise AnalysisError(f"branch parameter must be 'L' or 'R', got '{param}'")
    b = net.branches[branch_index]
    if via == "auto":
        via = "direct" if b.ratio != 1.0 else "split"
        if via == "split":
            try:
                return branch_parameter_sensitivity(net, branch_index, res, lam, param, "split")
            except DegenerateSplitError:
                via = "direct"
    if via == "split":
        if b.ratio != 1.0:
            raise AnalysisError("split route applies to unit-ratio (line) branches")
        split = split_branch(b.R, b.L, net.omega0, lam)
        aug = split_node_residues(res, b.from_bus, b.to_bus, split.z1, split.z2)
        dy1_dL, dy2_dR = split_parameter_derivatives(split)
        if param == "L":
            d = -(
                _residue_block(res, b.from_bus, b.from_bus)
                + aug.Z_ff
                - aug.Z_if(b.from_bus)
                - aug.Z_fi(b.from_bus)
            )
            s_rho, _ = layer3(d.conj().T, dy1_dL)
        else:
            d = -(
                aug.Z_ff
                + _residue_block(res, b.to_bus, b.to_bus)
                - aug.Z_fi(b.to_bus)
                - aug.Z_if(b.to_bus)
            )
            s_rho, _ = layer3(d.conj().T, dy2_dR)
        return s_rho
    if via == "direct":
        rec = element_sensitivity(net, ("branch", branch_index), res)
        z = assembly.dq_series_impedance(b.R, b.L, net.omega0, lam)
        y = _inv2(z, "branch series impedance")
        dz = _omega_block(lam, net.omega0) if param == "L" else _I2.astype(complex)
        dy_drho = -y @ dz @ y
        s_rho, _ = layer3(rec.s_factor, dy_drho)
        return s_rho
    raise AnalysisError(f"unknown route '{via}'")


def element_layer_report(
    net: NetworkDescription,
    ref: ElementRef,
    mode: ModeRecord,
    epsilon: float = 0.05,
    apparatus_overrides=None,
) -> LayerReport:
    """All three layers for one element at one mode.

    Layer 3 is filled analytically for branches (L, R) and shunts (value);
    apparatus parameter derivatives must come from the caller through
    :func:`layer3` since converter internals are not modeled here.
    """
    rec = element_sensitivity(net, ref, mode.residue)
    y = assembly.element_admittance(net, ref, mode.lam, apparatus_overrides)
    l2 = layer2(rec.s_factor, y)
    kind, idx = ref
    l3: dict[str, complex] = {}
    if kind == "branch":
        for param in ("L", "R"):
            l3[param] = branch_parameter_sensitivity(net, idx, mode.residue, mode.lam, param)
    elif kind == "shunt":
        for param, dy in _shunt_parameter_derivative(net, idx, mode.lam).items():
            l3[param], _ = layer3(rec.s_factor, dy)
    return LayerReport(
        element=rec.element,
        location=rec.location,
        layer1_cauchy=layer1_cauchy(rec.s_factor, y, 1.0),
        layer2=l2,
        layer1_enhanced=enhanced_layer1(l2.real, l2.imag),
        layer3=l3,
        epsilon=epsilon,
    )


# ---------------------------------------------------------------------------
# Mode solving, tracking and validation
# ---------------------------------------------------------------------------


def _oracle_capable(net: NetworkDescription) -> bool:
    return all(isinstance(a.model, StateSpaceRealization) for a in net.apparatus)


def _critical_vector(model: WholeSystemModel, lam: complex) -> np.ndarray:
    crit = rational_fit.critical_resonance_mode(model.admittance(lam))
    return crit.eigenvector


def _solve_modes_state_space(net, band):
    ss = mass_oracle.interconnect(net)
    eig = mass_oracle.eigendecompose(ss.A)
    model = WholeSystemModel(net)
    records = []
    for i, lam in enumerate(eig.eigenvalues):
        lam = complex(lam)
        if lam.imag < 0:
            continue  # conjugate partner carries the same information
        if band is not None and not (band[0] <= abs(lam.imag) <= band[1]):
            continue
        res = ss.C @ np.outer(eig.right[:, i], eig.left[i, :]) @ ss.B
        records.append(
            ModeRecord(
                lam=lam,
                residue=res,
                critical_vector=_critical_vector(model, lam),
                provenance="state-space",
            )
        )
    return sorted(records, key=lambda r: (r.lam.imag, r.lam.real))


def _scan_seeds(model: WholeSystemModel, omegas: np.ndarray) -> list[complex]:
    """Coarse scan: local minima of the smallest singular value of Y(jw)."""
    mins = []
    for w in omegas:
        Y = model.admittance(1j * w)
        mins.append(np.linalg.svd(Y, compute_uv=False)[-1])
    mins = np.asarray(mins)
    seeds = []
    for m in range(1, len(omegas) - 1):
        if mins[m] < mins[m - 1] and mins[m] < mins[m + 1]:
            seeds.append(1j * omegas[m])
    return seeds


def _solve_modes_impedance(model, band, order, n_grid=400, n_iterations=12):
    if band is None:
        raise AnalysisError("impedance-path mode search needs an explicit band")
    w_lo, w_hi = band
    grid = rational_fit.frequency_grid(w_lo, w_hi, n_grid)
    samples = rational_fit.sample_response(model, grid)
    fit = rational_fit.vector_fit(samples, order=order, n_iterations=n_iterations)
    # densify around candidate resonances and refit once
    extra = []
    for p in fit.poles:
        w = abs(p.imag)
        if p.imag > 0 and w_lo <= w <= w_hi:
            extra.append(np.linspace(w * 0.9, w * 1.1, 17))
    if extra:
        dense = np.unique(np.concatenate([grid] + extra))
        dense = dense[(dense >= w_lo) & (dense <= w_hi)]
        samples = rational_fit.sample_response(model, dense)
        fit = rational_fit.vector_fit(samples, order=order, n_iterations=n_iterations)
    seeds = [p for p in fit.poles if p.imag >= 0 and w_lo * 0.5 <= abs(p.imag) <= w_hi * 1.5]
    seeds += _scan_seeds(model, grid[:: max(1, n_grid // 60)])
    modes = rational_fit.find_modes(model.admittance, seeds)
    records = []
    for lam in modes:
        if not (w_lo <= abs(lam.imag) <= w_hi):
            continue
        res = rational_fit.admittance_residue(model.admittance, lam)
        records.append(
            ModeRecord(
                lam=lam,
                residue=res,
                critical_vector=_critical_vector(model, lam),
                provenance="newton-refined",
            )
        )
    return records


def solve_modes(
    net: NetworkDescription,
    band: Optional[tuple[float, float]] = None,
    order: int = 16,
    method: str = "auto",
    apparatus_overrides=None,
    n_grid: int = 400,
) -> list[ModeRecord]:
    """Find the system's oscillatory modes with residues and critical vectors.

    ``method="state_space"`` uses the interconnected oracle (requires every
    apparatus in state-space form); ``"impedance"`` samples Z over ``band``,
    vector-fits for seeds, Newton-refines zeros of det Y and extracts
    residues locally. ``"auto"`` prefers the state-space path when available.
    """
    if method == "auto":
        method = "state_space" if _oracle_capable(net) and not apparatus_overrides else "impedance"
    if method == "state_space":
        return _solve_modes_state_space(net, band)
    if method == "impedance":
        model = WholeSystemModel(net, apparatus_overrides)
        return _solve_modes_impedance(model, band, order, n_grid)
    raise AnalysisError(f"unknown mode-solving method '{method}'")


def min_mode_spacing(modes: Sequence[complex]) -> float:
    vals = [complex(m) for m in modes]
    if len(vals) < 2:
        return np.inf
    dists = [
        abs(a - b) for idx, a in enumerate(vals) for b in vals[idx + 1:]
    ]
    return float(min(dists))


def track_mode(
    lam_ref: complex,
    candidates: Sequence[complex],
    spacing: Optional[float] = None,
    factor: float = 0.3,
) -> complex:
    """Nearest-mode matching: the candidate closest to ``lam_ref``; raises
    TrackingError when the jump exceeds ``factor`` times the minimum
    inter-mode distance (the mode branch was lost)."""
    if not len(candidates):
        raise TrackingError("no candidate modes to match against")
    cands = np.asarray([complex(c) for c in candidates])
    dist = np.abs(cands - lam_ref)
    k = int(np.argmin(dist))
    if spacing is None:
        spacing = min_mode_spacing(cands)
    if np.isfinite(spacing) and dist[k] > factor * spacing:
        raise TrackingError(
            f"nearest mode {cands[k]} is {dist[k]:.3e} away from {lam_ref}, "
            f"beyond {factor} x min spacing {spacing:.3e}"
        )
    return complex(cands[k])


def scale_element_admittance(
    net: NetworkDescription, ref: ElementRef, factor: float
) -> NetworkDescription:
    """Network with one element's admittance scaled by ``factor`` uniformly
    over s, realized by the corresponding physical parameter scaling
    (series impedance down, shunt conductance/capacitance up)."""
    from dataclasses import replace

    kind, idx = ref
    if kind == "branch":
        b = net.branches[idx]
        return net.with_branch(idx, R=b.R / factor, L=b.L / factor)
    if kind == "shunt":
        sh = net.shunts[idx]
        value = sh.value * factor if sh.kind == "capacitive" else sh.value / factor
        shunts = list(net.shunts)
        shunts[idx] = replace(sh, value=value)
        return replace(net, shunts=tuple(shunts))
    if kind == "apparatus":
        app = net.apparatus[idx]
        if not isinstance(app.model, StateSpaceRealization):
            raise AnalysisError(
                "scaling a non-state-space apparatus needs the overlay model "
                "(PerturbedModel) instead of a network rewrite"
            )
        model = StateSpaceRealization(
            A=app.model.A, B=app.model.B * factor, C=app.model.C, D=app.model.D * factor
        )
        apparatus = list(net.apparatus)
        apparatus[idx] = replace(app, model=model)
        return replace(net, apparatus=tuple(apparatus))
    raise AnalysisError(f"unknown element kind '{kind}'")


def _resolve_perturbed_mode(net, lam_ref, reference_modes):
    """Re-solve the perturbed system and pick the tracked mode."""
    if _oracle_capable(net):
        eig = mass_oracle.eigendecompose(mass_oracle.interconnect(net).A)
        candidates = [complex(v) for v in eig.eigenvalues]
    else:
        model = WholeSystemModel(net)
        candidates = [rational_fit.refine_mode(model.admittance, lam_ref)]
    spacing = min_mode_spacing(reference_modes) if reference_modes else None
    return track_mode(lam_ref, candidates, spacing=spacing)


def validate_element_prediction(
    net: NetworkDescription,
    ref: ElementRef,
    mode: ModeRecord,
    epsilon: float = 0.05,
    reference_modes: Optional[Sequence[complex]] = None,
    apparatus_overrides=None,
) -> ValidationRecord:
    """Predict the mode shift for a (1 + eps) element-admittance scaling and
    compare against the re-solved mode of the perturbed system.

    Oracle-capable networks are re-solved through the state-space path with
    nearest-mode tracking; otherwise the scaled element is overlaid on the
    admittance evaluator and the mode Newton-refined from its old location.
    """
    rec = element_sensitivity(net, ref, mode.residue)
    y = assembly.element_admittance(net, ref, mode.lam, apparatus_overrides)
    predicted = predict_mode_shift(rec.s_factor, epsilon * y)
    if _oracle_capable(net) and not apparatus_overrides:
        perturbed = scale_element_admittance(net, ref, 1.0 + epsilon)
        lam_new = _resolve_perturbed_mode(perturbed, mode.lam, reference_modes or [])
    else:
        overlay = assembly.PerturbedModel(net, ref, 1.0 + epsilon, apparatus_overrides)
        lam_new = rational_fit.refine_mode(overlay.admittance, mode.lam)
    return validate_prediction(predicted, lam_new - mode.lam)


def parameter_sweep(
    net: NetworkDescription,
    branch_index: int,
    param: str,
    factor: float,
    n_steps: int,
    mode_seed: Optional[complex] = None,
    band: Optional[tuple[float, float]] = None,
    order: int = 16,
) -> list[SweepStep]:
    """Repeatedly scale one branch parameter and confront the layer-3
    prediction with the re-solved mode at every step.

    The tracked mode starts at ``mode_seed`` (nearest match) or, by default,
    at the least-damped oscillatory mode. Each prediction is first-order
    from the previous operating point; the actual mode comes from re-solving
    the modified network with nearest-mode tracking.
    """
    if param not in ("L", "R"):
        raise AnalysisError(f"sweep parameter must be 'L' or 'R', got '{param}'")
    if n_steps < 0:
        raise AnalysisError("n_steps must be >= 0")
    records = solve_modes(net, band=band, order=order)
    if not records:
        raise AnalysisError("no modes found to track")
    oscillatory = [r for r in records if r.lam.imag > 0] or records
    if mode_seed is not None:
        current = min(records, key=lambda r: abs(r.lam - mode_seed))
    else:
        current = max(oscillatory, key=lambda r: r.lam.real)

    steps: list[SweepStep] = []
    current_net = net
    for step in range(1, n_steps + 1):
        b = current_net.branches[branch_index]
        rho = getattr(b, param)
        s_rho = branch_parameter_sensitivity(
            current_net, branch_index, current.residue, current.lam, param
        )
        delta_rho = rho * (factor - 1.0)
        predicted = s_rho * delta_rho
        new_net = current_net.with_branch(branch_index, **{param: rho * factor})
        new_records = solve_modes(new_net, band=band, order=order)
        # predictor-anchored continuation: large parameter steps can move a
        # mode further than the inter-mode spacing, but the first-order
        # prediction lands close to the continued branch
        lam_new = track_mode(
            current.lam + predicted,
            [r.lam for r in new_records],
            spacing=min_mode_spacing([r.lam for r in records]),
        )
        actual = lam_new - current.lam
        err = abs(predicted - actual) / abs(predicted) if predicted != 0 else np.inf
        steps.append(
            SweepStep(
                step=step,
                rho_before=rho,
                rho_after=rho * factor,
                lam_before=current.lam,
                predicted=current.lam + predicted,
                actual=lam_new,
                error=float(err),
            )
        )
        current_net = new_net
        records = new_records
        current = min(new_records, key=lambda r: abs(r.lam - lam_new))
    return steps
