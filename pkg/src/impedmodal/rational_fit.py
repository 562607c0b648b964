"""Mode location and residue extraction from frequency-domain data.

Pipeline: sample the whole-system impedance on a frequency grid, fit a
common-pole rational model by iterative pole relocation (vector fitting),
refine candidate modes by Newton iteration on the smallest-magnitude
eigenvalue of Y(s), and extract residue matrices either from the rational
model or from a state-space realization.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import mass_oracle
from .mass_oracle import PortSelection, StateSpaceModel
from .network_model import SampledResponse

__all__ = [
    "FitError",
    "ConditioningError",
    "RefinementError",
    "DuplicateModeError",
    "ResidueError",
    "ResponseSamples",
    "RationalModel",
    "ModeRecord",
    "CriticalMode",
    "sample_response",
    "frequency_grid",
    "initial_poles",
    "vector_fit",
    "fit_residues",
    "refine_mode",
    "find_modes",
    "critical_resonance_mode",
    "admittance_residue",
    "residue_at_mode",
    "fit_apparatus_surrogate",
    "read_response_csv",
    "write_response_csv",
]


class FitError(Exception):
    """Vector-fitting failure (bad inputs, degenerate data)."""


class ConditioningError(FitError):
    """The least-squares system is too ill-conditioned to trust."""


class RefinementError(Exception):
    """Newton mode refinement diverged or stalled."""


class DuplicateModeError(RefinementError):
    """A seed converged onto an already-known mode."""

    def __init__(self, mode: complex, known: complex):
        super().__init__(f"seed converged to {mode}, duplicating known mode {known}")
        self.mode = mode
        self.known = known


class ResidueError(Exception):
    """Requested residue at a value that is not a pole of the source."""


@dataclass(frozen=True, eq=False)
class ResponseSamples:
    """Sampled matrix response: frequencies (rad/s) and values (M, dim, dim)."""

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omegas", np.asarray(self.omegas, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(eq=False)
class RationalModel:
    """Common-pole rational matrix model: sum_k R_k/(s - p_k) + d + s e.

    Complex poles come in conjugate pairs with conjugate residue matrices;
    ``rms_rel_error`` and ``max_rel_deviation`` describe the fit quality over
    the sample grid it was identified from.
    """

    poles: np.ndarray
    residues: np.ndarray  # (n_poles, dim, dim)
    const: np.ndarray  # (dim, dim)
    linear: np.ndarray  # (dim, dim)
    rms_rel_error: float = 0.0
    max_rel_deviation: float = 0.0
    n_iterations_run: int = 0
    converged: bool = True
    warning: Optional[str] = None

    def __post_init__(self):
        # a repeated pole means the partial-fraction form is unstable
        p = np.asarray(self.poles)
        for k in range(p.size):
            close = np.abs(p[k + 1:] - p[k]) <= 1e-9 * (1.0 + abs(p[k]))
            if np.any(close):
                note = f"poles coincide near {p[k]} (within 1e-9 relative)"
                self.warning = f"{self.warning}; {note}" if self.warning else note
                break

    @property
    def dim(self) -> int:
        return self.const.shape[0]

    def evaluate(self, s: complex) -> np.ndarray:
        out = self.const + s * self.linear
        for p, R in zip(self.poles, self.residues):
            out = out + R / (s - p)
        return out


@dataclass(frozen=True, eq=False)
class ModeRecord:
    """One oscillatory mode with its impedance residue matrix.

    ``critical_vector`` is the eigenvector of Y(lambda) for the eigenvalue
    nearest zero (the critical resonance mode).
    """

    lam: complex
    residue: np.ndarray  # (2n, 2n)
    critical_vector: np.ndarray  # (2n,)
    provenance: str  # "state-space" | "vector-fit" | "newton-refined"


@dataclass(frozen=True, eq=False)
class CriticalMode:
    """Smallest-magnitude eigenpair of Y at (or near) a mode; ``ties`` lists
    further eigenpairs whose magnitudes are indistinguishable from the
    minimum, surfacing the ambiguity instead of hiding it."""

    eigenvalue: complex
    eigenvector: np.ndarray
    ties: tuple = ()


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def frequency_grid(omega_min: float, omega_max: float, n_points: int = 400) -> np.ndarray:
    """Logarithmically spaced frequency grid over [omega_min, omega_max]."""
    if not (0 < omega_min < omega_max):
        raise FitError(f"invalid band [{omega_min}, {omega_max}]")
    return np.geomspace(omega_min, omega_max, n_points)


def sample_response(model, grid: Sequence[float]) -> ResponseSamples:
    """Evaluate Z(j omega) over a strictly increasing grid of frequencies.

    ``model`` is a WholeSystemModel (its ``impedance`` method is used) or any
    callable s -> matrix. A singular system at a grid point propagates with
    the offending frequency in the message.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise FitError("frequency grid must be a nonempty 1-D sequence")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise FitError("frequency grid must be strictly increasing")
    evaluate = model.impedance if hasattr(model, "impedance") else model
    values = []
    for w in grid:
        values.append(np.asarray(evaluate(1j * w), dtype=complex))
    return ResponseSamples(omegas=grid, values=np.array(values))


# ---------------------------------------------------------------------------
# Vector fitting
# ---------------------------------------------------------------------------


def initial_poles(omega_min: float, omega_max: float, order: int) -> np.ndarray:
    """Starting poles: log-spaced complex pairs spanning the band with
    imaginary/real ratio 100; one extra real pole when the order is odd."""
    if order < 1:
        raise FitError("fit order must be >= 1")
    n_pairs, n_real = divmod(order, 2)
    lo = omega_min if omega_min > 0 else omega_max * 1e-4
    poles: list[complex] = []
    if n_pairs:
        for w in np.geomspace(lo, omega_max, n_pairs):
            poles.append(complex(-w / 100.0, w))
            poles.append(complex(-w / 100.0, -w))
    if n_real:
        poles.append(complex(-np.sqrt(lo * omega_max), 0.0))
    return np.array(poles, dtype=complex)


def _canonical_poles(poles: np.ndarray) -> np.ndarray:
    """Order poles as [real..., (p, conj p)...] with positive-imag first.

    Relocated poles come from the eigenvalues of a real matrix, so complex
    ones arrive in exact conjugate pairs; any stray unpaired pole is demoted
    to a real pole rather than fabricating a partner.
    """
    poles = np.asarray(poles, dtype=complex)
    tiny = 1e-12 * (1.0 + np.abs(poles))
    real = [p.real for p in poles[np.abs(poles.imag) <= tiny]]
    upper = sorted(poles[poles.imag > tiny], key=lambda p: (p.imag, p.real))
    lower = sorted(poles[poles.imag < -tiny], key=lambda p: (-p.imag, p.real))
    n_pairs = min(len(upper), len(lower))
    real.extend(p.real for p in upper[n_pairs:])
    real.extend(p.real for p in lower[n_pairs:])
    out = [complex(r, 0.0) for r in sorted(real)]
    for p in upper[:n_pairs]:
        out.extend([p, np.conj(p)])
    return np.array(out, dtype=complex)


def _pair_index(poles: np.ndarray) -> np.ndarray:
    """0 = real pole, 1 = first of conjugate pair, 2 = second."""
    cidx = np.zeros(poles.size, dtype=int)
    k = 0
    while k < poles.size:
        if abs(poles[k].imag) > 1e-12 * (1.0 + abs(poles[k])):
            cidx[k] = 1
            cidx[k + 1] = 2
            k += 2
        else:
            k += 1
    return cidx


def _basis(s: np.ndarray, poles: np.ndarray, cidx: np.ndarray) -> np.ndarray:
    """Real-coefficient partial-fraction basis, complex-valued (M, N)."""
    M, N = s.size, poles.size
    Dk = np.zeros((M, N), dtype=complex)
    for k in range(N):
        if cidx[k] == 0:
            Dk[:, k] = 1.0 / (s - poles[k])
        elif cidx[k] == 1:
            Dk[:, k] = 1.0 / (s - poles[k]) + 1.0 / (s - np.conj(poles[k]))
            Dk[:, k + 1] = 1j / (s - poles[k]) - 1j / (s - np.conj(poles[k]))
    return Dk


def _stack_real(A: np.ndarray) -> np.ndarray:
    return np.vstack([A.real, A.imag])


def _relocate_poles(
    s: np.ndarray, F: np.ndarray, poles: np.ndarray, include_const: bool, include_linear: bool
) -> np.ndarray:
    """One pole-relocation step: returns the zeros of the fitted scaling
    function sigma(s) = 1 + sum c_k phi_k(s), which become the new poles.

    The per-response coefficients share one basis block, so they are
    eliminated by a single QR and the sigma coefficients solved from the
    stacked projected least squares over all responses at once.
    """
    M, n_resp = F.shape
    N = poles.size
    cidx = _pair_index(poles)
    Dk = _basis(s, poles, cidx)
    offs = int(include_const) + int(include_linear)
    n_local = N + offs

    A_local = np.zeros((M, n_local), dtype=complex)
    A_local[:, :N] = Dk
    col = N
    if include_const:
        A_local[:, col] = 1.0
        col += 1
    if include_linear:
        A_local[:, col] = s
    Q1, _ = np.linalg.qr(_stack_real(A_local), mode="reduced")

    AA = np.zeros((n_resp * 2 * M, N))
    bb = np.zeros(n_resp * 2 * M)
    for c in range(n_resp):
        A_sigma = _stack_real(-Dk * F[:, c][:, None])
        b_r = np.concatenate([F[:, c].real, F[:, c].imag])
        rows = slice(c * 2 * M, (c + 1) * 2 * M)
        AA[rows] = A_sigma - Q1 @ (Q1.T @ A_sigma)
        bb[rows] = b_r - Q1 @ (Q1.T @ b_r)

    scale = np.linalg.norm(AA, axis=0)
    scale[scale == 0] = 1.0
    x, *_ = np.linalg.lstsq(AA / scale, bb, rcond=None)
    c_sigma = x / scale

    # companion of sigma in the real pair basis
    H = np.zeros((N, N))
    bvec = np.zeros(N)
    k = 0
    while k < N:
        if cidx[k] == 1:
            sr, si = poles[k].real, poles[k].imag
            H[k, k] = H[k + 1, k + 1] = sr
            H[k, k + 1] = si
            H[k + 1, k] = -si
            bvec[k] = 2.0
            k += 2
        else:
            H[k, k] = poles[k].real
            bvec[k] = 1.0
            k += 1
    H -= np.outer(bvec, c_sigma)
    return _canonical_poles(np.linalg.eigvals(H))


def fit_residues(
    samples: ResponseSamples,
    poles: np.ndarray,
    include_const: bool = True,
    include_linear: bool = True,
    cond_limit: float = 1e13,
):
    """Least-squares residue matrices for fixed poles.

    Returns ``(residues, const, linear, rms_rel_error, max_rel_deviation)``.
    Raises ConditioningError when the (column-scaled) design matrix is
    numerically rank-deficient.
    """
    poles = _canonical_poles(poles)
    s = 1j * samples.omegas
    dim = samples.dim
    M = s.size
    N = poles.size
    cidx = _pair_index(poles)
    Dk = _basis(s, poles, cidx)
    offs = int(include_const) + int(include_linear)
    Ac = np.zeros((M, N + offs), dtype=complex)
    Ac[:, :N] = Dk
    col = N
    if include_const:
        Ac[:, col] = 1.0
        col += 1
    if include_linear:
        Ac[:, col] = s
    A_r = _stack_real(Ac)
    scale = np.linalg.norm(A_r, axis=0)
    scale[scale == 0] = 1.0
    A_s = A_r / scale
    cond = np.linalg.cond(A_s)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            f"residue least-squares matrix condition number {cond:.3e} exceeds {cond_limit:.1e}"
        )
    F = samples.values.reshape(M, dim * dim)
    B_r = np.vstack([F.real, F.imag])
    X, *_ = np.linalg.lstsq(A_s, B_r, rcond=None)
    X = X / scale[:, None]

    residues = np.zeros((N, dim * dim), dtype=complex)
    k = 0
    while k < N:
        if cidx[k] == 1:
            residues[k] = X[k] + 1j * X[k + 1]
            residues[k + 1] = X[k] - 1j * X[k + 1]
            k += 2
        else:
            residues[k] = X[k]
            k += 1
    col = N
    const = X[col].astype(complex) if include_const else np.zeros(dim * dim, dtype=complex)
    if include_const:
        col += 1
    linear = X[col].astype(complex) if include_linear else np.zeros(dim * dim, dtype=complex)

    fit = Ac @ X  # real coefficients against the complex design matrix
    err = fit - F
    denom = np.linalg.norm(F)
    rms_rel = float(np.linalg.norm(err) / denom) if denom > 0 else float(np.linalg.norm(err))
    row_norm = np.linalg.norm(F, axis=1)
    row_norm[row_norm == 0] = 1.0
    max_rel = float(np.max(np.linalg.norm(err, axis=1) / row_norm))
    return (
        residues.reshape(N, dim, dim),
        const.reshape(dim, dim),
        linear.reshape(dim, dim),
        rms_rel,
        max_rel,
    )


def vector_fit(
    samples: ResponseSamples,
    order: int,
    n_iterations: int = 10,
    poles: Optional[np.ndarray] = None,
    include_const: bool = True,
    include_linear: bool = True,
    enforce_stable: bool = False,
    rel_tol: float = 1e-4,
) -> RationalModel:
    """Fit a common-pole rational model to a sampled matrix response.

    Iterative pole relocation with a relaxed-free (unit) scaling constant,
    followed by a linear residue solve for all matrix entries at once.
    Complex poles/residues come out in exact conjugate pairs because the
    solve runs in the real pair basis.

    A model whose maximum relative deviation over the grid exceeds
    ``rel_tol``, or whose poles were still moving at the last iteration,
    carries a ``warning`` (underfit / non-convergence) instead of raising.
    """
    M = samples.omegas.size
    if M < 2 * order:
        raise FitError(f"need at least {2 * order} samples for order {order}, got {M}")
    s = 1j * samples.omegas
    F = samples.values.reshape(M, samples.dim ** 2)
    if poles is None:
        poles = initial_poles(samples.omegas[0], samples.omegas[-1], order)
    poles = _canonical_poles(np.asarray(poles, dtype=complex))

    drift = np.inf
    iterations_run = 0
    for it in range(n_iterations):
        new_poles = _relocate_poles(s, F, poles, include_const, include_linear)
        if enforce_stable:
            flip = new_poles.real > 0
            new_poles = np.where(flip, new_poles - 2 * new_poles.real, new_poles)
        old_sorted = np.sort_complex(poles)
        drift = float(np.max(np.abs(np.sort_complex(new_poles) - old_sorted)
                             / (1.0 + np.abs(old_sorted))))
        poles = new_poles
        iterations_run = it + 1
        if drift < 1e-12:
            break

    residues, const, linear, rms_rel, max_rel = fit_residues(
        samples, poles, include_const, include_linear
    )
    # a tight fit counts as converged even if a spurious (near-zero-residue)
    # pole is still wandering
    converged = drift < 1e-6 or max_rel <= rel_tol
    warning = None
    if max_rel > rel_tol:
        warning = (
            f"fit deviation {max_rel:.3e} above tolerance {rel_tol:.1e}: "
            "order too low for the sampled dynamics"
        )
        if drift >= 1e-6:
            warning += f"; poles still drifting ({drift:.3e}) after {iterations_run} iterations"
    return RationalModel(
        poles=poles,
        residues=residues,
        const=const,
        linear=linear,
        rms_rel_error=rms_rel,
        max_rel_deviation=max_rel,
        n_iterations_run=iterations_run,
        converged=converged,
        warning=warning,
    )


def fit_apparatus_surrogate(
    response: SampledResponse, order: int = 8, n_iterations: int = 12
) -> RationalModel:
    """Rational surrogate for a measured apparatus response, so that networks
    with sampled models stay evaluable at complex s."""
    samples = ResponseSamples(omegas=response.frequencies, values=response.blocks)
    return vector_fit(samples, order=order, n_iterations=n_iterations)


# ---------------------------------------------------------------------------
# Mode refinement
# ---------------------------------------------------------------------------


def _min_eig(Y: np.ndarray):
    mu, V = np.linalg.eig(Y)
    k = int(np.argmin(np.abs(mu)))
    return mu[k], V[:, k], mu


def refine_mode(
    Yfun: Callable[[complex], np.ndarray],
    seed: complex,
    known_modes: Iterable[complex] = (),
    tol: float = 1e-10,
    max_iterations: int = 50,
) -> complex:
    """Newton-refine a zero of det Y(s), driving the smallest-magnitude
    eigenvalue of Y to zero (the zero sets coincide, and the smallest
    eigenvalue is numerically tame where the determinant explodes).

    The eigenvalue derivative along s uses the left/right eigenvectors of
    Y and a central difference of Y itself. Raises RefinementError on
    divergence and DuplicateModeError when landing within the merge
    tolerance of a known mode.
    """
    s = complex(seed)
    lam: Optional[complex] = None
    for _ in range(max_iterations):
        Y = np.asarray(Yfun(s), dtype=complex)
        scale = np.linalg.norm(Y)
        mu, v, _ = _min_eig(Y)
        if abs(mu) <= tol * scale:
            lam = s
            break
        h = 1e-6 * (1.0 + abs(s))
        dY = (np.asarray(Yfun(s + h), dtype=complex) - np.asarray(Yfun(s - h), dtype=complex)) / (2 * h)
        muL, W = np.linalg.eig(Y.conj().T)
        kl = int(np.argmin(np.abs(muL - np.conj(mu))))
        w = W[:, kl]
        denom = np.vdot(w, v)
        if denom == 0:
            raise RefinementError(f"degenerate eigenvector pairing at s = {s}")
        dmu = np.vdot(w, dY @ v) / denom
        if dmu == 0 or not np.isfinite(dmu):
            raise RefinementError(f"flat eigenvalue derivative at s = {s}")
        step = mu / dmu
        s = s - step
        if not np.isfinite(s) or abs(s) > 1e12:
            raise RefinementError(f"Newton iteration diverged from seed {seed}")
    if lam is None:
        raise RefinementError(
            f"no convergence from seed {seed} after {max_iterations} iterations"
        )
    for known in known_modes:
        if abs(lam - known) <= 1e-6 * (1.0 + abs(lam)):
            raise DuplicateModeError(lam, known)
    return lam


def find_modes(
    Yfun: Callable[[complex], np.ndarray],
    seeds: Iterable[complex],
    tol: float = 1e-10,
    max_iterations: int = 50,
) -> list[complex]:
    """Refine many seeds, merging duplicates; failures are skipped.

    Returned modes are sorted by (imaginary, real) part for determinism.
    """
    modes: list[complex] = []
    for seed in seeds:
        try:
            lam = refine_mode(Yfun, seed, known_modes=modes, tol=tol,
                              max_iterations=max_iterations)
        except DuplicateModeError:
            continue
        except RefinementError:
            continue
        modes.append(lam)
    return sorted(modes, key=lambda z: (z.imag, z.real))


def critical_resonance_mode(Y: np.ndarray, tie_tol: float = 1e-9) -> CriticalMode:
    """Eigenpair of Y with minimal |eigenvalue| (the critical resonance mode).

    Eigenvalues whose magnitude is within ``tie_tol * max(1, ||Y||_F)`` of
    the minimum are reported as ties.
    """
    Y = np.asarray(Y, dtype=complex)
    mu, V = np.linalg.eig(Y)
    order = np.argsort(np.abs(mu))
    k = order[0]
    level = tie_tol * max(1.0, float(np.linalg.norm(Y)))
    ties = tuple(
        (mu[j], V[:, j]) for j in order[1:] if abs(mu[j]) - abs(mu[k]) <= level
    )
    return CriticalMode(eigenvalue=mu[k], eigenvector=V[:, k], ties=ties)


# ---------------------------------------------------------------------------
# Residues
# ---------------------------------------------------------------------------


def admittance_residue(Yfun: Callable[[complex], np.ndarray], lam: complex) -> np.ndarray:
    """Residue of Z = Y^{-1} at a simple zero lam of det Y, computed locally
    from the admittance: Res = u v^T / (v^T Y'(lam) u) with u, v the right
    and left null vectors of Y(lam) and Y' a high-order finite difference.

    Needs only point evaluations of Y around the mode, so it works for any
    evaluable system, fitted or analytic.
    """
    Y = np.asarray(Yfun(lam), dtype=complex)
    mu, V = np.linalg.eig(Y)
    k = int(np.argmin(np.abs(mu)))
    u = V[:, k]
    muT, W = np.linalg.eig(Y.T)
    kT = int(np.argmin(np.abs(muT)))
    v = W[:, kT]  # bilinear left null vector: v^T Y ~ 0
    h = 1e-5 * (1.0 + abs(lam))
    dY = (
        8.0 * (np.asarray(Yfun(lam + h), dtype=complex) - np.asarray(Yfun(lam - h), dtype=complex))
        - (np.asarray(Yfun(lam + 2 * h), dtype=complex) - np.asarray(Yfun(lam - 2 * h), dtype=complex))
    ) / (12.0 * h)
    denom = v @ dY @ u
    if denom == 0:
        raise ResidueError(f"degenerate null-vector pairing at {lam}: not a simple mode")
    return np.outer(u, v) / denom


def residue_at_mode(
    source: Union[RationalModel, StateSpaceModel, tuple],
    lam: complex,
    match_tol: float = 1e-6,
) -> np.ndarray:
    """Residue matrix of the source's transfer matrix at pole ``lam``.

    ``source`` is a RationalModel (partial-fraction coefficient), a
    StateSpaceModel (all ports), or a (StateSpaceModel, PortSelection) pair:
    Res = C1 (phi psi) B1.
    """
    if isinstance(source, RationalModel):
        dist = np.abs(source.poles - lam)
        k = int(np.argmin(dist)) if dist.size else -1
        if k < 0 or dist[k] > match_tol * (1.0 + abs(lam)):
            raise ResidueError(f"{lam} does not match any pole of the rational model")
        return source.residues[k].copy()
    if isinstance(source, StateSpaceModel):
        model, sel = source, PortSelection.all_ports(source)
    else:
        model, sel = source
    try:
        R = mass_oracle.resolvent_residue(model.A, lam)
    except mass_oracle.OracleError as exc:
        raise ResidueError(str(exc)) from exc
    rows = np.asarray(sel.outputs, dtype=int)
    cols = np.asarray(sel.inputs, dtype=int)
    return model.C[rows, :] @ R @ model.B[:, cols]


# ---------------------------------------------------------------------------
# CSV import/export of sampled responses
# ---------------------------------------------------------------------------


def write_response_csv(samples: ResponseSamples) -> str:
    """Serialize samples as CSV: omega, then re/im per matrix entry, row-major."""
    dim = samples.dim
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["omega"]
    for i in range(1, dim + 1):
        for j in range(1, dim + 1):
            header += [f"re_{i}_{j}", f"im_{i}_{j}"]
    writer.writerow(header)
    for w, block in zip(samples.omegas, samples.values):
        row = [repr(float(w))]
        for z in block.reshape(-1):
            row += [repr(float(z.real)), repr(float(z.imag))]
        writer.writerow(row)
    return out.getvalue()


def read_response_csv(text: str) -> ResponseSamples:
    """Parse the CSV format written by :func:`write_response_csv`."""
    rows = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            if lineno == 1:
                continue
            raise FitError(f"response CSV line {lineno}: non-numeric value")
    if not rows:
        raise FitError("response CSV contains no data rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FitError("response CSV rows have inconsistent column counts")
    n_entries = (width - 1) // 2
    dim = int(round(np.sqrt(n_entries)))
    if width != 1 + 2 * dim * dim:
        raise FitError(f"response CSV width {width} does not describe a square matrix")
    data = np.array(rows)
    omegas = data[:, 0]
    values = (data[:, 1::2] + 1j * data[:, 2::2]).reshape(-1, dim, dim)
    return ResponseSamples(omegas=omegas, values=values)
