"""Gaussian states and symplectic operations on quadrature phase space.

Conventions used throughout the package:

* quadratures are ordered ``(q1, p1, q2, p2, ...)``;
* first moments ``d_i = <X_i>``;
* the covariance matrix is scaled so the vacuum is the identity,
  ``sigma_ij = <X_i X_j + X_j X_i> - 2 <X_i><X_j>``;
* the symplectic form is the block-diagonal ``[[0, 1], [-1, 0]]``.

With this scaling a state is physical iff ``sigma + i*Gamma >= 0`` and a
single-mode state is pure iff ``det sigma = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Construction-time checks are deliberately loose compared to the 1e-12
# symplectic residuals the package actually achieves; they only guard
# against genuinely broken inputs.
PHYSICALITY_TOL = 1e-9
SYMPLECTIC_TOL = 1e-10
_PINV_RCOND = 1e-12


def symplectic_form(n_modes: int) -> np.ndarray:
    """Antisymmetric form Gamma for `n_modes` modes, (q,p) interleaved."""
    gamma = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        gamma[2 * k, 2 * k + 1] = 1.0
        gamma[2 * k + 1, 2 * k] = -1.0
    return gamma


def check_symplectic(matrix: np.ndarray) -> float:
    """Max-abs residual of S Gamma S^T - Gamma."""
    matrix = np.asarray(matrix, dtype=float)
    n2 = matrix.shape[0]
    if matrix.shape != (n2, n2) or n2 % 2:
        raise ValueError(f"not a phase-space matrix: shape {matrix.shape}")
    gamma = symplectic_form(n2 // 2)
    return float(np.max(np.abs(matrix @ gamma @ matrix.T - gamma)))


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class GaussianState:
    """First moments and covariance matrix of an n-mode Gaussian state."""

    d: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        d = _frozen(np.atleast_1d(self.d))
        sigma = _frozen(np.atleast_2d(self.sigma))
        if d.ndim != 1 or d.size % 2:
            raise ValueError(f"first moments must have even length, got {d.shape}")
        if sigma.shape != (d.size, d.size):
            raise ValueError(f"covariance shape {sigma.shape} does not match d {d.shape}")
        # Tolerances scale with the covariance so that strongly squeezed
        # states (entries ~ cosh s) are not rejected on eigensolver roundoff.
        scale = max(1.0, float(np.max(np.abs(sigma))))
        if np.max(np.abs(sigma - sigma.T)) > PHYSICALITY_TOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        gamma = symplectic_form(d.size // 2)
        # Physicality: sigma + i Gamma is Hermitian and must be PSD.
        eigmin = float(np.min(np.linalg.eigvalsh(sigma + 1j * gamma)))
        if eigmin < -PHYSICALITY_TOL * scale:
            raise ValueError(f"state violates the uncertainty bound: min eig {eigmin:.3e}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n_modes(self) -> int:
        return self.d.size // 2

    def displaced(self, delta: np.ndarray) -> "GaussianState":
        """Same state shifted in phase space by `delta`."""
        return GaussianState(self.d + np.asarray(delta, dtype=float), self.sigma)

    def to_json_dict(self) -> dict:
        return {"d": self.d.tolist(), "sigma": self.sigma.tolist()}


@dataclass(frozen=True)
class SymplecticMap:
    """Linear phase-space map; the matrix is verified symplectic on construction."""

    matrix: np.ndarray
    tol: float = field(default=SYMPLECTIC_TOL, repr=False)

    def __post_init__(self):
        matrix = _frozen(np.atleast_2d(self.matrix))
        residual = check_symplectic(matrix)
        if residual > self.tol:
            raise ValueError(f"matrix is not symplectic: residual {residual:.3e}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def to_json_dict(self) -> dict:
        return {"matrix": self.matrix.tolist()}


# ---------------------------------------------------------------------------
# state constructors


def vacuum(n_modes: int = 1) -> GaussianState:
    if n_modes < 1:
        raise ValueError("need at least one mode")
    return GaussianState(np.zeros(2 * n_modes), np.eye(2 * n_modes))


def coherent(q0: float, p0: float) -> GaussianState:
    """Single-mode coherent state centred at (q0, p0); |alpha|^2 = (q0^2+p0^2)/2."""
    return GaussianState(np.array([q0, p0], dtype=float), np.eye(2))


def squeezed_vacuum(r: float) -> GaussianState:
    """Single-mode squeezed vacuum, q-variance reduced by e^{-2r}."""
    return GaussianState(np.zeros(2), np.diag([np.exp(-2.0 * r), np.exp(2.0 * r)]))


def two_mode_squeezed_vacuum(s: float) -> GaussianState:
    """Two-mode squeezed vacuum with Var((q1 - q2)/sqrt 2) = e^{-s} * vacuum."""
    ch, sh = np.cosh(s), np.sinh(s)
    z = np.diag([1.0, -1.0])
    sigma = np.block([[ch * np.eye(2), sh * z], [sh * z, ch * np.eye(2)]])
    return GaussianState(np.zeros(4), sigma)


def tensor(a: GaussianState, b: GaussianState) -> GaussianState:
    """Product state with `a`'s modes first."""
    sigma = np.block(
        [
            [a.sigma, np.zeros((a.sigma.shape[0], b.sigma.shape[0]))],
            [np.zeros((b.sigma.shape[0], a.sigma.shape[0])), b.sigma],
        ]
    )
    return GaussianState(np.concatenate([a.d, b.d]), sigma)


# ---------------------------------------------------------------------------
# symplectic constructors


def _embed(block: np.ndarray, modes: tuple[int, ...], n_modes: int) -> np.ndarray:
    """Place a block acting on `modes` into the 2n x 2n identity."""
    full = np.eye(2 * n_modes)
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in modes])
    full[np.ix_(idx, idx)] = block
    return full


def rotation_block(phi: float) -> np.ndarray:
    """2x2 phase-rotation block; e^{-i phi} on the mode operator."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, s], [-s, c]])


def phase_rotation(phi: float, mode: int = 0, n_modes: int = 1) -> SymplecticMap:
    return SymplecticMap(_embed(rotation_block(phi), (mode,), n_modes))


def squeeze(r: float, mode: int = 0, n_modes: int = 1) -> SymplecticMap:
    """Single-mode squeezer: q -> e^{-r} q, p -> e^{r} p."""
    return SymplecticMap(_embed(np.diag([np.exp(-r), np.exp(r)]), (mode,), n_modes))


def beam_splitter(t: float, modes: tuple[int, int] = (0, 1), n_modes: int = 2) -> SymplecticMap:
    """Beam splitter of transmissivity t in [0, 1] on the given mode pair.

    Output 1 = sqrt(t) in1 + sqrt(1-t) in2, output 2 = -sqrt(1-t) in1 + sqrt(t) in2,
    applied identically to q and p.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {t}")
    ct, st = np.sqrt(t), np.sqrt(1.0 - t)
    block = np.block([[ct * np.eye(2), st * np.eye(2)], [-st * np.eye(2), ct * np.eye(2)]])
    return SymplecticMap(_embed(block, tuple(modes), n_modes))


def apply_symplectic(smap: SymplecticMap, state: GaussianState) -> GaussianState:
    if smap.n_modes != state.n_modes:
        raise ValueError("mode count mismatch between map and state")
    s = smap.matrix
    return GaussianState(s @ state.d, s @ state.sigma @ s.T)


# ---------------------------------------------------------------------------
# reduction, measurement, fidelity


def partial_trace(state: GaussianState, keep) -> GaussianState:
    """Marginal state on the listed modes, in the order given."""
    keep = list(keep)
    if not keep or len(set(keep)) != len(keep) or not all(0 <= m < state.n_modes for m in keep):
        raise ValueError(f"bad mode selection {keep} for {state.n_modes} modes")
    idx = np.concatenate([[2 * m, 2 * m + 1] for m in keep])
    return GaussianState(state.d[idx], state.sigma[np.ix_(idx, idx)])


def homodyne_feedforward(
    state: GaussianState,
    measured_mode: int,
    target_mode: int,
    quadrature: str = "q",
    gain: float = 0.0,
) -> GaussianState:
    """Homodyne one mode and displace a target quadrature by gain * outcome.

    Returns the ensemble-averaged state of the unmeasured modes (measured mode
    removed, remaining modes in their original order).  The average over
    outcomes of the conditional states restores the outcome-independent
    Gaussian below; `gain` = 0 reproduces the plain marginal.
    """
    n = state.n_modes
    if measured_mode == target_mode or not (0 <= measured_mode < n and 0 <= target_mode < n):
        raise ValueError("measured and target modes must be distinct valid modes")
    if quadrature not in ("q", "p"):
        raise ValueError(f"quadrature must be 'q' or 'p', got {quadrature!r}")

    rest = [m for m in range(n) if m != measured_mode]
    ridx = np.concatenate([[2 * m, 2 * m + 1] for m in rest])
    midx = np.array([2 * measured_mode, 2 * measured_mode + 1])

    a = state.sigma[np.ix_(ridx, ridx)]
    b = state.sigma[np.ix_(midx, midx)]
    c = state.sigma[np.ix_(ridx, midx)]

    iq = 0 if quadrature == "q" else 1
    b_qq = b[iq, iq]
    if b_qq <= _PINV_RCOND * max(1.0, float(np.max(np.abs(b)))):
        raise ValueError("measured quadrature has no variance; homodyne statistics degenerate")

    pi = np.zeros((2, 2))
    pi[iq, iq] = 1.0
    pinv = np.linalg.pinv(pi @ b @ pi, rcond=_PINV_RCOND)

    e_q = np.zeros(2)
    e_q[iq] = 1.0
    e_t = np.zeros(len(ridx))
    e_t[2 * rest.index(target_mode) + iq] = 1.0

    # Conditional covariance plus the outcome-averaged spread of the
    # feed-forward displaced means.
    sigma_cond = a - c @ pinv @ c.T
    v = c @ pinv @ e_q
    shift = v + gain * e_t
    sigma_avg = sigma_cond + b_qq * np.outer(shift, shift)

    d_avg = state.d[ridx] + gain * state.d[midx][iq] * e_t
    return GaussianState(d_avg, 0.5 * (sigma_avg + sigma_avg.T))


def fidelity_pure_mixed(pure: GaussianState, other: GaussianState) -> float:
    """Uhlmann fidelity between a pure single-mode state and any single-mode state.

    F = 2 exp(-delta^T (s1+s2)^{-1} delta) / sqrt(det(s1+s2)) in the
    vacuum = identity scaling.
    """
    if pure.n_modes != 1 or other.n_modes != 1:
        raise ValueError("fidelity formula is for single-mode states")
    det_pure = float(np.linalg.det(pure.sigma))
    if det_pure > 1.0 + PHYSICALITY_TOL:
        raise ValueError(f"first argument is not pure: det sigma = {det_pure:.6f}")
    total = pure.sigma + other.sigma
    delta = pure.d - other.d
    return float(2.0 * np.exp(-delta @ np.linalg.solve(total, delta)) / np.sqrt(np.linalg.det(total)))
