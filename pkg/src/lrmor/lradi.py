"""Residual-based low-rank ADI iteration for Lyapunov equations.

The iteration keeps a residual factor W alongside the solution factor Z.
Starting from W_0 = G (the constant-term factor), each step with shift p
solves (A + pE) V = W, updates W and appends a scaled copy of V to Z.  The
residual of the current iterate is exactly W W^T, so the cheap monitor
``||W^T W||_2`` costs O(m^2 n) per step.  Complex shifts always come in
conjugate pairs and are absorbed in a single real double-step, keeping Z
real throughout.

Shifts are self-generated by default: Ritz values of the pencil projected
onto a small orthonormalized basis (the initial residual factor at first,
the most recent solve blocks afterwards).  A Ritz-value-based heuristic set
computed once from Arnoldi runs with A and A^{-1} is available as the
fallback and as an explicit strategy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .equations import (LowRankFactor, LyapunovSpec, constant_term_factor,
                        spectral_norm)
from .errors import SingularOperatorError, SolverError
from .operators import OperatorSet

_REAL_TOL = 1e-13


@dataclass
class ShiftSet:
    """Ordered shifts, strictly stable and conjugate-closed with the members
    of each pair adjacent."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if (self.values.real >= 0).any():
            raise ValueError("all shifts must have strictly negative real "
                             "part")
        i = 0
        vals = self.values
        while i < len(vals):
            if abs(vals[i].imag) <= _REAL_TOL * abs(vals[i]):
                i += 1
                continue
            if i + 1 >= len(vals) or vals[i + 1] != np.conj(vals[i]):
                raise ValueError("complex shifts must appear as adjacent "
                                 "conjugate pairs")
            i += 2

    def __len__(self):
        return len(self.values)


@dataclass
class AdiOptions:
    max_iterations: int = 200
    rel_tolerance: float = 1e-10
    shift_strategy: str = "projection"  # or "heuristic"
    shift_batch: int = 6
    shifts: ShiftSet | None = None  # fixed pool, cycled; overrides strategy

    def __post_init__(self):
        if self.rel_tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.shift_batch < 1:
            raise ValueError("shift_batch must be >= 1")
        if self.shift_strategy not in ("projection", "heuristic"):
            raise ValueError(f"unknown shift strategy {self.shift_strategy!r}")
        if self.shifts is not None and not isinstance(self.shifts, ShiftSet):
            self.shifts = ShiftSet(np.asarray(self.shifts))


@dataclass
class AdiResult:
    z: LowRankFactor
    residual_history: list
    shifts_used: ShiftSet | None
    converged: bool
    # Z column count after each iteration, aligned with residual_history
    columns_history: list = field(default_factory=list)


def _conjugate_close(values):
    """Stable ordering with exact conjugate pairs adjacent; lone complex
    values (numerical strays) are dropped."""
    values = np.asarray(values, dtype=complex)
    real_mask = np.abs(values.imag) <= _REAL_TOL * np.abs(values)
    out = sorted(values[real_mask].real)
    out = [complex(v) for v in out]
    upper = sorted(values[~real_mask & (values.imag > 0)],
                   key=lambda v: (v.real, v.imag))
    lower = list(values[~real_mask & (values.imag < 0)])
    paired = []
    for v in upper:
        match = None
        for i, w in enumerate(lower):
            if abs(np.conj(v) - w) <= 1e-8 * abs(v):
                match = i
                break
        if match is not None:
            lower.pop(match)
            paired.extend([v, np.conj(v)])
    return np.array(out + paired, dtype=complex)


def projection_shifts(ops: OperatorSet, basis: np.ndarray,
                      fallback: bool = True) -> ShiftSet:
    """Shifts from the Ritz values of (A, E) projected onto ``basis``.

    The basis is orthonormalized first; Ritz values with negative real part
    are returned conjugate-closed.  If none qualify, the heuristic strategy
    takes over (and failing that, unstable Ritz values are reflected across
    the imaginary axis to keep the iteration running).
    """
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.shape[1] == 0:
        raise ValueError("empty projection basis")
    u, s, _ = la.svd(basis, full_matrices=False)
    keep = s > max(basis.shape) * np.finfo(float).eps * (s[0] if len(s) else 0)
    u = u[:, keep]
    if u.shape[1] == 0:
        raise ValueError("projection basis has no numerical rank")
    a_small = u.T @ ops.mul_a_splr("N", u)
    e_small = u.T @ ops.mul_e("N", u)
    ritz = la.eigvals(a_small, e_small)
    ritz = ritz[np.isfinite(ritz)]
    stable = ritz[ritz.real < 0]
    if len(stable) == 0:
        if fallback:
            try:
                return heuristic_shifts(ops)
            except (SolverError, SingularOperatorError):
                pass
        reflected = -np.abs(ritz.real) + 1j * ritz.imag
        stable = reflected[reflected.real < 0]
        if len(stable) == 0:
            raise SolverError("no usable shifts from projection basis")
    return ShiftSet(_conjugate_close(stable))


def _arnoldi_ritz(matvec, n, steps):
    v = np.ones(n) / np.sqrt(n)
    basis = [v]
    h = np.zeros((steps + 1, steps))
    m = steps
    for j in range(steps):
        w = np.asarray(matvec(basis[j]), dtype=float)
        for _ in range(2):  # MGS with one re-orthogonalization pass
            for i in range(j + 1):
                c = basis[i] @ w
                h[i, j] += c
                w = w - c * basis[i]
        h[j + 1, j] = np.linalg.norm(w)
        if h[j + 1, j] < 1e-12:
            m = j + 1
            break
        basis.append(w / h[j + 1, j])
    return la.eigvals(h[:m, :m])


def heuristic_shifts(ops: OperatorSet, num: int = 10,
                     arnoldi_steps: int = 10) -> ShiftSet:
    """Penzl-style suboptimal shift set from Ritz values of the pencil.

    Runs ``arnoldi_steps`` Arnoldi steps with E^{-1}A and with A^{-1}E (the
    reciprocals of the latter approximate the small-magnitude end), keeps
    the stable candidates (reflecting unstable ones), and greedily selects
    ``num`` shifts minimizing the ADI decay function over the candidates.
    """
    n = ops.size()
    steps = min(arnoldi_steps, n)
    cands = []
    fwd = _arnoldi_ritz(
        lambda x: ops.sol_e("N", ops.mul_a_splr("N", x)), n, steps)
    cands.extend(fwd)
    inv = _arnoldi_ritz(
        lambda x: ops.sol_a_splr("N", ops.mul_e("N", x)), n, steps)
    cands.extend(1.0 / mu for mu in inv if mu != 0)
    cands = np.asarray(cands, dtype=complex)
    cands = cands[np.isfinite(cands)]
    cands = np.where(cands.real > 0, -cands.real + 1j * cands.imag, cands)
    cands = cands[cands.real < 0]
    if len(cands) == 0:
        raise SolverError("heuristic shift generation found no stable Ritz "
                          "values")
    # cluster near-duplicates
    cands = cands[np.argsort(cands.real)]
    uniq = [cands[0]]
    for v in cands[1:]:
        if abs(v - uniq[-1]) > 1e-8 * max(abs(v), 1e-30):
            uniq.append(v)
    cands = np.asarray(uniq)

    def decay(shifts, t):
        r = 1.0
        for p in shifts:
            r *= abs(p - t) / max(abs(np.conj(p) + t), 1e-300)
        return r

    worst = [max(decay([p], t) for t in cands) for p in cands]
    chosen = [cands[int(np.argmin(worst))]]
    if abs(chosen[0].imag) > _REAL_TOL * abs(chosen[0]):
        chosen.append(np.conj(chosen[0]))
    while len(chosen) < num:
        scores = [decay(chosen, t) for t in cands]
        t = cands[int(np.argmax(scores))]
        if any(abs(t - c) <= 1e-12 * abs(t) for c in chosen):
            break
        chosen.append(t)
        if abs(t.imag) > _REAL_TOL * abs(t):
            chosen.append(np.conj(t))
    return ShiftSet(_conjugate_close(np.asarray(chosen)))


class _ShiftSupply:
    """Dispenses shifts: a fixed pool is cycled, the heuristic set is
    computed once and cycled, projection shifts are refreshed from the most
    recent solve blocks whenever the queue runs dry or goes stale."""

    def __init__(self, ops, opts):
        self.ops = ops
        self.opts = opts
        self.queue: list[complex] = []
        self.cycle: np.ndarray | None = None
        self.idx = 0
        self.since_refresh = 0
        if opts.shifts is not None:
            self.cycle = opts.shifts.values
        elif opts.shift_strategy == "heuristic":
            self.cycle = heuristic_shifts(
                ops, num=max(opts.shift_batch, 10)).values

    def next(self, w, recent_blocks):
        if self.cycle is not None:
            p = self.cycle[self.idx]
            self.idx = (self.idx + 1) % len(self.cycle)
            return p
        if not self.queue or self.since_refresh >= self.opts.shift_batch:
            basis = np.hstack(list(recent_blocks)) if recent_blocks else w
            self.queue = list(projection_shifts(self.ops, basis).values)
            self.since_refresh = 0
        return self.queue.pop(0)

    def consume_conjugate(self, p):
        pc = np.conj(p)
        if self.cycle is not None:
            if self.cycle[self.idx] == pc:
                self.idx = (self.idx + 1) % len(self.cycle)
        elif self.queue and self.queue[0] == pc:
            self.queue.pop(0)

    def advance(self, steps):
        self.since_refresh += steps


def lr_adi(spec: LyapunovSpec, opts: AdiOptions | None = None) -> AdiResult:
    """Low-rank ADI for one of the dual Lyapunov equations.

    Side "N" solves A P E^T + E P A^T + B B^T = 0, side "T" the dual
    observability equation; systems with a low-rank update solve with the
    effective coefficient A + U V^T via Woodbury.  Returns the factor Z with
    P ~ Z Z^T, the relative residual history (one entry per shift consumed;
    a conjugate double-step records its final residual twice) and the shifts
    actually used.  Running out of iterations is not an error: the partial
    factor comes back with ``converged=False``.
    """
    if opts is None:
        opts = AdiOptions()
    ops = OperatorSet(spec.system)
    side = spec.side
    splr = spec.system.have_uv
    g = constant_term_factor(spec.system, side)
    n = ops.size()
    res0 = spectral_norm(g) ** 2
    if res0 == 0.0:
        return AdiResult(LowRankFactor.empty(n), [], None, True, [])

    def shifted_solve(p, rhs):
        if splr:
            return ops.sol_ape_splr(side, p, side, rhs)
        return ops.sol_ape(side, p, side, rhs)

    supply = _ShiftSupply(ops, opts)
    w = g.astype(float).copy()
    recent = deque(maxlen=opts.shift_batch)
    zblocks = []
    used = []
    history = []
    columns = []
    ncols = 0
    it = 0
    converged = False
    while it < opts.max_iterations:
        p = complex(supply.next(w, recent))
        if p.real >= 0:
            raise ValueError(f"unstable shift {p} supplied to lr_adi")
        is_real = abs(p.imag) <= _REAL_TOL * abs(p)
        try:
            v = shifted_solve(p.real if is_real else p, w)
        except SingularOperatorError as exc:
            raise SingularOperatorError(
                f"shift {p} coincides with a generalized eigenvalue") from exc
        if is_real:
            v = np.real(v)
            w = w - 2.0 * p.real * ops.mul_e(side, v)
            zblocks.append(np.sqrt(-2.0 * p.real) * v)
            recent.append(v)
            used.append(complex(p.real, 0.0))
            inc = 1
        else:
            supply.consume_conjugate(p)
            delta = p.real / p.imag
            gamma = 2.0 * np.sqrt(-p.real)
            vr = v.real + delta * v.imag
            w = w + gamma ** 2 * ops.mul_e(side, vr)
            zblocks.append(gamma * vr)
            zblocks.append(gamma * np.sqrt(delta ** 2 + 1.0) * v.imag)
            recent.append(np.hstack([vr, v.imag]))
            if p.imag > 0:
                used.extend([p, np.conj(p)])
            else:
                used.extend([np.conj(p), p])
            inc = 2
        ncols += g.shape[1] * inc
        it += inc
        supply.advance(inc)
        rel = spectral_norm(w) ** 2 / res0
        history.extend([rel] * inc)
        columns.extend([ncols] * inc)
        if rel <= opts.rel_tolerance:
            converged = True
            break
    z = LowRankFactor(np.hstack(zblocks) if zblocks else np.zeros((n, 0)))
    return AdiResult(z, history, ShiftSet(np.asarray(used)), converged,
                     columns)
