"""Projection-based model order reduction.

Square-root balanced truncation with the classic error bound, tangential
IRKA, transfer function evaluation, and the Riccati reformulations backing
the positive-real / bounded-real / LQG balancing variants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .equations import LowRankFactor, LyapunovSpec
from .errors import SingularOperatorError, SolverError
from .lradi import AdiOptions, lr_adi
from .operators import OperatorSet
from .system import LtiSystem

_REAL_TOL = 1e-13


@dataclass
class Rom:
    """Dense reduced-order realization plus the projection bases used."""

    e: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    v: np.ndarray
    w: np.ndarray

    @property
    def order(self) -> int:
        return self.a.shape[0]

    def transfer(self, s) -> np.ndarray:
        """Hhat(s) = Chat (s Ehat - Ahat)^{-1} Bhat + D."""
        if self.order == 0:
            return self.d.astype(complex)
        x = la.solve(s * self.e - self.a, self.b)
        return self.c @ x + self.d


@dataclass
class HsvReport:
    singular_values: np.ndarray  # descending
    chosen_order: int
    error_bound: float  # 2 * sum of truncated values
    rank_limited: bool = False


def project(system: LtiSystem, v: np.ndarray, w: np.ndarray) -> Rom:
    """Petrov-Galerkin compression of ``system`` onto the bases (V, W)."""
    ops = OperatorSet(system)
    v = np.atleast_2d(v)
    w = np.atleast_2d(w)
    return Rom(e=w.T @ ops.mul_e("N", v),
               a=w.T @ ops.mul_a_splr("N", v),
               b=w.T @ system.b,
               c=system.c @ v,
               d=system.d.copy(),
               v=v, w=w)


def transfer_eval(system: LtiSystem, s) -> np.ndarray:
    """H(s) = C (sE - A)^{-1} B + D with one sparse factorization for s."""
    ops = OperatorSet(system)
    solve = ops.sol_ape_splr if system.have_uv else ops.sol_ape
    x = solve("N", -s, "N", system.b)
    return -(system.c @ x) + system.d


def square_root_method(zp: LowRankFactor, zq: LowRankFactor,
                       system: LtiSystem, order: int | None = None,
                       tol: float | None = None) -> tuple[Rom, HsvReport]:
    """Balancing projection from Gramian factors (square root method).

    The SVD of Zq^T E Zp yields the Hankel singular values.  In tolerance
    mode the order is the smallest r with 2 * sum(sigma_{k>r}) <= tol; in
    fixed mode the requested order is capped at the numerical rank (flagged
    in the report).  The balanced bases satisfy W^T E V = I_r.
    """
    if (order is None) == (tol is None):
        raise ValueError("give exactly one of order= or tol=")
    if zp.columns == 0 or zq.columns == 0:
        raise ValueError("empty Gramian factor")
    ops = OperatorSet(system)
    u, s, xt = la.svd(zq.z.T @ ops.mul_e("N", zp.z), full_matrices=False)
    # guard Sigma^{-1/2}: drop values at roundoff relative to sigma_1
    rank = int(np.sum(s > len(s) * np.finfo(float).eps * (s[0] if len(s)
                                                          else 0.0)))
    tails = 2.0 * (np.cumsum(s[::-1])[::-1])  # tails[r] = 2*sum_{k>=r} s_k
    rank_limited = False
    if order is not None:
        r = min(order, rank)
        rank_limited = r < order
    else:
        r = rank
        for cand in range(rank + 1):
            tail = tails[cand] if cand < len(s) else 0.0
            if tail <= tol:
                r = cand
                break
    bound = float(tails[r]) if r < len(s) else 0.0
    scale = 1.0 / np.sqrt(s[:r])
    v = zp.z @ (xt[:r].T * scale)
    w = zq.z @ (u[:, :r] * scale)
    rom = project(system, v, w)
    report = HsvReport(singular_values=s.copy(), chosen_order=r,
                       error_bound=bound, rank_limited=rank_limited)
    return rom, report


def balanced_truncation(system: LtiSystem, order: int | None = None,
                        tol: float | None = None,
                        adi_options: AdiOptions | None = None
                        ) -> tuple[Rom, HsvReport]:
    """Classic Lyapunov balanced truncation for a stable system.

    Both Gramians are solved by LR-ADI at a fixed relative tolerance of
    1e-10: the equation accuracy is decoupled from the truncation tolerance.
    D is copied unchanged.
    """
    if adi_options is None:
        adi_options = AdiOptions(rel_tolerance=1e-10)
    res_p = lr_adi(LyapunovSpec(system, "N"), adi_options)
    if not res_p.converged:
        raise SolverError("controllability Gramian ADI did not converge")
    res_q = lr_adi(LyapunovSpec(system, "T"), adi_options)
    if not res_q.converged:
        raise SolverError("observability Gramian ADI did not converge")
    return square_root_method(res_p.z, res_q.z, system, order=order, tol=tol)


# -- tangential IRKA ----------------------------------------------------------

@dataclass
class IrkaOptions:
    max_iter: int = 100
    shift_change_tol: float = 1e-6
    initial_shifts: np.ndarray | None = None
    initial_b: np.ndarray | None = None  # (r, m) tangential input directions
    initial_c: np.ndarray | None = None  # (r, p) tangential output directions


@dataclass
class IrkaResult:
    rom: Rom
    shifts: np.ndarray  # interpolation points the final ROM was built from
    b_dirs: np.ndarray
    c_dirs: np.ndarray
    converged: bool
    n_iter: int
    shift_history: list = field(default_factory=list)


def _default_irka_data(system: LtiSystem, r: int):
    sigma = np.logspace(-1.0, 1.0, r).astype(complex)
    _, _, vt = la.svd(system.b, full_matrices=False)
    b0 = np.tile(vt[0], (r, 1)).astype(complex)
    _, _, vt = la.svd(system.c.T, full_matrices=False)
    c0 = np.tile(vt[0], (r, 1)).astype(complex)
    return sigma, b0, c0


def _sorted_spectral_data(lam, vl, vr):
    order = np.lexsort((lam.imag, lam.real))
    return lam[order], vl[:, order], vr[:, order]


def _rational_basis(ops, system, sigma, b_dirs, c_dirs):
    solve = ops.sol_ape_splr if system.have_uv else ops.sol_ape
    vcols, wcols = [], []
    i = 0
    r = len(sigma)
    while i < r:
        s = sigma[i]
        rhs_v = system.b @ b_dirs[i]
        rhs_w = system.c.T @ c_dirs[i]
        shift = s
        for attempt in range(4):
            try:
                x = solve("N", -shift, "N", rhs_v)
                y = solve("T", -shift, "T", rhs_w)
                break
            except SingularOperatorError:
                if attempt == 3:
                    raise
                shift = shift * (1.0 + 1e-6)  # nudge off the pole
        if abs(s.imag) <= _REAL_TOL * abs(s):
            vcols.append(np.real(x))
            wcols.append(np.real(y))
            i += 1
        else:
            vcols.extend([np.real(x), np.imag(x)])
            wcols.extend([np.real(y), np.imag(y)])
            i += 2  # conjugate partner spans the same two real columns
    return np.column_stack(vcols), np.column_stack(wcols)


def _orth(m):
    u, s, _ = la.svd(m, full_matrices=False)
    keep = s > max(m.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
    return u[:, keep]


def _orth_pad(m, r):
    """Orthonormal n x r basis containing the column span of m.

    Rank-deficient rational bases (near-parallel Krylov directions) are
    padded with deterministic pseudo-random complements so the reduced
    order stays fixed across IRKA iterations.
    """
    u = _orth(m)
    if u.shape[1] > r:
        return u[:, :r]
    rng = np.random.default_rng(0x1234)
    guard = 0
    while u.shape[1] < r and guard < 8:
        cand = rng.standard_normal((m.shape[0], r - u.shape[1]))
        cand = cand - u @ (u.T @ cand)
        u = np.hstack([u, _orth(cand)])
        guard += 1
    if u.shape[1] != r:
        raise SolverError("could not complete a rank-deficient IRKA basis")
    return u


def irka(system: LtiSystem, r: int, opts: IrkaOptions | None = None
         ) -> IrkaResult:
    """Tangential IRKA: iterate rational Krylov bases until the shifts match
    the mirrored ROM poles.

    At every iterate the current ROM tangentially Hermite-interpolates the
    full transfer function at the shifts it was built from; at the fixed
    point those shifts equal the mirrored poles of the ROM itself.  Complex
    shifts stay conjugate-closed and the bases are assembled real.
    """
    if r < 1:
        raise ValueError("reduced order must be >= 1")
    if r > system.order:
        raise ValueError("reduced order exceeds the system order")
    if opts is None:
        opts = IrkaOptions()
    ops = OperatorSet(system)
    sigma, b_dirs, c_dirs = _default_irka_data(system, r)
    if opts.initial_shifts is not None:
        sigma = np.asarray(opts.initial_shifts, dtype=complex)
        if len(sigma) != r:
            raise ValueError("initial shift count must equal r")
    if opts.initial_b is not None:
        b_dirs = np.asarray(opts.initial_b, dtype=complex)
    if opts.initial_c is not None:
        c_dirs = np.asarray(opts.initial_c, dtype=complex)

    converged = False
    history = []
    rom = None
    n_iter = 0
    next_data = (sigma, b_dirs, c_dirs)
    for n_iter in range(1, opts.max_iter + 1):
        sigma, b_dirs, c_dirs = next_data
        v, w = _rational_basis(ops, system, sigma, b_dirs, c_dirs)
        rom = project(system, _orth_pad(v, r), _orth_pad(w, r))
        lam, vl, vr = la.eig(rom.a, rom.e, left=True, right=True)
        lam, vl, vr = _sorted_spectral_data(lam, vl, vr)
        new_sigma = -lam
        # keep interpolation points in the right half-plane
        new_sigma = np.where(new_sigma.real < 0,
                             -new_sigma.real + 1j * new_sigma.imag, new_sigma)
        new_b = (rom.b.T @ np.conj(vl)).T
        new_c = (rom.c @ vr).T
        norms_b = np.linalg.norm(new_b, axis=1)
        norms_c = np.linalg.norm(new_c, axis=1)
        new_b[norms_b > 0] /= norms_b[norms_b > 0, None]
        new_c[norms_c > 0] /= norms_c[norms_c > 0, None]
        old_sorted = np.sort_complex(sigma)
        new_sorted = np.sort_complex(new_sigma)
        change = float(np.max(np.abs(new_sorted - old_sorted)
                              / np.maximum(np.abs(old_sorted), 1e-300)))
        history.append(change)
        if change <= opts.shift_change_tol:
            converged = True
            break
        next_data = (new_sigma, new_b, new_c)
    # sigma/b_dirs/c_dirs are the data the final bases were built from, so
    # the returned ROM tangentially interpolates at exactly these points
    return IrkaResult(rom=rom, shifts=sigma, b_dirs=b_dirs, c_dirs=c_dirs,
                      converged=converged, n_iter=n_iter,
                      shift_history=history)


# -- balancing-variant Riccati reformulations ---------------------------------

@dataclass
class BalancingTransform:
    """Tilde realization for one balancing variant.

    The transformed coefficient Atilde = A + U V^T is carried by the
    low-rank update of ``system`` (never densified).  ``quad_sign`` is the
    sign of the quadratic term of the rewritten Riccati equation: +1 for the
    positive-real and bounded-real variants, -1 for LQG (a standard Riccati
    equation).
    """

    variant: str
    system: LtiSystem
    quad_sign: int
    r_factor: np.ndarray
    l_factor: np.ndarray


def _chol_spd(m, what):
    try:
        return la.cholesky(m, lower=False)  # upper R with R^T R = m
    except la.LinAlgError as exc:
        raise ValueError(f"{what} must be symmetric positive definite") from exc


def pr_transform(system: LtiSystem) -> BalancingTransform:
    """Positive-real balancing rewrite.

    With R^T R = D + D^T: Btilde = B R^{-1}, Ctilde = R^{-T} C and the
    low-rank update U = -Btilde, V^T = Ctilde turn the positive-real Riccati
    pair into the sparse-plus-low-rank form with positive quadratic term.
    Requires square D with SPD symmetric part.
    """
    d = system.d
    if d.shape[0] != d.shape[1]:
        raise ValueError("positive-real balancing needs a square D")
    r = _chol_spd(d + d.T, "D + D^T")
    bt = la.solve_triangular(r, system.b.T, trans="T", lower=False).T
    ct = la.solve_triangular(r, system.c, trans="T", lower=False)
    tilde = LtiSystem(a=system.a, b=bt, c=ct, e=system.e, d=d.copy(),
                      u=-bt, v=ct.T)
    return BalancingTransform("positive_real", tilde, +1, r, r)


def br_transform(system: LtiSystem) -> BalancingTransform:
    """Bounded-real balancing rewrite (needs ||D||_2 < 1).

    R^T R = I - D D^T, L^T L = I - D^T D; Btilde = B L^{-1},
    Ctilde = R^{-T} C, U = B D^T, V^T = (I - D D^T)^{-1} C.
    """
    d = system.d
    p, m = d.shape
    big = d @ d.T
    r = _chol_spd(np.eye(p) - big, "I - D D^T")
    lf = _chol_spd(np.eye(m) - d.T @ d, "I - D^T D")
    bt = la.solve_triangular(lf, system.b.T, trans="T", lower=False).T
    ct = la.solve_triangular(r, system.c, trans="T", lower=False)
    v = la.solve(np.eye(p) - big, system.c, assume_a="pos").T
    tilde = LtiSystem(a=system.a, b=bt, c=ct, e=system.e, d=d.copy(),
                      u=system.b @ d.T, v=v)
    return BalancingTransform("bounded_real", tilde, +1, r, lf)


def lqg_transform(system: LtiSystem) -> BalancingTransform:
    """LQG balancing rewrite; always feasible for real D.

    R^T R = I + D D^T, L^T L = I + D^T D; Btilde = B L^{-1},
    Ctilde = R^{-T} C, U = -B D^T, V^T = (I + D D^T)^{-1} C.  The rewritten
    equation is a standard Riccati equation solvable by the low-rank Newton
    iteration with Woodbury-routed solves.
    """
    d = system.d
    p, m = d.shape
    big = d @ d.T
    r = la.cholesky(np.eye(p) + big, lower=False)
    lf = la.cholesky(np.eye(m) + d.T @ d, lower=False)
    bt = la.solve_triangular(lf, system.b.T, trans="T", lower=False).T
    ct = la.solve_triangular(r, system.c, trans="T", lower=False)
    v = la.solve(np.eye(p) + big, system.c, assume_a="pos").T
    tilde = LtiSystem(a=system.a, b=bt, c=ct, e=system.e, d=d.copy(),
                      u=-(system.b @ d.T), v=v)
    return BalancingTransform("lqg", tilde, -1, r, lf)


def variant_residual(system: LtiSystem, variant: str, x: np.ndarray,
                     side: str = "N") -> np.ndarray:
    """Dense residual of the original PR/BR/LQG Riccati equation at ``x``."""
    a = system.dense_a_eff()
    e = system.dense_e()
    b, c, d = system.b, system.c, system.d
    x = np.atleast_2d(x)
    if side == "T":
        a, e, b, c, d = a.T, e.T, c.T, b.T, d.T
    lin = a @ x @ e.T + e @ x @ a.T
    epc = e @ x @ c.T
    if variant == "positive_real":
        core = la.solve(d + d.T, (epc - b).T)
        return lin + (epc - b) @ core
    if variant == "bounded_real":
        core = la.solve(np.eye(d.shape[0]) - d @ d.T, (epc + b @ d.T).T)
        return lin + b @ b.T + (epc + b @ d.T) @ core
    if variant == "lqg":
        core = la.solve(np.eye(d.shape[0]) + d @ d.T, (epc + b @ d.T).T)
        return lin + b @ b.T - (epc + b @ d.T) @ core
    raise ValueError(f"unknown variant {variant!r}")


def transformed_residual(transform: BalancingTransform, x: np.ndarray,
                         side: str = "N") -> np.ndarray:
    """Dense residual of the rewritten (tilde) Riccati equation at ``x``."""
    sys_ = transform.system
    a = sys_.dense_a_eff()
    e = sys_.dense_e()
    b, c = sys_.b, sys_.c
    x = np.atleast_2d(x)
    if side == "T":
        a, e, b, c = a.T, e.T, c.T, b.T
    lin = a @ x @ e.T + e @ x @ a.T
    quad = (e @ x @ c.T) @ (c @ x @ e.T)
    return lin + b @ b.T + transform.quad_sign * quad
