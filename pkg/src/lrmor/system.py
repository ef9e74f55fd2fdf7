"""State-space system container for sparse generalized LTI systems.

The system is

    E x'(t) = A x(t) + B u(t),
    y(t)    = C x(t) + D u(t),

with sparse square ``E`` and ``A`` of order ``n``, thin dense ``B`` (n x m),
``C`` (p x n) and small ``D`` (p x m).  ``E = None`` means the identity; it is
then never materialized.  An optional low-rank update ``U V^T`` describes the
effective coefficient ``A + U V^T`` without ever forming it densely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


def as_sparse(m, n=None):
    """Coerce a matrix to CSR, accepting dense arrays and any sparse format."""
    if m is None:
        if n is None:
            raise ValueError("cannot build an identity of unknown order")
        return sp.identity(n, format="csr")
    if sp.issparse(m):
        out = m.tocsr()
    else:
        out = sp.csr_matrix(np.atleast_2d(np.asarray(m, dtype=float)))
    out.sum_duplicates()
    return out


def _as_dense(m, rows=None, cols=None):
    out = np.atleast_2d(np.asarray(m, dtype=float))
    if rows is not None and out.shape != (rows, cols):
        raise ValueError(f"expected shape {(rows, cols)}, got {out.shape}")
    return out


@dataclass
class LtiSystem:
    """Holds one realization (E, A, B, C, D) plus an optional U V^T update.

    Parameters
    ----------
    a : sparse or dense matrix, n x n
    b : array, n x m
    c : array, p x n
    e : sparse or dense matrix or None
        ``None`` encodes the identity (``have_e`` is False).
    d : array, p x m, optional
        Defaults to zeros.
    u, v : arrays, n x k, optional
        Low-rank update factors; both or neither must be given.
    """

    a: sp.spmatrix
    b: np.ndarray
    c: np.ndarray
    e: sp.spmatrix | None = None
    d: np.ndarray | None = None
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    have_e: bool = field(init=False)
    have_uv: bool = field(init=False)

    def __post_init__(self):
        self.a = as_sparse(self.a)
        n = self.a.shape[0]
        if self.e is not None:
            self.e = as_sparse(self.e)
        self.have_e = self.e is not None
        self.b = _as_dense(self.b)
        self.c = _as_dense(self.c)
        if self.d is None:
            self.d = np.zeros((self.c.shape[0], self.b.shape[1]))
        else:
            self.d = _as_dense(self.d)
        if (self.u is None) != (self.v is None):
            raise ValueError("low-rank update requires both U and V")
        if self.u is not None:
            self.u = _as_dense(self.u)
            self.v = _as_dense(self.v)
        self.have_uv = self.u is not None

    @property
    def order(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]

    def with_update(self, u, v) -> "LtiSystem":
        """Copy of the system carrying the low-rank update ``u v^T``."""
        return LtiSystem(a=self.a, b=self.b, c=self.c, e=self.e, d=self.d,
                         u=u, v=v)

    def transposed(self) -> "LtiSystem":
        """The dual realization (E^T, A^T, C^T, B^T, D^T); U, V swap roles."""
        u = v = None
        if self.have_uv:
            u, v = self.v, self.u
        return LtiSystem(a=self.a.T, b=self.c.T, c=self.b.T,
                         e=self.e.T if self.have_e else None,
                         d=self.d.T, u=u, v=v)

    def dense_a_eff(self) -> np.ndarray:
        """Densified A + U V^T.  Small systems and tests only."""
        a = self.a.toarray()
        if self.have_uv:
            a = a + self.u @ self.v.T
        return a

    def dense_e(self) -> np.ndarray:
        return self.e.toarray() if self.have_e else np.eye(self.order)
