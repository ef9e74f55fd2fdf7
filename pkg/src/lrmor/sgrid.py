"""Sigma-magnitude grids over log-spaced (parameter, frequency) samples.

A grid cell holds ||H(mu, i*omega)||_2 (the largest singular value of the
transfer matrix) or, for error grids, the relative deviation
||H - Hhat||_2 / ||H||_2.  Singular evaluation points are recorded as NaN
cells rather than aborting the sweep.  Grids round-trip through CSV files
with header ``mu,omega,value``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularOperatorError
from .mor import Rom, transfer_eval
from .pmor import ParametricSystem
from .system import LtiSystem


@dataclass
class SigmaGrid:
    mus: np.ndarray
    omegas: np.ndarray
    values: np.ndarray  # (len(mus), len(omegas)), >= 0 or NaN

    def __post_init__(self):
        self.mus = np.atleast_1d(np.asarray(self.mus, dtype=float))
        self.omegas = np.atleast_1d(np.asarray(self.omegas, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.mus), len(self.omegas)):
            raise ValueError("grid shape does not match the sample lists")


def parameter_samples(cfg) -> np.ndarray:
    return np.logspace(np.log10(cfg.mu_range[0]), np.log10(cfg.mu_range[1]),
                       cfg.samples_per_axis)


def frequency_samples(cfg) -> np.ndarray:
    return np.logspace(np.log10(cfg.omega_range[0]),
                       np.log10(cfg.omega_range[1]), cfg.samples_per_axis)


class _Evaluator:
    """Uniform H(mu, s) access for full-order systems and parametric ROMs;
    per-parameter work (instantiation, projection) is done once."""

    def __init__(self, obj):
        self.obj = obj
        self._mu = None
        self._frozen = None

    def __call__(self, mu, s):
        obj = self.obj
        if isinstance(obj, LtiSystem):
            return transfer_eval(obj, s)
        if isinstance(obj, Rom):
            return obj.transfer(s)
        if isinstance(obj, ParametricSystem):
            if self._mu != mu:
                self._frozen = obj.instantiate(mu)
                self._mu = mu
            return transfer_eval(self._frozen, s)
        if hasattr(obj, "reduce"):  # PiecewiseRom
            if self._mu != mu:
                self._frozen = obj.reduce(mu)
                self._mu = mu
            return self._frozen.transfer(s)
        return obj.transfer(mu, s)  # InterpolatoryRom and look-alikes


def _sweep(cell, mus, omegas):
    values = np.empty((len(mus), len(omegas)))
    for i, mu in enumerate(mus):
        for j, om in enumerate(omegas):
            try:
                values[i, j] = cell(mu, 1j * om)
            except (SingularOperatorError, np.linalg.LinAlgError):
                values[i, j] = np.nan
    return values


def sigma_grid(obj, cfg=None, mus=None, omegas=None) -> SigmaGrid:
    """||H(mu, i*omega)||_2 over the grid.

    Samples default to the log-spaced lists of ``cfg``; explicit ``mus`` /
    ``omegas`` override them.  Non-parametric inputs ignore the parameter
    axis (a single row with mu = 0 is produced unless ``mus`` is given).
    """
    mus, omegas = _resolve_samples(obj, cfg, mus, omegas)
    ev = _Evaluator(obj)

    def cell(mu, s):
        return np.linalg.norm(np.atleast_2d(ev(mu, s)), 2)

    return SigmaGrid(mus, omegas, _sweep(cell, mus, omegas))


def sigma_error_grid(full_obj, rom_obj, cfg=None, mus=None,
                     omegas=None) -> SigmaGrid:
    """Relative sigma-magnitude error ||H - Hhat||_2 / ||H||_2 per cell."""
    mus, omegas = _resolve_samples(full_obj, cfg, mus, omegas)
    ev_full = _Evaluator(full_obj)
    ev_rom = _Evaluator(rom_obj)

    def cell(mu, s):
        h = np.atleast_2d(ev_full(mu, s))
        hh = np.atleast_2d(ev_rom(mu, s))
        ref = np.linalg.norm(h, 2)
        return np.linalg.norm(h - hh, 2) / ref

    return SigmaGrid(mus, omegas, _sweep(cell, mus, omegas))


def _resolve_samples(obj, cfg, mus, omegas):
    parametric = isinstance(obj, ParametricSystem) or hasattr(obj, "reduce") \
        or (hasattr(obj, "transfer") and not isinstance(obj, (LtiSystem, Rom)))
    if mus is None:
        if parametric:
            if cfg is None:
                raise ValueError("need cfg or explicit mus for parametric "
                                 "input")
            mus = parameter_samples(cfg)
        else:
            mus = np.array([0.0])
    if omegas is None:
        if cfg is None:
            raise ValueError("need cfg or explicit omegas")
        omegas = frequency_samples(cfg)
    return np.atleast_1d(np.asarray(mus, float)), \
        np.atleast_1d(np.asarray(omegas, float))


def write_grid_csv(grid: SigmaGrid, path):
    """Write ``mu,omega,value`` rows; float repr keeps the round trip
    bit-exact."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("mu,omega,value\n")
        for i, mu in enumerate(grid.mus):
            for j, om in enumerate(grid.omegas):
                fh.write(f"{float(mu)!r},{float(om)!r},"
                         f"{float(grid.values[i, j])!r}\n")


def read_grid_csv(path) -> SigmaGrid:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != "mu,omega,value":
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    mus_seq = [float(r[0]) for r in rows]
    omegas_seq = [float(r[1]) for r in rows]
    vals = np.array([float(r[2]) for r in rows])
    mus = list(dict.fromkeys(mus_seq))
    omegas = list(dict.fromkeys(omegas_seq))
    values = vals.reshape(len(mus), len(omegas))
    return SigmaGrid(np.array(mus), np.array(omegas), values)
