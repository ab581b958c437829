"""Spin operators, tensor-product assembly and the dense Hermitian eigensolver.

Energies are frequencies in MHz (hbar = 1). Basis vectors of a single spin are
ordered by descending projection ``m = s, s-1, ..., -s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from . import _backend

MAX_DIM = 64
HERMITIAN_RTOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class SpinError(ValueError):
    """Invalid input to a spin-algebra routine."""


class ConvergenceError(RuntimeError):
    """The iterative eigensolver did not reach its tolerance."""


@dataclass(frozen=True)
class SpinOperatorSet:
    s: float
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)


@dataclass(frozen=True)
class Eigensystem:
    """Ascending energies, eigenvectors as columns, and product-basis labels."""

    energies: np.ndarray
    states: np.ndarray
    labels: tuple[str, ...]
    basis_index: tuple[int, ...]
    sweeps: int = 0

    def __len__(self) -> int:
        return len(self.energies)

    def index_of(self, label: str) -> int:
        """Position of the eigenstate carrying ``label``."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(label) from None

    def energy_of(self, label: str) -> float:
        return float(self.energies[self.index_of(label)])


def spin_operators(s: float) -> SpinOperatorSet:
    """Matrices of the spin-``s`` operators for s in {1/2, 1}."""
    if s not in (0.5, 1, 1.0):
        raise SpinError(f"unsupported spin value {s!r}; expected 1/2 or 1")
    m = np.arange(s, -s - 1, -1, dtype=float)
    n = len(m)
    sp = np.zeros((n, n), dtype=complex)
    for i in range(1, n):
        sp[i - 1, i] = np.sqrt(s * (s + 1) - m[i] * (m[i] + 1))
    sm = sp.conj().T.copy()
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    sz = np.diag(m).astype(complex)
    for arr in (sx, sy, sz, sp, sm):
        arr.setflags(write=False)
    return SpinOperatorSet(float(s), sx, sy, sz, sp, sm)


def kron_compose(factors) -> np.ndarray:
    """Kronecker product of square matrices, first factor most significant."""
    factors = list(factors)
    if not factors:
        raise SpinError("kron_compose needs at least one factor")
    for f in factors:
        f = np.asarray(f)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise SpinError(f"factor of shape {f.shape} is not square")
    return reduce(np.kron, (np.asarray(f, dtype=complex) for f in factors))


def embed(op: np.ndarray, position: int, dims) -> np.ndarray:
    """Lift ``op`` acting on subsystem ``position`` into the full product space."""
    dims = list(dims)
    mats = [np.eye(d, dtype=complex) for d in dims]
    mats[position] = op
    return kron_compose(mats)


def is_hermitian(h: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = np.max(np.abs(h)) if h.size else 0.0
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= rtol * max(scale, 1e-300))


def _m_label(m: float) -> str:
    frac = Fraction(m).limit_denominator(2)
    if frac == 0:
        return "0"
    sign = "+" if frac > 0 else "-"
    return f"{sign}{abs(frac)}"


def product_basis_labels(spins, names=None) -> list[str]:
    """Labels like ``"0_e,+1/2"`` for every product-basis vector.

    ``spins`` lists the spin quantum numbers of the factors in Kronecker order.
    ``names`` gives an optional suffix per factor (``"e"`` for the electron).
    """
    if names is None:
        names = [""] * len(spins)
    per = []
    for s, name in zip(spins, names):
        ms = np.arange(s, -s - 1, -1)
        suffix = f"_{name}" if name else ""
        per.append([_m_label(m) + suffix for m in ms])
    labels = [""]
    for block in per:
        labels = [f"{a},{b}" if a else b for a in labels for b in block]
    return labels


def hermitian_eig(h, labels=None, tol: float = JACOBI_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Eigensystem:
    """Eigen-decomposition of a small Hermitian matrix by cyclic Jacobi sweeps.

    Each eigenvector is labeled with the product-basis vector it overlaps
    most, ties going to the lowest basis index. Labels therefore follow the
    physical state through level crossings rather than the energy order.

    Raises:
        SpinError: ``h`` is not square, not Hermitian, or larger than 64.
        ConvergenceError: ``max_sweeps`` exhausted before the off-diagonal
            Frobenius norm fell below ``tol * ||h||``.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise SpinError(f"matrix of shape {h.shape} is not square")
    n = h.shape[0]
    if n > MAX_DIM:
        raise SpinError(f"dimension {n} exceeds the dense-solver limit {MAX_DIM}")
    if not is_hermitian(h):
        raise SpinError("matrix is not Hermitian")
    h = (h + h.conj().T) / 2

    diag, vecs, sweeps, converged = _backend.jacobi_hermitian(h, tol, max_sweeps)
    if not converged:
        raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps")

    order = np.argsort(diag, kind="stable")
    energies = np.asarray(diag)[order]
    states = np.asarray(vecs)[:, order]
    # fix the global phase of each vector: largest component real positive
    idx = np.argmax(np.abs(states) ** 2 - 1e-12 * np.arange(n)[:, None], axis=0)
    phases = states[idx, np.arange(n)]
    states = states * (np.abs(phases) / phases)[None, :]

    if labels is None:
        labels = [str(i) for i in range(n)]
    elif len(labels) != n:
        raise SpinError("label count does not match the matrix dimension")
    basis_index = tuple(int(i) for i in idx)
    return Eigensystem(
        energies=energies,
        states=states,
        labels=tuple(labels[i] for i in basis_index),
        basis_index=basis_index,
        sweeps=int(sweeps),
    )


def evolution_operator(eig: Eigensystem, t_us: float) -> np.ndarray:
    """exp(-i 2 pi H t) for energies in MHz and ``t_us`` in microseconds."""
    v = eig.states
    return (v * np.exp(-2j * np.pi * eig.energies * t_us)) @ v.conj().T
