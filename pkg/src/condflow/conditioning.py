"""Conditioning Gaussian field samples on measurements by projecting the
KL coefficient vector onto the nullspace of a data matrix.

The data matrix A (m x n) evaluates the scaled KL basis at the
measurement cells: A_ij = sqrt(lambda_j) * phi_j(cell_i). Any theta with
A theta = 0 perturbs the kriged surface without moving it at the
measurement cells, so the synthesized field honors the data exactly.
An arbitrary i.i.d. normal theta is replaced by its orthogonal
projection theta_hat = Q Q^T theta, the closest nullspace vector in the
least-squares sense; Q holds an orthonormal nullspace basis obtained
from the SVD of A.

The projection matrix P = Q Q^T is never materialized; Q is applied and
then Q^T, which is the same operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .grid import ScalarField
from .kle import synthesize_unconditioned
from .kriging import snap_to_cells

_MOD = "conditioning"

#: relative singular-value threshold for numerical rank detection
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class DataMatrix:
    """KL basis scaled by sqrt-eigenvalues, evaluated at measurement cells."""

    A: np.ndarray  # (m, n)
    cells: np.ndarray  # (m,) fine-grid cell index per measurement

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class Projector:
    """Orthonormal nullspace basis Q (n x (n-r)) and the rank r of A."""

    Q: np.ndarray
    rank: int

    @property
    def n(self):
        return self.Q.shape[0]


def build_data_matrix(basis, ms, grid):
    """Assemble A_ij = sqrt(lambda_j) phi_j(x_hat_i) on snapped cells."""
    if basis.grid != grid:
        raise ArgumentError("basis and measurement grid differ", module=_MOD)
    if ms.m >= basis.n:
        raise ArgumentError(
            f"{ms.m} measurements with only {basis.n} KL modes leave no "
            "nontrivial nullspace; retain more modes",
            module=_MOD,
        )
    cells = snap_to_cells(ms, grid)
    A = basis.phi[cells] * basis.sqrt_lambdas[None, :]
    return DataMatrix(A, cells)


def nullspace_basis(dm):
    """Orthonormal basis of N(A) from the right singular vectors.

    Rank is the count of singular values above RANK_RTOL times the
    largest; signs are fixed (largest-magnitude entry positive) for
    reproducibility. An all-zero A yields the identity basis.
    """
    A = dm.A
    n = dm.n
    s_max = np.abs(A).max()
    if s_max == 0.0:
        return Projector(np.eye(n), 0)
    _, svals, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(svals > RANK_RTOL * svals[0]))
    Q = Vt[rank:].T
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Projector(Q * signs, rank)


def project(theta, proj):
    """Orthogonal projection theta_hat = Q (Q^T theta) onto N(A)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != proj.n:
        raise ArgumentError(
            f"theta has {theta.size} entries, projector expects {proj.n}",
            module=_MOD,
        )
    return proj.Q @ (proj.Q.T @ theta)


def synthesize_conditioned(basis, kriged, theta, proj):
    """Kriged surface plus the KL synthesis of the projected theta.

    The result matches every measured value exactly (to rounding) at the
    measurement cells, for any input theta.
    """
    if kriged.grid != basis.grid:
        raise ArgumentError("kriged surface grid differs from basis grid",
                            module=_MOD)
    theta_hat = project(theta, proj)
    perturbation = synthesize_unconditioned(basis, theta_hat)
    return ScalarField(basis.grid, kriged.values + perturbation.values)
