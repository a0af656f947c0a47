"""Discrete Karhunen-Loeve eigenproblem, energy-based truncation, and
synthesis of unconditioned Gaussian log-permeability fields.

The continuous eigenproblem is discretized by Nystrom collocation with
uniform quadrature weights hx*hy: the symmetric matrix (hx*hy) * R is
eigendecomposed, eigenvalues sorted descending, and eigenvectors scaled
so each eigenfunction has unit quadrature norm

    hx * hy * sum_cells phi_i(x)^2 = 1.

Signs follow a fixed convention (the entry of largest magnitude is made
positive) so repeated runs produce bit-identical bases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalError
from .grid import Grid2D, ScalarField

_MOD = "kle"


@dataclass(frozen=True)
class KLEBasis:
    """Retained eigenpairs of the weighted covariance matrix.

    lambdas : (n,) eigenvalues, descending, all positive
    phi     : (N, n) eigenfunction values at cell centers, columns
              orthonormal under the hx*hy quadrature inner product
    grid    : the grid the eigenfunctions live on
    energy  : fraction of the full spectrum retained by these n modes
    """

    grid: Grid2D
    lambdas: np.ndarray
    phi: np.ndarray
    energy: float

    @property
    def n(self):
        return self.lambdas.size

    @property
    def sqrt_lambdas(self):
        return np.sqrt(self.lambdas)

    def eigenfield(self, i):
        """The i-th eigenfunction as a ScalarField."""
        return ScalarField(self.grid, self.phi[:, i].copy())


def _fix_signs(vecs):
    """Flip column signs so the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def full_spectrum(cov, grid):
    """All N eigenvalues (descending) and quadrature-normalized
    eigenfunctions of the weighted covariance matrix."""
    w = grid.hx * grid.hy
    evals, evecs = np.linalg.eigh(w * cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    # unit l2 eigenvectors -> unit quadrature norm eigenfunctions
    phi = _fix_signs(evecs) / np.sqrt(w)
    return evals, phi


def solve_kle(cov, grid, n):
    """Solve the discrete KL eigenproblem and retain the n leading modes."""
    N = grid.n_cells
    if n < 1 or n > N:
        raise ArgumentError(
            f"mode count n={n} must be in [1, {N}]", module=_MOD
        )
    evals, phi = full_spectrum(cov, grid)
    if evals[n - 1] <= 1e-12 * evals[0]:
        raise NumericalError(
            f"eigenvalue {n} is <= 1e-12 of the leading one; "
            "reduce the number of retained modes",
            module=_MOD,
            code="truncation",
        )
    energy = energy_fraction(evals, n)
    return KLEBasis(grid, evals[:n].copy(), phi[:, :n].copy(), energy)


def modes_for_energy(cov, grid, threshold):
    """Smallest n whose retained energy reaches the threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ArgumentError(
            f"energy threshold must be in (0, 1], got {threshold}", module=_MOD
        )
    evals, _ = full_spectrum(cov, grid)
    frac = np.cumsum(evals) / np.sum(evals)
    return int(np.searchsorted(frac, threshold) + 1)


def energy_fraction(lambdas, n):
    """Fraction of total spectral mass carried by the first n eigenvalues.

    The infinite sum in the continuous definition is taken as the full
    discrete spectrum.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ArgumentError("empty spectrum", module=_MOD)
    if n == 0:
        return 0.0
    return float(np.sum(lambdas[:n]) / np.sum(lambdas))


def synthesize_unconditioned(basis, theta):
    """Zero-mean field sum_i sqrt(lambda_i) theta_i phi_i as a ScalarField."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != basis.n:
        raise ArgumentError(
            f"theta has {theta.size} entries, basis has {basis.n} modes",
            module=_MOD,
        )
    values = basis.phi @ (basis.sqrt_lambdas * theta)
    return ScalarField(basis.grid, values)
