"""Independent finite-difference oracle for plate mode frequencies.

Discretizes the biharmonic operator on the interior grid of a rectangular
plate with simply supported edges (w = 0, zero second normal derivative on
the boundary; ghost points reflect with a sign flip, which is exactly the
square of the five-point Dirichlet Laplacian). Frequencies follow from
rho h w_tt + D biharmonic(w) = 0, so f = sqrt(D lambda / (rho h)) / (2 pi)
for each discrete eigenvalue lambda.

Deliberately shares no code with sonomat.plate.
"""

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def biharmonic_eigenvalues(length_x: float, length_y: float, grid: int = 64,
                           count: int = 8) -> np.ndarray:
    """Smallest eigenvalues of the simply supported biharmonic plate operator."""
    hx = length_x / (grid + 1)
    hy = length_y / (grid + 1)
    second_x = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(grid, grid)) / hx**2
    second_y = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(grid, grid)) / hy**2
    laplacian = sp.kron(sp.identity(grid), second_x) + sp.kron(second_y, sp.identity(grid))
    biharmonic = (laplacian @ laplacian).tocsc()
    values = spla.eigsh(biharmonic, k=count, sigma=0.0, which="LM",
                        return_eigenvectors=False)
    return np.sort(values)


def plate_frequencies_fd(length_x, length_y, thickness, density, young_modulus,
                         poisson_ratio, grid: int = 64, count: int = 8) -> np.ndarray:
    """First ``count`` plate frequencies (Hz) from the FD eigensolver."""
    rigidity = young_modulus * thickness**3 / (12.0 * (1.0 - poisson_ratio**2))
    lam = biharmonic_eigenvalues(length_x, length_y, grid=grid, count=count)
    return np.sqrt(rigidity * lam / (density * thickness)) / (2.0 * math.pi)
