"""Heat semigroup on a lattice against an upwind drift perturbation.

``S`` is convolution with the Gauss-Weierstrass kernel on ``[-4, 4]``; ``T`` is
generated by the lattice Laplacian minus an upwind drift. The kernel reproduces
``(4 pi t)^{-1/2}`` on its diagonal and has unit mass away from the boundary.
The three forms all report a failure here: the lattice Laplacian is not the
generator of the discrete kernel, and the upwind drift puts ``b / h`` on the
subdiagonal of ``A_T`` that ``B`` does not cover.
"""

import numpy as np

from semiperturb.scenarios import scenario_heat_drift
from semiperturb.semigroups import gauss_weierstrass_matrix, interior_mask, lattice_space
from semiperturb.verifier import check_equivalence


def kernel_checks():
    lat = lattice_space(1, 8.0, 321)
    for t in (0.001, 0.01, 0.1):
        K = gauss_weierstrass_matrix(t, lat, 8.0)
        peak = K[160, 160] / lat.weights[160]
        inner = interior_mask(lat, 8.0, 8.0 * np.sqrt(t))
        mass = np.abs(K[inner].sum(axis=1) - 1.0).max()
        print(f"t = {t:<6} peak / (4 pi t)^-1/2 = {peak * np.sqrt(4 * np.pi * t):.15f}"
              f"   interior mass error {mass:.1e}")


def drift_sweep():
    for b in (0.0, 0.25, 1.0):
        scn = scenario_heat_drift(b=b)
        eq = check_equivalence(scn, (0.05, 0.1, 0.2), scn.lambda_grid())
        mins = ", ".join(f"{k} {r.min_slack:+.3e}" for k, r in eq.reports.items())
        print(f"b = {b:<5} {mins}   verdicts {eq.verdicts}")


if __name__ == "__main__":
    kernel_checks()
    drift_sweep()
