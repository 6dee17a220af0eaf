"""The resolvent slack is the Laplace transform of the Duhamel slack.

For matrix semigroups ``L[S](lam) = R_S(lam)`` and the Duhamel term transforms
to ``R_S B R_T``, so integrating the time-domain slack against ``e^{-lam t}``
must reproduce the resolvent-domain slack.
"""

import numpy as np

from semiperturb.numerics import laplace_quadrature
from semiperturb.scenarios import scenario_matrix
from semiperturb.verifier import check_statement_a, check_statement_b


def main():
    scn = scenario_matrix([[-1.0, 0.3], [0.2, -1.4]], [[-0.8, 0.4], [0.1, -1.2]],
                          [[0.2, 0.1], [0.0, 0.2]])
    bound = max(scn.S.omega, scn.T.omega) + 0.1
    for offset in (1.0, 5.0):
        lam = scn.omega + offset
        direct = check_statement_b(scn, [lam]).slacks[0]
        res = laplace_quadrature(lambda t: check_statement_a(scn, [t]).slacks[0], lam,
                                 M=10.0, omega=bound)
        print(f"lam = {lam:.3f}  max |b - L[a]| = {np.abs(direct - res.value).max():.2e}"
              f"  (quadrature estimate {res.error:.1e})")
        print(np.array2string(direct, precision=6))


if __name__ == "__main__":
    main()
