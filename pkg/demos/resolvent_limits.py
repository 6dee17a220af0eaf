"""``lam R(lam)`` tends to the identity at rate ``1 / lam``.

For ``a = -1`` the error is exactly ``1 / (lam + 1)``. For a generic Metzler
generator the rate shows once ``lam`` is well beyond ``||A||``.
"""

import numpy as np

from semiperturb.semigroups import check_resolvent_convergence, matrix_semigroup
from semiperturb.spaces import Element, GridSpace


def main():
    sp = GridSpace([1.0])
    one = Element(sp, [1.0])
    lams = [2.0, 4.0, 8.0, 16.0]
    res = check_resolvent_convergence(matrix_semigroup([[-1.0]], sp), one, one, lams)
    for lam, err in zip(lams, res.errors):
        print(f"lam = {lam:>4}  error {err:.15f}  1/(lam+1) {1 / (lam + 1):.15f}")

    rng = np.random.default_rng(0)
    A = rng.uniform(0.0, 1.0, (4, 4))
    np.fill_diagonal(A, rng.uniform(-2.0, 0.0, 4))
    sp4 = GridSpace(np.ones(4))
    S = matrix_semigroup(A, sp4)
    y, e = Element(sp4, rng.uniform(0, 1, 4)), Element(sp4, rng.uniform(0, 1, 4))
    lams = [max(S.omega, 0.0) + 2.0**k for k in range(1, 12)]
    errs = check_resolvent_convergence(S, y, e, lams).errors
    slope = np.polyfit(np.log(lams[4:]), np.log(errs[4:]), 1)[0]
    for lam, err in zip(lams, errs):
        print(f"lam = {lam:>9.2f}  error {err:.3e}")
    print(f"log-log slope over the last seven points: {slope:.3f}")


if __name__ == "__main__":
    main()
