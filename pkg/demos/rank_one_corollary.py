"""Constant tracking for rank-one perturbations on a weighted L-infinity scale.

``B u = <u, 1> 1`` maps ``L^1`` into ``L^inf``. The generator constant ``C3`` is
the least one making the generator inequality hold on the samples; the time
and resolvent forms are then checked with ``C1 = M C3`` and ``C2 = C1``.
"""

from semiperturb.scenarios import random_positive_pair, scenario_rank_one_Linfty
from semiperturb.verifier import (
    check_corollary,
    check_extra_assumption,
    default_st_grid,
    smallest_C3,
)

T_GRID = (0.1, 0.5, 1.0, 2.0)


def main(count=8):
    print(f"{'seed':>4} {'C3':>7} {'extra':>9} {'a':>10} {'b':>10} {'c':>10}")
    for seed in range(count):
        w, A_S, A_T = random_positive_pair(4, seed)
        scn = scenario_rank_one_Linfty(w, A_S, A_T)
        M, omega = 1.0, scn.omega
        extra = check_extra_assumption(scn, M, omega, default_st_grid(T_GRID))
        C3 = smallest_C3(scn)
        a, b, c = check_corollary(scn, M, omega, M * C3, M * C3, C3, T_GRID,
                                  scn.lambda_grid(), extra=extra)
        print(f"{seed:>4} {C3:>7.3f} {extra.min_slack:>9.2e} {a.min_slack:>10.3e} "
              f"{b.min_slack:>10.3e} {c.min_slack:>10.3e}")


if __name__ == "__main__":
    main()
