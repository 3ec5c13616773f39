import numpy as np
import pytest

from shus.model import TargetModel, reference_weights

# ln theta* of the left half of the strata, from an independent Gauss-Legendre
# quadrature (60 nodes per stratum in x1, 90 panels of 20 nodes on
# x2 in [-3, 4.5]); the right half follows by mirror symmetry.
GL_LOG_THETA_STAR = {
    (1.0, 4): [-1.00701432881, -2.00476490536],
    (1.0, 12): [
        -1.96497501893, -2.01391955085, -2.3894060048, -2.86000246393, -3.18855487697, -3.31891922919,
    ],
    (10.0, 48): [
        -3.21666172766, -2.54309445338, -2.19993719008, -2.18146250133, -2.47762300809, -3.07384802786,
        -3.95090891959, -5.08487965236, -6.44722121932, -8.00501503512, -9.72136390802, -11.55597196,
        -13.465903112, -15.4064397871, -17.3311251887, -19.1815017312, -20.7943330696, -21.6445608491,
        -21.5846494287, -21.252579355, -20.9302039644, -20.6742584763, -20.4990347812, -20.4102251561,
    ],
}


def gl_log_theta_star(beta, d):
    half = GL_LOG_THETA_STAR[(beta, d)]
    return np.array(half + half[::-1])


@pytest.fixture(scope="session")
def theta_star_b1_d4():
    return reference_weights(TargetModel(1.0, 4)).theta_star


@pytest.fixture(scope="session")
def theta_star_b1_d12():
    return reference_weights(TargetModel(1.0, 12)).theta_star


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
