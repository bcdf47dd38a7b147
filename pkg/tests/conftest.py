import numpy as np
import pytest

from starsphere import ContourSpec, ContourTerm, GenSphereDist, RadialLaw, finish_contour

R2 = np.sqrt(2) / 2


def circle_spec(d=2, a=1.0):
    return ContourSpec(d, (ContourTerm("constant", coef=a),))


def l1_spec(d=2):
    return ContourSpec(d, (), (ContourTerm("lp_norm", p=1),))


def figure1_spec():
    return ContourSpec(
        2,
        (
            ContourTerm("constant", coef=1),
            ContourTerm("gaussian_bump", coef=1, mu=[R2, R2], sigma=0.1),
            ContourTerm("gaussian_bump", coef=1, mu=[-1, 0], sigma=0.1),
        ),
    )


def figure1_angular(theta):
    """Two-bump contour as a function of polar angle, written independently:
    gnomonic distance from mu is tan(angle between s and mu)."""
    theta = np.asarray(theta, dtype=float)
    out = np.ones_like(theta)
    for centre in (np.pi / 4, np.pi):
        psi = np.angle(np.exp(1j * (theta - centre)))
        front = np.abs(psi) < np.pi / 2
        out = out + np.where(front, np.exp(-np.tan(np.where(front, psi, 0.0)) ** 2 / (2 * 0.01)), 0.0)
    return out


@pytest.fixture(scope="session")
def circle_fc():
    return finish_contour(circle_spec(), k=4)


@pytest.fixture(scope="session")
def l1_fc():
    return finish_contour(l1_spec(), k=4)


@pytest.fixture(scope="session")
def fig1_fc():
    return finish_contour(figure1_spec(), k=4)


@pytest.fixture(scope="session")
def circle_dist(circle_fc):
    return GenSphereDist(circle_fc, RadialLaw.gamma(2, 1))


@pytest.fixture(scope="session")
def fig1_dist(fig1_fc):
    return GenSphereDist(fig1_fc, RadialLaw.gamma(2, 1))


@pytest.fixture(scope="session")
def l1_dist(l1_fc):
    return GenSphereDist(l1_fc, RadialLaw.gamma(2, 1))


# one line per acceptance criterion, filled in by test_acceptance and echoed in the summary
ACCEPTANCE = []


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} [{criterion}] {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
