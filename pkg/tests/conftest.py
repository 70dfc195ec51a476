import numpy as np
import pytest

from holoflow import wedge as W
from holoflow.holonomy import span

J4 = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)


def u2():
    """u(2) in so(4): antisymmetric matrices commuting with the standard J (dim 4)."""
    phi = W.basis(4)
    comm = np.einsum("Aij,jk->Aik", phi, J4) - np.einsum("ij,Ajk->Aik", J4, phi)
    M = comm.reshape(len(phi), -1).T
    _, s, vt = np.linalg.svd(M)
    null = vt[len(s[s > 1e-10]):]
    return span(np.einsum("kA,Aij->kij", null, phi), 4)


def so2_so2():
    return span(np.array([W.e_wedge(0, 1, 4), W.e_wedge(2, 3, 4)]), 4)


def conjugate(H, O):
    """``O H O^T`` for an orthogonal ``O``."""
    return span(np.einsum("ia,kab,jb->kij", O, H.basis, O), H.n)


def random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_two_form(n, rng):
    a = rng.standard_normal((n, n))
    return a - a.T


def random_endo(n, rng):
    return W.from_matrix(rng.standard_normal((W.dim_wedge2(n),) * 2))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
