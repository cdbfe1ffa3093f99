"""Independent reference computations shared by the test modules."""
import numpy as np
from scipy import stats
from scipy.stats import qmc

FAMILIES = ("hermite", "legendre", "legendre")


def smooth3(z):
    """Gaussian z0, uniform z1, z2 on [-1, 1]. Mean is exp(0.08) exactly."""
    z = np.atleast_2d(z)
    x, u, v = z[:, 0], z[:, 1], z[:, 2]
    return np.exp(0.4 * x) + np.sin(1.5 * u) + 0.8 * v**2 * u + 0.3 * x * v


def qmc_inputs(m, seed, d=3):
    """2**m scrambled Sobol points mapped to (N(0,1), U(-1,1), U(-1,1), ...)."""
    p = qmc.Sobol(d, scramble=True, seed=seed).random_base2(m)
    p = np.clip(p, 1e-12, 1 - 1e-12)
    out = 2 * p - 1
    fam = (FAMILIES * 2)[:d]
    for i, f in enumerate(fam):
        if f == "hermite":
            out[:, i] = stats.norm.ppf(p[:, i])
    return out


def qmc_moments(f, m=20, seed=0):
    y = f(qmc_inputs(m, seed))
    return y.mean(), y.std()


def jansen_total(f, m=19, seed=0, d=3):
    """Pick-freeze total indices: E[(f(A) - f(A_B^i))^2] / (2 Var)."""
    AB = qmc_inputs(m, seed, 2 * d)
    A, B = AB[:, :d], AB[:, d:]
    fA, fB = f(A), f(B)
    var = np.var(np.concatenate([fA, fB]))
    out = []
    for i in range(d):
        ABi = A.copy()
        ABi[:, i] = B[:, i]
        out.append(np.mean((fA - f(ABi)) ** 2) / (2 * var))
    return np.array(out)
