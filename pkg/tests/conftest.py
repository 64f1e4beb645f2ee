import numpy as np
import pytest

from hardcore_sir import ScenarioParams

# the low-activity, large-threshold operating point used throughout
LOW_XI = ScenarioParams(lam=0.025, c=16.0, eta=3.0, xi=0.01, q=0.02)
HALF_XI = ScenarioParams(lam=0.025, c=16.0, eta=3.0, xi=0.5, q=0.02)


def random_scenarios(n, seed, xi_range=(0.01, 1.0), eta_range=(2.5, 4.5)):
    """Seeded grid of plausible motorway scenarios (lambda c in [0.05, 0.6])."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        lam = rng.uniform(0.005, 0.05)
        lc = rng.uniform(0.05, 0.6)
        out.append(
            ScenarioParams(
                lam=lam,
                c=lc / lam,
                eta=rng.uniform(*eta_range),
                xi=rng.uniform(*xi_range),
                q=0.02,
            )
        )
    return out
