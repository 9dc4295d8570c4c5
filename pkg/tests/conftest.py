import time

import pytest

from reference_runs import reference_run

REFERENCE_ALPHAS = (0.85, 0.9, 0.95)


@pytest.fixture(scope="session")
def reference_runs():
    """The three reference trajectories, computed once per session."""
    t0 = time.monotonic()
    runs = {alpha: reference_run(alpha) for alpha in REFERENCE_ALPHAS}
    return {"runs": runs, "build_seconds": time.monotonic() - t0}
