import pytest

import pharmonic as ph


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed criteria measure math, not JIT."""
    g = ph.build_graph([(0, 1, 1.0), (1, 2, 1.0)], 3)
    om = ph.VertexSet([1], 3)
    for method in ("illinois", "bisection"):
        ph.solve_dirichlet(g, om, {0: 0.0, 2: 1.0}, 1.5, tol=1e-10,
                           scalar_method=method)
    ph.solve_dirichlet(g, om, {0: 0.0, 2: 1.0}, 2.0, tol=1e-10, mode="redblack")
    yield
