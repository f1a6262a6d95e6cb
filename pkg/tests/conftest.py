import numpy as np
import pytest

from gradparab.instances import (
    Mesh1D,
    TriMesh2D,
    build_mass_lumped_p1_1d,
    build_mass_lumped_p1_2d,
)


@pytest.fixture(scope="session")
def hand_gd():
    """Two uniform elements on (0, 1): one dof with dual cell (0.25, 0.75)."""
    return build_mass_lumped_p1_1d(Mesh1D.uniform(2))


@pytest.fixture(scope="session")
def gd_1d():
    return build_mass_lumped_p1_1d(Mesh1D.uniform(8))


@pytest.fixture(scope="session")
def gd_2d():
    return build_mass_lumped_p1_2d(TriMesh2D.structured_square(4))


@pytest.fixture(scope="session")
def both_instances(gd_1d, gd_2d):
    return [gd_1d, gd_2d]
