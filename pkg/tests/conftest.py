from pathlib import Path

import pytest

from wingfea.geometry import BoxModel, build_wing, naca4_profile
import numpy as np

from wingfea.geometry import Region
from wingfea.mesher import Mesh, build_node_sets, generate_mesh, structured_box

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(__file__).resolve().parent / "data"
SPECS = ROOT / "specs"


@pytest.fixture(scope="session")
def listing_text():
    return (DATA / "planning_listing.jsonc").read_text()


@pytest.fixture(scope="session")
def wing():
    return build_wing(naca4_profile("4412", 0.2), 0.2, 1e-3, (2, 1e-3), (2, 1e-3))


@pytest.fixture(scope="session")
def wing_coarse_mesh(wing):
    return generate_mesh(wing, level="coarse")


def box_mesh(size, divisions):
    nodes, elements = structured_box(size, divisions)
    mesh = Mesh(nodes, elements, np.full(len(elements), int(Region.SHELL), dtype=np.int8))
    mesh.node_sets = build_node_sets(BoxModel(tuple(size)), nodes)
    return mesh


@pytest.fixture(scope="session")
def cube_mesh():
    """Unit cube (1 m) with 4 cells per side."""
    return box_mesh((1.0, 1.0, 1.0), (4, 4, 4))


def box_spec_doc(size_mm=(100, 10, 10), force=100.0, density="coarse"):
    """Cantilever box spec: fixed on the x=0 face, load on the x=max face."""
    return {
        "material": {"name": "Al 7075-T6"},
        "loads": [{"type": "force", "magnitude": force, "direction": "-Z", "location": "right edge"}],
        "boundary_conditions": [{"type": "fixed", "location": "left edge", "constraints": ["X", "Y", "Z"]}],
        "mesh": {"density": density},
        "geometry": {"kind": "box", "size": [f"{s}mm" for s in size_mm]},
        "data_analysis": {"objectives": ["minimize weight", "minimize stress"], "optimization": "pareto"},
    }


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d} {status}: {title} ({detail})")
