import pytest

from sonomat.materials import default_table
from sonomat.plate import PlateGeometry, build_modal_model

# Table 1 reference values (density kg/m3, E N/m2, nu), frozen here so the
# tests do not trust the shipped TOML file for them.
REFERENCE_MATERIALS = {
    "Cardboard": (689.0, 5.0e8, 0.33),
    "Ceramic": (2600.0, 2.0e11, 0.25),
    "Cork": (240.0, 1.0e8, 0.30),
    "Fabric": (1500.0, 1.0e6, 0.30),
    "Glass": (2500.0, 7.2e10, 0.20),
    "Leather": (860.0, 1.0e8, 0.40),
    "Metal": (7800.0, 2.0e11, 0.30),
    "Paper": (800.0, 5.0e8, 0.33),
    "Plastic": (1100.0, 2.5e9, 0.35),
    "Rubber": (1100.0, 1.0e7, 0.50),
    "Stone": (2700.0, 5.0e10, 0.25),
    "Wood": (700.0, 1.0e10, 0.30),
}

SOFT_MATERIALS = {"Fabric", "Cork", "Leather", "Cardboard", "Rubber", "Paper"}
HARD_MATERIALS = {"Glass", "Metal", "Ceramic", "Stone", "Wood", "Plastic"}


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def square_plate():
    return PlateGeometry(0.22, 0.22, 0.005)


@pytest.fixture(scope="session")
def glass_model(table, square_plate):
    return build_modal_model(square_plate, table.lookup_by_name("glass"))


@pytest.fixture(scope="session")
def small_scene_dir(tmp_path_factory, table):
    """A low-resolution synthetic scene shared by resolver/CLI/server tests."""
    from sonomat.fixtures import generate_scene

    out = tmp_path_factory.mktemp("scene")
    return generate_scene(out, table, n_masks=5, width=320, height=180)
