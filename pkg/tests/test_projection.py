import numpy as np

from conftest import axis_camera
from models.gaussian_field import GaussianField
from rendering.projection import RasterSettings, project_field, project_gaussian


def single(position, scale=0.1, opacity=0.5):
    return GaussianField.from_activated(
        positions=[position], scales=[[scale] * 3], rotations=[[1, 0, 0, 0]],
        opacities=[opacity], colors=[[0.5, 0.5, 0.5]],
    )


def test_center_projects_to_principal_point():
    g = project_gaussian(single((0.0, 0.0, 0.0)), 0, axis_camera(32, 4.0))
    assert np.allclose(g.mean2d, [16.0, 16.0])
    assert g.depth == 4.0
    assert g.source_index == 0


def test_isotropic_cov2d_closed_form():
    sigma, f, z = 0.2, 32.0, 4.0
    g = project_gaussian(single((0.0, 0.0, 0.0), scale=sigma), 0, axis_camera(32, z))
    expected = ((f * sigma / z) ** 2 + 0.3) * np.eye(2)
    assert np.allclose(g.cov2d, expected, atol=1e-12)


def test_behind_camera_is_culled():
    assert project_gaussian(single((0.0, 0.0, -5.0)), 0, axis_camera(32, 4.0)) is None


def test_far_outside_image_is_culled():
    assert project_gaussian(single((50.0, 0.0, 0.0)), 0, axis_camera(32, 4.0)) is None


def test_depth_order_is_stable_by_index():
    field = GaussianField.from_activated(
        positions=[[0, 0, 0.5], [0, 0, 0.0], [0.1, 0, 0.0], [0, 0, -0.5]],
        scales=np.full((4, 3), 0.1), rotations=np.tile([1, 0, 0, 0], (4, 1)),
        opacities=[0.5] * 4, colors=np.full((4, 3), 0.5),
    )
    projection = project_field(field, axis_camera(32, 4.0))
    assert list(projection.order) == [3, 1, 2, 0]


def test_radius_bounds_footprint():
    field = single((0.0, 0.0, 0.0), opacity=0.9)
    settings = RasterSettings()
    projection = project_field(field, axis_camera(32, 4.0), settings)
    radius = projection.radii[0]
    conic = projection.conics[0]
    # en el borde del radio α' no supera alpha_min en ninguna dirección
    for angle in np.linspace(0, 2 * np.pi, 16, endpoint=False):
        d = radius * np.array([np.cos(angle), np.sin(angle)])
        power = -0.5 * (conic[0] * d[0] ** 2 + 2 * conic[1] * d[0] * d[1] + conic[2] * d[1] ** 2)
        assert 0.9 * np.exp(power) <= settings.alpha_min * (1 + 1e-9)
    assert np.isinf(project_field(field, axis_camera(32, 4.0), RasterSettings.exact()).radii[0])
