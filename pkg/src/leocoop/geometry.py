"""Random satellite/UT drops on spherical caps and per-link geometry."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import EARTH_RADIUS, SPEED_OF_LIGHT, ScenarioConfig, max_central_angle

# Shared cap center: (lat 0, lon 0). Keeps every east vector well defined.
CAP_CENTER = np.array([1.0, 0.0, 0.0])
_CAP_EAST = np.array([0.0, 1.0, 0.0])
_CAP_NORTH = np.array([0.0, 0.0, 1.0])
_Z_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class GeometrySample:
    """One drop. Per-link arrays are indexed ``[m, k]`` (satellite, UT)."""

    sat_positions: np.ndarray
    ut_positions: np.ndarray
    slant_range: np.ndarray
    delay: np.ndarray
    elevation: np.ndarray
    sat_theta: np.ndarray
    sat_phi: np.ndarray
    ut_theta: np.ndarray
    ut_phi: np.ndarray
    visible: np.ndarray

    @property
    def n_sats(self) -> int:
        return self.sat_positions.shape[0]

    @property
    def n_uts(self) -> int:
        return self.ut_positions.shape[0]


def sample_cap(rng: np.random.Generator, count: int, half_angle: float, radius: float,
               center: np.ndarray = CAP_CENTER) -> np.ndarray:
    """Area-uniform points on a spherical cap of Earth-central ``half_angle`` (rad).

    Uniform azimuth and uniform cosine of the polar angle give a uniform
    density per unit area.
    """
    u = rng.random(count)
    v = rng.random(count)
    cos_g = 1.0 - u * (1.0 - np.cos(half_angle))
    sin_g = np.sqrt(np.clip(1.0 - cos_g**2, 0.0, None))
    psi = 2.0 * np.pi * v
    if np.allclose(center, CAP_CENTER):
        east, north = _CAP_EAST, _CAP_NORTH
    else:
        east, north = _tangent_basis(center[None, :])
        east, north = east[0], north[0]
    dirs = (cos_g[:, None] * center
            + sin_g[:, None] * (np.cos(psi)[:, None] * east + np.sin(psi)[:, None] * north))
    return radius * dirs


def _tangent_basis(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """East and north unit vectors at each point (rows of ``points``)."""
    up = points / np.linalg.norm(points, axis=-1, keepdims=True)
    east = np.cross(_Z_AXIS, up)
    norm = np.linalg.norm(east, axis=-1, keepdims=True)
    # at the poles east is undefined; fall back to the ECEF y-axis direction
    polar = norm[..., 0] < 1e-12
    if np.any(polar):
        east[polar] = np.cross(up[polar], np.array([1.0, 0.0, 0.0]))
        norm[polar] = np.linalg.norm(east[polar], axis=-1, keepdims=True)
    east = east / norm
    north = np.cross(up, east)
    return east, north


def local_angles(sat_pos: np.ndarray, ut_pos: np.ndarray):
    """Zenith/azimuth of each link in the satellite and UT array frames.

    Satellite frame: z toward the Earth's center, x along local east of the
    sub-satellite point, y = z × x. UT frame: z outward (local up), x east,
    y north. Azimuth is measured from x toward y. When the line of sight is
    along the array normal the azimuth is undefined and returned as 0.

    Parameters
    ----------
    sat_pos : (M, 3) or (3,) array
    ut_pos : (K, 3) or (3,) array

    Returns
    -------
    sat_theta, sat_phi, ut_theta, ut_phi : (M, K) arrays in radians
    """
    sat_pos = np.atleast_2d(np.asarray(sat_pos, dtype=float))
    ut_pos = np.atleast_2d(np.asarray(ut_pos, dtype=float))

    los = sat_pos[:, None, :] - ut_pos[None, :, :]
    dist = np.linalg.norm(los, axis=-1, keepdims=True)
    if np.any(dist == 0):
        raise ValueError("satellite and UT positions must be distinct")
    los = los / dist

    ut_east, ut_north = _tangent_basis(ut_pos)
    ut_up = ut_pos / np.linalg.norm(ut_pos, axis=-1, keepdims=True)
    ut_theta, ut_phi = _angles_in_frame(los, ut_east[None], ut_north[None], ut_up[None])

    sat_east, sat_north = _tangent_basis(sat_pos)
    sat_z = -sat_pos / np.linalg.norm(sat_pos, axis=-1, keepdims=True)
    sat_y = np.cross(sat_z, sat_east)
    sat_theta, sat_phi = _angles_in_frame(-los, sat_east[:, None], sat_y[:, None], sat_z[:, None])
    return sat_theta, sat_phi, ut_theta, ut_phi


def _angles_in_frame(direction, x_axis, y_axis, z_axis):
    cz = np.clip(np.sum(direction * z_axis, axis=-1), -1.0, 1.0)
    cx = np.sum(direction * x_axis, axis=-1)
    cy = np.sum(direction * y_axis, axis=-1)
    theta = np.arccos(cz)
    phi = np.arctan2(cy, cx)
    phi = np.where(np.hypot(cx, cy) < 1e-12, 0.0, phi)
    return theta, phi


def link_geometry(sat_pos: np.ndarray, ut_pos: np.ndarray, min_elevation: float) -> GeometrySample:
    """Fill every per-link field for fixed positions."""
    sat_pos = np.atleast_2d(np.asarray(sat_pos, dtype=float))
    ut_pos = np.atleast_2d(np.asarray(ut_pos, dtype=float))
    diff = sat_pos[:, None, :] - ut_pos[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    up = ut_pos / np.linalg.norm(ut_pos, axis=-1, keepdims=True)
    sin_el = np.sum(diff * up[None], axis=-1) / r
    elevation = np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))
    sat_theta, sat_phi, ut_theta, ut_phi = local_angles(sat_pos, ut_pos)
    return GeometrySample(
        sat_positions=sat_pos,
        ut_positions=ut_pos,
        slant_range=r,
        delay=r / SPEED_OF_LIGHT,
        elevation=elevation,
        sat_theta=sat_theta,
        sat_phi=sat_phi,
        ut_theta=ut_theta,
        ut_phi=ut_phi,
        visible=elevation >= min_elevation,
    )


def sample_geometry(config: ScenarioConfig, rng: np.random.Generator) -> GeometrySample:
    """Drop ``n_sats`` satellites and ``n_uts`` UTs on caps sharing one center.

    Satellites are drawn first, then UTs, so changing ``n_uts`` never moves
    the satellites of a given seed.
    """
    sats = sample_cap(rng, config.n_sats, np.radians(config.sat_cap_angle),
                      EARTH_RADIUS + config.altitude)
    uts = sample_cap(rng, config.n_uts, np.radians(config.ut_cap_angle), EARTH_RADIUS)
    return link_geometry(sats, uts, config.min_elevation)


def sample_ut_centered(config: ScenarioConfig, rng: np.random.Generator) -> GeometrySample:
    """One UT at the cap center with ``n_sats`` satellites uniform over its coverage cap.

    The coverage cap is the set of shell points seen above ``min_elevation``,
    so every link is visible.
    """
    half_angle = max_central_angle(config.altitude, config.min_elevation)
    sats = sample_cap(rng, config.n_sats, half_angle, EARTH_RADIUS + config.altitude)
    ut = EARTH_RADIUS * CAP_CENTER[None, :]
    geom = link_geometry(sats, ut, config.min_elevation)
    # rounding at the cap rim can put a link a hair under the mask
    return replace(geom, visible=np.ones_like(geom.visible))
