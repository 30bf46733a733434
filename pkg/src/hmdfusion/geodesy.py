"""WGS84 geodetic ↔ local east-north conversions.

Surface points (zero ellipsoidal height) are mapped to the tangent plane of an
origin; the up component is dropped. The inverse recovers the surface point
whose east/north coordinates match.
"""

from __future__ import annotations

import numpy as np

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_B = WGS84_A * (1.0 - WGS84_F)
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)
_POLE_LIMIT_DEG = 89.9


class PoleProximityError(ValueError):
    pass


def _check_lat(lat_deg) -> None:
    if np.any(np.abs(np.asarray(lat_deg)) >= _POLE_LIMIT_DEG):
        raise PoleProximityError("latitude too close to a pole for the local tangent plane")


def geodetic_to_ecef(lat_deg, lon_deg, h=0.0) -> np.ndarray:
    lat, lon = np.radians(lat_deg), np.radians(lon_deg)
    sl, cl = np.sin(lat), np.cos(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl * sl)
    return np.stack(
        [(n + h) * cl * np.cos(lon), (n + h) * cl * np.sin(lon), (n * (1.0 - WGS84_E2) + h) * sl], axis=-1
    )


def ecef_to_geodetic(xyz) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Latitude/longitude in degrees and height in meters (fixed-point on latitude)."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    p = np.hypot(x, y)
    lon = np.arctan2(y, x)
    lat = np.arctan2(z, p * (1.0 - WGS84_E2))
    for _ in range(10):
        sl = np.sin(lat)
        n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl * sl)
        h = p / np.cos(lat) - n
        lat = np.arctan2(z, p * (1.0 - WGS84_E2 * n / (n + h)))
    sl = np.sin(lat)
    n = WGS84_A / np.sqrt(1.0 - WGS84_E2 * sl * sl)
    h = p / np.cos(lat) - n
    return np.degrees(lat), np.degrees(lon), h


def _enu_basis(lat0_deg: float, lon0_deg: float) -> np.ndarray:
    lat, lon = np.radians(lat0_deg), np.radians(lon0_deg)
    sl, cl, so, co = np.sin(lat), np.cos(lat), np.sin(lon), np.cos(lon)
    return np.array([[-so, co, 0.0], [-sl * co, -sl * so, cl], [cl * co, cl * so, sl]])


def geodetic_to_enu(lat_deg, lon_deg, origin: tuple[float, float]) -> np.ndarray:
    """East/north offsets (m) of surface points from ``origin = (lat, lon)`` in degrees.

    Returns an array of shape ``(..., 2)``.
    """
    _check_lat(lat_deg)
    _check_lat(origin[0])
    d = geodetic_to_ecef(lat_deg, lon_deg) - geodetic_to_ecef(*origin)
    return (d @ _enu_basis(*origin).T)[..., :2]


def enu_to_geodetic(en, origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Surface point (lat, lon in degrees) whose tangent-plane offset is ``en``.

    The dropped up component is found by fixed-point iteration on zero
    height; the height changes almost one-for-one with ``u`` so a handful of
    steps reach sub-micrometer accuracy within a few hundred kilometers.
    """
    _check_lat(origin[0])
    en = np.asarray(en, dtype=float)
    basis = _enu_basis(*origin)
    o = geodetic_to_ecef(*origin)
    e, n = en[..., 0], en[..., 1]
    rho2 = e * e + n * n
    u = -rho2 / (2.0 * WGS84_A)
    for _ in range(8):
        xyz = o + np.stack([e, n, u], axis=-1) @ basis
        u = u - ecef_to_geodetic(xyz)[2]
    xyz = o + np.stack([e, n, u], axis=-1) @ basis
    lat, lon, _ = ecef_to_geodetic(xyz)
    return lat, lon


def surface_interpolate(start: tuple[float, float], end: tuple[float, float], frac) -> tuple[np.ndarray, np.ndarray]:
    """Points along the great ellipse between two surface points.

    The chord is interpolated linearly in ECEF and each point is projected
    back to the surface along its ellipsoid normal.
    """
    frac = np.asarray(frac, dtype=float)
    a = geodetic_to_ecef(*start)
    b = geodetic_to_ecef(*end)
    chord = a + frac[..., None] * (b - a)
    lat, lon, _ = ecef_to_geodetic(chord)
    return lat, lon
