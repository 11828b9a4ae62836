"""UPA steering vectors and Saleh-Valenzuela channel synthesis.

The BS-RIS channel ``h_br`` (N x M) and the user-RIS channel ``h_ru`` (M x Q)
are sums of rank-one path contributions between uniform planar arrays.  The
estimation target is the cascaded channel ``g = h_ru^T <> h_br`` where ``<>``
is the column-wise Khatri-Rao product.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class UpaGeometry:
    k1: int
    k2: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError(f"UPA dims must be >= 1, got ({self.k1}, {self.k2})")
        if not self.spacing_over_wavelength > 0:
            raise ValueError("spacing_over_wavelength must be positive")

    @property
    def size(self) -> int:
        return self.k1 * self.k2


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain plus arrival and departure angles (radians)."""

    gain: complex
    zenith: float
    azimuth: float
    dep_zenith: float
    dep_azimuth: float


@dataclass
class ChannelPair:
    h_br: np.ndarray
    h_ru: np.ndarray
    paths_br: list[PathParams] = field(default_factory=list)
    paths_ru: list[PathParams] = field(default_factory=list)


@dataclass
class CascadedChannel:
    g: np.ndarray


def ula_response(k: int, u: float) -> np.ndarray:
    return np.exp(-2j * np.pi * u * np.arange(k))


def steering_vector(geom: UpaGeometry, z: float, x: float) -> np.ndarray:
    """Array response ``a_k1(z) kron a_k2(x)`` of a ``k1 x k2`` UPA."""
    return np.kron(ula_response(geom.k1, z), ula_response(geom.k2, x))


def spatial_frequencies(zenith: float, azimuth: float,
                        spacing_over_wavelength: float = 0.5) -> tuple[float, float]:
    z = spacing_over_wavelength * np.cos(zenith)
    x = spacing_over_wavelength * np.sin(zenith) * np.cos(azimuth)
    return float(z), float(x)


def _response(geom: UpaGeometry, zenith: float, azimuth: float) -> np.ndarray:
    return steering_vector(geom, *spatial_frequencies(zenith, azimuth, geom.spacing_over_wavelength))


def channel_from_paths(rx: UpaGeometry, tx: UpaGeometry, paths: list[PathParams],
                       scale: float = 1.0) -> np.ndarray:
    """Sum of ``gain * a_rx(arrival) a_tx(departure)^H`` over paths."""
    a_rx = np.stack([_response(rx, p.zenith, p.azimuth) for p in paths], axis=1)
    a_tx = np.stack([_response(tx, p.dep_zenith, p.dep_azimuth) for p in paths], axis=1)
    gains = np.array([p.gain for p in paths], dtype=complex)
    return scale * (a_rx * gains) @ a_tx.conj().T


def _random_paths(count: int, rng: np.random.Generator) -> list[PathParams]:
    gains = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / np.sqrt(2)
    zen = rng.uniform(-np.pi / 2, np.pi / 2, size=(count, 2))
    azi = rng.uniform(-np.pi, np.pi, size=(count, 2))
    return [PathParams(complex(gains[i]), float(zen[i, 0]), float(azi[i, 0]),
                       float(zen[i, 1]), float(azi[i, 1])) for i in range(count)]


def _grid_angles(geom: UpaGeometry, rng: np.random.Generator) -> tuple[float, float]:
    # Pick a (z, x) pair on the DFT grid that a physical (zenith, azimuth) can produce:
    # z = d cos(zen) >= 0 and z^2 + x^2 <= d^2.
    d = geom.spacing_over_wavelength
    while True:
        z = rng.integers(0, geom.k1) / geom.k1
        x = rng.integers(0, geom.k2) / geom.k2
        z = z - 1.0 if z > d else z
        x = x - 1.0 if x > d else x
        if 0 <= z <= d and z * z + x * x <= d * d + 1e-15:
            break
    zen = float(np.arccos(np.clip(z / d, -1.0, 1.0)))
    s = np.sin(zen)
    azi = float(np.arccos(np.clip(x / (d * s), -1.0, 1.0))) if s > 1e-12 else 0.0
    return zen, azi


def _grid_paths(count: int, rx: UpaGeometry, tx: UpaGeometry,
                rng: np.random.Generator) -> list[PathParams]:
    paths = []
    for _ in range(count):
        g = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
        zr, ar = _grid_angles(rx, rng)
        zt, at = _grid_angles(tx, rng)
        paths.append(PathParams(complex(g), zr, ar, zt, at))
    return paths


def synthesize_channels(cfg, rng: np.random.Generator, on_grid: bool = False) -> ChannelPair:
    """Draw ``h_br`` (L paths) and ``h_ru`` (J paths) for the UPAs described by ``cfg``.

    Gains are i.i.d. CN(0, 1); angles are uniform over zenith [-pi/2, pi/2) and
    azimuth [-pi, pi).  With ``on_grid`` the angles are snapped so that every
    spatial frequency lands on a DFT bin of the corresponding array.
    """
    if cfg.l < 1 or cfg.j < 1:
        raise ValueError("path counts l and j must be >= 1")
    d = cfg.spacing_over_wavelength
    bs = UpaGeometry(cfg.n1, cfg.n2, d)
    ris = UpaGeometry(cfg.m1, cfg.m2, d)
    ue = UpaGeometry(cfg.q1, cfg.q2, d)
    if on_grid:
        paths_br = _grid_paths(cfg.l, bs, ris, rng)
        paths_ru = _grid_paths(cfg.j, ris, ue, rng)
    else:
        paths_br = _random_paths(cfg.l, rng)
        paths_ru = _random_paths(cfg.j, rng)
    sbr = 1 / np.sqrt(cfg.l) if cfg.normalize_paths else 1.0
    sru = 1 / np.sqrt(cfg.j) if cfg.normalize_paths else 1.0
    h_br = channel_from_paths(bs, ris, paths_br, sbr)
    h_ru = channel_from_paths(ris, ue, paths_ru, sru)
    return ChannelPair(h_br, h_ru, paths_br, paths_ru)


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of ``a`` (I x K) and ``b`` (J x K)."""
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"column counts differ: {a.shape[1]} vs {b.shape[1]}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def cascade(pair: ChannelPair) -> CascadedChannel:
    return CascadedChannel(khatri_rao(pair.h_ru.T, pair.h_br))
