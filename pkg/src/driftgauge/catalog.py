"""Sensor noise catalog.

The catalog is a plain text file, one sensor per line.  Two record shapes
are accepted::

    <name> arw=<ug_per_sqrthz> [bi=<ug>] [rrw=<ug_sqrthz>]
    <name> psd <f_hz>:<ug_per_sqrthz> <f_hz>:<ug_per_sqrthz> ...

Blank lines and ``#`` comments are ignored.  Densities are quoted in
micro-g units as found on datasheets and converted to SI on load with
g = 9.80665 m/s^2.

PSD-sampled sensors are reduced to component densities at load time.
Samples above the Nyquist frequency of the requested sample rate do not
enter the sampled measurement and are discarded first; if a single sample
remains the sensor is modeled as white noise at that level, since one point
carries no slope information.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .noise import NoiseSpec, fit_noise_spec

__all__ = ["CatalogError", "MICRO_G", "load_catalog", "bundled_data_path"]

MICRO_G = 9.80665e-6  # m/s^2 per micro-g

_DENSITY_KEYS = ("arw", "bi", "rrw")


class CatalogError(ValueError):
    """Raised for malformed catalog files or records."""


def bundled_data_path(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(str(resources.files("driftgauge") / "data" / name))


def load_catalog(
    path: str | Path | None = None, sample_rate: float = 100.0
) -> dict[str, NoiseSpec]:
    """Load a sensor catalog, returning name -> NoiseSpec in file order.

    ``path=None`` loads the bundled catalog.  ``sample_rate`` fixes the rate
    the specs will be sampled at, which also sets the Nyquist cutoff for
    PSD-sampled records.
    """
    if path is None:
        path = bundled_data_path("sensors.cat")
    path = Path(path)
    sensors: dict[str, NoiseSpec] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        name = tokens[0]
        if name in sensors:
            raise CatalogError(f"{path}:{lineno}: duplicate sensor '{name}'")
        try:
            sensors[name] = _parse_record(tokens[1:], sample_rate)
        except (CatalogError, ValueError) as exc:
            raise CatalogError(f"{path}:{lineno}: {name}: {exc}") from exc
    if not sensors:
        raise CatalogError(f"{path}: no sensor records found")
    return sensors


def _parse_record(tokens: list[str], sample_rate: float) -> NoiseSpec:
    if not tokens:
        raise CatalogError("record has no noise description")
    if tokens[0] == "psd":
        return _parse_psd_record(tokens[1:], sample_rate)
    densities: dict[str, float] = {}
    for token in tokens:
        key, sep, value = token.partition("=")
        if not sep or key not in _DENSITY_KEYS:
            raise CatalogError(f"unrecognized token '{token}'")
        if key in densities:
            raise CatalogError(f"duplicate key '{key}'")
        densities[key] = float(value)
    if not densities:
        raise CatalogError("density records need at least one of arw=, bi=, rrw=")

    def si(key: str) -> float | None:
        return densities[key] * MICRO_G if key in densities else None

    return NoiseSpec(
        arw_density=si("arw"),
        bias_instability=si("bi"),
        rrw_density=si("rrw"),
        sample_rate=sample_rate,
    )


def _parse_psd_record(tokens: list[str], sample_rate: float) -> NoiseSpec:
    if not tokens:
        raise CatalogError("psd record has no points")
    points = []
    for token in tokens:
        freq_s, sep, dens_s = token.partition(":")
        if not sep:
            raise CatalogError(f"malformed psd point '{token}'")
        points.append((float(freq_s), float(dens_s) * MICRO_G))
    points.sort()
    in_band = [p for p in points if p[0] <= sample_rate / 2.0]
    if not in_band:
        raise CatalogError(
            f"no psd points at or below the Nyquist frequency {sample_rate / 2.0} Hz"
        )
    if len(in_band) == 1:
        return NoiseSpec(
            arw_density=in_band[0][1],
            psd_points=(in_band[0],),
            sample_rate=sample_rate,
        )
    return fit_noise_spec(in_band, sample_rate=sample_rate)
