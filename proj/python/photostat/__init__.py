"""Photon-statistics simulation, correlation and fitting.

Thin wrappers over the compiled ``_photostat`` extension. Fit functions
return the report as a dict with the same layout as the CLI's JSON files.
"""

import json

from ._photostat import (  # noqa: F401
    IoError,
    NumericalError,
    __version__,
    alpha_upper_bound,
    beta_and_efficiency,
    coherence_times,
    config_digest,
    correlate,
    decoherence_energy_uev,
    eta_absolute,
    eta_relative,
    g2_zero,
    hom_bin_expectation,
    polarization_fraction,
    preparation_bounds,
    saturation_curve,
    simulate_config,
    single_line_rate,
    visibility,
)
from . import _photostat


def fit_hom(histogram, gamma, delta, rep_period, irf_sigma, exclusion_half_width=None, weighting="model"):
    """Staged HOM fit of a histogram dict as returned by :func:`correlate`."""
    text = _photostat.fit_hom_json(
        histogram["counts"],
        histogram["bin_width_ps"],
        histogram["t_min_ps"],
        gamma,
        delta,
        rep_period,
        irf_sigma,
        exclusion_half_width,
        weighting,
    )
    return json.loads(text)


def fit_saturation(power, counts, error):
    return json.loads(_photostat.fit_saturation_json(list(power), list(counts), list(error)))


def g2(histogram, rep_period, center_window=2.0, norm_span=300.0):
    return g2_zero(
        histogram["counts"], histogram["bin_width_ps"], histogram["t_min_ps"], rep_period, center_window, norm_span
    )


def value(report, name):
    """Value of a fitted or derived quantity in a fit report dict."""
    for entry in report["parameters"] + report["derived"]:
        if entry["name"] == name:
            v = entry["value"]
            return float(v) if isinstance(v, str) else v
    raise KeyError(name)
