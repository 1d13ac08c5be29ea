"""Temporal cutoffs applied to controls, as functions of sigma in [0, 1]."""

import numpy as np

from .models import Envelope


def _smooth_step(r: np.ndarray) -> np.ndarray:
    # C-infinity transition from 0 at r <= 0 to 1 at r >= 1
    r = np.clip(r, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        rise = np.where(r > 0.0, np.exp(-1.0 / np.where(r > 0.0, r, 1.0)), 0.0)
        fall = np.where(r < 1.0, np.exp(-1.0 / np.where(r < 1.0, 1.0 - r, 1.0)), 0.0)
    return rise / (rise + fall)


def envelope_values(envelope: Envelope | str, sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    envelope = Envelope(envelope)
    inside = (sigma > 0.0) & (sigma < 1.0)
    if envelope is Envelope.NONE:
        return np.where((sigma >= 0.0) & (sigma <= 1.0), 1.0, 0.0)
    if envelope is Envelope.BUMP:
        product = np.where(inside, sigma * (1.0 - sigma), 1.0)
        return np.where(inside, np.exp(4.0 - 1.0 / product), 0.0)
    # plateau: one on [1/4, 3/4]
    return np.where(
        inside,
        np.minimum(_smooth_step(4.0 * sigma), _smooth_step(4.0 * (1.0 - sigma))),
        0.0,
    )
