"""Pointwise branch-safety certificate for a preconditioning polynomial."""

from dataclasses import dataclass

import numpy as np

__all__ = ["BranchCertificate", "certify_branch", "interval_grid"]

REL_BOUND = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class BranchCertificate:
    """Outcome of evaluating ``q`` on sample points.

    ``satisfied`` means ``Re q(z) > 0`` at every sample, which puts the
    eigenvalues of ``q(A)`` in the open right half-plane when the samples
    cover the spectrum of ``A``. ``relative_ok`` reports the sufficient condition
    ``|q(z) - z^{-1/2}| <= |z^{-1/2}| / sqrt(2)``.
    """

    checked_points: np.ndarray
    min_real_part: float
    satisfied: bool
    max_relative_error: float
    relative_ok: bool

    def summary(self):
        return (f"points={self.checked_points.size} min_re={self.min_real_part:.6g} "
                f"satisfied={self.satisfied} max_rel_err={self.max_relative_error:.6g} "
                f"relative_ok={self.relative_ok}")


def interval_grid(a, b, npoints=1000):
    return np.linspace(float(a), float(b), int(npoints))


def certify_branch(q, sample):
    """Evaluate ``q`` on ``sample`` and report the branch conditions."""
    z = np.atleast_1d(np.asarray(sample))
    if z.size == 0:
        raise ValueError("sample must be nonempty")
    qz = np.asarray(q(z))
    min_re = float(np.min(np.real(qz)))
    zc = z.astype(complex)
    off_cut = ~((zc.imag == 0) & (zc.real <= 0))
    if np.all(off_cut):
        r = 1.0 / np.sqrt(zc)
        rel = np.abs(qz - r) / np.abs(r)
        max_rel = float(np.max(rel))
    else:
        max_rel = float("inf")
    return BranchCertificate(checked_points=z, min_real_part=min_re,
                             satisfied=bool(min_re > 0), max_relative_error=max_rel,
                             relative_ok=bool(max_rel <= REL_BOUND))
