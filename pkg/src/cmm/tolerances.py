"""Numeric thresholds shared by every comparison in the package."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    """One record holding all tolerances.

    Attributes
    ----------
    hermitian:
        Max-norm bound on ``m - m^dagger`` for a matrix to count as Hermitian.
        Scaled by ``max(1, |m|_max)``.
    cluster:
        Eigenvalues closer than ``cluster * spectral_radius`` share a projector.
    psd:
        A Hermitian matrix is PSD when its smallest eigenvalue is ``>= -psd``.
    distribution:
        Allowed deviation of a distribution's total mass from 1.
    state:
        Hermiticity/trace tolerance for density matrices.
    cond:
        Outcomes with probability ``<= cond`` cannot be conditioned on.
    oe, dep, epr, ftp:
        Order-effect, dependence, perfect-correlation and interference thresholds.
    rep:
        Replicability and RRE identities must hold to this residual.
    instrument:
        Normalisation and trace preservation of instruments and POVMs.
    lambda_slack:
        ``|lambda| <= 1 + lambda_slack`` counts as trigonometric interference.
    """

    hermitian: float = 1e-12
    cluster: float = 1e-8
    psd: float = 1e-9
    distribution: float = 1e-10
    state: float = 1e-10
    cond: float = 1e-12
    oe: float = 1e-9
    dep: float = 1e-9
    epr: float = 1e-9
    ftp: float = 1e-9
    rep: float = 1e-9
    instrument: float = 1e-9
    lambda_slack: float = 1e-9
    separation: float = 1e-9

    def override(self, **changes: float) -> "Tolerances":
        unknown = set(changes) - {f.name for f in fields(self)}
        if unknown:
            raise KeyError(f"unknown tolerance(s): {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in changes.items()})

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


DEFAULT = Tolerances()
