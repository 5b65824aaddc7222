"""Policies for the unspecified absolute constants hidden in ``>>`` and big-O.

Three stock policies:

``shape``
    every implicit constant is 1; useful for looking at the functional form.
``explicit``
    only constants that appear literally in the conditioning argument:
    1/12 for the general walk bound, 1/40 for the constant-boundary bound,
    and the exact correction ``-r/(u^2 (1 - r))`` in place of the big-O term.
    Lemma constants have no explicit value and fall back to the calibrated ones.
``calibrated``
    lemma constants measured on the calibration grid (see
    :mod:`supbounds.calibration`) divided by a safety factor; big-O constant 1
    with the conservative sign.
"""
from __future__ import annotations

import dataclasses

# Worst ratio (shape value with constant 1) / (true probability) observed on
# the default calibration grid; regenerate with `python -m supbounds.calibration`.
CALIBRATION_WORST_RATIO = {
    "lemma1": 1.0782642575256036,
    "lemma2": 1127.34541569475,
    "lemma3": 1.4284049178755494,
}
CALIBRATION_SAFETY = 2.0
CALIBRATION_H = 3.0

_MODES = ("shape", "explicit", "calibrated", "custom")


@dataclasses.dataclass(frozen=True)
class ConstantPolicy:
    mode: str = "shape"
    big_oh_constant: float = 1.0
    exact_correction: bool = False
    thm1_prefactor: float = 1.0
    thm3_prefactor: float = 1.0
    lemma1: float = 1.0
    lemma2: float = 1.0
    lemma3: float = 1.0
    lemma1_threshold: float = CALIBRATION_H
    lemma2_max_H: float = float("inf")

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"unknown constants mode {self.mode!r}")
        for name in ("big_oh_constant", "thm1_prefactor", "thm3_prefactor", "lemma1", "lemma2", "lemma3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.lemma1_threshold <= 0:
            raise ValueError("lemma1_threshold must be positive")

    @classmethod
    def shape(cls) -> "ConstantPolicy":
        return cls(mode="shape")

    @classmethod
    def calibrated(cls) -> "ConstantPolicy":
        c = {k: 1.0 / (v * CALIBRATION_SAFETY) for k, v in CALIBRATION_WORST_RATIO.items()}
        return cls(
            mode="calibrated",
            big_oh_constant=1.0,
            thm1_prefactor=1.0 / 40.0,
            thm3_prefactor=1.0 / 12.0,
            lemma1=c["lemma1"],
            lemma2=c["lemma2"],
            lemma3=c["lemma3"],
            lemma1_threshold=CALIBRATION_H,
            lemma2_max_H=CALIBRATION_H,
        )

    @classmethod
    def explicit(cls) -> "ConstantPolicy":
        cal = cls.calibrated()
        return dataclasses.replace(cal, mode="explicit", exact_correction=True)

    @classmethod
    def from_name(cls, name: str) -> "ConstantPolicy":
        try:
            return {"shape": cls.shape, "explicit": cls.explicit, "calibrated": cls.calibrated}[name]()
        except KeyError:
            raise ValueError(f"unknown constants mode {name!r}") from None

    @property
    def lemma_constants_rigorous(self) -> bool:
        # no mode has provably valid lemma constants; calibrated ones are empirical
        return False

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lemma_constants_rigorous"] = self.lemma_constants_rigorous
        return d
