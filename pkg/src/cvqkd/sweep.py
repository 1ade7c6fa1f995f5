"""
Parameter grids for scenario sweeps.
"""

from __future__ import annotations

import collections.abc
import dataclasses
import logging
import typing

import numpy as np

import alive_progress


LOGGER = logging.getLogger("cvqkd")

SweepParameter: typing.TypeAlias = typing.Literal[
    "T", "V", "var_n_A", "rel_dT", "fraction", "n_slices"
]

SWEEP_PARAMETERS: tuple[SweepParameter, ...] = typing.get_args(SweepParameter)


@dataclasses.dataclass(frozen=True)
class Sweep:
    """
    An evenly spaced grid over one parameter, endpoints included.
    """

    parameter: str
    start: float
    stop: float
    steps: int

    def __post_init__(self) -> None:

        errors: list[str] = []

        if self.parameter not in SWEEP_PARAMETERS:
            errors.append(
                f"Sweep parameter `{self.parameter}` is not one of "
                + ", ".join(SWEEP_PARAMETERS)
            )

        if self.steps < 1:
            errors.append(f"Sweep needs at least one step ({self.steps})")

        if any(errors):
            raise ValueError("\n".join(errors))

    @classmethod
    def parse(cls, text: str) -> Sweep:
        """
        Parses a `param:start:stop:steps` specification.
        """

        parts = text.split(":")

        if len(parts) != 4:
            msg = f"Sweep `{text}` is not in `param:start:stop:steps` format"
            raise ValueError(msg)

        (parameter, start, stop, steps) = parts

        try:
            return cls(
                parameter=parameter,
                start=float(start),
                stop=float(stop),
                steps=int(steps),
            )
        except ValueError as err:
            raise ValueError(f"Invalid sweep `{text}`: {err}") from err

    def values(self) -> list[float]:

        grid = np.linspace(self.start, self.stop, self.steps)

        if self.parameter == "n_slices":
            return [float(value) for value in dict.fromkeys(np.rint(grid).astype(int))]

        return [float(value) for value in grid]

    def __str__(self) -> str:
        return f"{self.parameter}:{self.start!r}:{self.stop!r}:{self.steps}"


def iter_points(
    values: collections.abc.Sequence[float],
    show_progress: bool,
    title: str,
) -> collections.abc.Iterator[tuple[int, float]]:
    """
    Iterates over (index, value) sweep points, with an optional progress bar.
    """

    with alive_progress.alive_bar(
        total=len(values),
        disable=not show_progress,
        unit=" points",
        title=title,
    ) as progress_bar:

        for i_point, value in enumerate(values):

            LOGGER.debug(f"{title}: point {i_point} = {value!r}")

            yield (i_point, value)

            progress_bar()
