"""Run configuration shared by the command-line subcommands."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .parallel import default_threads

_LOGGER = logging.getLogger(__name__)

SEED_ENV = "ECC_SEED"


def resolve_seed(flag: int | None, environ: dict[str, str] | None = None) -> int | None:
    """Return the seed from the flag, else from ``ECC_SEED``, else None.

    Raises:
        ValueError: If ``ECC_SEED`` is set but is not an integer.

    """
    if flag is not None:
        return flag
    environ = dict(os.environ) if environ is None else environ
    value = environ.get(SEED_ENV)
    if value is None or not value.strip():
        return None
    try:
        seed = int(value)
    except ValueError:
        msg = f"{SEED_ENV}={value!r} is not an integer"
        raise ValueError(msg) from None
    msg = f"Using seed {seed} from {SEED_ENV}"
    _LOGGER.debug(msg)
    return seed


@dataclass(frozen=True)
class RunConfig:
    """Resolved options of one command-line run.

    Attributes:
        subcommand (str): The subcommand name.
        input (Path | None): Input file; None reads standard input.
        output (Path | None): Output file; None writes standard output.
        seed (int | None): Seed of all stochastic steps.
        threads (int): Worker threads, at least 1.
        needs_seed (bool): Whether this run draws random numbers.
        options (dict[str, Any]): Subcommand-specific values.

    """

    subcommand: str
    input: Path | None = None
    output: Path | None = None
    seed: int | None = None
    threads: int = field(default_factory=default_threads)
    needs_seed: bool = False
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Validate threads and the seed requirement."""
        if self.threads < 1:
            msg = "--threads must be at least 1"
            raise ValueError(msg)
        if self.needs_seed and self.seed is None:
            msg = f"{self.subcommand} draws random numbers; pass --seed or set {SEED_ENV}"  # noqa: E501
            raise ValueError(msg)

    def option(self, name: str, default: Any = None) -> Any:  # noqa: ANN401
        """Return a subcommand option."""
        return self.options.get(name, default)
