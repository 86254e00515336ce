"""The zero-shot chain-of-thought prompt used for every design task."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

FACTORS_SLOT = "{m}"
RUNS_SLOT = "{n}"


@lru_cache(maxsize=None)
def prompt_template() -> str:
    return resources.files("fracdesign.data").joinpath("prompt_template.txt").read_text(encoding="utf-8")


def render_prompt(m: int, n: int) -> str:
    """Fill the factor and run counts into the stored template."""
    if m < 1 or n < 2:
        raise ValueError(f"need m >= 1 and n >= 2, got m={m}, n={n}")
    return prompt_template().replace(FACTORS_SLOT, str(m)).replace(RUNS_SLOT, str(n))
