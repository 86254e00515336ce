"""Replay fixtures for the mock provider."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

from ..design import format_design
from ..search import SearchConfig, search_min_aberration


def write_mock_fixtures(directory: str | Path, cells: Iterable[tuple[int, int]],
                        restarts: int = 3, seed: int = 0) -> list[Path]:
    """Write one shared response per (n, m) cell, replayed for every replicate.

    Each response is the best design found by a short search, rendered in
    the prompt's CSV dialect, with a token-usage sidecar.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for n, m in cells:
        result = search_min_aberration(n, m, SearchConfig(restarts=restarts, seed=seed))
        text = format_design(result.design)
        path = directory / f"n{n}_m{m}.txt"
        path.write_text(text, encoding="utf-8")
        usage = {"input": 260, "output": len(text) // 3}
        path.with_suffix(".usage.json").write_text(json.dumps(usage, sort_keys=True) + "\n")
        written.append(path)
    return written
