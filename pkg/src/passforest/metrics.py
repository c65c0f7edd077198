"""Improvement metric over the size-optimizing baseline, plus reporting."""

from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import InvalidBaseline


def overoz(ic_oz: int, ic_tuned: int) -> float:
    """Extra percentage reduction relative to the -Oz instruction count.

    Negative when the tuned pipeline is worse than the baseline.
    """
    if ic_oz <= 0:
        raise InvalidBaseline(f"baseline instruction count must be > 0, got {ic_oz}")
    return (ic_oz - ic_tuned) / ic_oz * 100.0


@dataclass(frozen=True)
class ProgramResult:
    program_id: str
    ic_oz: int
    ic_tuned: int
    dataset: str = "default"

    @property
    def overoz_pct(self) -> float:
        return overoz(self.ic_oz, self.ic_tuned)


def aggregate(results: Sequence[ProgramResult]) -> dict:
    """Per-dataset unweighted means plus two overall figures.

    ``mean_of_group_means`` averages the per-dataset means (the headline
    convention); ``per_program_mean`` averages over all programs and is
    reported alongside, labeled distinctly.
    """
    if not results:
        raise ValueError("no results to aggregate")
    groups: Dict[str, List[float]] = {}
    for result in results:
        groups.setdefault(result.dataset, []).append(result.overoz_pct)
    group_stats = {
        label: {"mean_overoz_pct": sum(v) / len(v), "count": len(v)}
        for label, v in sorted(groups.items())
    }
    group_means = [stats["mean_overoz_pct"] for stats in group_stats.values()]
    all_pcts = [r.overoz_pct for r in results]
    return {
        "groups": group_stats,
        "mean_of_group_means": sum(group_means) / len(group_means),
        "per_program_mean": sum(all_pcts) / len(all_pcts),
        "program_count": len(results),
    }
