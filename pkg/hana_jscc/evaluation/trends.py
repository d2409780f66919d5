"""Ordering hypotheses between evaluation conditions

Absolute PSNR values depend on scale; what is checked is the ordering of
conditions on paired cells. Each pairwise comparison reports the mean PSNR
difference and a one-sided sign test over the paired cells.
"""

import enum
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..config import Condition
from ..errors import TrendValidationError
from .sweep import SweepReport

# Mean differences within this distance of zero count as ties
TIE_TOLERANCE = 1e-9


@enum.unique
class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class Comparison(BaseModel):
    better: Condition
    worse: Condition
    mean_diff: float
    wins: int
    losses: int
    ties: int
    p_value: float
    verdict: Verdict


class TrendVerdict(BaseModel):
    hypothesis: str
    description: str
    comparisons: List[Comparison] = []
    verdict: Verdict
    detail: str = ""


class Hypothesis(BaseModel):
    key: str
    description: str
    chain: List[Condition] = []
    # Compare only cells at these estimation errors; None keeps the whole grid
    sigma_e: Optional[List[float]] = None


HYPOTHESES = [
    Hypothesis(
        key="a",
        description="perfect >= naive_ft >= direct",
        chain=[Condition.PERFECT, Condition.NAIVE_FT, Condition.DIRECT],
    ),
    Hypothesis(
        key="b",
        description="hana_no_distill >= naive_ft at sigma_e in {0.05, 0.1}",
        chain=[Condition.HANA_NO_DISTILL, Condition.NAIVE_FT],
        sigma_e=[0.05, 0.1],
    ),
    Hypothesis(
        key="c",
        description="hana >= hana_no_distill",
        chain=[Condition.HANA, Condition.HANA_NO_DISTILL],
    ),
    Hypothesis(
        key="d",
        description="direct PSNR does not increase with sigma_e",
        chain=[Condition.DIRECT],
    ),
]

HYPOTHESIS_BY_KEY = {hypothesis.key: hypothesis for hypothesis in HYPOTHESES}


def sign_test_p_value(wins: int, losses: int) -> float:
    """One-sided P(X >= wins) for X ~ Binomial(wins + losses, 1/2); ties dropped."""
    trials = wins + losses
    if trials == 0:
        return 1.0
    tail = sum(math.comb(trials, k) for k in range(wins, trials + 1))
    return tail / 2**trials


def _combine(verdicts: Sequence[Verdict]) -> Verdict:
    if Verdict.FAIL in verdicts:
        return Verdict.FAIL
    if Verdict.INCONCLUSIVE in verdicts:
        return Verdict.INCONCLUSIVE
    return Verdict.PASS


def _condition_series(frame: pd.DataFrame, condition: Condition) -> pd.Series:
    rows = frame[frame["condition"] == condition.value]
    return rows.set_index(["snr_db", "sigma_e", "seed"])["psnr_db"]


def compare_pair(frame: pd.DataFrame, better: Condition, worse: Condition) -> Comparison:
    """Paired comparison on the (snr, sigma_e, seed) cells both conditions share."""
    joined = pd.concat(
        [_condition_series(frame, better), _condition_series(frame, worse)],
        axis=1,
        keys=["better", "worse"],
        join="inner",
    )
    diff = (joined["better"] - joined["worse"]).to_numpy()

    wins = int(np.sum(diff > TIE_TOLERANCE))
    losses = int(np.sum(diff < -TIE_TOLERANCE))
    ties = int(diff.size - wins - losses)
    mean_diff = float(np.mean(diff)) if diff.size else 0.0

    if diff.size == 0 or abs(mean_diff) <= TIE_TOLERANCE:
        verdict = Verdict.INCONCLUSIVE
    elif mean_diff > 0:
        verdict = Verdict.PASS
    else:
        verdict = Verdict.FAIL

    return Comparison(
        better=better,
        worse=worse,
        mean_diff=mean_diff,
        wins=wins,
        losses=losses,
        ties=ties,
        p_value=sign_test_p_value(wins, losses),
        verdict=verdict,
    )


def check_monotonic_degradation(
    frame: pd.DataFrame, condition: Condition = Condition.DIRECT
) -> Tuple[Verdict, str]:
    """Mean PSNR must not rise along sigma_e, except one rise within one std."""
    rows = frame[frame["condition"] == condition.value]
    per_seed = rows.groupby(["sigma_e", "seed"])["psnr_db"].mean()
    stats = per_seed.groupby(level="sigma_e").agg(["mean", "std"]).sort_index()

    if len(stats) < 2:
        return Verdict.INCONCLUSIVE, "fewer than two sigma_e values"

    means = stats["mean"].to_numpy()
    stds = np.nan_to_num(stats["std"].to_numpy())
    rises = np.diff(means)

    inversions = [index for index, rise in enumerate(rises) if rise > TIE_TOLERANCE]
    if not inversions:
        return Verdict.PASS, "non-increasing"

    if len(inversions) == 1:
        index = inversions[0]
        if rises[index] <= max(stds[index], stds[index + 1]):
            return Verdict.PASS, f"one inversion within noise at sigma_e={stats.index[index + 1]:.3g}"

    return Verdict.FAIL, f"{len(inversions)} inversions along sigma_e"


def _restrict(frame: pd.DataFrame, sigma_e: Optional[Sequence[float]]) -> pd.DataFrame:
    if sigma_e is None:
        return frame
    values = frame["sigma_e"].to_numpy(dtype=float)
    keep = np.isclose(values[:, None], np.asarray(sigma_e, dtype=float)[None, :]).any(axis=1)
    return frame[keep]


def _required(hypotheses: Sequence[Hypothesis]) -> List[Condition]:
    required: List[Condition] = []
    for hypothesis in hypotheses:
        for condition in hypothesis.chain:
            if condition not in required:
                required.append(condition)
    return required


def compare_trends(
    report: SweepReport, hypotheses: Optional[Sequence[str]] = None
) -> List[TrendVerdict]:
    """Evaluate the ordering hypotheses (all of them unless `hypotheses` names some)."""
    selected = [
        HYPOTHESIS_BY_KEY[key] for key in (hypotheses if hypotheses is not None else HYPOTHESIS_BY_KEY)
    ]

    present = set(report.conditions)
    missing = [condition.value for condition in _required(selected) if condition not in present]
    if missing:
        raise TrendValidationError(f"Report lacks conditions {', '.join(missing)}")

    frame = report.to_frame()
    verdicts = []

    for hypothesis in selected:
        if hypothesis.key == "d":
            verdict, detail = check_monotonic_degradation(frame, hypothesis.chain[0])
            verdicts.append(
                TrendVerdict(
                    hypothesis=hypothesis.key,
                    description=hypothesis.description,
                    verdict=verdict,
                    detail=detail,
                )
            )
            continue

        restricted = _restrict(frame, hypothesis.sigma_e)
        comparisons = [
            compare_pair(restricted, better, worse)
            for better, worse in zip(hypothesis.chain, hypothesis.chain[1:])
        ]
        verdicts.append(
            TrendVerdict(
                hypothesis=hypothesis.key,
                description=hypothesis.description,
                comparisons=comparisons,
                verdict=_combine([comparison.verdict for comparison in comparisons]),
                detail=_detail(comparisons) if len(restricted) else "no cells at the compared sigma_e",
            )
        )

    return verdicts


def _detail(comparisons: Sequence[Comparison]) -> str:
    return "; ".join(
        f"{c.better.value}-{c.worse.value}: {c.mean_diff:+.3f} dB (p={c.p_value:.3g})"
        for c in comparisons
    )


def hypotheses_for(conditions: Sequence[Condition]) -> List[str]:
    """Keys of the hypotheses whose conditions are all in `conditions`."""
    available = set(conditions)
    return [
        hypothesis.key
        for hypothesis in HYPOTHESES
        if all(condition in available for condition in hypothesis.chain)
    ]


def verdict_table(verdicts: Sequence[TrendVerdict]) -> pd.DataFrame:
    rows: List[Dict[str, str]] = [
        {
            "hypothesis": verdict.hypothesis,
            "description": verdict.description,
            "verdict": verdict.verdict.value,
            "detail": verdict.detail,
        }
        for verdict in verdicts
    ]
    return pd.DataFrame(rows, columns=["hypothesis", "description", "verdict", "detail"])
