import itertools

import pytest

from hana_jscc.config import Condition, EvalGrid
from hana_jscc.evaluation import SweepCell, SweepReport, build_metadata


def make_report(psnr, conditions, snr_db=(0.0, 6.0), sigma_e=(0.01, 0.05), seeds=(0, 1)):
    """Report whose cells take their PSNR from `psnr(condition, snr_db, sigma_e, seed)`."""
    grid = EvalGrid(
        conditions=list(conditions),
        snr_db=list(snr_db),
        sigma_e=list(sigma_e),
        seeds=list(seeds),
        curve_sigma_e=0.05,
        curve_snr_db=6.0,
    )
    cells = [
        SweepCell(
            condition=condition,
            snr_db=snr,
            sigma_e=sigma,
            seed=seed,
            psnr_db=psnr(condition, snr, sigma, seed),
            psnr_std=0.5,
            samples=8,
        )
        for condition, snr, sigma, seed in itertools.product(conditions, snr_db, sigma_e, seeds)
    ]
    return SweepReport(metadata=build_metadata(grid, "hash", 0), cells=cells)


ORDERED_PSNR = {
    Condition.PERFECT: 30.0,
    Condition.NAIVE_FT: 25.0,
    Condition.DIRECT: 20.0,
    Condition.HANA: 28.0,
    Condition.HANA_NO_DISTILL: 26.0,
    Condition.NO_SNR_ADAPT: 22.0,
}


@pytest.fixture
def ordered_report():
    """Every hypothesis holds: fixed ordering, PSNR falling with sigma_e."""
    return make_report(
        lambda condition, snr, sigma, seed: ORDERED_PSNR[condition] + 0.5 * snr - 20.0 * sigma + 0.1 * seed,
        list(Condition),
    )
