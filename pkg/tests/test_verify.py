import numpy as np
import pytest
import scipy.fft

from repscore import regression
from repscore.verify import CHECKS, verify_suite


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_clean_suite_passes(seed):
    report = verify_suite(seed)
    assert report.passed, report.to_text()
    assert len(report.checks) == len(CHECKS)


def test_unnormalised_dct_is_caught():
    unscaled = lambda a: scipy.fft.dctn(np.asarray(a, float), type=2, axes=(-3, -2))
    report = verify_suite(0, overrides={"dct2_array": unscaled})
    assert "dct_parseval" in report.failures
    assert "FAIL  dct_parseval" in report.to_text()


def test_biased_ridge_is_caught():
    shrunk = lambda x, y, lam: 0.9 * regression.ridge_fit(x, y, lam)
    assert "ridge_pinv_oracle" in verify_suite(0, overrides={"ridge_fit": shrunk}).failures


def test_broken_ycbcr_is_caught():
    swapped = lambda a: np.asarray(a, float)[..., ::-1]
    failures = verify_suite(0, overrides={"ycbcr_array": swapped}).failures
    assert "ycbcr_reference_values" in failures


def test_only_and_unknown_primitive():
    report = verify_suite(0, only={"tcs_gate"})
    assert [c.name for c in report.checks] == ["tcs_gate"]
    with pytest.raises(KeyError):
        verify_suite(0, overrides={"fft": None})
