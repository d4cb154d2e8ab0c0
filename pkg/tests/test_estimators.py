import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mmwave_pgp._validation import check_channel, check_positive, check_symbols
from mmwave_pgp.channel import sample_cell
from mmwave_pgp.estimators import (
    BeamspaceSelector,
    OPGPAAllocator,
    VAACPGPPrecoder,
    ZFPGPPrecoder,
    ZFPrecoder,
)

from conftest import random_complex


def test_check_channel():
    H = check_channel([1.0, 2.0])
    assert H.shape == (1, 2) and H.dtype == complex
    with pytest.raises(ValueError):
        check_channel(np.ones((2, 2, 2)))
    with pytest.raises(ValueError):
        check_channel([[np.nan, 1.0]])
    with pytest.raises(TypeError):
        check_channel([["a", "b"]])
    with pytest.raises(ValueError):
        check_channel(np.ones((1, 3)), min_rows=2)
    with pytest.raises(ValueError):
        check_positive(-1, "snr0")
    with pytest.raises(ValueError):
        check_symbols(np.ones((2, 3)), 4)


def test_beamspace_selector(geom, prop):
    cell = sample_cell(10, geom, prop, np.random.default_rng(0))
    sel = BeamspaceSelector(n_v_init=20).fit(cell.H_d)
    assert sel.transform(cell.H_d).shape == (10, 20)
    assert 0 < sel.power_fraction_ <= 1
    assert clone(sel).get_params() == sel.get_params()
    with pytest.raises(NotFittedError):
        BeamspaceSelector().transform(cell.H_d)


@pytest.mark.parametrize("cls", [ZFPrecoder, ZFPGPPrecoder, VAACPGPPrecoder])
def test_precoders(cls, rng):
    H = random_complex(rng, 3, 5)
    est = cls(snr0=10.0, M=4).fit(H)
    width = 3 if cls is ZFPrecoder else 6
    X = random_complex(rng, 7, width)
    assert est.transform(X).shape == (7, 5)
    assert est.score() == pytest.approx(est.mi_.sum())
    assert est.get_params()["M"] == 4
    with pytest.raises(NotFittedError):
        cls().transform(X)


def test_zf_precoder_inverts_channel(rng):
    H = random_complex(rng, 3, 3)
    est = ZFPrecoder(snr0=1.0, M=4).fit(H)
    np.testing.assert_allclose(H @ est.precoder_, est.factors_.gain * np.eye(3), atol=1e-9)


def test_opgpa_allocator(rng):
    H = random_complex(rng, 3, 3)
    est = OPGPAAllocator(I_S=2.0, snr0=10.0, M=4).fit(H)
    assert est.k_.shape == (3,) and est.feasible_
    X = np.ones((2, 6))
    np.testing.assert_allclose(est.transform(X)[0], np.repeat(np.sqrt(est.k_), 2))
    with pytest.raises(ValueError):
        OPGPAAllocator(I_S=9.0, M=4).fit(H)
