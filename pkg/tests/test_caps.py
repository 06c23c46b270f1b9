import pytest

from liftgap.caps import caps
from liftgap.errors import InputError, SizeCapError


def test_defaults():
    c = caps()
    assert c.lp_nonzeros == 200_000
    assert c.boolfn_n == 24
    assert c.edge_n == 6 and c.edge_r == 2


def test_env_override(monkeypatch):
    monkeypatch.setenv("LIFTGAP_SIZE_CAPS", "lp_nonzeros=500000, boolfn_n=26")
    c = caps()
    assert c.lp_nonzeros == 500_000
    assert c.boolfn_n == 26
    assert c.farkas_n == 12  # untouched defaults remain


def test_env_rejects_unknown(monkeypatch):
    monkeypatch.setenv("LIFTGAP_SIZE_CAPS", "bogus=7")
    with pytest.raises(InputError):
        caps()
    monkeypatch.setenv("LIFTGAP_SIZE_CAPS", "edge_n=big")
    with pytest.raises(InputError):
        caps()


def test_override_lifts_operation(monkeypatch):
    from liftgap.boolfn import BoolFn
    with pytest.raises(SizeCapError):
        BoolFn(25, [])
    monkeypatch.setenv("LIFTGAP_SIZE_CAPS", "boolfn_n=25")
    # now rejected for the table length instead of the cap
    with pytest.raises(InputError):
        BoolFn(25, [])
