import json

import numpy as np
import pytest

from pslab.context import ValidationError
from pslab.params import THEOREM_IDS, check_admissible, derive_params, sweep_csv


def test_reference_sheet_c6():
    p = derive_params(6.0, 0.995)
    assert p.rho == 1.0 / 372.0
    assert p.nu == 1.0 / 56.0
    assert (p.t, p.u, p.s_constructed) == (22, 7, 59)


def test_delta_forms_agree():
    for c in np.linspace(3.001, 200.0, 250):
        p = derive_params(float(c), 0.99)
        assert p.delta_closed_form == pytest.approx(p.delta_from_constants, rel=1e-12)


def test_delta_sign():
    assert derive_params(3.0, 0.99).delta_closed_form == 0.0
    for c in np.linspace(5.0 + 1e-9, 100.0, 200):
        assert derive_params(float(c), 0.99).delta_closed_form < 0.0


def test_admissibility():
    ok, _ = check_admissible(1.04, 0.995, "thm2")
    assert ok
    ok, _ = check_admissible(1.05, 0.99, "thm2")
    assert not ok
    for tid in THEOREM_IDS:
        ok, margins = check_admissible(1.01, 0.999, tid)
        assert ok == all(v > 0 for v in margins.values())
    with pytest.raises(ValidationError):
        check_admissible(1.04, 0.995, "thm99")


def test_sheet_serialization_and_sweep():
    p = derive_params(6.0, 0.995)
    d = json.loads(p.to_json())
    assert d["t"] == 22 and d["u"] == 7
    assert "s_constructed" in p.to_text()
    csv = sweep_csv(5.5, 6.5, 0.5, 0.995)
    lines = csv.strip().split("\n")
    assert lines[0].startswith("c,gamma,rho")
    assert len(lines) == 4
    with pytest.raises(ValidationError):
        sweep_csv(2.0, 1.0, 0.5, 0.995)
