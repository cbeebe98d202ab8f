"""Independent cross-checks and their reporting."""

import json
import math

import pytest

from wqed2p import cli, oracles


@pytest.mark.parametrize("check", [
    oracles.check_unitarity,
    oracles.check_single_kernel_inverse,
    oracles.check_t22_g_int,
    oracles.check_no_cavity,
    oracles.check_coherent_factorization,
    oracles.check_decoupled_limit,
    oracles.check_odd_channel,
], ids=lambda c: c.__name__)
def test_oracle_passes(check):
    res = check()
    assert res.passed, res.as_dict()
    assert res.residual <= res.tolerance


def test_t22_residue_matches_contour_integral():
    res = oracles.check_t22_g_int()
    assert res.residual < 1e-12


def test_monotone_helper():
    assert oracles._monotone([1e-3, 1e-5, 1e-7])
    assert oracles._monotone([1e-3, 1e-10, 2e-10])
    assert not oracles._monotone([1e-3, 1e-2])


def test_run_all_reports_exceptions():
    def check_broken():
        raise ValueError("boom")

    res, = oracles.run_all((check_broken,))
    assert not res.passed
    assert res.residual == math.inf
    assert "boom" in res.detail["error"]
    assert "seconds" in res.detail


def test_oracle_mode_exit_codes(tmp_path, monkeypatch):
    good = (oracles.check_unitarity, oracles.check_decoupled_limit)
    monkeypatch.setattr(oracles, "CHECKS", good)
    monkeypatch.setattr(oracles.run_all, "__defaults__", (good, 0))
    assert cli.main(["oracle-check", "--config", "fig4", "--out", str(tmp_path / "ok")]) == 0
    report = json.loads((tmp_path / "ok" / "oracle_report.json").read_text())
    assert report["all_passed"] is True
    assert [c["name"] for c in report["checks"]] == ["single_photon_unitarity", "decoupled_emitter_limit"]

    def check_failing():
        return oracles._result("always_fails", 1.0, 1e-12)

    monkeypatch.setattr(oracles.run_all, "__defaults__", ((check_failing,), 0))
    assert cli.main(["oracle-check", "--config", "fig4", "--out", str(tmp_path / "bad")]) == 2
    report = json.loads((tmp_path / "bad" / "oracle_report.json").read_text())
    assert report["all_passed"] is False


def test_tolerance_sensitivity_low_q():
    res = oracles.tolerance_sensitivity(0.322, oracles.LOW_Q)
    assert res["count"] > 0
    assert res["integrals"] < 1e-8
    assert res["g2"] < 1e-6
