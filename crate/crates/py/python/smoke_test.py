"""Smoke test for the levy_epidemic extension module."""

import json
import math
import pathlib
import sys
import tempfile

import levy_epidemic as le


def main() -> int:
    fig1a = le.Model.sis(0.1, 0.2, 0.3, 0.3, le.JumpSpec.constant(1.0, -0.01))
    verdict = fig1a.verdict()
    assert verdict["condition_holds"] is True
    assert abs(verdict["threshold_value"] - 0.49) < 1e-12

    times, states, jumped = le.simulate(fig1a, [0.6, 0.4], t_end=5.0, seed=3, record_stride=100)
    assert len(times) == len(states) == len(jumped)
    assert all(abs(sum(s) - 1.0) < 1e-9 for s in states)
    assert times[-1] == 5.0

    summary = le.estimate_extinction(fig1a, [0.6, 0.4], t_end=50.0, n_paths=50, i_threshold=0.2, seed=1)
    ext = summary["extinction"]
    assert 0.0 <= ext["ci_low"] <= ext["fraction"] <= ext["ci_high"] <= 1.0

    check = le.generator_check(fig1a, [0.6, 0.4], n_samples=20000, seed=5)
    assert abs(check["analytic"] + 0.1736) < 1e-12
    assert abs(check["z_score"]) < 4.0

    pi_up, grid, u = le.solve_exit_probability(le.Model.sis(0.8, 0.1, 0.2, 1.0), 0.3, 0.7, 0.5)
    assert len(grid) == len(u) and 0.0 < pi_up < 1.0
    mc = le.mc_exit_probability(le.Model.sis(0.8, 0.1, 0.2, 1.0), 0.3, 0.7, 0.5, n_paths=2000, seed=2)
    assert abs(mc["probability"] - pi_up) < max(0.02, 3 * mc["standard_error"])

    sirs = le.Model.sirs(0.3, 0.29, 0.4, 0.1, le.JumpSpec.constant(1.0, 0.3))
    assert sirs.dim == 3 and math.isclose(sirs.verdict()["threshold_value"], 0.4)

    try:
        le.Model.sis(-1.0, 0.1, 0.1, 0.1)
    except ValueError:
        pass
    else:
        raise AssertionError("negative rate accepted")

    assert sorted(le.panels()) == ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b"]
    with tempfile.TemporaryDirectory() as tmp:
        report = le.reproduce_figures(tmp, seed=9)
        out = pathlib.Path(tmp)
        assert len(report["panels"]) == 6
        assert (out / "verdicts.csv").read_text().startswith("panel,beta,threshold,holds")
        assert json.loads((out / "summary.json").read_text()) == report

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
