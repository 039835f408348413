import json

import numpy as np
import pytest

from ncpoly.classical import conditional
from ncpoly.cli import main
from ncpoly.demos import DEMOS
from ncpoly.generators import random_joint, random_povm, random_product_space, random_pvm, random_space
from ncpoly.opkernels import OperatorKernel
from ncpoly.povm import Povm, classical_povm
from ncpoly.serialization import dump
from ncpoly.spaces import FiniteSpace
from ncpoly.states import DensityOperator
from ncpoly.suite import PROPERTIES


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def files(tmp_path, rng):
    paths = {}

    def put(name, obj):
        paths[name] = tmp_path / f"{name}.json"
        dump(obj, paths[name])

    put("pvm", random_pvm(random_space(3), 3, rng))
    put("double", Povm(FiniteSpace("ab"), 2, [np.eye(2), np.eye(2)]))
    put("uniform", Povm(FiniteSpace("abcd"), 3, [np.eye(3) / 4] * 4))
    put("product", random_povm(random_product_space(2, 3), 2, rng))
    put("flat", random_povm(random_space(4), 2, rng))
    put("density", DensityOperator.maximally_mixed(2))
    put("kernel", OperatorKernel(("a", "b"), 1, [[[[1.0]], [[2.0]]], [[[2.0]], [[1.0]]]]))
    nu = random_joint(3, 2, rng)
    put("table", classical_povm(nu))
    paths["nu"] = nu
    trunc = tmp_path / "trunc.json"
    trunc.write_text(paths["pvm"].read_text()[:80])
    paths["trunc"] = trunc
    return paths


def test_validate_valid_pvm(capsys, files):
    code, rep, _ = run(capsys, "validate", files["pvm"])
    assert code == 0 and rep["kind"] == "pvm" and rep["valid"]


def test_validate_doubled_identity(capsys, files):
    code, rep, err = run(capsys, "validate", files["double"])
    assert code == 1
    assert rep["checks"]["completeness"]["pass"] is False
    assert "completeness" in err and "sum of effects differs from the identity" in err


def test_validate_truncated(capsys, files):
    code, rep, err = run(capsys, "validate", files["trunc"])
    assert code == 2 and rep is None
    assert "line" in err and "column" in err


def test_validate_missing_file(capsys, tmp_path):
    assert run(capsys, "validate", tmp_path / "nope.json")[0] == 2


def test_validate_kernel_and_density(capsys, files):
    code, rep, _ = run(capsys, "validate", files["kernel"])
    assert code == 1 and rep["kind"] == "kernel"
    code, rep, _ = run(capsys, "validate", files["density"])
    assert code == 0 and rep["valid"]


def test_dilate_pvm_compressed(capsys, files):
    code, rep, err = run(capsys, "dilate", files["pvm"], "--compress")
    assert code == 0 and rep["big_dim"] == 3
    assert "big_dim 3" in err and rep["reconstruction_residual"] <= 1e-8


def test_dilate_uniform(capsys, files, tmp_path):
    out = tmp_path / "dil.json"
    code, rep, _ = run(capsys, "dilate", files["uniform"], "--out", out)
    assert code == 0 and rep["big_dim"] == 12
    assert json.loads(out.read_text())["big_dim"] == 12


def test_dilate_invalid(capsys, files):
    assert run(capsys, "dilate", files["double"])[0] == 1


def test_rn_full_and_empty(capsys, files):
    code, rep, _ = run(capsys, "rn", files["product"], "--B", "*")
    assert code == 0 and np.allclose(rep["gamma_spectrum"], 1.0, atol=1e-9)
    code, rep, _ = run(capsys, "rn", files["product"], "--B", "")
    assert code == 0 and np.allclose(rep["gamma_spectrum"], 0.0, atol=1e-12)


def test_rn_left_side(capsys, files):
    code, rep, _ = run(capsys, "rn", files["product"], "--B", "a0", "--side", "left")
    assert code == 0 and rep["side"] == "left" and rep["event"] == ["a0"]


def test_rn_classical_table(capsys, files):
    nu = files["nu"]
    code, rep, _ = run(capsys, "rn", files["table"], "--B", "b1")
    assert code == 0
    for entry in rep["atom_frame"]:
        a = nu.space.left.index(entry["atom"])
        assert entry["diagonal"][0] == pytest.approx(conditional(nu, 1, a).weights[1], abs=1e-10)


def test_rn_non_product(capsys, files):
    assert run(capsys, "rn", files["flat"], "--B", "s0")[0] == 1


def test_rn_unknown_label(capsys, files):
    code, _, err = run(capsys, "rn", files["product"], "--B", "zz")
    assert code == 2 and "zz" in err


def test_suite_schema(capsys):
    code, rep, _ = run(capsys, "suite", "--seed", 1, "--trials", 1)
    assert code == 0
    assert set(rep["properties"]) == {p.name for p in PROPERTIES}
    assert all(e["trials"] == 1 for e in rep["properties"].values())


def test_suite_bad_trials(capsys):
    assert run(capsys, "suite", "--trials", 0)[0] == 2


def test_tol_env(capsys, files, monkeypatch):
    monkeypatch.setenv("NCPOLY_TOL", "not-a-number")
    assert run(capsys, "validate", files["pvm"])[0] == 2
    monkeypatch.setenv("NCPOLY_TOL", "2.5")
    # a huge tolerance accepts the doubled identity
    assert run(capsys, "validate", files["double"])[0] == 0


def test_demo_unknown(capsys):
    code, _, err = run(capsys, "demo", "nope")
    assert code == 2
    assert all(name in err for name in DEMOS)


@pytest.mark.parametrize("name", list(DEMOS))
def test_demo_runs(capsys, name):
    code, rep, err = run(capsys, "demo", name)
    assert code == 0 and rep["pass"] and rep["demo"] == name
    assert "residual" in err


def test_demo_naimark_lists_every_event(capsys):
    _, rep, _ = run(capsys, "demo", "naimark")
    per_event = [c for c in rep["checks"] if c["identity"].startswith("V* P(")]
    assert len(per_event) == 8


def test_demo_entangled(capsys):
    _, rep, _ = run(capsys, "demo", "entangled-marginals")
    names = [c["identity"] for c in rep["checks"]]
    assert "Tr_2 |Bell><Bell| = I/2" in names and "Tr_1 (I/2 (x) I/2) = I/2" in names


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2
