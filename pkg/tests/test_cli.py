import json
import subprocess
import sys

import pytest

from nlguard import fixtures
from nlguard.aut import Mutation, dump_aut_model, mutate
from nlguard.cli import main

UCA_AUT = str(fixtures.path("uca.aut"))
UCA_SUITE = str(fixtures.path("uca.suite"))
UCA_EVAL = str(fixtures.path("uca-eval.suite"))
SHOP_SUITE = str(fixtures.path("shop.suite"))


def _load(path):
    return json.loads(path.read_text())


def _mutant_file(tmp_path, uca, m):
    path = tmp_path / "mutant.aut"
    path.write_text(dump_aut_model(mutate(uca, m)))
    return str(path)


def test_run_oracle_passes(tmp_path, capsys):
    code = main(["run", "--suite", UCA_SUITE, "--model", UCA_AUT, "--n", "5", "--out", str(tmp_path)])
    assert code == 0
    report = _load(tmp_path / "uca-seed0.json")
    (case,) = report["test_cases"]
    assert case["verdict"] == "PASS"
    assert case["consistency"]["estimated"] == 1.0  # oracle sigmas are all zero
    assert case["consistency"]["observed"] == 1.0
    assert case["execution"]["iolts"]["initial"] == "q0"
    assert "artemis-news: PASS" in capsys.readouterr().out


def test_run_strict_suite_consistency_is_exact(tmp_path):
    code = main(["run", "--suite", SHOP_SUITE, "--model", str(fixtures.path("shop.aut")),
                 "--n", "10", "--out", str(tmp_path / "r.json")])
    assert code == 0
    for case in _load(tmp_path / "r.json")["test_cases"]:
        c = case["consistency"]
        assert (c["estimated"], c["observed"], c["mre"]) == (1.0, 1.0, 0.0)


def test_run_on_redirect_mutant_fails(tmp_path, uca, capsys):
    model = _mutant_file(tmp_path, uca, Mutation.redirect("eu", "Click 'ALL NEWS'", "home"))
    code = main(["run", "--suite", UCA_SUITE, "--model", model, "--out", str(tmp_path / "r.json")])
    assert code == 1
    case = _load(tmp_path / "r.json")["test_cases"][0]
    assert case["verdict"] == "FAIL" and case["failing_step"] == 5


def test_run_on_remove_mutant_is_inconclusive(tmp_path, uca):
    model = _mutant_file(tmp_path, uca, Mutation.remove_element("eu", "e1"))
    assert main(["run", "--suite", UCA_SUITE, "--model", model, "--out", str(tmp_path / "r.json")]) == 2


def test_missing_model_file(tmp_path, capsys):
    code = main(["run", "--suite", UCA_SUITE, "--model", str(tmp_path / "nope.aut"), "--out", str(tmp_path)])
    assert code == 3
    assert "nope.aut" in capsys.readouterr().err


@pytest.mark.parametrize("extra", [["--fault-nav", "2:Error"], ["--n", "0"], ["--fault-assert", "0.5:Lie"]])
def test_bad_configuration(tmp_path, extra):
    assert main(["run", "--suite", UCA_SUITE, "--model", UCA_AUT, "--out", str(tmp_path), *extra]) == 3


def test_run_is_deterministic(tmp_path):
    docs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        main(["run", "--suite", UCA_SUITE, "--model", UCA_AUT, "--n", "30", "--seed", "11",
              "--fault-nav", "0.7:Hallucinate", "--fault-assert", "0.8:Hallucinate", "--out", str(out)])
        doc = _load(out)
        assert doc.pop("generated_at")
        docs.append(doc)
    assert docs[0] == docs[1]


def test_eval_agents_oracle(tmp_path):
    assert main(["eval-agents", "--suite", UCA_EVAL, "--model", UCA_AUT, "--n", "3", "--out", str(tmp_path)]) == 0
    doc = _load(tmp_path / "uca-eval-seed0-sigmas.json")
    assert {r: v["sigma"] for r, v in doc["roles"].items()} == {"nav": 0.0, "readiness": 0.0, "assert": 0.0}


def test_eval_agents_nav_fault(tmp_path):
    main(["eval-agents", "--suite", UCA_EVAL, "--model", UCA_AUT, "--n", "1500", "--seed", "2",
          "--fault-nav", "0.9:Error", "--out", str(tmp_path)])
    doc = _load(tmp_path / "uca-eval-seed2-sigmas.json")
    assert abs(doc["roles"]["nav"]["sigma"] - 0.3) < 0.02
    assert doc["roles"]["assert"]["sigma"] == 0.0


def test_eval_agents_requires_expectations(tmp_path, capsys):
    assert main(["eval-agents", "--suite", UCA_SUITE, "--model", UCA_AUT, "--out", str(tmp_path)]) == 3
    assert "expectations" in capsys.readouterr().err


def test_eval_agents_unreachable_llm(tmp_path, capsys):
    code = main(["eval-agents", "--suite", UCA_EVAL, "--model", UCA_AUT, "--agents", "llm",
                 "--endpoint", "http://127.0.0.1:9/v1/chat/completions", "--timeout-ms", "300",
                 "--out", str(tmp_path)])
    assert code == 0
    doc = _load(tmp_path / "uca-eval-seed0-sigmas.json")
    assert all(v["p_hat"] == 0.0 for v in doc["roles"].values())
    assert all(doc["agent_errors"].values())
    assert "agent errors" in capsys.readouterr().err


def _sigma_file(tmp_path, nav, readiness, asrt):
    path = tmp_path / "sig.json"
    roles = {"nav": nav, "readiness": readiness, "assert": asrt}
    path.write_text(json.dumps({"kind": "sigma-report", "seed": 0, "runs": 1,
                                "roles": {r: {"sigma": s} for r, s in roles.items()}}))
    return str(path)


def test_analyze_llama_row(tmp_path, capsys):
    sig = _sigma_file(tmp_path, 0.038, 0.149, 0.132)
    assert main(["analyze", "--suite", UCA_SUITE, "--sigmas", sig, "--out", str(tmp_path)]) == 0
    assert "Prop. 1 condition met" in capsys.readouterr().out
    doc = _load(tmp_path / "uca-seed0-analysis.json")
    assert doc["three_sigma"] == {"nav": True, "readiness": True, "assert": True}


def test_analyze_qwen_row(tmp_path, capsys):
    sig = _sigma_file(tmp_path, 0.158, 0.348, 0.431)
    main(["analyze", "--suite", UCA_SUITE, "--sigmas", sig, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert "Prop. 1 condition not met (readiness, assert)" in out
    assert "claim: no guarantee" in out


def test_analyze_all_strict_suite(tmp_path, capsys):
    sig = _sigma_file(tmp_path, 0.038, 0.5, 0.5)
    main(["analyze", "--suite", SHOP_SUITE, "--sigmas", sig, "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert out.count("Prop. 2 condition met") == 3


def test_analyze_malformed_report(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["analyze", "--suite", UCA_SUITE, "--sigmas", str(bad)]) == 3


def test_ioco_commands(tmp_path, uca, capsys):
    assert main(["ioco", "--model", UCA_AUT]) == 0
    impl = _mutant_file(tmp_path, uca, Mutation.redirect("home", "Click 'European University'", "news"))
    assert main(["ioco", "--model", UCA_AUT, "--impl", impl, "--max-depth", "8"]) == 1
    assert "violation after" in capsys.readouterr().out


def test_config_file_supplies_defaults(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"suite": UCA_SUITE, "model": UCA_AUT, "n": 2, "seed": 5,
                               "out": str(tmp_path / "out")}))
    assert main(["run", "--config", str(cfg)]) == 0
    assert _load(tmp_path / "out" / "uca-seed5.json")["runs_per_case"] == 2
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert main(["run", "--config", str(cfg)]) == 3


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "nlguard.cli", "run", "--suite", UCA_SUITE, "--model", UCA_AUT,
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
