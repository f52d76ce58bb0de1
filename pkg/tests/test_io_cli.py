import json
from pathlib import Path

import numpy as np
import pytest

from helpers import random_graph, random_timeline
from qfg import cli
from qfg.cli import main
from qfg.errors import FormatError
from qfg.graph import exterior_function
from qfg.io import dump_graph, dump_timeline, load_document, load_json, parse_graph, parse_timeline
from qfg.montecarlo import EstimatorReport
from qfg.quantum import joint_distribution

DATA = Path(__file__).resolve().parent.parent / "data"
RNG = np.random.default_rng(77)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, doc, name="doc.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return p


# file formats

def test_graph_round_trip():
    for _ in range(10):
        g = random_graph(RNG)
        doc = dump_graph(g)
        g2 = parse_graph(json.loads(json.dumps(doc))).graph
        assert g2.variables == g.variables
        for f, f2 in zip(g.factors, g2.factors):
            assert f.vars == f2.vars and np.array_equal(f.tensor, f2.tensor)
        assert dump_graph(g2) == doc


def test_timeline_round_trip():
    for _ in range(10):
        t = random_timeline(RNG)
        doc = dump_timeline(t)
        t2 = parse_timeline(json.loads(json.dumps(doc)))
        assert dump_timeline(t2) == doc
        assert np.array_equal(joint_distribution(t), joint_distribution(t2))


def test_format_errors_carry_location():
    with pytest.raises(FormatError, match="line 1"):
        load_json("{not json")
    doc = json.loads((DATA / "toy_3_1.json").read_text())
    doc["factors"][0]["data"] = doc["factors"][0]["data"][:1]
    with pytest.raises(FormatError, match=r"\$\.factors\[0\]"):
        parse_graph(doc)
    with pytest.raises(FormatError):
        parse_graph({"version": 1, "variables": [{"id": 0}], "factors": []})


def test_load_document_kind():
    assert load_document(DATA / "born_timeline.json")[0] == "timeline"
    assert load_document(DATA / "hmm_graph.json")[0] == "graph"


# contract

def test_contract_inner_box(capsys):
    code, out, _ = run(capsys, "contract", DATA / "three_factor_graph.json", "--box", "inner", "--oracle")
    assert code == 0
    gf = parse_graph(json.loads((DATA / "three_factor_graph.json").read_text()))
    ext = exterior_function(gf.graph, gf.boxes["inner"])
    lines = out.strip().splitlines()
    assert lines[0].split()[:3] == ["x2", "x4", "x5"]
    assert len(lines) == 1 + ext.size


def test_contract_partition_sum(capsys):
    code, out, _ = run(capsys, "contract", DATA / "hmm_graph.json", "--partition-sum", "--oracle")
    assert code == 0
    assert float(out.strip()) == pytest.approx(1.0, abs=1e-12)


def test_contract_orders_agree(capsys):
    outs = []
    for order in ("greedy", "forward", "backward"):
        code, out, _ = run(capsys, "contract", DATA / "three_factor_graph.json", "--box", "outer", "--order", order)
        assert code == 0
        outs.append(np.array([complex(l.split()[-1].replace("j", "j")) for l in out.splitlines()[1:]]))
    assert np.max(np.abs(outs[0] - outs[1])) <= 1e-10 and np.max(np.abs(outs[0] - outs[2])) <= 1e-10


def test_exit_code_parse_error(capsys, tmp_path):
    doc = json.loads((DATA / "toy_3_1.json").read_text())
    doc["factors"][0]["data"].append([0, 0])
    code, out, err = run(capsys, "contract", write(tmp_path, doc), "--partition-sum")
    assert code == 2 and out == ""
    assert "$.factors[0]" in err
    code, _, err = run(capsys, "validate", write(tmp_path, '{"version": 1,\n "variables": [', "bad.json"))
    assert code == 2 and "line 2" in err


def test_exit_code_semantic_error(capsys, tmp_path):
    doc = {
        "version": 1,
        "variables": [{"id": 0, "size": 2}],
        "factors": [{"gate": "sigma0", "vars": [0, 0]}, {"gate": "sigma1", "vars": [0, 0]}],
    }
    code, _, err = run(capsys, "contract", write(tmp_path, doc), "--partition-sum")
    assert code == 3 and "error" in err
    code, _, _ = run(capsys, "contract", DATA / "three_factor_graph.json", "--box", "nope")
    assert code == 3


def test_exit_code_oracle_mismatch(capsys, monkeypatch):
    monkeypatch.setattr(cli, "brute_force_exterior", lambda g, box=None, **kw: np.zeros(()) + 7.0)
    code, _, err = run(capsys, "contract", DATA / "hmm_graph.json", "--partition-sum", "--oracle")
    assert code == 4 and "mismatch" in err


def test_exit_code_resource_guard(capsys, tmp_path):
    n = 9
    doc = {
        "version": 1,
        "variables": [{"id": i, "size": 10} for i in range(n)],
        "factors": [{"gate": "identity", "vars": [i, i + 1]} for i in range(n - 1)],
    }
    code, _, err = run(capsys, "contract", write(tmp_path, doc), "--oracle")
    assert code == 5 and "resource" in err


# joint

def test_joint_two_measurements(capsys):
    code, out, _ = run(capsys, "joint", DATA / "two_measurements_timeline.json", "--json")
    assert code == 0
    d = json.loads(out)
    assert np.allclose(d["p"], [0.5, 0, 0, 0.5])


def test_joint_born(capsys):
    code, out, _ = run(capsys, "joint", DATA / "born_timeline.json")
    assert code == 0
    lines = out.strip().splitlines()
    assert [float(l.split()[-1]) for l in lines[1:3]] == pytest.approx([0.5, 0.5])
    assert lines[-1].startswith("total") and float(lines[-1].split()[-1]) == pytest.approx(1.0)


def test_joint_random_file_total(capsys, tmp_path):
    for i in range(5):
        p = write(tmp_path, dump_timeline(random_timeline(RNG)), f"t{i}.json")
        code, out, _ = run(capsys, "joint", p)
        assert code == 0
        assert abs(float(out.strip().splitlines()[-1].split()[-1]) - 1) <= 1e-10


def test_joint_condition_and_next(capsys):
    code, out, _ = run(capsys, "joint", DATA / "two_measurements_timeline.json", "--condition", "1=1", "--next")
    assert code == 0
    vals = [float(l.split()[-1]) for l in out.strip().splitlines()[1:3]]
    assert vals == pytest.approx([0.0, 1.0])


# qec

def test_qec_rep3_table(capsys):
    code, out, _ = run(capsys, "qec", "rep3", "--error", "0,1,0,0", "--location", "1")
    assert code == 0
    rows = {l.split("|")[0].split()[0] + l.split()[1]: l for l in out.splitlines()[2:]}
    assert rows["11"].split("|")[1].strip() == "1 σ1"
    for key in ("00", "01", "10"):
        assert rows[key].split("|")[1].strip() == "0"


def test_qec_shor_recover(capsys):
    code, out, _ = run(capsys, "qec", "shor", "--error", "random", "--location", "4", "--recover", "--seed", "3")
    assert code == 0
    assert "fidelity 1.000000000" in out


def test_qec_shor_location_one_inner_table(capsys):
    code, out, _ = run(capsys, "qec", "shor", "--error", "1,0,0,0", "--location", "1")
    assert code == 0
    assert " 0  0  w0 σ0 + w3 σ1" in out


def test_qec_bad_error(capsys):
    code, _, _ = run(capsys, "qec", "rep3", "--error", "1,2", "--location", "1")
    assert code == 3


# mc

def test_mc_toy(capsys):
    code, out, _ = run(capsys, "mc", DATA / "toy_3_1.json", "--scheme", "uniform", "-K", "100000", "--seed", "4")
    assert code == 0
    rep = EstimatorReport.from_dict(json.loads(out))
    assert abs(rep.estimate - 4) < 3 * rep.std_error


def test_mc_quantum_file(capsys):
    code, out, _ = run(capsys, "mc", DATA / "born_timeline.json", "--augment", "--seed", "5")
    assert code == 0
    rep = EstimatorReport.from_dict(json.loads(out))
    assert rep.conjugate_augmented
    assert abs(rep.estimate - 1) <= 3 * rep.std_error + 1e-12


def test_mc_byte_identical(capsys):
    argv = ("mc", DATA / "toy_3_1.json", "-K", "5000", "--seed", "42", "--raw")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and a


def test_mc_report_round_trip(capsys):
    _, out, _ = run(capsys, "mc", DATA / "toy_3_1.json", "--ladder", "0.5", "-K", "2000")
    d = json.loads(out)
    assert EstimatorReport.from_dict(d).to_dict() == d


# validate

def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", DATA / "born_timeline.json")
    assert code == 0 and "timeline ok" in out
    doc = {
        "version": 1,
        "dimension": 2,
        "initial": {"known": 0},
        "steps": [{"measure": {"type": "general", "matrices": [
            {"shape": [2, 2], "data": [[0.5, 0], [0, 0], [0, 0], [0.5, 0]]}]}}],
    }
    code, out, _ = run(capsys, "validate", write(tmp_path, doc))
    assert code == 3 and "violation" in out
