import math
from pathlib import Path

import pytest

import ergolab

ROOT = Path(__file__).resolve().parents[2]
MODELS = ROOT / "models"
CONFIGS = ROOT / "configs"


def test_markov_model_rate_and_sampling():
    model = ergolab.load_model(MODELS / "markov_flip01.json")
    assert model.kind == "markov"
    h = -(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1))
    assert model.entropy_rate() == pytest.approx(h, abs=1e-12)
    word = model.sample(1000, 7)
    assert len(word) == 1000 and set(word) <= {0, 1}
    assert model.sample(1000, 7) == word
    dist = model.block_distribution(3)
    assert sum(dist.values()) == pytest.approx(1.0)
    assert dist[(0, 0, 0)] == pytest.approx(0.5 * 0.81)


def test_schemes_on_sampled_path():
    model = ergolab.load_model(MODELS / "iid_fair.json")
    word = model.sample(1 << 14, 3)
    assert ergolab.plugin(word) == pytest.approx(1.0, abs=0.05)
    assert ergolab.freq(word, 1, 2) == pytest.approx(0.5, abs=0.02)
    assert ergolab.estimate("freq:1", word, 2) == ergolab.freq(word, 1, 2)
    assert 0.5 < ergolab.lz78(word) < 1.5
    with pytest.raises(ergolab.ErgolabError) as info:
        ergolab.estimate("zip", word, 2)
    assert info.value.code == "unsupported-name"


def test_rotation_is_zero_entropy():
    model = ergolab.load_model(MODELS / "rotation_golden_third.json")
    assert model.entropy_rate() == 0.0
    assert model.cylinder_measure([1]) == pytest.approx(1 / 3, abs=1e-12)
    again = ergolab.parse_model(model.to_json())
    assert again.cylinder_measure([1, 0, 1]) == model.cylinder_measure([1, 0, 1])


def test_joint_model_and_codebooks():
    joint = ergolab.load_model(MODELS / "joint_coin_over_constant.json")
    assert isinstance(joint, ergolab.JointModel)
    p, q = joint.sample(64, 1)
    assert len(p) == len(q) == 64
    payload, same = ergolab.codebooks_roundtrip(joint, 32, 8, 0.125, 3200, seed=5)
    assert same
    assert payload[:8] == b"ERGOLABC"


def test_towers_and_budget():
    towers = ergolab.rohlin_tower(1000, 64, 0.2)
    assert towers.is_partition()
    assert towers.leftover_fraction() <= 0.2
    M, C = ergolab.compute_M(100, 0.5, 0.25, 16, 0.1)
    assert M == math.ceil(max(0.1, C) * 100)
    with pytest.raises(ergolab.ErgolabError):
        ergolab.compute_M(100, 0.5, 0.25, 16, 0.4)


def test_experiment_from_config():
    report = ergolab.run_experiment(CONFIGS / "relative_smb.json")
    assert report.passed
    assert report.csv().startswith("experiment,model,scheme,n,trial")
    assert all(v.passed for v in report.verdicts)
