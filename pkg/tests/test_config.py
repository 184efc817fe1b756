import pytest

from proxlab.config import TrainConfig, load_config
from proxlab.errors import ConfigError

BASE = {"algorithm": "proxquant", "epochs": 3, "dataset": {"kind": "blobs"}}


def cfg(**over):
    raw = {**BASE, **over}
    return TrainConfig.from_dict(raw)


class TestConfig:
    def test_defaults(self):
        c = cfg()
        assert c.schedule.eta == 0.01 and c.schedule.lam == 1e-4 and c.schedule.homotopy
        assert c.optimizer.name == "adam" and c.reg_spec.kind == "binary-l1"
        assert c.seeds == [0]

    @pytest.mark.parametrize("missing", ["algorithm", "epochs", "dataset"])
    def test_required(self, missing):
        raw = dict(BASE)
        del raw[missing]
        with pytest.raises(ConfigError, match=missing):
            TrainConfig.from_dict(raw)

    @pytest.mark.parametrize("over", [
        {"algorithm": "sgdq"},
        {"epochs": -1},
        {"colour": "red"},
        {"schedule": {"eta": 0.1, "typo": 1}},
        {"schedule": {"freeze_epoch": 9}},
        {"seeds": []},
        {"reg": {"kind": "smoothed-w"}},
        {"dataset": {"kind": "csv", "path": "does/not/exist.csv"}},
        {"dataset": {"kind": "objective", "name": "rosenbrock"}},
        {"optimizer": {"name": "adagrad"}},
        {"optimizer": {"prox_scaling": "sometimes"}},
        {"schedule": {"lam": "lots"}},
    ])
    def test_invalid(self, over):
        with pytest.raises(ConfigError):
            cfg(**over)

    def test_yaml_exponent_strings(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("algorithm: binaryconnect\nepochs: 2\ndataset: {kind: blobs}\nschedule: {lam: 1e-4}\n")
        assert load_config(p).schedule.lam == 1e-4

    def test_relative_csv_path(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,label\n1,0\n2,1\n")
        p = tmp_path / "c.yaml"
        p.write_text("algorithm: proxquant\nepochs: 1\ndataset: {kind: csv, path: d.csv}\n")
        assert load_config(p).dataset.path == str(tmp_path / "d.csv")

    def test_unparseable(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("algorithm: [unclosed\n")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")
