import json

import numpy as np
import pytest

from domaingap.cli import main
from domaingap.config import config_from_dict, load_config
from domaingap.pipeline import StageError, derive_seed, run_full, write_report
from tests.conftest import (save_png, solid_image, write_coco_manifest,
                            write_gaussian_embeddings)

HEADER = "image_id,true_label,predicted_label,split\n"


def make_config(dataset, tmp_path, stages, extra=None):
    doc = {
        "seed": 7,
        "out_dir": str(tmp_path / "out"),
        "stages": stages,
        "collections": dataset["collections"],
        "texture": {"patch_side": 8, "patches_per_image": 2},
    }
    if extra:
        doc.update(extra)
    return config_from_dict(doc)


def write_config_file(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


class TestConfig:
    def test_toml_and_json_agree(self, tmp_path):
        body_toml = 'seed = 3\nstages = ["color"]\n[color]\nhue_bins = 32\n'
        (tmp_path / "c.toml").write_text(body_toml)
        (tmp_path / "c.json").write_text(
            json.dumps({"seed": 3, "stages": ["color"],
                        "color": {"hue_bins": 32}}))
        a = load_config(tmp_path / "c.toml")
        b = load_config(tmp_path / "c.json")
        assert a == b
        assert a.color.hue_bins == 32

    def test_unknown_stage_rejected(self):
        with pytest.raises(ValueError, match="unknown stages"):
            config_from_dict({"stages": ["colour"]})

    def test_derive_seed_stable(self):
        assert derive_seed(7, "texture") == derive_seed(7, "texture")
        assert derive_seed(7, "texture") != derive_seed(7, "color")
        assert derive_seed(7, "texture") != derive_seed(8, "texture")


class TestColorStage:
    def test_identical_collections_correlate_one(self, synthetic_dataset,
                                                 tmp_path):
        colls = {k: synthetic_dataset["collections"]["syn"]
                 for k in ("a", "b")}
        cfg = config_from_dict({"out_dir": str(tmp_path / "o"),
                                "stages": ["color"], "collections": colls})
        report = run_full(cfg)
        vals = report["color"]["pairs"]["a|b"]
        assert vals["day"] == pytest.approx(1.0, abs=1e-12)
        assert vals["night"] == pytest.approx(1.0, abs=1e-12)

    def test_pair_combinatorics(self, synthetic_dataset, tmp_path):
        cfg = make_config(synthetic_dataset, tmp_path, ["color"])
        report = run_full(cfg)
        assert sorted(report["color"]["pairs"]) == [
            "real|syn", "real|syn2real", "syn|syn2real"]

    def test_disjoint_hues_anticorrelated(self, synthetic_dataset, tmp_path):
        # syn day is all-red (bin 0), real day all-green (bin 21): two
        # distinct one-hot 64-vectors have r = -1/63.
        cfg = make_config(synthetic_dataset, tmp_path, ["color"])
        report = run_full(cfg)
        assert report["color"]["pairs"]["real|syn"]["day"] == pytest.approx(
            -1 / 63, abs=1e-12)

    def test_per_image_mean_flag_recorded(self, synthetic_dataset, tmp_path):
        cfg = make_config(synthetic_dataset, tmp_path, ["color"],
                          {"color": {"per_image_mean": True}})
        report = run_full(cfg)
        assert report["color"]["per_image_mean"] is True


class TestFidStage:
    def make_fid_config(self, tmp_path, depths=(64,)):
        rng = np.random.default_rng(0)
        emb = {}
        for name, shift in (("syn", 2.0), ("real", 0.0), ("syn2real", 0.5)):
            out = tmp_path / "emb" / name
            for d in depths:
                write_gaussian_embeddings(out, d, rng, mean_shift=shift,
                                          source=name)
            emb[name] = str(out)
        return config_from_dict({
            "out_dir": str(tmp_path / "o"), "stages": ["fid"],
            "fid": {"embeddings": emb, "depths": list(depths)}})

    def test_structure_and_baseline_one(self, tmp_path):
        cfg = self.make_fid_config(tmp_path, (64, 192))
        report = run_full(cfg)
        depths = report["fid"]["depths"]
        assert sorted(depths) == ["192", "64"]
        for entry in depths.values():
            assert set(entry["raw"]) == {"real|syn", "real|syn2real",
                                         "syn|syn2real"}
            assert entry["normalized"]["syn"] == 1.0
            assert 0 < entry["normalized"]["syn2real"] < 1  # closer to real

    def test_missing_file_names_path(self, tmp_path):
        cfg = self.make_fid_config(tmp_path, (64,))
        cfg.fid.depths = [64, 2048]
        with pytest.raises(StageError, match="depth_2048.emb"):
            run_full(cfg)


class TestClassificationStage:
    def test_comparisons(self, tmp_path):
        files = {}
        # baseline: deer 2/4 wrong; variant: deer 1/4 wrong
        rows = {
            "real": ["i1,deer,deer,cis", "i2,deer,deer,cis",
                     "i3,deer,coyote,cis", "i4,deer,coyote,cis",
                     "i5,coyote,coyote,cis"],
            "syn2real": ["i1,deer,deer,cis", "i2,deer,deer,cis",
                         "i3,deer,deer,cis", "i4,deer,coyote,cis",
                         "i5,coyote,coyote,cis"],
        }
        for regime, lines in rows.items():
            path = tmp_path / f"{regime}.csv"
            path.write_text(HEADER + "\n".join(lines) + "\n")
            files[regime] = str(path)
        cfg = config_from_dict({
            "out_dir": str(tmp_path / "o"), "stages": ["classification"],
            "classification": {"predictions": files, "baseline": "real",
                               "class_of_interest": "deer"}})
        report = run_full(cfg)
        comp = report["classification"]["comparisons"]["syn2real"]["cis"]
        assert comp["baseline_error"] == pytest.approx(0.5)
        assert comp["variant_error"] == pytest.approx(0.25)
        assert comp["relative_decrease_pct"] == pytest.approx(50.0)


class TestFullRun:
    def test_stage_selection(self, synthetic_dataset, tmp_path):
        cfg = make_config(synthetic_dataset, tmp_path, ["color"])
        report = run_full(cfg)
        assert "color" in report
        assert "texture" not in report and "fid" not in report

    def test_failure_aborts_without_partial_output(self, synthetic_dataset,
                                                   tmp_path):
        cfg = make_config(synthetic_dataset, tmp_path, ["color", "fid"])
        with pytest.raises(StageError, match="fid"):
            run_full(cfg)
        assert not (tmp_path / "out").exists()

    def test_report_files_deterministic(self, synthetic_dataset, tmp_path):
        cfg = make_config(synthetic_dataset, tmp_path, ["color", "texture"])
        r1 = run_full(cfg)
        r2 = run_full(cfg)
        out1 = write_report(r1, tmp_path / "o1")
        out2 = write_report(r2, tmp_path / "o2")
        assert [p.name for p in out1] == [p.name for p in out2]
        for p1, p2 in zip(out1, out2):
            assert p1.read_bytes() == p2.read_bytes()

    def test_warnings_for_missing_bbox(self, tmp_path, synthetic_dataset):
        save_png(tmp_path / "imgs" / "a.png", solid_image((200, 0, 0)).pixels)
        save_png(tmp_path / "imgs" / "b.png", solid_image((0, 200, 0)).pixels)
        manifest = write_coco_manifest(
            tmp_path / "m.json",
            [{"file_name": "a.png", "label": "deer", "bbox": (0, 0, 32, 32),
              "size": (32, 32)},
             {"file_name": "b.png", "label": "deer", "size": (32, 32)}],
            ["deer"])
        colls = dict(synthetic_dataset["collections"])
        colls["extra"] = {"manifest": str(manifest),
                          "images_root": str(tmp_path / "imgs")}
        cfg = config_from_dict({"out_dir": str(tmp_path / "o"),
                                "stages": ["color"], "collections": colls})
        report = run_full(cfg)
        assert any("no bbox" in w for w in report["warnings"])


class TestCliVerbs:
    def test_ingest_and_subsample(self, tmp_path, capsys):
        entries = [{"file_name": f"{i}.png", "label": "deer", "id": f"d{i}"}
                   for i in range(10)]
        manifest = write_coco_manifest(tmp_path / "m.json", entries, ["deer"])
        out = tmp_path / "sub.json"
        code = main(["ingest", "--manifest", str(manifest), "--out", str(out),
                     "--subsample-class", "deer", "--subsample-n", "4",
                     "--seed", "1"])
        assert code == 0
        assert "4 records" in capsys.readouterr().out
        doc = json.loads(out.read_text())
        assert len(doc["images"]) == 4

    def test_split_verb(self, tmp_path, capsys):
        save_png(tmp_path / "imgs" / "a.png", solid_image((30, 30, 30)).pixels)
        manifest = write_coco_manifest(
            tmp_path / "m.json", [{"file_name": "a.png", "label": "deer"}],
            ["deer"])
        out = tmp_path / "split.json"
        code = main(["split", "--manifest", str(manifest),
                     "--images-root", str(tmp_path / "imgs"),
                     "--out", str(out)])
        assert code == 0
        assert "0 day / 1 night" in capsys.readouterr().out

    def test_full_verb_writes_report(self, synthetic_dataset, tmp_path):
        doc = {"seed": 1, "out_dir": str(tmp_path / "out"),
               "stages": ["color"],
               "collections": synthetic_dataset["collections"]}
        cfg_path = write_config_file(tmp_path / "cfg.json", doc)
        assert main(["full", "--config", cfg_path]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert "color" in report
        assert (tmp_path / "out" / "report_color.csv").exists()

    def test_seed_override(self, synthetic_dataset, tmp_path):
        doc = {"seed": 1, "out_dir": str(tmp_path / "out"),
               "stages": ["color"],
               "collections": synthetic_dataset["collections"]}
        cfg_path = write_config_file(tmp_path / "cfg.json", doc)
        assert main(["full", "--config", cfg_path, "--seed", "9"]) == 0
        report = json.loads((tmp_path / "out" / "report.json").read_text())
        assert report["run_config"]["seed"] == 9

    def test_fid_verb_missing_embeddings_nonzero_exit(self, tmp_path, capsys):
        doc = {"out_dir": str(tmp_path / "out"), "stages": ["fid"],
               "fid": {"embeddings": {"syn": str(tmp_path / "nope"),
                                      "real": str(tmp_path / "nope")},
                       "depths": [64]}}
        cfg_path = write_config_file(tmp_path / "cfg.json", doc)
        assert main(["fid", "--config", cfg_path]) == 1
        err = capsys.readouterr().err
        assert "depth_64.emb" in err
        assert not (tmp_path / "out").exists()
