import json

import numpy as np
import pytest

from roverkit.cli import main
from roverkit.decoders import BLANK_TOKEN, JointGrid, PosteriorGrid, save_joint_grid, save_posterior_grid
from roverkit.segmenter import SegmentParams, segment_manifest, serialize_segments
from roverkit.transcripts import Hypothesis, Word, load_hypotheses, save_hypotheses


def hyp(text: str, system: str, utt: str, conf: float = 1.0) -> Hypothesis:
    return Hypothesis(utt, system, tuple(Word(token, conf) for token in text.split()))


def write_hyps(path, texts: dict[str, str], system: str) -> None:
    save_hypotheses(path, [hyp(text, system, utt) for utt, text in texts.items()])


@pytest.fixture
def ensemble(tmp_path):
    write_hyps(tmp_path / "a.jsonl", {"u1": "the cat sat", "u2": "hello world"}, "s1")
    write_hyps(tmp_path / "b.jsonl", {"u1": "the bat sat", "u2": "hello world"}, "s2")
    write_hyps(tmp_path / "c.jsonl", {"u1": "the cat sat", "u2": "hello word"}, "s3")
    return tmp_path


class TestCombine:
    def test_fuses_and_traces(self, ensemble):
        out = ensemble / "fused.jsonl"
        trace = ensemble / "trace.jsonl"
        code = main(
            [
                "combine",
                "--inputs",
                str(ensemble / "a.jsonl"),
                str(ensemble / "b.jsonl"),
                str(ensemble / "c.jsonl"),
                "--out",
                str(out),
                "--trace",
                str(trace),
            ]
        )
        assert code == 0
        fused = load_hypotheses(out)
        assert [h.utterance_id for h in fused] == ["u1", "u2"]
        assert fused[0].tokens() == ["the", "cat", "sat"]
        assert fused[1].tokens() == ["hello", "world"]
        assert all(h.system_id == "rover" for h in fused)
        lines = [json.loads(line) for line in trace.read_text().splitlines()]
        assert [blob["utt"] for blob in lines] == ["u1", "u2"]
        for blob in lines:
            for decision in blob["sets"]:
                assert set(decision) == {
                    "winner", "winner_score", "runner_up", "runner_up_score", "tie",
                }
                if decision["runner_up_score"] is not None:
                    assert decision["winner_score"] >= decision["runner_up_score"]

    def test_stdout_default(self, ensemble, capsys):
        code = main(["combine", "--inputs", str(ensemble / "a.jsonl")])
        assert code == 0
        out = capsys.readouterr().out
        assert [json.loads(line)["utt"] for line in out.splitlines()] == ["u1", "u2"]

    def test_mismatched_coverage_is_data_error(self, ensemble, capsys):
        write_hyps(ensemble / "d.jsonl", {"u1": "the cat sat"}, "s4")
        code = main(
            ["combine", "--inputs", str(ensemble / "a.jsonl"), str(ensemble / "d.jsonl")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["combine"])
        assert excinfo.value.code == 1

    def test_missing_file_exits_2(self, tmp_path, capsys):
        assert main(["combine", "--inputs", str(tmp_path / "nope.jsonl")]) == 2
        assert "error:" in capsys.readouterr().err


class TestDecode:
    def make_grids(self, tmp_path):
        grids = tmp_path / "grids"
        grids.mkdir()
        probs = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        with np.errstate(divide="ignore"):
            grid = PosteriorGrid((BLANK_TOKEN, "a", "b"), np.log(probs))
        save_posterior_grid(grid, grids / "u1.pgrid")
        save_posterior_grid(grid, grids / "u2.pgrid")
        return grids

    def test_greedy_on_directory(self, tmp_path, capsys):
        grids = self.make_grids(tmp_path)
        assert main(["decode", "ctc", "--grid", str(grids)]) == 0
        lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [blob["utt"] for blob in lines] == ["u1", "u2"]

    def test_single_file_utt_override(self, tmp_path):
        grids = self.make_grids(tmp_path)
        out = tmp_path / "decoded.jsonl"
        code = main(
            [
                "decode", "ctc",
                "--grid", str(grids / "u1.pgrid"),
                "--mode", "beam",
                "--beam", "16",
                "--utt", "take42",
                "--out", str(out),
            ]
        )
        assert code == 0
        (decoded,) = load_hypotheses(out)
        assert decoded.utterance_id == "take42"
        assert decoded.system_id == "ctc-beam"
        assert decoded.tokens() == ["a", "b"]

    def test_rnnt(self, tmp_path, capsys):
        grids = tmp_path / "jgrids"
        grids.mkdir()
        cells = np.array([[[9.0, 0.0, 0.0], [0.0, 0.0, 9.0]]])
        save_joint_grid(JointGrid(("a", "b"), cells), grids / "u1.jgrid")
        assert main(["decode", "rnnt", "--grid", str(grids)]) == 0
        (blob,) = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert blob["utt"] == "u1"

    def test_missing_grid_path(self, tmp_path, capsys):
        assert main(["decode", "ctc", "--grid", str(tmp_path / "nope")]) == 2
        assert "error:" in capsys.readouterr().err


class TestSegment:
    def test_matches_library(self, tmp_path, capsys):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("talk\t47.5\npodcast\t123.0\n")
        assert main(["segment", "--manifest", str(manifest), "--min", "4", "--max", "9", "--seed", "7"]) == 0
        out = capsys.readouterr().out
        with open(manifest, encoding="utf-8") as stream:
            expected = serialize_segments(
                segment_manifest(stream, SegmentParams(4.0, 9.0, seed=7))
            )
        assert out == expected

    def test_root_seed_position(self, tmp_path, capsys):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("talk\t50.0\n")
        assert main(["--seed", "5", "segment", "--manifest", str(manifest)]) == 0
        root_form = capsys.readouterr().out
        assert main(["segment", "--manifest", str(manifest), "--seed", "5"]) == 0
        assert capsys.readouterr().out == root_form

    def test_malformed_manifest(self, tmp_path, capsys):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("talk\n")
        assert main(["segment", "--manifest", str(manifest)]) == 2
        assert "line 1" in capsys.readouterr().err


class TestScore:
    def setup_files(self, tmp_path, with_times: bool = False):
        if with_times:
            words = tuple(
                Word(token, 1.0, float(k), float(k + 1))
                for k, token in enumerate(["the", "cat", "sat"])
            )
            refs = [Hypothesis("u1", "ref", words), hyp("hello world", "ref", "u2")]
            refs[1] = Hypothesis(
                "u2", "ref", tuple(Word(w.token, 1.0, 50.0, 60.0) for w in refs[1].words)
            )
            save_hypotheses(tmp_path / "refs.jsonl", refs)
        else:
            write_hyps(
                tmp_path / "refs.jsonl", {"u1": "The cat sat", "u2": "Hello world"}, "ref"
            )
        write_hyps(
            tmp_path / "hyps.jsonl", {"u1": "the cat sat", "u2": "hello word"}, "m"
        )

    def test_wer_json(self, tmp_path, capsys):
        self.setup_files(tmp_path)
        code = main(
            ["score", "wer", "--ref", str(tmp_path / "refs.jsonl"), "--hyp", str(tmp_path / "hyps.jsonl")]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["substitutions"] == 1
        assert report["ref_words"] == 5
        assert report["wer"] == pytest.approx(0.2)
        assert "buckets" not in report

    def test_no_normalize_scores_case(self, tmp_path, capsys):
        self.setup_files(tmp_path)
        code = main(
            [
                "score", "wer",
                "--ref", str(tmp_path / "refs.jsonl"),
                "--hyp", str(tmp_path / "hyps.jsonl"),
                "--no-normalize",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["substitutions"] == 3

    def test_durations_file_buckets(self, tmp_path, capsys):
        self.setup_files(tmp_path)
        durations = tmp_path / "d.tsv"
        durations.write_text("u1\t10.0\nu2\t90.0\n")
        code = main(
            [
                "score", "wer",
                "--ref", str(tmp_path / "refs.jsonl"),
                "--hyp", str(tmp_path / "hyps.jsonl"),
                "--durations", str(durations),
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["buckets"]["short"]["ref_words"] == 3
        assert report["buckets"]["long"]["substitutions"] == 1

    def test_word_times_fall_back_as_durations(self, tmp_path, capsys):
        self.setup_files(tmp_path, with_times=True)
        code = main(
            ["score", "wer", "--ref", str(tmp_path / "refs.jsonl"), "--hyp", str(tmp_path / "hyps.jsonl")]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report["buckets"]) == {"short", "long"}

    def test_incomplete_durations(self, tmp_path, capsys):
        self.setup_files(tmp_path)
        durations = tmp_path / "d.tsv"
        durations.write_text("u1\t10.0\n")
        code = main(
            [
                "score", "wer",
                "--ref", str(tmp_path / "refs.jsonl"),
                "--hyp", str(tmp_path / "hyps.jsonl"),
                "--durations", str(durations),
            ]
        )
        assert code == 2
        assert "durations missing" in capsys.readouterr().err

    def test_duplicate_utterance(self, tmp_path, capsys):
        self.setup_files(tmp_path)
        save_hypotheses(
            tmp_path / "refs.jsonl",
            [hyp("a", "r1", "u1"), hyp("b", "r2", "u1"), hyp("c", "r1", "u2")],
        )
        code = main(
            ["score", "wer", "--ref", str(tmp_path / "refs.jsonl"), "--hyp", str(tmp_path / "hyps.jsonl")]
        )
        assert code == 2

    def test_gap(self, capsys):
        assert main(["score", "gap", "--teacher", "0.125", "--student", "0.155"]) == 0
        out = capsys.readouterr().out
        assert "increase +24.00%" in out

    def test_gap_rejects_zero_teacher(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["score", "gap", "--teacher", "0", "--student", "0.1"])
        assert excinfo.value.code == 1


class TestSimulate:
    ARGS = [
        "simulate",
        "--teachers", "2",
        "--sentences", "6",
        "--words", "6",
        "--vocab", "25",
        "--sub-rate", "0.2",
        "--seed", "3",
    ]

    def test_runs_and_is_deterministic(self, capsys):
        assert main(self.ARGS) == 0
        first = capsys.readouterr().out
        report = json.loads(first)
        assert set(report) == {
            "per_teacher_wer", "fused_wer", "best_single_wer", "gain_percent",
        }
        assert set(report["per_teacher_wer"]) == {"teacher1", "teacher2"}
        assert main(self.ARGS) == 0
        assert capsys.readouterr().out == first


class TestDistill:
    def write_config(self, tmp_path, **extra) -> str:
        write_hyps(tmp_path / "a.jsonl", {"u1": "the cat", "u2": "dog"}, "x")
        write_hyps(tmp_path / "b.jsonl", {"u1": "the bat", "u2": "dog"}, "y")
        payload = {
            "teachers": [
                {"system_id": "alpha", "hypotheses": "a.jsonl"},
                {"system_id": "beta", "hypotheses": "b.jsonl"},
            ],
            **extra,
        }
        path = tmp_path / "config.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_writes_manifest_and_summary(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        out = tmp_path / "pseudo.jsonl"
        assert main(["distill", "--config", config, "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["emitted"] == 2
        lines = out.read_text().splitlines()
        assert [json.loads(line)["utt"] for line in lines] == ["u1", "u2"]

    def test_config_output_used_without_out(self, tmp_path):
        config = self.write_config(tmp_path, output="from_config.jsonl")
        assert main(["distill", "--config", config]) == 0
        assert (tmp_path / "from_config.jsonl").exists()

    def test_worker_flag_positions_agree(self, tmp_path, capsys):
        config = self.write_config(tmp_path)
        outputs = {}
        for name, argv in {
            "sub": ["distill", "--config", config, "--workers", "4", "--out"],
            "root": ["--workers", "4", "distill", "--config", config, "--out"],
            "serial": ["distill", "--config", config, "--out"],
        }.items():
            target = tmp_path / f"{name}.jsonl"
            assert main(argv + [str(target)]) == 0
            capsys.readouterr()
            outputs[name] = target.read_bytes()
        assert outputs["sub"] == outputs["root"] == outputs["serial"]

    def test_needs_config_and_output(self, tmp_path, capsys):
        assert main(["distill"]) == 2
        assert "config" in capsys.readouterr().err
        config = self.write_config(tmp_path)
        assert main(["distill", "--config", config]) == 2
        assert "output" in capsys.readouterr().err


class TestReport:
    def test_table(self, tmp_path, capsys):
        write_hyps(tmp_path / "refs.jsonl", {"u1": "the cat sat"}, "ref")
        write_hyps(tmp_path / "m.jsonl", {"u1": "the cat sat"}, "m")
        code = main(
            [
                "report",
                "--refs", str(tmp_path / "refs.jsonl"),
                "--hyp", f"student={tmp_path / 'm.jsonl'}",
                "--teacher-wer", "student=0.10",
                "--baseline", "student=0.20",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split()[0] == "model"
        assert lines[1].split()[:2] == ["student", "0.0000"]
        assert "-100.00%" in lines[1]

    def test_tsv_format(self, tmp_path, capsys):
        write_hyps(tmp_path / "refs.jsonl", {"u1": "a b"}, "ref")
        write_hyps(tmp_path / "m.jsonl", {"u1": "a c"}, "m")
        code = main(
            [
                "report",
                "--refs", str(tmp_path / "refs.jsonl"),
                "--hyp", f"m={tmp_path / 'm.jsonl'}",
                "--format", "tsv",
            ]
        )
        assert code == 0
        rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()]
        assert rows[1][:2] == ["m", "0.5000"]

    def test_bad_name_value_is_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["report", "--refs", "r", "--hyp", "nopath"])
        assert excinfo.value.code == 1

    def test_requires_some_model(self, tmp_path, capsys):
        write_hyps(tmp_path / "refs.jsonl", {"u1": "a"}, "ref")
        assert main(["report", "--refs", str(tmp_path / "refs.jsonl")]) == 2
        assert "at least one" in capsys.readouterr().err


class TestTopLevel:
    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["frobnicate"])
        assert excinfo.value.code == 1

    def test_module_entry_point(self):
        import roverkit.__main__  # noqa: F401  (import must not execute main)
