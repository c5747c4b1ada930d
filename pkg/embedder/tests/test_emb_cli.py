"""Command line behavior: flows, output contract, exit codes."""

import shutil
import subprocess
import sys

import numpy as np
import pytest

from reachemb import read_remb, write_rten
from reachemb.cli import main

SIDE = 9


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def out_value(out, key):
    for line in out.splitlines():
        if line.startswith(key + "="):
            return line.split("=", 1)[1]
    raise AssertionError(f"no {key}= line in {out!r}")


@pytest.fixture
def inputs(tmp_path):
    tensors = str(tmp_path / "s.rten")
    rng = np.random.default_rng(3)
    stack = rng.poisson(1.2, size=(30, SIDE, SIDE, 2)).astype(np.float64)
    write_rten(tensors, stack)
    with open(tensors + ".idx", "w") as fh:
        fh.writelines(f"{10 + i},{20 + i}\n" for i in range(30))
    return tensors


def train_ckpt(capsys, tmp_path, inputs, **extra):
    ckpt = str(tmp_path / "m.ckpt")
    argv = [
        "train", "--tensors", inputs, "--dr", 4, "--epochs", 2,
        "--seed", 1, "--out", ckpt, "--batch-size", 16,
    ]
    for key, val in extra.items():
        argv += [key, val]
    code, out, _ = run(capsys, *argv)
    assert code == 0
    return ckpt, out


def test_train_reports_curve_and_writes_checkpoint(capsys, tmp_path, inputs):
    ckpt, out = train_ckpt(capsys, tmp_path, inputs)
    assert out_value(out, "samples") == "30"
    assert int(out_value(out, "parameters")) > 0
    epochs = [line for line in out.splitlines() if line.startswith("epoch=")]
    assert len(epochs) == 3
    assert epochs[0].startswith("epoch=0 ")
    for line in epochs:
        assert " rec=" in line and " con=" in line and " total=" in line
    assert f"wrote {ckpt}" in out


def test_train_loss_lines_decompose(capsys, tmp_path, inputs):
    # printed at 6 significant digits, so compare relatively
    _, out = train_ckpt(capsys, tmp_path, inputs, **{"--lambda": 0.5})
    seen = 0
    for line in out.splitlines():
        if not line.startswith("epoch="):
            continue
        fields = dict(part.split("=") for part in line.split())
        total = float(fields["rec"]) + 0.5 * float(fields["con"])
        assert float(fields["total"]) == pytest.approx(total, rel=1e-5)
        seen += 1
    assert seen == 3


def test_encode_writes_table(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    out_path = str(tmp_path / "e.remb")
    code, out, _ = run(capsys, "encode", "--ckpt", ckpt, "--tensors", inputs,
                       "--out", out_path)
    assert code == 0
    assert out_value(out, "embeddings") == "30"
    nodes, vectors = read_remb(out_path)
    assert len(nodes) == 30
    assert vectors.shape == (30, 4)
    assert np.min(vectors) >= 0.0


def test_encode_is_deterministic(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    a = str(tmp_path / "a.remb")
    b = str(tmp_path / "b.remb")
    assert run(capsys, "encode", "--ckpt", ckpt, "--tensors", inputs, "--out", a)[0] == 0
    assert run(capsys, "encode", "--ckpt", ckpt, "--tensors", inputs, "--out", b)[0] == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_check_jacobian_passes_on_fresh_checkpoint(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    code, out, _ = run(capsys, "check-jacobian", "--ckpt", ckpt, "--samples", 2)
    assert code == 0
    assert "jacobian check: pass" in out
    assert float(out_value(out, "max_rel_error")) < 1e-3


def test_check_jacobian_reads_samples_from_stack(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    code, out, _ = run(capsys, "check-jacobian", "--ckpt", ckpt,
                       "--tensors", inputs, "--samples", 2)
    assert code == 0
    assert out_value(out, "samples") == "2"


def test_check_jacobian_fails_on_absurd_tolerance(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    code, out, _ = run(capsys, "check-jacobian", "--ckpt", ckpt,
                       "--samples", 1, "--tolerance", 1e-30)
    assert code == 1
    assert "jacobian check: fail" in out


def test_train_missing_tensors_exits_2(capsys, tmp_path):
    code, _, err = run(capsys, "train", "--tensors", tmp_path / "nope.rten",
                       "--out", tmp_path / "m.ckpt")
    assert code == 2
    assert "error" in err


def test_train_bad_dr_exits_3(capsys, tmp_path, inputs):
    code, _, _ = run(capsys, "train", "--tensors", inputs, "--dr", 0,
                     "--out", tmp_path / "m.ckpt")
    assert code == 3


def test_corrupt_checkpoint_exits_2(capsys, tmp_path, inputs):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"junk")
    code, _, _ = run(capsys, "encode", "--ckpt", bad, "--tensors", inputs,
                     "--out", tmp_path / "e.remb")
    assert code == 2


def test_side_mismatch_exits_2(capsys, tmp_path, inputs):
    ckpt, _ = train_ckpt(capsys, tmp_path, inputs)
    other = str(tmp_path / "other.rten")
    write_rten(other, np.zeros((2, 11, 11, 2)))
    open(other + ".idx", "w").write("1,1\n2,2\n")
    code, _, _ = run(capsys, "encode", "--ckpt", ckpt, "--tensors", other,
                     "--out", tmp_path / "e.remb")
    assert code == 2


def test_unknown_command_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 3


def test_missing_required_flag_exits_3(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--out", "x.ckpt"])
    assert exc.value.code == 3


def test_help_exits_0(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "reachemb.cli", "encode", "--ckpt",
         str(tmp_path / "none.ckpt"), "--tensors", str(tmp_path / "none.rten"),
         "--out", str(tmp_path / "e.remb")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2


@pytest.mark.skipif(shutil.which("reachemb") is None, reason="script not on PATH")
def test_console_script(tmp_path):
    proc = subprocess.run(
        ["reachemb", "check-jacobian", "--ckpt", str(tmp_path / "none.ckpt")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
