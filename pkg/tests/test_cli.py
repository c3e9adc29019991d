"""Command-line interface: subcommands, file formats, exit codes, determinism.

Everything runs in-process through ``saftlab.cli.main(argv)`` so exit codes
and emitted files are asserted directly.
"""

import json

import numpy as np
import pytest

from saftlab.cli import main
from saftlab.dynsamp import (
    filtered_levels,
    integer_sample_levels,
    measure_from_samples,
    sampled_generator,
)
from saftlab.grid import SeqFn, sample_generator, sampling_grid
from saftlab.io import read_grid, read_sequence, write_grid, write_params, write_sequence
from saftlab.lattice import build_lattice
from saftlab.params import preset
from saftlab.sis import build_sis, synthesize

TRUTH = {(0,): 1.0 + 0.0j, (2,): -1.0 + 0.0j, (3,): 0.5j}
FILTER_1D = {(0,): 1.0, (1,): 0.5}


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Shared fixture directory with params, grids, sequences, measurements."""
    d = tmp_path_factory.mktemp("cli")
    p1 = preset("ft", 1)
    write_params(d / "ft1.json", p1)
    write_params(d / "frft.json", preset("separable_frft", theta=[0.7]))

    g = sampling_grid(6, 16)
    phi = sample_generator("gaussian", g, sigma=0.6)
    write_grid(d / "phi1.grid", phi)
    write_grid(d / "gauss.grid", sample_generator("gaussian", g, sigma=0.8, center=0.3))

    filt = SeqFn.from_items(1, FILTER_1D)
    write_sequence(d / "filt1.csv", filt)
    write_sequence(d / "seq.csv", SeqFn.from_items(1, {(-1,): 0.5 + 0.25j, (0,): 1.0, (2,): -0.75}))
    write_sequence(d / "zero.csv", SeqFn.from_items(1, {}))

    # measurements for both recovery methods, from library primitives
    lat = build_lattice([[2]])
    c = SeqFn.from_items(1, TRUTH)
    levels = [sampled_generator(lv) for lv in filtered_levels(p1, filt, phi, lat.m, "cc")]
    ms = measure_from_samples(p1, lat, c, levels)
    _write_measurements(d / "meas.csv", ms.levels, 1)

    model = build_sis(p1, phi)
    h_levels = integer_sample_levels(p1, filt, synthesize(model, c), lat.m)
    _write_measurements(d / "meas_cont.csv", h_levels, 1)
    return d


def _write_measurements(path, channels, n):
    rows = ["k1,channel,re,im" if n == 1 else ",".join(f"k{i+1}" for i in range(n)) + ",channel,re,im"]
    for j, seq in enumerate(channels):
        for k in sorted(seq.entries):
            v = seq.entries[k]
            rows.append(",".join(str(int(x)) for x in k) + f",{j},{v.real!r},{v.imag!r}")
    path.write_text("\n".join(rows) + "\n")


# ---------------------------------------------------------------------------
# transform / inverse


def test_transform_inverse_roundtrip(work, tmp_path):
    spec = tmp_path / "F.grid"
    back = tmp_path / "f2.grid"
    assert main(["transform", "--params", str(work / "frft.json"), "--in", str(work / "gauss.grid"),
                 "--out", str(spec)]) == 0
    assert main(["inverse", "--params", str(work / "frft.json"), "--in", str(spec),
                 "--out", str(back)]) == 0
    orig = read_grid(work / "gauss.grid")
    rec = read_grid(back)
    err = np.linalg.norm(rec.values - orig.values) / np.linalg.norm(orig.values)
    assert err < 1e-10


def test_transform_backends_agree(work, tmp_path):
    fast = tmp_path / "fast.grid"
    quad = tmp_path / "quad.grid"
    base = ["transform", "--params", str(work / "frft.json"), "--in", str(work / "gauss.grid")]
    assert main(base + ["--backend", "fast", "--out", str(fast)]) == 0
    assert main(base + ["--backend", "quad", "--out", str(quad)]) == 0
    a, b = read_grid(fast), read_grid(quad)
    assert np.linalg.norm(a.values - b.values) / np.linalg.norm(b.values) < 1e-10


# ---------------------------------------------------------------------------
# dtsaft / conv


def test_dtsaft_stdout_and_file(work, tmp_path, capsys):
    # leading '-' values need the = form, or argparse reads them as flags
    argv = ["dtsaft", "--params", str(work / "ft1.json"), "--seq", str(work / "seq.csv"),
            "--wgrid=-1:1:9"]
    assert main(argv) == 0
    header = capsys.readouterr().out.splitlines()[0]
    assert header.split(",") == ["w1", "re", "im"]
    out = tmp_path / "dt.csv"
    assert main(argv + ["--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 10  # header + 9 points
    w, re, im = (float(x) for x in lines[1].split(","))
    assert w == -1.0
    assert "np.float64" not in out.read_text()


def test_conv_dd_writes_sequence(work, tmp_path):
    out = tmp_path / "sq.csv"
    assert main(["conv", "--kind", "dd", "--params", str(work / "ft1.json"),
                 "--lhs", str(work / "filt1.csv"), "--rhs", str(work / "filt1.csv"),
                 "--out", str(out)]) == 0
    sq = read_sequence(out)
    assert sq.get((0,)) == pytest.approx(1.0)
    assert sq.get((1,)) == pytest.approx(1.0)
    assert sq.get((2,)) == pytest.approx(0.25)


def test_conv_sd_writes_grid(work, tmp_path):
    out = tmp_path / "sd.grid"
    assert main(["conv", "--kind", "sd", "--params", str(work / "ft1.json"),
                 "--lhs", str(work / "seq.csv"), "--rhs", str(work / "phi1.grid"),
                 "--out", str(out)]) == 0
    g = read_grid(out)
    assert g.n == 1 and g.shape[0] > 0


def test_conv_operand_type_mismatch_is_structural(work, tmp_path):
    code = main(["conv", "--kind", "cc", "--params", str(work / "ft1.json"),
                 "--lhs", str(work / "seq.csv"), "--rhs", str(work / "phi1.grid"),
                 "--out", str(tmp_path / "x.grid")])
    assert code == 1


# ---------------------------------------------------------------------------
# verify


@pytest.mark.parametrize("theorem,trials", [("dd", 3), ("cc", 2), ("sd", 2), ("commute", 2)])
def test_verify_passes_and_reports(work, tmp_path, theorem, trials):
    out = tmp_path / f"{theorem}.csv"
    assert main(["verify", "--theorem", theorem, "--trials", str(trials),
                 "--seed", "7", "--out", str(out)]) == 0
    text = out.read_text()
    head = text.splitlines()[0]
    assert head.startswith("#") and "seed=7" in head and f"theorem={theorem}" in head
    data_rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#") and not ln.startswith("trial")]
    assert len(data_rows) == trials


def test_verify_deterministic_bytes(work, tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    argv = ["verify", "--theorem", "dd", "--trials", "3", "--seed", "11"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_verify_pinned_params(work, tmp_path):
    out = tmp_path / "pinned.csv"
    assert main(["verify", "--theorem", "dd", "--trials", "2", "--seed", "3",
                 "--params", str(work / "frft.json"), "--out", str(out)]) == 0


# ---------------------------------------------------------------------------
# sis


def test_sis_report_and_verdict(work, tmp_path, capsys):
    report = tmp_path / "gram.csv"
    assert main(["sis", "--params", str(work / "ft1.json"), "--phi", str(work / "phi1.grid"),
                 "--report", str(report), "--cell-points", "33"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "pass"
    assert payload["lower"] > 0
    lines = report.read_text().strip().splitlines()
    assert lines[0].split(",")[:2] == ["w1", "grammian"]
    assert len(lines) == 34


# ---------------------------------------------------------------------------
# dynsamp


def test_dynsamp_check_pass(work, tmp_path, capsys):
    out = tmp_path / "field.csv"
    assert main(["dynsamp", "check", "--params", str(work / "ft1.json"),
                 "--phi", str(work / "phi1.grid"), "--filter", str(work / "filt1.csv"),
                 "--M", "[[2]]", "--out", str(out)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["verdict"] == "pass"
    head = out.read_text().splitlines()[0].split(",")
    assert head[0] == "w1" and "abs_det" in head and "cond" in head
    assert "B00_re" in head and "B11_im" in head


def test_dynsamp_check_zero_filter_fails(work, tmp_path, capsys):
    code = main(["dynsamp", "check", "--params", str(work / "ft1.json"),
                 "--phi", str(work / "phi1.grid"), "--filter", str(work / "zero.csv"),
                 "--M", "[[2]]", "--out", str(tmp_path / "f.csv")])
    assert code == 2


def test_dynsamp_recover_discrete(work, tmp_path):
    out = tmp_path / "rec.csv"
    assert main(["dynsamp", "recover", "--params", str(work / "ft1.json"),
                 "--phi", str(work / "phi1.grid"), "--filter", str(work / "filt1.csv"),
                 "--M", "[[2]]", "--measurements", str(work / "meas.csv"),
                 "--method", "discrete", "--out", str(out)]) == 0
    rec = read_sequence(out)
    for k, v in TRUTH.items():
        assert abs(rec.get(k) - v) < 1e-9


def test_dynsamp_recover_continuous(work, tmp_path):
    out = tmp_path / "rec_cont.csv"
    assert main(["dynsamp", "recover", "--params", str(work / "ft1.json"),
                 "--phi", str(work / "phi1.grid"), "--filter", str(work / "filt1.csv"),
                 "--M", "[[2]]", "--measurements", str(work / "meas_cont.csv"),
                 "--method", "continuous", "--out", str(out)]) == 0
    rec = read_sequence(out)
    for k, v in TRUTH.items():
        assert abs(rec.get(k) - v) < 1e-9


def test_dynsamp_recover_zero_filter_fails(work, tmp_path):
    code = main(["dynsamp", "recover", "--params", str(work / "ft1.json"),
                 "--phi", str(work / "phi1.grid"), "--filter", str(work / "zero.csv"),
                 "--M", "[[2]]", "--measurements", str(work / "meas.csv"),
                 "--method", "discrete", "--out", str(tmp_path / "r.csv")])
    assert code == 2


# ---------------------------------------------------------------------------
# selftest and exit-code contract


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out
    assert "FAIL" not in out


def test_usage_errors_exit_64(capsys):
    assert main([]) == 64
    assert main(["no-such-command"]) == 64
    assert main(["transform", "--params"]) == 64
    assert main(["verify", "--theorem", "nope"]) == 64


def test_missing_file_exits_1(tmp_path):
    assert main(["transform", "--params", str(tmp_path / "absent.json"),
                 "--in", str(tmp_path / "absent.grid"), "--out", str(tmp_path / "o.grid")]) == 1


def test_malformed_params_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["transform", "--params", str(bad), "--in", str(bad),
                 "--out", str(tmp_path / "o.grid")]) == 1


def test_invalid_block_exits_2(tmp_path, work):
    # structurally fine JSON whose matrices violate the constraints
    bad = tmp_path / "invalid.json"
    bad.write_text(json.dumps({"n": 1, "A": [[1.0]], "B": [[1.0]], "C": [[1.0]],
                               "D": [[1.0]], "P": [0.0], "Q": [0.0]}))
    code = main(["transform", "--params", str(bad), "--in", str(work / "gauss.grid"),
                 "--out", str(tmp_path / "o.grid")])
    assert code == 2
