import struct

import numpy as np
import pytest

from snns.cli import main
from snns.model import read_instance


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def generate(tmp_path, capsys, name="inst.snns", n=40, d=20, k=3, seed=1):
    path = tmp_path / name
    code, _, _ = run(
        [
            "generate", "--n", str(n), "--d", str(d), "--k", str(k),
            "--eps", "0.1", "--seed", str(seed), "-o", str(path),
        ],
        capsys,
    )
    assert code == 0
    return path


def test_generate_writes_valid_instance(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    inst, noisy = read_instance(path)
    assert noisy is None
    assert inst.n == 40
    assert inst.d == 20


def test_generate_deterministic(tmp_path, capsys):
    a = generate(tmp_path, capsys, "a.snns", seed=3)
    b = generate(tmp_path, capsys, "b.snns", seed=3)
    assert a.read_bytes() == b.read_bytes()


def test_solve_prints_true_index_on_noiseless_file(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    inst, _ = read_instance(path)
    code, out, _ = run(["solve", "--algo", "svd", "--k", "3", str(path)], capsys)
    assert code == 0
    assert out.splitlines()[0] == f"index {inst.nn_index}"
    code, out, _ = run(["solve", "--algo", "naive", str(path)], capsys)
    assert code == 0
    assert out.splitlines()[0] == f"index {inst.nn_index}"


def test_solve_with_sigma_prints_estimates(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    code, out, _ = run(["solve", "--algo", "svd", "--sigma", "0.0", str(path)], capsys)
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 1 + 40
    first_estimate = lines[1].split()
    assert first_estimate[0] == "1"
    float(first_estimate[1])


def test_perturb_then_solve_uses_noisy_matrix(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    noisy_path = tmp_path / "noisy.snns"
    code, _, _ = run(
        ["perturb", "--sigma", "0.05", "--seed", "9", "-o", str(noisy_path), str(path)],
        capsys,
    )
    assert code == 0
    inst, noisy = read_instance(noisy_path)
    assert noisy is not None
    assert noisy.sigma == 0.05
    code, out, _ = run(["solve", "--algo", "svd", str(noisy_path)], capsys)
    assert code == 0
    assert out.startswith("index ")


def test_input_files_never_mutated(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    before = path.read_bytes()
    run(["perturb", "--sigma", "0.1", "--seed", "1", "-o", str(tmp_path / "o.snns"), str(path)], capsys)
    run(["solve", "--algo", "svd", str(path)], capsys)
    run(["info", str(path)], capsys)
    assert path.read_bytes() == before


def test_sweep_row_count_and_plot(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    out_csv = tmp_path / "out.csv"
    out_svg = tmp_path / "out.svg"
    code, _, _ = run(
        [
            "sweep", "--algo", "svd", "--algo", "naive",
            "--sigma-grid", "0.01:0.8:geometric:5", "--trials", "8",
            "--seed", "2", "-o", str(out_csv), "--plot", str(out_svg), str(path),
        ],
        capsys,
    )
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert len(lines) == 1 + 10  # header + 2 algos x 5 grid points
    assert "<svg" in out_svg.read_text()[:200]


def test_threshold_command_prints_value(tmp_path, capsys):
    path = generate(tmp_path, capsys, n=60, d=30, k=3)
    code, out, _ = run(
        [
            "threshold", "--algo", "svd", "--sigma-grid", "0.001:2.0:geometric:8",
            "--trials", "25", "--threads", "2", str(path),
        ],
        capsys,
    )
    assert code == 0
    assert out.startswith("threshold ")
    float(out.split()[1])


def test_lowerbound_variance_game_csv(tmp_path, capsys):
    out_csv = tmp_path / "lb.csv"
    code, _, _ = run(
        [
            "lowerbound", "--game", "variance", "--k", "8,64",
            "--sigma", "0.1,0.5", "--trials", "200", "--seed", "3",
            "-o", str(out_csv),
        ],
        capsys,
    )
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0].startswith("k,sigma,epsilon,trials")
    assert len(lines) == 1 + 4


def test_lowerbound_shift_game_stdout(capsys):
    code, out, _ = run(
        ["lowerbound", "--game", "shift", "--sigma", "1.0", "--eps", "0.5", "--trials", "100"],
        capsys,
    )
    assert code == 0
    assert len(out.splitlines()) == 2


def test_lowerbound_shift_game_requires_eps(capsys):
    code, _, err = run(
        ["lowerbound", "--game", "shift", "--sigma", "1.0", "--trials", "50"], capsys
    )
    assert code == 2
    assert "--eps" in err


def test_info_reports_parameters_and_regime(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    code, out, _ = run(["info", "--sigma", "0.01", str(path)], capsys)
    assert code == 0
    assert "n 40" in out
    assert "threshold_report" in out
    assert "regime" in out


def test_sk_study_command(capsys):
    code, out, _ = run(
        [
            "sk-study", "--n", "40", "--d", "20", "--k", "3", "--eps", "0.1",
            "--spectrum", "0.2", "--multipliers", "1,2,4,8",
            "--sigma-grid", "0.002:1.0:geometric:8", "--trials", "20",
            "--threads", "4", "--seed", "1",
        ],
        capsys,
    )
    assert code == 0
    assert "pearson_r" in out


def test_ingest_glove_writes_instances(tmp_path, capsys):
    rng = np.random.default_rng(0)
    basis, _ = np.linalg.qr(rng.standard_normal((12, 4)))
    vectors = basis @ rng.standard_normal((4, 60)) + 0.01 * rng.standard_normal((12, 60))
    lines = []
    for j in range(60):
        lines.append("w%d " % j + " ".join(repr(float(v)) for v in vectors[:, j]))
    glove = tmp_path / "vectors.txt"
    glove.write_text("\n".join(lines) + "\n")
    outdir = tmp_path / "instances"
    code, out, _ = run(
        [
            "ingest", "--format", "glove", "--data", str(glove),
            "--n", "20", "--k", "3", "--eps", "0.02", "--count", "2",
            "--seed", "1", "-o", str(outdir),
        ],
        capsys,
    )
    assert code == 0
    written = sorted(outdir.glob("*.snns"))
    assert len(written) == 2
    inst, _ = read_instance(written[0])
    assert inst.n == 20


def test_mnist_ingest_requires_query_file(tmp_path, capsys):
    imgs = tmp_path / "imgs.idx3"
    body = struct.pack(">IIII", 0x00000803, 2, 28, 28) + bytes(784 * 2)
    imgs.write_bytes(body)
    code, _, err = run(
        [
            "ingest", "--format", "mnist", "--data", str(imgs),
            "--n", "10", "--k", "2", "--eps", "0.05", "--count", "1",
            "--seed", "0", "-o", str(tmp_path / "out"),
        ],
        capsys,
    )
    assert code == 2
    assert "--queries" in err


# --- exit codes -----------------------------------------------------------------

def test_parameter_error_exits_2_naming_flag(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    code, _, err = run(
        ["sweep", "--algo", "svd", "--sigma-grid", "nonsense", "-o",
         str(tmp_path / "x.csv"), str(path)],
        capsys,
    )
    assert code == 2
    assert "--sigma-grid" in err

    code, _, err = run(
        ["threshold", "--algo", "svd", "--sigma-grid", "0.1:0.2:geometric:1",
         str(path)],
        capsys,
    )
    assert code == 2
    assert "--sigma-grid" in err


def test_runtime_error_exits_1(tmp_path, capsys):
    code, _, err = run(["solve", "--algo", "svd", str(tmp_path / "missing.snns")], capsys)
    assert code == 1
    assert err.strip() != ""


def test_bad_instance_k_exits_2(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    code, _, err = run(["solve", "--algo", "svd", "--k", "999", str(path)], capsys)
    assert code == 2
    assert "k" in err


def test_unbracketed_threshold_grid_exits_1(tmp_path, capsys):
    path = generate(tmp_path, capsys)
    code, _, err = run(
        ["threshold", "--algo", "svd", "--sigma-grid", "5.0:9.0:linear:3",
         "--trials", "10", str(path)],
        capsys,
    )
    assert code == 1
    assert "grid" in err
