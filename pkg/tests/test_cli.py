import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA, MAT_4x6
from kpd.cli import build_layout, info, main, recompute_residual
from kpd.hypermatrix import Hypermatrix, normal_form
from kpd.tensorfile import TensorFileError, parse_tensor, read_tensor, tensor_to_obj, write_tensor
from kpd.vector_kpd import DEFAULT_CONFIG


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out), err


def check_report_residual(report, path):
    C = read_tensor(path)
    layout, _ = build_layout(C, report["shape"], report["kind"], None, DEFAULT_CONFIG)
    assert abs(recompute_residual(report, C, layout) - report["residual_norm"]) <= 1e-12


# ---------------------------------------------------------------- files


finite_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=0, max_size=3).flatmap(
    lambda dims: st.tuples(st.just(dims), st.lists(finite_floats, min_size=int(np.prod(dims)), max_size=int(np.prod(dims))))
))
def test_file_round_trip_bitwise(tmp_path_factory, case):
    dims, data = case
    H = Hypermatrix(dims, data)
    path = tmp_path_factory.mktemp("rt") / "t.json"
    write_tensor(path, H)
    back = read_tensor(path)
    assert back.dims == H.dims
    assert back.data.tobytes() == H.data.tobytes()


def test_col_major_convention(tmp_path):
    H = Hypermatrix.from_array(MAT_4x6)
    assert read_tensor(DATA / "mat_4x6_colmajor.json") == H
    assert read_tensor(DATA / "mat_4x6.csv") == H
    path = tmp_path / "c.json"
    write_tensor(path, H, "col-major-matrix")
    assert read_tensor(path) == H
    assert tensor_to_obj(H, "col-major-matrix")["data"][:4] == [0.0, 0.0, -1.0, -1.0]


@pytest.mark.parametrize(
    "obj,field",
    [
        ({"data": [1]}, "dims"),
        ({"dims": [2, 0], "data": [1, 2]}, "dims"),
        ({"dims": [2], "convention": "rowwise", "data": [1, 2]}, "convention"),
        ({"dims": [4], "convention": "col-major-matrix", "data": [1, 2, 3, 4]}, "convention"),
        ({"dims": [2]}, "data"),
        ({"dims": [2], "data": [1, "x"]}, "data"),
        ({"dims": [2, 2], "data": [1, 2, 3]}, "data"),
        ({"dims": [1], "data": [True]}, "data"),
    ],
)
def test_validation_names_field(obj, field):
    with pytest.raises(TensorFileError, match=field):
        parse_tensor(obj)


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "nan.json"
    p.write_text('{"dims": [2], "data": [1.0, NaN]}')
    with pytest.raises(TensorFileError, match="data"):
        read_tensor(p)


# ---------------------------------------------------------------- decompose


def test_decompose_vector_example(capsys):
    code, r, _ = run_json(capsys, "decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2", "--mode", "exact")
    assert code == 0 and r["status"] == "exact"
    (term,) = r["terms"]
    assert term["coefficient"] == 2.0
    assert [f["data"] for f in term["factors"]] == [[0, 1, -1], [0, 0, 1, 0.5], [0, 1]]
    assert [f["dims"] for f in term["factors"]] == [[3], [4], [2]]
    assert r["residual_norm"] == 0.0
    assert len(r["input"]["sha256"]) == 64 and r["wall_time_s"] >= 0
    check_report_residual(r, DATA / "vec_3x4x2.json")


def test_decompose_matrix_example(capsys):
    code, r, _ = run_json(capsys, "decompose", DATA / "mat_4x6.csv", "--shape", "2x2,2x3")
    assert code == 0
    (term,) = r["terms"]
    B = term["coefficient"] * np.array(term["factors"][0]["data"]).reshape(2, 2)
    C = np.array(term["factors"][1]["data"]).reshape(2, 3)
    assert np.array_equal(np.kron(B, C), MAT_4x6)
    assert np.array_equal(C, [[1, 2, -1], [1, 0, -2]])
    assert r["residual_norm"] == 0.0


def test_decompose_not_decomposable_exit_2(capsys):
    code, r, err = run_json(capsys, "decompose", DATA / "mat_4x6_perturbed.json", "--shape", "2x2,2x3")
    assert code == 2 and r["status"] == "not-decomposable"
    assert "not decomposable" in err
    check_report_residual(r, DATA / "mat_4x6_perturbed.json")


def test_decompose_approx_matches_library(capsys):
    code, r, _ = run_json(
        capsys, "decompose", DATA / "mat_4x6_perturbed.json", "--shape", "2x2,2x3", "--mode", "approx", "--step", "0.1"
    )
    assert code == 0
    (term,) = r["terms"]
    assert term["objective"] == pytest.approx(2.8284, abs=1e-3)
    assert term["iterations"] == 57
    check_report_residual(r, DATA / "mat_4x6_perturbed.json")


def test_decompose_finite_sum_all_terms(capsys):
    code, r, _ = run_json(capsys, "decompose", DATA / "vec_3x4x2_perturbed.json", "--shape", "3x4x2", "--mode", "finite-sum")
    assert code == 0 and len(r["terms"]) == 3
    assert [t["head_index"] for t in r["terms"]] == [14, 16, 22]
    assert np.allclose([t["coefficient"] for t in r["terms"]], [2, 0.2624, -1.1388], atol=1e-3)
    assert r["residual_norm"] <= 1e-12
    check_report_residual(r, DATA / "vec_3x4x2_perturbed.json")


def test_finite_sum_on_decomposable_equals_exact(capsys):
    _, exact, _ = run_json(capsys, "decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2")
    _, fsum, _ = run_json(capsys, "decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2", "--mode", "finite-sum")
    assert len(fsum["terms"]) == 1
    assert fsum["terms"][0]["factors"] == exact["terms"][0]["factors"]
    assert fsum["terms"][0]["coefficient"] == exact["terms"][0]["coefficient"]


def test_decompose_paired_example(capsys):
    code, r, _ = run_json(capsys, "decompose", DATA / "cubic_4x6x4.json", "--shape", "2x2x2|2x3x2")
    assert code == 0
    (term,) = r["terms"]
    assert term["coefficient"] == 6.0 and term["head_index"] == 1
    A = Hypermatrix((2, 2, 2), term["factors"][0]["data"])
    assert normal_form(A).tolist() == [[1, 0.5], [0, 1.5], [-0.5, 1], [0.5, 0.5]]
    assert r["residual_norm"] <= 1e-9


def test_decompose_outer_and_partition_kinds(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_tensor(a, Hypermatrix((2, 2), [1, 2, 0, -1]))
    write_tensor(b, Hypermatrix((2, 3), [0, 1, 2, 3, 0, 1]))
    for kind, extra in [("outer", []), ("partition", ["--split", "2"])]:
        out = tmp_path / f"{kind}.json"
        assert run(capsys, "product", a, b, "--kind", kind, "--out", out, *extra)[0] == 0
        code, r, _ = run_json(capsys, "decompose", out, "--kind", kind, "--shape", "2x2|2x3", *extra)
        assert code == 0 and r["residual_norm"] <= 1e-12
        C = read_tensor(out)
        layout, _ = build_layout(C, "2x2|2x3", kind, "2" if extra else None, DEFAULT_CONFIG)
        assert abs(recompute_residual(r, C, layout) - r["residual_norm"]) <= 1e-12


def test_decompose_auto_shape(capsys):
    code, r, _ = run_json(capsys, "decompose", DATA / "mat_4x6.csv", "--shape", "auto", "--threads", "2")
    assert code == 0 and r["candidates"][0]["residual_norm"] == 0.0
    assert r["residual_norm"] == 0.0


def test_env_tolerance(capsys, monkeypatch):
    # a loose tolerance lets the perturbed matrix pass exact mode
    monkeypatch.setenv("KPD_DEFAULT_TOL", "10")
    code, r, _ = run_json(capsys, "decompose", DATA / "mat_4x6_perturbed.json", "--shape", "2x2,2x3")
    assert code == 0 and r["status"] == "exact"
    # the flag wins over the environment
    code, _, _ = run_json(capsys, "decompose", DATA / "mat_4x6_perturbed.json", "--shape", "2x2,2x3", "--tol", "1e-9")
    assert code == 2
    monkeypatch.setenv("KPD_DEFAULT_TOL", "abc")
    assert run(capsys, "decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2")[0] == 1


def test_text_report_and_out_file(capsys, tmp_path):
    out = tmp_path / "report.txt"
    code, stdout, _ = run(capsys, "decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2", "--out", out)
    assert code == 0 and stdout == ""
    text = out.read_text()
    assert "coefficient 2" in text and "factor 2 [4]: 0 0 1 0.5" in text


@pytest.mark.parametrize(
    "args",
    [
        ["decompose", DATA / "bad_dims.json", "--shape", "2"],
        ["decompose", DATA / "bad_length.json", "--shape", "2x2"],
        ["decompose", DATA / "missing_data.json", "--shape", "3"],
        ["decompose", DATA / "not_json.json", "--shape", "2"],
        ["decompose", DATA / "missing.json", "--shape", "2"],
        ["decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x3"],
        ["decompose", DATA / "vec_3x4x2.json", "--shape", "2x2,2x3"],
        ["decompose", DATA / "mat_4x6.csv", "--shape", "2x2,3x3"],
        ["decompose", DATA / "mat_4x6.csv", "--shape", "2x2|2x2"],
        ["decompose", DATA / "vec_3x4x2.json", "--shape", "3xa"],
        ["decompose", DATA / "vec_3x4x2.json", "--shape", "3x4x2", "--step", "-1"],
        ["info", DATA / "bad_convention.json"],
        ["info", DATA / "vec_3x4x2.json", "--shape", "5x5"],
    ],
)
def test_error_exit_1(capsys, args):
    code, _, err = run(capsys, *args)
    assert code == 1 and err.startswith("kpd: error:")


def test_error_names_field(capsys):
    _, _, err = run(capsys, "info", DATA / "bad_length.json")
    assert "'data'" in err
    _, _, err = run(capsys, "info", DATA / "bad_dims.json")
    assert "'dims'" in err


# ---------------------------------------------------------------- product


def test_product_paired_example(capsys, tmp_path):
    out = tmp_path / "n.json"
    code, _, _ = run(capsys, "product", DATA / "cubic_A_2x2x2.json", DATA / "cubic_B_2x3x2.json", "--kind", "paired", "--out", out)
    assert code == 0
    N = read_tensor(DATA / "cubic_4x6x4.json")
    assert np.allclose(read_tensor(out).data * 6, N.data, rtol=0, atol=1e-12)


def test_product_paired_round_trip(capsys, tmp_path, rng):
    A = Hypermatrix((2, 1, 2), rng.uniform(0.5, 2, 4))
    B = Hypermatrix((1, 3, 2), rng.uniform(0.5, 2, 6))
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    write_tensor(a, A)
    write_tensor(b, B)
    run(capsys, "product", a, b, "--kind", "paired", "--out", c)
    code, r, _ = run_json(capsys, "decompose", c, "--shape", "2x1x2|1x3x2")
    assert code == 0
    fa, fb = (np.array(f["data"]) for f in r["terms"][0]["factors"])
    fa = fa * r["terms"][0]["coefficient"]
    mu = fa[0] / A.data[0]
    assert np.allclose(fa, mu * A.data) and np.allclose(fb, B.data / mu)


def test_product_outer_vectors(capsys, tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    write_tensor(a, Hypermatrix((2,), [1, 2]))
    write_tensor(b, Hypermatrix((3,), [3, 4, 5]))
    assert run(capsys, "product", a, b, "--kind", "outer", "--out", c)[0] == 0
    C = read_tensor(c)
    assert C.dims == (2, 3) and C.data.tolist() == [3, 4, 5, 6, 8, 10]


def test_product_shape_errors(capsys, tmp_path):
    a, b, c = tmp_path / "a.json", tmp_path / "b.json", tmp_path / "c.json"
    write_tensor(a, Hypermatrix((2, 2), [1, 2, 3, 4]))
    write_tensor(b, Hypermatrix((3,), [3, 4, 5]))
    assert run(capsys, "product", a, b, "--kind", "partition", "--out", c)[0] == 1
    assert run(capsys, "product", a, a, "--kind", "partition", "--split", "1,3", "--out", c)[0] == 1


# ---------------------------------------------------------------- info


def test_info_example(capsys):
    code, d, _ = run_json(capsys, "info", DATA / "vec_3x4x2.json", "--shape", "3x4x2")
    assert code == 0
    assert (d["head_index"], d["head_value"], d["component_heads"]) == (14, 2.0, [2, 3, 2])
    assert d["divisor_pairs"][0][:3] == [[1, 24], [2, 12], [3, 8]]


def test_info_zero(capsys):
    code, out, _ = run(capsys, "info", DATA / "zero_2x3.json")
    assert code == 0 and "zero tensor" in out


def test_info_head_scan(rng):
    for _ in range(50):
        x = rng.normal(size=12)
        x[rng.random(12) < 0.5] = 0.0
        if not x.any():
            continue
        d = info(Hypermatrix((3, 4), x))
        first = next(k for k, v in enumerate(x, start=1) if abs(v) > 1e-12 * max(1.0, np.abs(x).max()))
        assert d["head_index"] == first and d["head_value"] == x[first - 1]


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "kpd.cli", "decompose", str(DATA / "vec_3x4x2.json"), "--shape", "3x4x2", "--json"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["terms"][0]["coefficient"] == 2.0
    proc = subprocess.run(
        [sys.executable, "-m", "kpd.cli", "decompose", str(DATA / "mat_4x6_perturbed.json"), "--shape", "2x2,2x3"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
