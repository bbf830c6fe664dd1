"""``kpd`` command line: decompose, product, info.

Exit codes: 0 success (exact or approximate), 1 I/O or validation error,
2 input not decomposable in ``--mode exact``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hypermatrix import (
    Hypermatrix,
    IndexSplit,
    from_col_stack,
    from_matrix_expression,
    matrix_expression,
    normal_row_count,
)
from .hyper_kpd import (
    PairedShape,
    outer_product,
    paired_product,
    paired_rearranged_vector,
    partition_product,
)
from .index_monoid import DimProfile, divisor_pairs, linear_to_multi
from .matrix_kpd import enumerate_matrix_shapes, rearranged_vector
from .stp import stp_chain
from .tensorfile import TensorFileError, digest, read_tensor, tensor_to_obj, write_tensor
from .vector_kpd import (
    DEFAULT_CONFIG,
    KpdError,
    KpdFactorization,
    NotDecomposableError,
    SolverConfig,
    ZeroVectorError,
    approx_kpd,
    exact_kpd,
    finite_sum_kpd,
    head_info,
)

EXIT_OK, EXIT_ERROR, EXIT_NOT_DECOMPOSABLE = 0, 1, 2
TOL_ENV = "KPD_DEFAULT_TOL"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# shape grammar


def parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(t) for t in text.strip().lower().split("x"))
    except ValueError:
        raise UsageError(f"bad dimension list {text!r}; expected e.g. 3x4x2") from None
    if not dims or min(dims) < 1:
        raise UsageError(f"bad dimension list {text!r}; dims must be positive")
    return dims


def parse_split(text: str | None, d: int) -> IndexSplit:
    """``"1,3"`` (row axes, remaining axes are columns) or ``"1,3/2"``; default is the normal form."""
    if text is None:
        return IndexSplit.leading(d, normal_row_count(d))

    def axes(part: str) -> list[int]:
        try:
            return [int(a) for a in part.split(",") if a.strip()]
        except ValueError:
            raise UsageError(f"bad split {text!r}") from None

    if "/" in text:
        r, c = text.split("/", 1)
        split = IndexSplit(axes(r), axes(c))
    else:
        rows = axes(text)
        split = IndexSplit(rows, [a for a in range(1, d + 1) if a not in rows])
    try:
        split.validate(d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return split


@dataclass
class Layout:
    """How a tensor maps to a vector KPD problem and back.

    ``rearrange`` gives the vector to decompose over ``profile``;
    ``factor`` turns component ``k`` into a factor tensor; ``combine`` is the
    product of factor tensors in the input's own layout.
    """

    kind: str
    label: str
    profile: DimProfile
    rearrange: Callable[[Hypermatrix], np.ndarray]
    factor: Callable[[int, np.ndarray], Hypermatrix]
    combine: Callable[[Sequence[Hypermatrix]], np.ndarray]


def _vector_layout(dims) -> Layout:
    profile = DimProfile(dims)
    return Layout(
        "vector",
        str(profile),
        profile,
        lambda C: C.data,
        lambda k, v: Hypermatrix((profile.dims[k],), v),
        lambda fs: stp_chain([f.data for f in fs]),
    )


def _matrix_layout(m, n, p, q) -> Layout:
    shape = (m, n, p, q)
    return Layout(
        "matrix",
        f"{m}x{n},{p}x{q}",
        DimProfile((m * n, p * q)),
        lambda C: rearranged_vector(C.to_array(), shape),
        lambda k, v: Hypermatrix.from_array(from_col_stack(v, *shape[2 * k : 2 * k + 2])),
        lambda fs: np.kron(fs[0].to_array(), fs[1].to_array()).ravel(),
    )


def _paired_layout(left, right) -> Layout:
    shape = PairedShape(left, right)
    return Layout(
        "paired",
        f"{shape.left}|{shape.right}",
        DimProfile((shape.left.total, shape.right.total)),
        lambda C: paired_rearranged_vector(C, shape),
        lambda k, v: Hypermatrix((shape.left, shape.right)[k], v),
        lambda fs: paired_product(*fs).data,
    )


def _outer_layout(left, right) -> Layout:
    left, right = DimProfile(left), DimProfile(right)
    return Layout(
        "outer",
        f"{left}|{right}",
        DimProfile((left.total, right.total)),
        lambda C: C.data,
        lambda k, v: Hypermatrix((left, right)[k], v),
        lambda fs: outer_product(*fs).data,
    )


def _partition_layout(left, right, split: IndexSplit) -> Layout:
    u, v = DimProfile(left), DimProfile(right)
    (ur, uc), (vr, vc) = split.shape(u), split.shape(v)
    shape = (ur, uc, vr, vc)

    def factor(k, w):
        prof = (u, v)[k]
        return from_matrix_expression(from_col_stack(w, *shape[2 * k : 2 * k + 2]), split, prof)

    return Layout(
        "partition",
        f"{u}|{v}",
        DimProfile((ur * uc, vr * vc)),
        lambda C: rearranged_vector(matrix_expression(C, split), shape),
        factor,
        lambda fs: partition_product(fs[0], split, fs[1], split).data,
    )


def build_layout(C: Hypermatrix, spec: str, kind: str | None, split_text: str | None, cfg, threads=1):
    """Parse ``spec`` against the input tensor; ``kind`` overrides the grammar's default."""
    spec = spec.strip()
    if kind in ("outer", "partition"):
        if "|" not in spec:
            raise UsageError(f"--kind {kind} needs a shape 'A-dims|B-dims'")
        left, right = (parse_dims(s) for s in spec.split("|", 1))
        if kind == "outer":
            if left + right != C.dims:
                raise UsageError(f"outer shape {spec} does not concatenate to dims {C.dims}")
            return _outer_layout(left, right), None
        if not (len(left) == len(right) == C.order) or any(
            c != a * b for c, a, b in zip(C.dims, left, right)
        ):
            raise UsageError(f"partition shape {spec} does not multiply to dims {C.dims}")
        return _partition_layout(left, right, parse_split(split_text, C.order)), None
    if kind not in (None, "vector", "matrix", "paired"):
        raise UsageError(f"unknown kind {kind!r}")

    if "|" in spec:
        left, right = (parse_dims(s) for s in spec.split("|", 1))
        shape = PairedShape(left, right)
        dims = C.dims + (1,) * (shape.order - C.order)
        if dims != shape.target.dims:
            raise UsageError(f"paired shape {spec} needs dims {shape.target.dims}, input has {C.dims}")
        return _paired_layout(left, right), None
    if "," in spec or spec == "auto":
        if C.order != 2:
            raise UsageError(f"matrix shape needs an order-2 input, got dims {C.dims}")
        if spec == "auto":
            ranked = enumerate_matrix_shapes(C.to_array(), cfg, threads)
            if not ranked:
                raise UsageError(f"matrix of dims {C.dims} has no nontrivial factor shapes")
            m, n, p, q = ranked[0].shape
            return _matrix_layout(m, n, p, q), ranked
        parts = spec.split(",")
        if len(parts) != 2:
            raise UsageError(f"matrix shape {spec!r} must look like 2x2,2x3")
        (b, c) = (parse_dims(s) for s in parts)
        if len(b) != 2 or len(c) != 2:
            raise UsageError(f"matrix shape {spec!r} must look like 2x2,2x3")
        if (b[0] * c[0], b[1] * c[1]) != C.dims:
            raise UsageError(f"matrix shape {spec} gives {b[0] * c[0]}x{b[1] * c[1]}, input is {C.dims}")
        return _matrix_layout(*b, *c), None
    dims = parse_dims(spec)
    if DimProfile(dims).total != C.profile.total:
        raise UsageError(f"vector shape {spec} has {DimProfile(dims).total} entries, input has {C.profile.total}")
    return _vector_layout(dims), None


# ---------------------------------------------------------------------------
# reports


def _clean(v) -> list[float]:
    return [float(x) + 0.0 for x in np.asarray(v).ravel()]


def _term_record(f: KpdFactorization, layout: Layout, head: int | None) -> dict:
    factors = [layout.factor(k, c) for k, c in enumerate(f.components)]
    return {
        "coefficient": float(f.coefficient) + 0.0,
        "head_index": head,
        "factors": [{"dims": list(t.dims), "data": _clean(t.data)} for t in factors],
        "residual_norm": f.residual_norm,
        "objective": f.objective,
        "iterations": f.iterations,
    }


def term_tensor(term: dict, layout: Layout) -> np.ndarray:
    factors = [Hypermatrix(t["dims"], t["data"]) for t in term["factors"]]
    return term["coefficient"] * layout.combine(factors)


def recompute_residual(report: dict, C: Hypermatrix, layout: Layout) -> float:
    """``||C - sum of listed terms||`` from the report alone."""
    recon = np.zeros(C.profile.total)
    for term in report["terms"]:
        recon += term_tensor(term, layout)
    return float(np.linalg.norm(C.data - recon))


def _finalize(report: dict, C: Hypermatrix, layout: Layout) -> None:
    # residuals are measured in the input's own layout, on the listed factors
    running = np.array(C.data, dtype=float)
    for term in report["terms"]:
        running = running - term_tensor(term, layout)
        term["residual_norm"] = float(np.linalg.norm(running))
    report["residual_norm"] = recompute_residual(report, C, layout)


def decompose(C: Hypermatrix, layout: Layout, mode: str, cfg: SolverConfig) -> tuple[dict, int]:
    v = layout.rearrange(C)
    report: dict = {"mode": mode, "kind": layout.kind, "shape": layout.label}
    code = EXIT_OK
    try:
        head = head_info(v, layout.profile, cfg.zero_tol).e
    except ZeroVectorError:
        head = None
    if mode == "exact":
        try:
            f = exact_kpd(v, layout.profile, cfg)
            report["status"] = "exact"
        except NotDecomposableError as exc:
            f = exc.candidate
            report["status"] = "not-decomposable"
            code = EXIT_NOT_DECOMPOSABLE
        report["terms"] = [_term_record(f, layout, head)]
    elif mode == "approx":
        f = approx_kpd(v, layout.profile, cfg)
        report["status"] = "approximate"
        report["terms"] = [_term_record(f, layout, head)]
    elif mode == "finite-sum":
        s = finite_sum_kpd(v, layout.profile, cfg)
        report["status"] = "finite-sum"
        report["terms"] = [_term_record(t, layout, e) for t, e in zip(s.terms, s.heads)]
    else:
        raise UsageError(f"unknown mode {mode!r}")
    _finalize(report, C, layout)
    return report, code


def format_report(r: dict) -> str:
    lines = [
        f"mode: {r['mode']}",
        f"kind: {r['kind']}  shape: {r['shape']}",
        f"input: dims {'x'.join(map(str, r['input']['dims']))}  sha256 {r['input']['sha256']}",
        f"status: {r['status']}",
    ]
    for k, t in enumerate(r["terms"], start=1):
        lines.append(
            f"term {k}: coefficient {t['coefficient']:.10g}  head {t['head_index']}  "
            f"residual {t['residual_norm']:.3e}  iterations {t['iterations']}"
        )
        for j, f in enumerate(t["factors"], start=1):
            vals = " ".join(f"{x:.6g}" for x in f["data"])
            lines.append(f"  factor {j} [{'x'.join(map(str, f['dims']))}]: {vals}")
    if "candidates" in r:
        best = r["candidates"][0]
        lines.append(f"best of {len(r['candidates'])} shapes: {best['shape']} residual {best['residual_norm']:.3e}")
    lines.append(f"residual: {r['residual_norm']:.6e}")
    lines.append(f"wall time: {r['wall_time_s']:.6f} s")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


def _config(args) -> SolverConfig:
    exact_tol = DEFAULT_CONFIG.exact_tol
    env = os.environ.get(TOL_ENV)
    if env:
        try:
            exact_tol = float(env)
        except ValueError:
            raise UsageError(f"{TOL_ENV}={env!r} is not a number") from None
    if args.tol is not None:
        exact_tol = args.tol
    try:
        return SolverConfig(
            exact_tol=exact_tol,
            step=args.step if args.step is not None else DEFAULT_CONFIG.step,
            max_iters=args.max_iters if args.max_iters is not None else DEFAULT_CONFIG.max_iters,
            sum_epsilon=args.epsilon if args.epsilon is not None else DEFAULT_CONFIG.sum_epsilon,
            max_terms=args.max_terms,
            halve_on_increase=args.halve_on_increase,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_decompose(args) -> int:
    C = read_tensor(args.file)
    cfg = _config(args)
    t0 = time.perf_counter()
    layout, ranked = build_layout(C, args.shape, args.kind, args.split, cfg, args.threads)
    report, code = decompose(C, layout, args.mode, cfg)
    report["input"] = {"dims": list(C.dims), "sha256": digest(C)}
    if ranked is not None:
        report["candidates"] = [
            {"shape": "{}x{},{}x{}".format(*c.shape), "residual_norm": c.residual_norm} for c in ranked
        ]
    report["wall_time_s"] = time.perf_counter() - t0
    _emit(json.dumps(report, indent=2) if args.json else format_report(report), args.out)
    if code == EXIT_NOT_DECOMPOSABLE:
        print("not decomposable: exact mode residual exceeds tolerance", file=sys.stderr)
    return code


def cmd_product(args) -> int:
    A, B = read_tensor(args.file_a), read_tensor(args.file_b)
    try:
        if args.kind == "outer":
            C = outer_product(A, B)
        elif args.kind == "paired":
            C = paired_product(A, B)
        else:
            if A.order != B.order:
                raise UsageError(f"partition product needs equal orders, got {A.dims} and {B.dims}")
            split = parse_split(args.split, A.order)
            C = partition_product(A, split, B, split)
    except (ValueError, OverflowError) as exc:
        raise UsageError(str(exc)) from None
    write_tensor(args.out, C)
    print(f"wrote {args.kind} product with dims {'x'.join(map(str, C.dims))} to {args.out}")
    return EXIT_OK


def info(C: Hypermatrix, shape: str | None = None, zero_tol: float = DEFAULT_CONFIG.zero_tol) -> dict:
    out: dict = {
        "dims": list(C.dims),
        "total": C.profile.total,
        "sha256": digest(C),
        "divisor_pairs": [[list(p) for p in divisor_pairs(n)] for n in C.dims],
    }
    try:
        h = head_info(C.data, (C.profile.total,), zero_tol)
        out.update(zero=False, head_index=h.e, head_value=h.h0)
    except ZeroVectorError:
        out.update(zero=True, head_index=None, head_value=None)
    if shape is not None:
        layout, _ = build_layout(C, shape, None, None, DEFAULT_CONFIG)
        v = layout.rearrange(C)
        out["shape"] = layout.label
        if np.any(np.abs(v) > 0) and not out["zero"]:
            h = head_info(v, layout.profile, zero_tol)
            out["shape_head_index"] = h.e
            out["shape_head_value"] = h.h0
            out["component_heads"] = list(linear_to_multi(h.e, layout.profile).values)
    return out


def format_info(d: dict) -> str:
    lines = [f"dims: {'x'.join(map(str, d['dims']))} ({d['total']} entries)"]
    if d["zero"]:
        lines.append("zero tensor")
    else:
        lines.append(f"head index: {d['head_index']}  head value: {d['head_value']:.10g}")
    if "component_heads" in d:
        lines.append(
            f"shape {d['shape']}: head index {d['shape_head_index']}  head value "
            f"{d['shape_head_value']:.10g}  component heads {tuple(d['component_heads'])}"
        )
    for k, (n, pairs) in enumerate(zip(d["dims"], d["divisor_pairs"]), start=1):
        lines.append(f"axis {k} ({n}): " + " ".join(f"{a}x{b}" for a, b in pairs))
    return "\n".join(lines)


def cmd_info(args) -> int:
    C = read_tensor(args.file)
    d = info(C, args.shape)
    print(json.dumps(d, indent=2) if args.json else format_info(d))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpd", description="Kronecker product decomposition of tensors.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="decompose a tensor file")
    d.add_argument("file")
    d.add_argument("--shape", required=True, help="3x4x2 | 2x2,2x3 | auto | 2x2x2|2x3x2")
    d.add_argument("--mode", choices=("exact", "approx", "finite-sum"), default="exact")
    d.add_argument("--kind", choices=("vector", "matrix", "paired", "outer", "partition"),
                   help="product kind; by default taken from the shape grammar")
    d.add_argument("--split", help="row axes for --kind partition, e.g. 1,3 or 1,3/2")
    d.add_argument("--step", type=float, help=f"descent step (default {DEFAULT_CONFIG.step})")
    d.add_argument("--max-iters", type=int, help=f"descent iterations (default {DEFAULT_CONFIG.max_iters})")
    d.add_argument("--tol", type=float, help=f"exactness tolerance (default {DEFAULT_CONFIG.exact_tol}, env {TOL_ENV})")
    d.add_argument("--epsilon", type=float, help=f"finite-sum stop norm (default {DEFAULT_CONFIG.sum_epsilon})")
    d.add_argument("--max-terms", type=int, help="finite-sum term cap (default: total size)")
    d.add_argument("--halve-on-increase", action="store_true", help="halve the step instead of stopping")
    d.add_argument("--threads", type=int, default=1, help="workers for --shape auto")
    d.add_argument("--json", action="store_true")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    pr = sub.add_parser("product", help="Kronecker product of two tensor files")
    pr.add_argument("file_a")
    pr.add_argument("file_b")
    pr.add_argument("--kind", choices=("outer", "partition", "paired"), required=True)
    pr.add_argument("--split", help="row axes for partition, e.g. 1,2 (default: normal form)")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_product)

    i = sub.add_parser("info", help="head and divisor facts of a tensor file")
    i.add_argument("file")
    i.add_argument("--shape")
    i.add_argument("--json", action="store_true")
    i.set_defaults(func=cmd_info)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TensorFileError, UsageError, KpdError, OSError, OverflowError) as exc:
        print(f"kpd: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
