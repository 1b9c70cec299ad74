"""Command-line front end.

Verbs: verify-gram, asymptotics, kernel, reproduce, synth, norms.

Exit codes: 0 pass, 1 tolerance failure, 2 usage/config error, 3 I/O error.
Report verbs write plot-ready CSV/JSON plus rendered PNG figures next to the
delimited output; all randomness is seeded, so a fixed seed and config
reproduce reports byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .core import (ElasticParams, ModeIndex, ParameterError,
                   make_params, params_from_wavenumbers)
from .inner import (SphereQuadrature, cross_decay_report, diag_decay_report,
                    eig_gram_quadrature, gram_closed, hansen_grad_gram,
                    hansen_gram_quadrature, h_norm_eig)
from .kernel3d import (HModeQuadrature, build_cache, coeff_field_norm,
                       kernel_eval, reproduce_check)
from .plane2d import (HModeQuadrature2D, build_cache_2d, coeff_field_norm_2d,
                      kernel_2d, reproduce_check_2d, CoeffField2D)
from .synthesis import (FarFieldPattern, coeff_field_from_json,
                        herglotz_synthesize, navier_residual_fd)

EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_IO = 3


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: material, truncation, tolerance, seed, output.

    Exactly one of the parameter groups (--kp/--ks or the Lame set) may be
    given; a fixed seed makes every report byte-reproducible.
    """

    params: ElasticParams
    l_max: int
    tol: float | None
    seed: int
    out: Path
    dim: int = 3

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(params=_build_params(args), l_max=args.lmax, tol=args.tol,
                   seed=args.seed, out=args.out, dim=args.dim)


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _save_fig(fig, path: Path) -> None:
    fig.savefig(path, dpi=110, metadata={"Date": None})
    plt.close(fig)


def _build_params(args) -> ElasticParams:
    have_k = args.kp is not None or args.ks is not None
    have_lame = any(v is not None for v in (args.lam, args.mu, args.rho, args.omega))
    if have_k and have_lame:
        raise ParameterError("give either --kp/--ks or --lambda/--mu/--rho/--omega, not both")
    if have_k:
        if args.kp is None or args.ks is None:
            raise ParameterError("--kp and --ks must be given together")
        return params_from_wavenumbers(args.kp, args.ks)
    if have_lame:
        vals = (args.lam, args.mu, args.rho, args.omega)
        if any(v is None for v in vals):
            raise ParameterError("--lambda, --mu, --rho, --omega must all be given")
        return make_params(*vals)
    return params_from_wavenumbers(1.0, 2.0)


def _add_common(p: argparse.ArgumentParser, default_lmax: int = 8):
    p.add_argument("--dim", type=int, choices=(2, 3), default=3)
    p.add_argument("--lmax", type=int, default=default_lmax,
                   help="truncation degree (2D: max |n|)")
    p.add_argument("--kp", type=float, default=None)
    p.add_argument("--ks", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))


# verify-gram ------------------------------------------------------------------

GRAM_FAMILIES = [("L", "L"), ("M", "M"), ("N", "N"), ("L", "M"), ("M", "N"), ("L", "N")]
HANSEN_FAMILIES = [("P", "P"), ("B", "B"), ("C", "C"), ("P", "B"), ("P", "C"), ("B", "C")]


def gram_error_table(params: ElasticParams, l_max: int, radii,
                     perturb_convention: bool = False) -> dict:
    """Max error per closed-form identity family, quadrature vs closed rows.

    Nonzero rows compare relatively; structurally zero entries compare
    absolutely against 1e-10 times the local norm scale.  The perturbation
    hook flips the sign of the closed L/N cross rows (a stand-in for a
    derivative-identity convention slip) for negative-control testing.
    """
    q = SphereQuadrature.for_degree(l_max)
    fam_err = {}
    for grad in (False, True):
        for pair in GRAM_FAMILIES:
            fam_err[("grad" if grad else "L2", "".join(pair))] = 0.0
    for r in radii:
        labels, g0, g1 = eig_gram_quadrature(params, l_max, r, q)
        diag = np.real(np.diag(g0) + np.diag(g1))
        ent = labels.entries
        for i, (ki, li, mi) in enumerate(ent):
            for j, (kj, lj, mj) in enumerate(ent):
                scale = math.sqrt(max(diag[i] * diag[j], 0.0)) + 1e-300
                for grad, g in ((False, g0), (True, g1)):
                    closed = gram_closed((ki, kj), ModeIndex(li, mi),
                                         ModeIndex(lj, mj), r, params,
                                         gradient=grad).value
                    if perturb_convention and "".join(sorted((ki, kj))) == "LN":
                        closed = -closed
                    key = ("grad" if grad else "L2", "".join(sorted((ki, kj))))
                    if closed == 0.0:
                        err = abs(g[i, j]) / (1e-10 * scale)
                        # normalized so that > 1 means out of tolerance
                    else:
                        err = abs(g[i, j] - closed) / abs(closed) / 1e-8
                    fam_err[key] = max(fam_err[key], err)
    # Hansen gradient Gram families (radius-free)
    labels_h, h0, h1 = hansen_gram_quadrature(l_max, q)
    for pair in HANSEN_FAMILIES:
        fam_err[("hansen-grad", "".join(sorted(pair)))] = 0.0
    for i, (ki, li, mi) in enumerate(labels_h.entries):
        for j, (kj, lj, mj) in enumerate(labels_h.entries):
            key = ("hansen-grad", "".join(sorted((ki, kj))))
            want = hansen_grad_gram((ki, kj), li) if (li, mi) == (lj, mj) else 0.0
            if want == 0.0:
                err = abs(h1[i, j]) / 1e-8
            else:
                err = abs(h1[i, j] - want) / abs(want) / 1e-8
            fam_err[key] = max(fam_err[key], err)
    return fam_err


def cmd_verify_gram(args) -> int:
    config = RunConfig.from_args(args)
    params = config.params
    tol = 1.0 if config.tol is None else config.tol / 1e-8
    radii = [0.3, 0.7, 1.0, 2.0, 5.0]
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    fam_err = gram_error_table(params, config.l_max, radii,
                               perturb_convention=args.perturb_convention)
    rows = [(f"{group}:{pair}", err) for (group, pair), err in sorted(fam_err.items())]
    failures = [name for name, err in rows if err > tol]
    csv_path = out / "verify_gram.csv"
    with open(csv_path, "w", newline="") as fh:
        fh.write("identity,normalized_error,pass\n")
        for name, err in rows:
            fh.write(f"{name},{_fmt(err)},{int(err <= tol)}\n")
    _write_json(out / "verify_gram.json", {
        "l_max": config.l_max, "radii": radii, "kp": params.kp, "ks": params.ks,
        "normalized_tolerance": tol,
        "families": {name: err for name, err in rows},
        "first_violated": failures[0] if failures else None,
        "pass": not failures,
    })
    fig, ax = plt.subplots(figsize=(9, 4))
    names = [n for n, _ in rows]
    errs = [max(e, 1e-300) for _, e in rows]
    ax.bar(range(len(names)), errs)
    ax.set_yscale("log")
    ax.axhline(tol, color="red", lw=1, label="tolerance")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=75, fontsize=7)
    ax.set_ylabel("error / tolerance unit")
    ax.set_title("Gram identities: quadrature vs closed forms")
    ax.legend()
    fig.tight_layout()
    _save_fig(fig, out / "verify_gram.png")
    for name, err in rows:
        print(f"{name:>18}: {'PASS' if err <= tol else 'FAIL'} ({err:.3e})")
    if failures:
        print(f"first violated identity: {failures[0]}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_PASS


# asymptotics -------------------------------------------------------------------

def cmd_asymptotics(args) -> int:
    config = RunConfig.from_args(args)
    params = config.params
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    l_hi = max(45, config.l_max)
    diag = diag_decay_report(range(2, l_hi + 1), params.kp)
    cross = cross_decay_report(range(2, l_hi + 1), params.kp, params.ks)
    cache = build_cache(params, 40)
    ls = np.arange(1, 41)
    coupling = np.abs(cache.c[1:41])
    sel = ls >= 10
    A = np.vstack([np.log(ls[sel]), np.ones(sel.sum())]).T
    c_slope = float(np.linalg.lstsq(A, np.log(coupling[sel] + 1e-300), rcond=None)[0][0])

    diag.write_csv(out / "diag_decay.csv")
    cross.write_csv(out / "cross_decay.csv")
    with open(out / "coupling.csv", "w", newline="") as fh:
        fh.write("l,value,fit_residual\n")
        for l, v in zip(ls, coupling):
            fh.write(f"{l},{_fmt(v)},nan\n")

    cross_dev = abs(cross.slope - cross.target) / abs(cross.target)
    summary = {
        "kp": params.kp, "ks": params.ks,
        "diag_slope": diag.slope, "diag_window": list(diag.window),
        "diag_pass": bool(-2.3 <= diag.slope <= -1.7),
        "cross_rate": cross.slope, "cross_target": cross.target,
        "cross_rel_dev": cross_dev, "cross_pass": bool(cross_dev <= 0.05),
        "coupling_slope": c_slope, "coupling_pass": bool(c_slope <= -1.5),
    }
    _write_json(out / "asymptotics_summary.json", summary)

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    axes[0].loglog(diag.ls, diag.values, "o-", ms=3)
    axes[0].set_title(f"diagonal, slope {diag.slope:.2f}")
    axes[0].set_xlabel("l")
    axes[1].semilogy(cross.ls, np.abs(cross.values), "o-", ms=3)
    axes[1].set_title(f"cross, rate {cross.slope:.3f} (target {cross.target:.3f})")
    axes[1].set_xlabel("l")
    axes[2].semilogy(ls, coupling + 1e-300, "o-", ms=3)
    axes[2].set_title(f"|c_l|, log-log slope {c_slope:.1f}")
    axes[2].set_xlabel("l")
    fig.tight_layout()
    _save_fig(fig, out / "asymptotics.png")

    for key in ("diag_pass", "cross_pass", "coupling_pass"):
        print(f"{key}: {'PASS' if summary[key] else 'FAIL'}")
    ok = summary["diag_pass"] and summary["cross_pass"] and summary["coupling_pass"]
    return EXIT_PASS if ok else EXIT_TOLERANCE


# norms ------------------------------------------------------------------------

def cmd_norms(args) -> int:
    config = RunConfig.from_args(args)
    params = config.params
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    l_hi = max(config.l_max, 40)
    rows = []
    for l in range(0, l_hi + 1):
        nl = h_norm_eig("L", l, params)
        nm = h_norm_eig("M", l, params) if l >= 1 else math.nan
        nn = h_norm_eig("N", l, params) if l >= 1 else math.nan
        rows.append((l, nl, nm, nn))
    cache = build_cache(params, l_hi)
    with open(out / "norms.csv", "w", newline="") as fh:
        fh.write("l,norm_L,norm_M,norm_N,c_l\n")
        for l, nl, nm, nn in rows:
            fh.write(f"{l},{_fmt(nl)},{_fmt(nm)},{_fmt(nn)},{_fmt(cache.c[l])}\n")
    ls = np.array([r[0] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ls, [r[1] for r in rows], "o-", ms=3, label="||L||")
    ax.plot(ls[1:], [r[2] for r in rows[1:]], "s-", ms=3, label="||M||")
    ax.plot(ls[1:], [r[3] for r in rows[1:]], "^-", ms=3, label="||N||")
    ax.set_xlabel("l")
    ax.set_yscale("log")
    ax.legend()
    ax.set_title("weighted-space norms of the eigenvector family")
    fig.tight_layout()
    _save_fig(fig, out / "norms.png")
    lsel = [r for r in rows if 10 <= r[0] <= 40]
    ratio_L = max(r[1] for r in lsel) / min(r[1] for r in lsel)
    print(f"norm_L max/min over l in [10,40]: {ratio_L:.4f}")
    return EXIT_PASS if ratio_L <= 2.0 else EXIT_TOLERANCE


# kernel ------------------------------------------------------------------------

def _parse_point(text: str, dim: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != dim:
        raise ParameterError(f"point must have {dim} components, got {len(vals)}")
    return np.array(vals)


def cmd_kernel(args) -> int:
    config = RunConfig.from_args(args)
    params = config.params
    x = _parse_point(args.x, config.dim)
    y = _parse_point(args.y, config.dim)
    if config.dim == 3:
        cache = build_cache(params, config.l_max)
        kv = kernel_eval(cache, x, y, config.l_max)
        tensor = kv.tensor
        obj = kv.to_json_obj()
    else:
        cache2 = build_cache_2d(params, config.l_max)
        tensor = kernel_2d(x, y, config.l_max, params, cache2)
        obj = {"n_max": config.l_max, "tail_estimate": None,
               "tensor": [[[float(v.real), float(v.imag)] for v in row]
                          for row in tensor]}
    obj["x"] = list(map(float, x))
    obj["y"] = list(map(float, y))
    if np.allclose(x, y):
        herm = np.abs(tensor - tensor.conj().T).max()
        evs = np.linalg.eigvalsh(0.5 * (tensor + tensor.conj().T))
        obj["hermitian_deviation"] = float(herm)
        obj["min_eigenvalue"] = float(evs.min())
        trace = float(np.trace(tensor).real)
        if evs.min() < -1e-10 * trace:
            print("kernel diagonal failed the positivity check", file=sys.stderr)
            return EXIT_TOLERANCE
    text = json.dumps(obj, indent=2, sort_keys=True)
    if args.out and str(args.out) != ".":
        if args.out.suffix:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            target = args.out
        else:
            args.out.mkdir(parents=True, exist_ok=True)
            target = args.out / "kernel.json"
        target.write_text(text + "\n")
    else:
        print(text)
    return EXIT_PASS


# reproduce ----------------------------------------------------------------------

def cmd_reproduce(args) -> int:
    try:
        obj = json.loads(Path(args.field_file).read_text())
    except OSError as exc:
        print(f"cannot read field file: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"field file does not parse: line {exc.lineno}, col {exc.colno}: "
              f"{exc.msg}", file=sys.stderr)
        return EXIT_USAGE
    tol = 1e-6 if args.tol is None else args.tol
    rng = np.random.default_rng(args.seed)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    warned = False
    if args.dim == 3:
        try:
            u = coeff_field_from_json(obj)
        except (KeyError, TypeError) as exc:
            print(f"field schema violation: missing/invalid {exc}", file=sys.stderr)
            return EXIT_USAGE
        params = u.params
        if u.support_l > args.lmax - 2:
            print(f"warning: support l = {u.support_l} exceeds lmax - 2 = "
                  f"{args.lmax - 2}; truncation error is not controlled",
                  file=sys.stderr)
            warned = True
        cache = build_cache(params, args.lmax)
        hq = HModeQuadrature(params, cache, args.lmax)
        norm = coeff_field_norm(u, cache)
        rows = []
        for _ in range(args.probes):
            d = rng.normal(size=3)
            d[2] *= 0.8  # stay clear of the polar axis
            x = d / np.linalg.norm(d) * rng.uniform(0.1, 3.0)
            z = rng.normal(size=3) + 1j * rng.normal(size=3)
            res = reproduce_check(cache, u, x, z, args.lmax, hq)
            rows.append((x, res, res / (norm + 1e-300)))
    else:
        if "params" in obj:
            p = obj["params"]
            params = make_params(p["lam"], p["mu"], p["rho"], p["omega"])
        else:
            params = _build_params(args)
        modes = {int(e["n"]): (complex(*e["a"]), complex(*e["b"]))
                 for e in obj["modes"]}
        u = CoeffField2D.from_dict(params, modes)
        if u.support_n > args.lmax - 2:
            print(f"warning: support |n| = {u.support_n} exceeds lmax - 2",
                  file=sys.stderr)
            warned = True
        cache2 = build_cache_2d(params, args.lmax)
        hq2 = HModeQuadrature2D(params, cache2, args.lmax)
        norm = coeff_field_norm_2d(u, cache2)
        rows = []
        for _ in range(args.probes):
            d = rng.normal(size=2)
            x = d / np.linalg.norm(d) * rng.uniform(0.1, 3.0)
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            res = reproduce_check_2d(cache2, u, x, z, args.lmax, hq2)
            rows.append((x, res, res / (norm + 1e-300)))
    with open(out / "reproduce.csv", "w", newline="") as fh:
        fh.write(",".join(list("xyz"[: args.dim]) + ["residual", "rel_residual"]) + "\n")
        for x, res, rel in rows:
            fh.write(",".join(_fmt(c) for c in x) + f",{_fmt(res)},{_fmt(rel)}\n")
    worst = max(rel for _, _, rel in rows) if rows else 0.0
    print(f"max relative residual: {worst:.3e} (tolerance {tol:.1e})")
    if worst > tol and not warned:
        return EXIT_TOLERANCE
    return EXIT_PASS


# synth ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    config = RunConfig.from_args(args)
    try:
        ff_obj = json.loads(Path(args.farfield_file).read_text())
        grid_rows = Path(args.grid_file).read_text().strip().splitlines()
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO
    except json.JSONDecodeError as exc:
        print(f"far-field file does not parse: line {exc.lineno}: {exc.msg}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        g = FarFieldPattern.from_json_obj(ff_obj)
    except (ValueError, KeyError) as exc:
        print(f"far-field invariant violation: {exc}", file=sys.stderr)
        return EXIT_USAGE
    params = config.params
    header = grid_rows[0].strip().lower().replace(" ", "")
    if header != "x,y,z":
        print("grid file must start with header 'x,y,z'", file=sys.stderr)
        return EXIT_USAGE
    try:
        pts = np.array([[float(v) for v in line.split(",")] for line in grid_rows[1:]])
    except ValueError as exc:
        print(f"grid file does not parse: {exc}", file=sys.stderr)
        return EXIT_USAGE
    values = herglotz_synthesize(g, params, pts) if pts.size else np.zeros((0, 3), complex)
    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    cols = ["x", "y", "z", "re_ux", "im_ux", "re_uy", "im_uy", "re_uz", "im_uz"]
    if args.residual:
        cols.append("navier_residual")
        f = lambda q: herglotz_synthesize(g, params, q)
    with open(out / "synth_field.csv", "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, p in enumerate(pts):
            row = [p[0], p[1], p[2]]
            for c in range(3):
                row += [values[i, c].real, values[i, c].imag]
            if args.residual:
                row.append(navier_residual_fd(f, params, p))
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    print(f"wrote {len(pts)} field rows")
    return EXIT_PASS


# entry point ----------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="elastic-herglotz",
        description="Elastic displacement-field expansions, weighted-space Gram "
                    "verification, and reproducing-kernel evaluation")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("verify-gram", help="closed Gram rows vs quadrature")
    _add_common(p)
    p.add_argument("--perturb-convention", action="store_true",
                   help="negative-control hook: flip the closed L/N rows")
    p.set_defaults(func=cmd_verify_gram)

    p = sub.add_parser("asymptotics", help="decay diagnostics and coupling tables")
    _add_common(p, default_lmax=45)
    p.set_defaults(func=cmd_asymptotics)

    p = sub.add_parser("norms", help="mode norms table over degree")
    _add_common(p, default_lmax=40)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("kernel", help="evaluate the truncated kernel tensor")
    _add_common(p, default_lmax=8)
    p.add_argument("--x", required=True, help="comma-separated point")
    p.add_argument("--y", required=True, help="comma-separated point")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("reproduce", help="reproducing-identity residuals for a field file")
    _add_common(p, default_lmax=6)
    p.add_argument("field_file")
    p.add_argument("--probes", type=int, default=20)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("synth", help="synthesize a field from a far-field pattern")
    _add_common(p)
    p.add_argument("farfield_file")
    p.add_argument("grid_file")
    p.add_argument("--residual", action="store_true",
                   help="append a finite-difference equation-residual column")
    p.set_defaults(func=cmd_synth)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
