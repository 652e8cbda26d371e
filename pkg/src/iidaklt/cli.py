"""Command-line interface: ``iidaklt {correlate,gap,tasaki,parent-ham,rank-probe}``.

Each command reads an optional JSON config (unknown keys are rejected), lets the
flags override it, and writes CSV (or JSON for ``parent-ham``) to stdout or
``--out``.  Floats are printed as ``%.16e``.  Exit codes: 0 success, 2 config
error, 3 numerical failure, 4 capacity exceeded.
"""
import argparse
import csv
import hashlib
import io
import json
import math
import sys

import jsonschema
import numpy as np

from . import aklt, apparatus, hamiltonian, tasaki
from .disorder import DistributionSpec, SeedSpec, sample_window
from .errors import CapacityError, DomainError, NumericalFailure
from .linalg import Tolerance

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_CAPACITY = 0, 2, 3, 4

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_DIST = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "a", "b"],
         "properties": {"kind": {"const": "uniform"}, "a": _NUM, "b": _NUM}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "exponent", "a", "b"],
         "properties": {"kind": {"const": "truncated_power"}, "exponent": _NUM, "a": _NUM, "b": _NUM}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "x", "density"],
         "properties": {"kind": {"const": "table"}, "x": {"type": "array", "items": _NUM},
                        "density": {"type": "array", "items": _NUM}}},
    ]
}
_COMMON = {
    "seed": {"type": "integer", "minimum": 0},
    "workers": {"type": "integer", "minimum": 1},
    "out": {"type": "string"},
    "oracle": {"type": "boolean"},
    "allow_degenerate": {"type": "boolean"},
    "tolerance": {"type": "object", "additionalProperties": False,
                  "properties": {"rel": _NUM, "abs": _NUM}},
}
_ANGLES = {"type": "array", "items": _NUM, "minItems": 1}


def _schema(**props):
    return {"type": "object", "additionalProperties": False, "properties": {**_COMMON, **props}}


SCHEMAS = {
    "correlate": _schema(angles=_ANGLES, constant=_NUM, distribution=_DIST, x={**_INT, "minimum": 0},
                         ell_min={**_INT, "minimum": 0}, ell_max={**_INT, "minimum": 0}),
    "gap": _schema(windows={"type": "array", "items": _ANGLES}, constant={"type": "array", "items": _NUM},
                   sizes={"type": "array", "items": {**_INT, "minimum": 2}}, distribution=_DIST,
                   samples={**_INT, "minimum": 1}, kernel_tol={**_NUM, "exclusiveMinimum": 0}),
    "tasaki": _schema(distribution=_DIST, L_values={"type": "array", "items": {**_INT, "minimum": 1}, "minItems": 1},
                      samples={**_INT, "minimum": 2}, estimator={"enum": ["contraction", "geometric"]},
                      geometric_samples={**_INT, "minimum": 2}),
    "parent-ham": _schema(angles=_ANGLES),
    "rank-probe": _schema(state={"enum": ["aklt", "product"]}, angles=_ANGLES,
                          product_diagonals={"type": "array", "items": {"type": "array", "items": _NUM}},
                          radii={"type": "array", "items": {**_INT, "minimum": 1}, "minItems": 1},
                          cut=_NUM),
}

DEFAULTS = {
    "correlate": {"constant": 0.4, "x": 0, "ell_min": 0, "ell_max": 20},
    "gap": {"constant": [0.3, 0.2, 0.1, 0.05], "sizes": [6], "samples": 1,
            "kernel_tol": hamiltonian.KERNEL_TOL},
    "tasaki": {"distribution": {"kind": "uniform", "a": 0.1, "b": math.pi / 4 - 0.05},
               "L_values": [8, 16, 32, 64], "samples": 2000, "estimator": "contraction"},
    "parent-ham": {"angles": [0.7, 0.9, 1.1, 0.5]},
    "rank-probe": {"state": "aklt", "angles": [0.3, 0.5, 0.7, 0.9, 1.1, 1.3], "radii": [1, 2, 3]},
}


class ConfigError(Exception):
    pass


def fmt(x):
    """Scientific notation with 17 significant digits; integers are printed as integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def write_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _json_encode(obj):
    """JSON text with every float in %.16e form (valid JSON numbers)."""
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_encode(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _json_encode(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return _json_encode([obj.real, obj.imag])
    if isinstance(obj, (float, np.floating)):
        s = fmt(obj)
        return s if s not in ("nan", "inf", "-inf") else json.dumps(s)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if obj is None:
        return "null"
    return json.dumps(obj)


def _dist(d, allow_degenerate=False):
    if d["kind"] == "uniform":
        return DistributionSpec.uniform(d["a"], d["b"], allow_degenerate=allow_degenerate)
    if d["kind"] == "truncated_power":
        return DistributionSpec.truncated_power(d["exponent"], d["a"], d["b"], allow_degenerate=allow_degenerate)
    return DistributionSpec.table(d["x"], d["density"], allow_degenerate=allow_degenerate)


def _digest(angles):
    return hashlib.sha256(np.asarray(angles, dtype="<f8").tobytes()).hexdigest()[:16]


def _window_angles(cfg, n):
    """Angles for an n-site window from ``angles``, ``distribution`` or ``constant`` (in that priority)."""
    if "angles" in cfg:
        z = np.asarray(cfg["angles"], dtype=float)
        if z.size < n:
            raise DomainError(f"angles has {z.size} entries, need at least {n}")
        return z
    if "distribution" in cfg:
        spec = _dist(cfg["distribution"], cfg.get("allow_degenerate", False))
        return sample_window(spec, n, SeedSpec(cfg.get("seed", 0)), 0).angles
    return np.full(n, float(cfg["constant"]))


def cmd_correlate(cfg):
    """Rows (ell, value, lower_bound, log_rate[, oracle_abs_diff]) for |<S^z_x S^z_{x+ell}>|.

    ``value`` is the magnitude of the contracted correlation; for ell = 0 it is
    cos^4 of the angle at x (coincident-endpoint convention).  ``lower_bound`` is
    prod_{j=0}^{ell} cos(2 w_{x+j}); ``log_rate`` is log(value)/ell.
    """
    x, lo, hi = cfg["x"], cfg["ell_min"], cfg["ell_max"]
    if lo > hi:
        raise DomainError("ell_min must not exceed ell_max")
    z = _window_angles(cfg, x + hi + 1)
    aklt.check_angles(z[x : x + hi + 1], cfg.get("allow_degenerate", False))
    oracle = cfg.get("oracle", False)
    T1 = aklt.transfer_batch(aklt.EYE3, z[x : x + hi + 1])
    Tz = aklt.transfer_batch(aklt.SZ, z[x : x + hi + 1])
    unit = apparatus.vec(aklt.EYE2)
    left = (apparatus.vec(aklt.EYE2) / 2) @ Tz[0]  # terminal after the first S^z
    rows = []
    for ell in range(0, hi + 1):
        if ell == 0:
            value = math.cos(z[x]) ** 4
        else:
            value = abs((left @ (Tz[ell] @ unit)).real)
            left = left @ T1[ell]
        if ell < lo:
            continue
        bound = float(np.prod(np.cos(2 * z[x : x + ell + 1])))
        rate = math.log(value) / ell if ell > 0 and value > 0 else float("nan")
        row = [ell, value, bound, rate]
        if oracle:
            if 1 <= ell <= aklt.MAX_TABLE_SITES - 1:
                win = aklt.AngleWindow(x, z[x : x + ell + 1])
                bf = aklt.expectation_bruteforce(win, [aklt.SZ] + [aklt.EYE3] * (ell - 1) + [aklt.SZ])
                row.append(abs(abs(bf.real) - value))
            else:
                row.append(float("nan"))
        rows.append(row)
    header = ["ell", "value", "lower_bound", "log_rate"] + (["oracle_abs_diff"] if oracle else [])
    return write_csv(header, rows)


def cmd_gap(cfg):
    """Rows (n, angles_digest, e0, gap, kernel_dim) of open-chain parent Hamiltonians."""
    windows = []
    if "windows" in cfg:
        windows = [np.asarray(w, dtype=float) for w in cfg["windows"]]
    elif "distribution" in cfg:
        spec = _dist(cfg["distribution"], cfg.get("allow_degenerate", False))
        seed = SeedSpec(cfg.get("seed", 0))
        for n in cfg["sizes"]:
            windows += [sample_window(spec, n, seed, i, stream=(n,)).angles for i in range(cfg["samples"])]
    else:
        windows = [np.full(n, float(d)) for d in cfg["constant"] for n in cfg["sizes"]]
    rows = []
    for z in windows:
        g = hamiltonian.finite_gap(z, cfg["kernel_tol"], cfg.get("allow_degenerate", False))
        rows.append([z.size, _digest(z), g.e0, g.gap, g.kernel_dim])
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "angles_digest", "e0", "gap", "kernel_dim"])
    for r in rows:
        w.writerow([str(r[0]), r[1], fmt(r[2]), fmt(r[3]), str(r[4])])
    return out.getvalue()


def cmd_tasaki(cfg):
    """Rows (L, mean_abs_nu_plus_1, stderr, samples, mean_imag_nu, ...) over disorder samples.

    With estimator ``geometric`` the rows also carry the contraction average of
    <Gamma|T_L + 1|Gamma> and the filling-process estimate of the same quantity.
    With ``oracle`` the brute-force amplitude-table value of nu(T_L) is compared
    on the first 8 samples when 2L+2 <= 12.
    """
    spec = _dist(cfg["distribution"], cfg.get("allow_degenerate", False))
    seed = SeedSpec(cfg.get("seed", 0))
    res = tasaki.z2_index_sweep(spec, cfg["L_values"], cfg["samples"], seed, cfg.get("workers", 1))
    geometric = cfg["estimator"] == "geometric"
    oracle = cfg.get("oracle", False)
    header = ["L", "mean_abs_nu_plus_1", "stderr", "samples", "mean_imag_nu"]
    if geometric:
        header += ["overlap_mean", "overlap_stderr", "geometric_mean", "geometric_stderr"]
    if oracle:
        header += ["oracle_max_abs_diff"]
    rows = []
    for L in cfg["L_values"]:
        r = res[L]
        row = [L, r.abs_nu_plus_1.mean, r.abs_nu_plus_1.stderr, r.abs_nu_plus_1.count, r.imag_nu.mean]
        if geometric:
            p = tasaki.FillingProcessParams.from_spec(spec, L)
            g = tasaki.geometric_process(p, cfg.get("geometric_samples", cfg["samples"]), seed)
            row += [r.overlap_plus_1.mean, r.overlap_plus_1.stderr, g.mean, g.stderr]
        if oracle:
            if 2 * L + 2 <= aklt.MAX_TABLE_SITES:
                diffs = []
                for i in range(min(8, cfg["samples"])):
                    z = sample_window(spec, 2 * L + 2, seed, i, stream=(L,)).angles
                    win = aklt.AngleWindow.centered(z)
                    bf = aklt.expectation_bruteforce(win, list(tasaki.twist_unitaries(L)))
                    diffs.append(abs(bf - tasaki.tasaki_value(z)))
                row.append(max(diffs))
            else:
                row.append(float("nan"))
        rows.append(row)
    return write_csv(header, rows)


def cmd_parent_ham(cfg):
    """JSON with every bond's parent term, ground basis, residuals, and each interior triple's intersection."""
    z = np.asarray(cfg["angles"], dtype=float)
    allow = cfg.get("allow_degenerate", False)
    tol = Tolerance(**cfg.get("tolerance", {}))
    if z.size < 2:
        raise DomainError("parent-ham needs at least two angles")
    bonds = []
    for j in range(z.size - 1):
        gb = hamiltonian.ground_basis(z[j], z[j + 1], (j, j + 1), allow, tol)
        pt = hamiltonian.parent_term(z[j], z[j + 1], (j, j + 1), allow, tol)
        bonds.append({
            "site_pair": [j, j + 1],
            "angles": [float(z[j]), float(z[j + 1])],
            "ground_dim": gb.dim,
            "ground_basis": gb.vectors,
            "complement": pt.complement,
            "h": pt.h,
            "residuals": pt.residuals(gb.vectors),
        })
    triples = []
    for j in range(z.size - 2):
        rep = hamiltonian.intersection_report(z[j], z[j + 1], z[j + 2], allow, tol)
        triples.append({"sites": [j, j + 1, j + 2], "dim": rep.dim,
                        "sectors": {str(m): d for m, d in sorted(rep.sectors.items())}})
    doc = {"angles": z, "basis_order": "site j most significant; per site (+, 0, -); complex entries as [re, im]",
           "bonds": bonds, "triples": triples}
    return _json_encode(doc) + "\n"


def cmd_rank_probe(cfg):
    """Rows (gen_radius, rank) of the cross-expectation matrix across a cut."""
    tol = Tolerance(**cfg.get("tolerance", {}))
    if cfg["state"] == "product":
        diags = cfg.get("product_diagonals") or [[1 / 3, 1 / 3, 1 / 3]] * (2 * max(cfg["radii"]))
        app = apparatus.product_apparatus([np.diag(np.asarray(d, dtype=float)) for d in diags])
        n = len(diags)
    else:
        z = aklt.check_angles(cfg["angles"], cfg.get("allow_degenerate", False))
        app = aklt.aklt_apparatus(aklt.AngleWindow(0, z))
        n = z.size
    cut = cfg.get("cut", n / 2 - 0.5)
    rows = [[r, apparatus.correlation_rank(app, cut, r, tol)] for r in cfg["radii"]]
    return write_csv(["gen_radius", "rank"], rows)


COMMANDS = {
    "correlate": cmd_correlate,
    "gap": cmd_gap,
    "tasaki": cmd_tasaki,
    "parent-ham": cmd_parent_ham,
    "rank-probe": cmd_rank_probe,
}


def load_config(command, path=None, overrides=None):
    """Validated config for ``command``: defaults, then the JSON file, then flag overrides."""
    raw = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = {**raw, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    try:
        jsonschema.validate(raw, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config error at {exc.json_path}: {exc.message}") from exc
    cfg = dict(DEFAULTS[command])
    # an explicit angle source replaces the default one
    if any(k in raw for k in ("angles", "distribution", "windows")):
        cfg.pop("constant", None)
    cfg.update(raw)
    return cfg


def build_parser():
    ap = argparse.ArgumentParser(prog="iidaklt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__.splitlines()[0])
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base seed (non-negative 64-bit integer)")
        p.add_argument("--workers", type=int, help="worker processes for sampling")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--oracle", action="store_true", default=None, help="also run brute-force oracles")
        p.add_argument("--allow-degenerate", action="store_true", default=None,
                       help="accept angles near 0 or pi/2")
        if name == "tasaki":
            p.add_argument("--estimator", choices=["contraction", "geometric"])
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "workers": args.workers, "out": args.out, "oracle": args.oracle,
                 "allow_degenerate": args.allow_degenerate, "estimator": getattr(args, "estimator", None)}
    try:
        cfg = load_config(args.command, args.config, overrides)
        text = COMMANDS[args.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if cfg.get("out"):
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
