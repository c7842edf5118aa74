"""Command-line front end.

Every subcommand writes one JSON report (sorted keys) to stdout or
``--output`` and a short human summary to stderr.  Global options may also
come from a ``key = value`` file given with ``--config``; flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import symexpr as sx
from .symexpr import SampleDomain

EXIT_OK, EXIT_ERROR, EXIT_AMBIGUOUS = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    samples: int = 100
    tol: float = 1e-9
    output: str | None = None
    options: dict = field(default_factory=dict)

    def validate(self):
        problems = []
        if self.seed < 0:
            problems.append("seed must be non-negative")
        if self.samples <= 0:
            problems.append("samples must be positive")
        if not self.tol > 0:
            problems.append("tol must be positive")
        tr = self.options.get("tol_ratio")
        if tr is not None and not tr > 0:
            problems.append("tol-ratio must be positive")
        for N in self.options.get("grid") or ():
            if N < 4 or N % 2:
                problems.append(f"grid resolution {N} must be an even integer >= 4")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def domain(self) -> SampleDomain:
        return SampleDomain(n_samples=self.samples, tol=self.tol, seed=self.seed)

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d


def read_config(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys mirror long flags."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def _grid(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid list {text!r}") from None


def _build_parser() -> tuple:
    p = argparse.ArgumentParser(prog="acsforms", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--config")
    p.add_argument("--output", "-o")
    sub = p.add_subparsers(dest="command", required=True)
    subs = {}

    s = subs["verify-closed"] = sub.add_parser("verify-closed", help="closedness of a beta + b gamma for J_f")
    s.add_argument("--f", default="x2")
    s.add_argument("--a", default="0")
    s.add_argument("--b", default="1")

    s = subs["nijenhuis"] = sub.add_parser("nijenhuis", help="Nijenhuis tensor of a structure")
    s.add_argument("--structure", choices=("jf", "kodaira", "product6d"), default="jf")
    s.add_argument("--f", default="x2")
    s.add_argument("--lambda", dest="lam", default="sin(2*pi*x4)")
    s.add_argument("--mu", default="0")

    s = subs["alpha-family"] = sub.add_parser("alpha-family", help="closed forms alpha_{s,t} for f = x2")
    s.add_argument("--n", type=int, nargs="*")
    s.add_argument("--s", type=float)
    s.add_argument("--t", type=float)

    s = subs["kodaira"] = sub.add_parser("kodaira", help="h- on the Kodaira-Thurston manifold")
    s.add_argument("--lambda", dest="lam", default="sin(2*pi*x4)")
    s.add_argument("--mu", default="0")

    s = subs["product6d"] = sub.add_parser("product6d", help="six-dimensional product structure")
    s.add_argument("--f", default="2+sin(2*pi*x1)")

    s = subs["hminus"] = sub.add_parser("hminus", help="numerical kernel dimension on T^4")
    s.add_argument("--f", default="0", help="expression in x1,x2,y1,y2, or 'glued'")
    s.add_argument("--grid", type=_grid, default="4,6")
    s.add_argument("--tol-ratio", type=float, default=1e3)
    s.add_argument("-k", type=int, default=8)
    s.add_argument("--report")

    s = subs["reproduce-paper"] = sub.add_parser("reproduce-paper", help="run every acceptance check")
    s.add_argument("--only", type=_grid, default=None)
    return p, subs


GLOBAL_KEYS = ("seed", "samples", "tol", "output")


def parse_config(argv=None) -> RunConfig:
    parser, subs = _build_parser()
    args = parser.parse_args(argv)
    if args.config:
        values = read_config(args.config)
        glob = {k: v for k, v in values.items() if k in GLOBAL_KEYS}
        local = {k: v for k, v in values.items() if k not in GLOBAL_KEYS}
        if "lambda" in local:
            local["lam"] = local.pop("lambda")
        parser.set_defaults(**glob)
        known = {a.dest for a in subs[args.command]._actions}
        unknown = set(local) - known
        if unknown:
            raise ConfigError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        subs[args.command].set_defaults(**local)
        args = parser.parse_args(argv)
    opts = {k: v for k, v in vars(args).items()
            if k not in GLOBAL_KEYS + ("command", "config")}
    cfg = RunConfig(args.command, args.seed, args.samples, args.tol, args.output, opts)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------


def _expr(text: str, chart=sx.CHART_R4) -> sx.Expr:
    return sx.parse(str(text), chart)


def _cmd_verify_closed(cfg: RunConfig) -> tuple:
    from .r4family import AntiInvariantCandidate, build_jf, first_order_residual
    o = cfg.options
    f, a, b = _expr(o["f"]), _expr(o["a"]), _expr(o["b"])
    dom = cfg.domain
    build_jf(f)
    res = first_order_residual(AntiInvariantCandidate(a, b), f)
    env = dom.points(sx.CHART_R4)
    norms = [float(np.sqrt(np.mean(np.broadcast_to(sx.evaluate_array(r, env), (dom.n_samples,)) ** 2)))
             for r in res]
    zero = [sx.is_zero(r, dom) for r in res]
    rep = {"residual_rms": norms, "residual_zero": zero, "closed": all(zero),
           "residuals": [sx.to_string(r) for r in res]}
    return rep, f"closed: {all(zero)}  residual rms {['%.2e' % n for n in norms]}", EXIT_OK


def _vector_str(v, labels) -> str:
    parts = [f"({sx.to_string(c)})*{l}" for c, l in zip(v, labels) if not sx.is_const_zero(c)]
    return " + ".join(parts) or "0"


def _cmd_nijenhuis(cfg: RunConfig) -> tuple:
    from .acs import is_integrable, nijenhuis
    o = cfg.options
    dom = cfg.domain
    if o["structure"] == "jf":
        from .r4family import build_jf
        J = build_jf(_expr(o["f"])).acs
        labels = ["d/dx1", "d/dx2", "d/dy1", "d/dy2"]
    elif o["structure"] == "kodaira":
        from .nilmanifold import build_j_lambda_mu
        J = build_j_lambda_mu(_expr(o["lam"], sx.CHART_KT), _expr(o["mu"], sx.CHART_KT)).acs
        labels = ["E1", "E2", "E3", "E4"]
    else:
        from .product6d import build_product_acs
        J = build_product_acs(_expr(o["f"], sx.CHART_6D), dom).acs
        labels = [f"d/d{x}" for x in sx.CHART_6D]
    comps = {}
    for j in range(J.dim):
        for k in range(j + 1, J.dim):
            v = nijenhuis(J, j, k)
            if not all(sx.is_zero(c, dom) for c in v):
                comps[f"N({labels[j]},{labels[k]})"] = _vector_str(v, labels)
    integrable = is_integrable(J, dom)
    rep = {"structure": o["structure"], "integrable": integrable, "nonzero_components": comps}
    head = next(iter(comps.items()), None)
    summary = f"integrable: {integrable}" + (f"  e.g. {head[0]} = {head[1]}" if head else "")
    return rep, summary, EXIT_OK


def _cmd_alpha_family(cfg: RunConfig) -> tuple:
    from .r4family import alpha_family, alpha_n, alpha_n_parameters
    o = cfg.options
    dom = cfg.domain
    items = []
    if o.get("s") is not None or o.get("t") is not None:
        if o.get("s") is None or o.get("t") is None:
            raise ConfigError("--s and --t must be given together")
        items.append(((o["s"], o["t"]), alpha_family(o["s"], o["t"])))
    for n in o.get("n") or ([] if items else range(1, 6)):
        items.append((alpha_n_parameters(n), alpha_n(n)))
    out = [{"s": s, "t": t, "closed": w.d().is_zero(dom), "form": w.to_json()}
           for (s, t), w in items]
    ok = all(x["closed"] for x in out)
    return {"forms": out, "all_closed": ok}, f"{len(out)} forms, all closed: {ok}", EXIT_OK


def _cmd_kodaira(cfg: RunConfig) -> tuple:
    from .nilmanifold import verify_h_minus_2
    o = cfg.options
    r = verify_h_minus_2(_expr(o["lam"], sx.CHART_KT), _expr(o["mu"], sx.CHART_KT), cfg.domain)
    d = r.as_dict()
    return d, d["sandwich"] + ("" if r.ok else f"  failed: {r.failures}"), EXIT_OK


def _cmd_product6d(cfg: RunConfig) -> tuple:
    from .product6d import build_product_acs, local_anti_invariant_check, product_nijenhuis_check
    dom = cfg.domain
    chart = build_product_acs(_expr(cfg.options["f"], sx.CHART_6D), dom)
    n = product_nijenhuis_check(chart, dom)
    rep = {"structure": {"f": n["f"], "squares_to_minus_identity": True},
           "nijenhuis": n, "local_forms": local_anti_invariant_check(chart, dom)}
    return rep, f"nonvanishing N: {n['nonvanishing']}", EXIT_OK


def _cmd_hminus(cfg: RunConfig) -> tuple:
    from .kernel import resolution_sweep
    from .r4family import corollary_glued_structure
    o = cfg.options
    f = o["f"]
    target = corollary_glued_structure() if f == "glued" else _expr(f)
    sweep = resolution_sweep(target, o["grid"], o["tol_ratio"], o["k"], cfg.seed)
    rep = {
        "f": f if f == "glued" else sx.to_string(target),
        "grid": list(o["grid"]),
        "singular_values": {str(r.N): r.singular_values for r in sweep.reports},
        "dim": sweep.dim,
        "dims": {str(r.N): r.dim for r in sweep.reports},
        "stable": sweep.stable,
        "ambiguous": sweep.ambiguous,
        "basis_residuals": {str(r.N): r.basis_residuals for r in sweep.reports},
        "reports": [r.as_dict() for r in sweep.reports],
    }
    code = EXIT_OK if sweep.stable else EXIT_AMBIGUOUS
    return rep, f"dim {sweep.dim} stable {sweep.stable}", code


def _cmd_reproduce(cfg: RunConfig) -> tuple:
    from .acceptance import run_all
    results = run_all(cfg.options.get("only"))
    lines = "\n".join(r.line() for r in results)
    rep = {"criteria": [{k: v for k, v in r.as_dict().items() if k != "runtime"}
                        for r in results],
           "passed": sum(r.passed for r in results), "total": len(results)}
    return rep, lines, EXIT_OK


COMMANDS = {
    "verify-closed": _cmd_verify_closed,
    "nijenhuis": _cmd_nijenhuis,
    "alpha-family": _cmd_alpha_family,
    "kodaira": _cmd_kodaira,
    "product6d": _cmd_product6d,
    "hminus": _cmd_hminus,
    "reproduce-paper": _cmd_reproduce,
}


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def dump_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_jsonable) + "\n"


def run(cfg: RunConfig) -> tuple:
    """Execute ``cfg``; returns ``(exit code, report)``."""
    try:
        body, summary, code = COMMANDS[cfg.command](cfg)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        mod = type(exc).__module__.rsplit(".", 1)[-1]
        body, summary, code = {"error": f"{mod}: {type(exc).__name__}: {exc}"}, f"error: {exc}", EXIT_ERROR
    report = {"version": __version__, "command": cfg.command,
              "config": cfg.resolved(), "result": body}
    print(summary, file=sys.stderr)
    return code, report


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except (ConfigError, OSError) as exc:
        print(f"acsforms: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; 2 is reserved for ambiguous results
        return EXIT_ERROR if exc.code else EXIT_OK
    code, report = run(cfg)
    text = dump_report(report)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    extra = cfg.options.get("report")
    if extra:
        Path(extra).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
