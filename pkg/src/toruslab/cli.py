"""Command-line front end.

Subcommands mirror the library surface: ``corpus`` writes the seeded
function battery with a hash manifest, ``norm`` evaluates one named norm
on a stored field, ``verify`` runs the equivalence checks and emits
reports, and ``ns`` drives the 3D solver probes. Every run writes its
fully serialized configuration next to its outputs, so any artifact is
reproducible from the config and seed alone. Numeric output is full
double precision; timestamps appear only inside manifests.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .corpus import (
    CorpusSpec,
    default_corpus_specs,
    generate,
    specs_from_manifest,
    write_corpus_manifest,
)
from .extensions import build_stack
from .fieldio import read_field, write_csv, write_field, write_json
from .norms import (
    BoxFamily,
    besov_norm,
    bloch_cb_norm,
    bloch_hb_norm,
    campanato_norm,
    campanato_pair_norm,
    dagger_norm,
    default_linear_mesh,
    default_parabolic_mesh,
    frac_campanato_norm,
    h_alpha2_norm,
    inverse_space_norm,
    q_norm,
    scaled_h_norm,
    scaled_t_norm,
    star_norm,
    t_alpha2_norm,
)
from .ns3d import (
    export_trace,
    inflation_probe,
    mild_solve_picard,
    random_divergence_free,
    shear_modes,
    smalldata_probe,
    step_ifrk4,
    taylor_green,
)
from .spectral import TorusGrid
from .verify import (
    SCALING_NORMS,
    VerifyConfig,
    Workspace,
    check_gradient_constant,
    check_inclusions,
    check_scaling,
    check_theorem_2_1,
    check_theorem_3_1,
    check_theorem_4_1,
    check_theorem_4_2,
    write_reports,
)

DEFAULT_ALPHAS = (-0.5, -0.25, 0.0, 0.25, 0.5)
DEFAULT_BETAS = (0.25, 0.5, 0.75)
THEOREMS = ("2.1", "2.2", "3.1", "4.1", "4.2", "inclusions", "scaling", "all")

_TRACE_NORMS = {
    "campanato": campanato_norm,
    "campanato_pair": campanato_pair_norm,
    "q": q_norm,
    "frac_campanato": frac_campanato_norm,
}
_STACK_NORMS = {
    "h": ("poisson", h_alpha2_norm),
    "scaled_h": ("poisson", scaled_h_norm),
    "star": ("poisson", star_norm),
    "t": ("heat", t_alpha2_norm),
    "scaled_t": ("heat", scaled_t_norm),
}
NORM_NAMES = tuple(
    sorted(
        list(_TRACE_NORMS)
        + list(_STACK_NORMS)
        + ["besov", "inverse", "dagger_linear", "dagger_parabolic",
           "bloch_hb", "bloch_cb"]
    )
)


@dataclass(frozen=True)
class RunConfig:
    """One run, fully serialized; reruns from the payload are identical."""

    command: str
    grid: int = 256
    dims: int = 1
    length: float = 1.0
    alphas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()
    boxes: tuple[int, int, int] | None = None  # (j_min, j_max, stride)
    corpus: str | None = None
    spread_max: float = 30.0
    drift_max: float = 0.25
    out: str | None = None
    seed: int = 0
    threads: int | None = None
    options: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError(f"seed must fit in u64, got {self.seed}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if self.boxes is not None:
            object.__setattr__(self, "boxes", tuple(int(v) for v in self.boxes))

    def torus_grid(self) -> TorusGrid:
        return TorusGrid(dims=self.dims, size=self.grid, length=self.length)

    def box_family(self, grid: TorusGrid) -> BoxFamily:
        if self.boxes is None:
            return BoxFamily.default(grid)
        j_min, j_max, stride = self.boxes
        return BoxFamily(
            grid=grid, stride=stride, j_values=tuple(range(j_min, j_max + 1))
        )

    def to_payload(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_payload(cls, payload: Mapping) -> "RunConfig":
        data = dict(payload)
        if data.get("boxes") is not None:
            data["boxes"] = tuple(data["boxes"])
        data["alphas"] = tuple(data.get("alphas", ()))
        data["betas"] = tuple(data.get("betas", ()))
        return cls(**data)


# --- argument plumbing ---

_LIST_FLAGS = ("--alpha", "--beta", "--deltas")
_NEGATIVE_VALUE = re.compile(r"^-(\d|\.\d)")


def _fuse_negative_values(argv: list[str]) -> list[str]:
    """argparse reads '-0.5,0,0.5' as a flag; fold such values into '='."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (
            tok in _LIST_FLAGS
            and i + 1 < len(argv)
            and _NEGATIVE_VALUE.match(argv[i + 1])
        ):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _parse_floats(text: str) -> tuple[float, ...]:
    values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    if not values:
        raise ValueError(f"no numbers in {text!r}")
    return values


def _parse_boxes(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected JMIN:JMAX:STRIDE, got {text!r}")
    return (int(parts[0]), int(parts[1]), int(parts[2]))


def _add_common(parser: argparse.ArgumentParser, grid: int, dims: int) -> None:
    parser.add_argument("--grid", type=int, default=grid, metavar="N",
                        help=f"points per axis (default {grid})")
    parser.add_argument("--dims", type=int, default=dims, choices=(1, 2, 3),
                        help=f"torus dimension (default {dims})")
    parser.add_argument("--length", type=float, default=1.0,
                        help="torus side length (default 1.0)")
    parser.add_argument("--boxes", type=_parse_boxes, default=None,
                        metavar="JMIN:JMAX:STRIDE",
                        help="box family: radius exponents and center stride")
    parser.add_argument("--seed", type=int, default=0, metavar="U64")
    parser.add_argument("--threads", type=int, default=None, metavar="K",
                        help="cap worker threads in the evaluation workspace")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toruslab",
        description="Carleson-box norms, semigroup extensions, and mild "
                    "flow solutions on the periodic torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", help="write the seeded function battery")
    _add_common(p, grid=256, dims=1)
    p.add_argument("--out", required=True, metavar="DIR")

    p = sub.add_parser("norm", help="evaluate one named norm on a stored field")
    _add_common(p, grid=256, dims=1)
    p.add_argument("--norm", required=True, choices=NORM_NAMES)
    p.add_argument("--input", required=True, metavar="FIELD.BIN")
    p.add_argument("--alpha", type=float, default=0.0,
                   help="norm parameter (default 0)")
    p.add_argument("--horizon", type=float, default=None,
                   help="time horizon for the inverse-space norm (default inf)")
    p.add_argument("--out", default=None, metavar="DIR",
                   help="also write norm.json and the run config here")

    p = sub.add_parser("verify", help="run equivalence checks and emit reports")
    _add_common(p, grid=256, dims=1)
    p.add_argument("--theorem", default="all", choices=THEOREMS,
                   help="which check family to run (default all)")
    p.add_argument("--alpha", type=_parse_floats, default=None,
                   metavar="A1,A2,...",
                   help=f"regularity levels (default {DEFAULT_ALPHAS})")
    p.add_argument("--beta", type=_parse_floats, default=None,
                   metavar="B1,B2,...",
                   help=f"sup-norm levels in (0,1) (default {DEFAULT_BETAS})")
    p.add_argument("--corpus", default=None, metavar="MANIFEST.JSON",
                   help="function battery to use (default: built-in 20)")
    p.add_argument("--spread-max", type=float, default=30.0)
    p.add_argument("--drift-max", type=float, default=0.25)
    p.add_argument("--no-refine", action="store_true",
                   help="skip the doubled-grid drift measurement")
    p.add_argument("--out", default="toruslab-reports", metavar="DIR")

    p = sub.add_parser("ns", help="3D solver probes and trace export")
    _add_common(p, grid=32, dims=3)
    p.add_argument("--probe", required=True,
                   choices=("smalldata", "inflation", "run"))
    p.add_argument("--alpha", type=float, default=None,
                   help="data-norm regularity (defaults: smalldata -0.5, "
                        "inflation 0.5)")
    p.add_argument("--deltas", type=_parse_floats,
                   default=(0.0, 0.25, 0.5, 1.0, 2.0), metavar="D1,D2,...",
                   help="small-data amplitude ladder")
    p.add_argument("--eps", type=float, default=1.0,
                   help="inflation data-norm size")
    p.add_argument("--modes", type=int, default=8,
                   help="shear mode count for inflation/shear data")
    p.add_argument("--horizon", type=float, default=0.1)
    p.add_argument("--nodes", type=int, default=128,
                   help="stored quadrature nodes for the fixed-point solver")
    p.add_argument("--steps", type=int, default=400,
                   help="time steps for the Runge-Kutta reference")
    p.add_argument("--ratio-max", type=float, default=4.0,
                   help="contraction bound for the small-data ladder")
    p.add_argument("--data", default="random",
                   choices=("taylor-green", "random", "shear"),
                   help="initial data for --probe run")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--max-freq", type=float, default=2.0,
                   help="band limit of random initial data")
    p.add_argument("--solver", default="picard", choices=("picard", "ifrk4"))
    p.add_argument("--linear-only", action="store_true",
                   help="disable the nonlinearity (pure heat flow)")
    p.add_argument("--out", default="toruslab-ns", metavar="DIR")

    return parser


_CORE_KEYS = ("grid", "dims", "length", "boxes", "corpus",
              "spread_max", "drift_max", "out", "seed", "threads")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = vars(args).copy()
    command = data.pop("command")
    alphas = data.pop("alpha", None)
    if alphas is None:
        alphas = ()
    elif isinstance(alphas, float):
        alphas = (alphas,)
    betas = data.pop("beta", None) or ()
    core = {key: data.pop(key) for key in _CORE_KEYS if key in data}
    return RunConfig(
        command=command, alphas=alphas, betas=betas, options=data, **core
    )


def _write_run_config(config: RunConfig, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    write_json(config.to_payload(), directory / "run_config.json")


# --- subcommands ---

def cmd_corpus(config: RunConfig) -> int:
    grid = config.torus_grid()
    specs = default_corpus_specs(config.seed)
    out = Path(config.out)
    _write_run_config(config, out)
    for i, spec in enumerate(specs):
        write_field(generate(spec, grid), out / f"member_{i:02d}_{spec.kind}.bin")
    write_corpus_manifest(specs, grid, out / "manifest.json")
    print(f"wrote {len(specs)} members at N={grid.size}, dims={grid.dims} -> {out}")
    return 0


def _evaluate_norm(name, f, alpha, horizon, boxes) -> dict:
    grid = f.grid
    if name in _TRACE_NORMS:
        return _TRACE_NORMS[name](f, alpha, boxes).to_payload()
    if name == "besov":
        return {"value": besov_norm(f)}
    if name == "inverse":
        top = math.inf if horizon is None else horizon
        return inverse_space_norm(f, alpha, top, boxes).to_payload()
    if name in _STACK_NORMS:
        kind, norm = _STACK_NORMS[name]
        mesh = (default_linear_mesh(grid) if kind == "poisson"
                else default_parabolic_mesh(grid))
        return norm(build_stack(f, kind, mesh), alpha, boxes).to_payload()
    if name in ("dagger_linear", "dagger_parabolic"):
        stack = build_stack(f, "heat", default_parabolic_mesh(grid))
        height = "linear" if name == "dagger_linear" else "parabolic"
        return dagger_norm(stack, alpha, boxes, box_height=height).to_payload()
    if name == "bloch_hb":
        return {"value": bloch_hb_norm(build_stack(f, "poisson", default_linear_mesh(grid)))}
    if name == "bloch_cb":
        return {"value": bloch_cb_norm(build_stack(f, "heat", default_parabolic_mesh(grid)))}
    raise ValueError(f"unknown norm {name!r}")


def cmd_norm(config: RunConfig) -> int:
    opts = config.options
    f = read_field(opts["input"])
    alpha = config.alphas[0] if config.alphas else 0.0
    boxes = config.box_family(f.grid)
    payload = {
        "norm": opts["norm"],
        "alpha": alpha,
        "input": opts["input"],
        "result": _evaluate_norm(opts["norm"], f, alpha, opts.get("horizon"), boxes),
    }
    print(json.dumps(payload, sort_keys=True))
    if config.out is not None:
        out = Path(config.out)
        _write_run_config(config, out)
        write_json(payload, out / "norm.json")
    return 0


def _scaling_field(alpha: float, grid: TorusGrid, seed: int):
    """The exponent-measurement field: a localized bump for negative
    trace exponents, a low pure mode otherwise (periodic fields saturate
    box averages at large radii, pinning the sup for alpha <= 0)."""
    if alpha < 0.0:
        spec = CorpusSpec.make("bump", seed=seed, width=0.04)
    else:
        spec = CorpusSpec.make("single_mode", seed=seed, k=2)
    return generate(spec, grid)


def _verify_reports(config: RunConfig, ws: Workspace, boxes: BoxFamily) -> list:
    theorem = config.options["theorem"]
    alphas = config.alphas or DEFAULT_ALPHAS
    betas = config.betas or DEFAULT_BETAS
    refine = not config.options.get("no_refine", False)

    def want(name: str) -> bool:
        return theorem in ("all", name)

    reports: list = []
    if want("2.1"):
        reports += [check_theorem_2_1(ws, a, refine=refine) for a in alphas]
    if want("3.1"):
        reports += [check_theorem_3_1(ws, a, refine=refine, part="i")
                    for a in alphas]
        reports += [check_theorem_3_1(ws, b, refine=refine, part="bloch")
                    for b in betas]
        reports += [check_theorem_3_1(ws, a, refine=refine, part="star")
                    for a in alphas]
    if want("4.1"):
        for part in ("i", "ii"):
            reports += [check_theorem_4_1(ws, a, refine=refine, part=part)
                        for a in alphas]
        reports += [check_theorem_4_1(ws, b, refine=refine, part="bloch")
                    for b in betas]
        for part in ("dagger-linear", "dagger-parabolic"):
            reports += [check_theorem_4_1(ws, a, refine=refine, part=part)
                        for a in alphas]
    if want("4.2"):
        reports += [check_theorem_4_2(ws, a, refine=refine) for a in alphas]
    if want("2.2"):
        reports += [check_gradient_constant(ws, a, refine=refine)
                    for a in alphas]
    if want("inclusions"):
        reports += [check_inclusions(ws, b, refine=refine) for b in betas]
    if want("scaling"):
        for a in alphas:
            f = _scaling_field(a, ws.grid, config.seed)
            # at the -1/2 endpoint no periodic band-limited field can
            # exhibit the trace exponent, so the row is report-only
            enforce = a > -0.5
            reports += [check_scaling(f, norm_id, a, boxes, enforce=enforce)
                        for norm_id in SCALING_NORMS]
    return reports


def cmd_verify(config: RunConfig) -> int:
    grid = config.torus_grid()
    boxes = config.box_family(grid)
    specs = (specs_from_manifest(config.corpus) if config.corpus
             else default_corpus_specs(config.seed))
    ws = Workspace(specs, grid, boxes=boxes, threads=config.threads)
    reports = _verify_reports(config, ws, boxes)
    out = Path(config.out)
    _write_run_config(config, out)
    thresholds = VerifyConfig(
        spread_max=config.spread_max, drift_max=config.drift_max
    )
    all_ok = write_reports(reports, str(out), thresholds)
    verdict = "PASS" if all_ok else "FAIL"
    print(f"{verdict}: {len(reports)} reports -> {out}")
    return 0 if all_ok else 1


def cmd_ns(config: RunConfig) -> int:
    if config.dims != 3:
        raise ValueError("flow probes need --dims 3")
    opts = config.options
    grid = config.torus_grid()
    boxes = config.box_family(grid)
    out = Path(config.out)
    probe = opts["probe"]

    if probe == "smalldata":
        alpha = config.alphas[0] if config.alphas else -0.5
        report = smalldata_probe(
            opts["deltas"], alpha, opts["horizon"], grid, seed=config.seed,
            boxes=boxes, nodes=opts["nodes"], ratio_max=opts["ratio_max"],
        )
        _write_run_config(config, out)
        write_json(report.to_payload(), out / "smalldata.json")
        write_csv(
            out / "smalldata.csv",
            ["delta", "converged", "x_norm", "ratio"],
            [[r.delta, r.converged, r.x_norm, r.ratio] for r in report.rows],
        )
        print(f"smalldata alpha={alpha}: linear ratio {report.linear_ratio:.6g}, "
              f"threshold {report.threshold} -> {out}")
        return 0 if report.passes() else 1

    if probe == "inflation":
        alpha = config.alphas[0] if config.alphas else 0.5
        report = inflation_probe(
            opts["eps"], alpha, grid, mode_count=opts["modes"],
            horizon=opts["horizon"], steps=opts["steps"], seed=config.seed,
            boxes=boxes,
        )
        _write_run_config(config, out)
        write_json(report.to_payload(), out / "inflation.json")
        write_csv(
            out / "inflation.csv",
            ["eps", "modes", "initial_norm", "linear_peak", "nonlinear_peak",
             "growth_ratio", "shell_fraction", "resolved"],
            [[report.eps, report.mode_count, report.initial_norm,
              report.linear_peak, report.nonlinear_peak, report.growth_ratio,
              report.shell_fraction, report.resolved]],
        )
        print(f"inflation K={report.mode_count} eps={report.eps}: growth ratio "
              f"{report.growth_ratio:.6g} (resolved={report.resolved}) -> {out}")
        return 0

    # probe == "run": solve once and export the trace
    kind = opts["data"]
    if kind == "taylor-green":
        a = taylor_green(grid, amplitude=opts["amplitude"])
    elif kind == "shear":
        a = shear_modes(grid, opts["modes"], amplitude=opts["amplitude"],
                        seed=config.seed)
    else:
        a = random_divergence_free(
            grid, seed=config.seed, max_freq=opts["max_freq"]
        ).scaled(opts["amplitude"])
    nonlinear = not opts.get("linear_only", False)
    if opts["solver"] == "picard":
        trace = mild_solve_picard(
            a, opts["horizon"], nodes=opts["nodes"], nonlinear=nonlinear
        )
    else:
        trace = step_ifrk4(
            a, opts["horizon"], steps=opts["steps"], nonlinear=nonlinear
        )
    _write_run_config(config, out)
    export_trace(trace, out / "trace")
    print(f"{opts['solver']} run: {trace.times.size} nodes, "
          f"converged={trace.converged} -> {out / 'trace'}")
    return 0


_DISPATCH = {
    "corpus": cmd_corpus,
    "norm": cmd_norm,
    "verify": cmd_verify,
    "ns": cmd_ns,
}


def main(argv: list[str] | None = None) -> int:
    raw = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(_fuse_negative_values(raw))
    try:
        config = config_from_args(args)
        return _DISPATCH[config.command](config)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
