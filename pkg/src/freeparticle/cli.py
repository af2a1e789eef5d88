"""Command-line surface: build triplets, run check suites, run the
localizability experiment, and evolve packets to CSV.

Exit codes: 0 all selected checks pass, 1 at least one check failed,
2 usage or configuration error.  Reports are single JSON documents carrying
the configuration verbatim so a run can be reproduced from its own output;
all files are written atomically (temp file then rename).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .grid import build_grid, gaussian_packet
from .position import (
    INDETERMINATE,
    LOCALIZABLE,
    OBSTRUCTED,
    localizability_experiment,
)
from .triplets import TripletClass, make_triplet, parse_class_tag
from .verify import SUITE_NAMES, ehrenfest_evolution, run_suites

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

SCHEMA_VERSION = 1

_TOP_LEVEL_KEYS = {
    "schema_version", "tool_version", "config", "checks", "experiments", "passed",
}


@dataclass
class RunConfig:
    """Everything a run depends on; serialized verbatim into the report."""

    command: str
    class_tag: str = ""
    grid_sizes: list[int] = field(default_factory=list)
    p_max: float = 6.0
    mu: float = 0.0
    m: int = 0
    st_pair: int = 1
    suites: list[str] = field(default_factory=list)
    m_list: list[int] = field(default_factory=list)
    seed: int = 1729
    tolerance_overrides: dict = field(default_factory=dict)
    output: str | None = None
    expect: str | None = None
    center: list[float] = field(default_factory=lambda: [1.0, 0.0, 0.0])
    width: float = 1.0
    block_weights: list[str] = field(default_factory=list)
    t_max: float = 2.0
    steps: int = 50
    kg_slices: bool = False
    kg_prefix: str = "density"
    threads: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> list[str]:
        problems = []
        for n in self.grid_sizes:
            if n % 2 != 0:
                problems.append(f"grid size {n} is odd; the lattice is cell-centered and needs even n")
            elif n < 8:
                problems.append(f"grid size {n} is too small for the interior stencils")
        if not self.grid_sizes:
            problems.append("at least one grid size is required")
        if self.p_max <= 0:
            problems.append("p_max must be positive")
        if self.command in ("verify", "evolve"):
            try:
                cls, tag_m, tag_pair = parse_class_tag(self.class_tag)
            except ValueError as exc:
                problems.append(str(exc))
                return problems
            m = tag_m if tag_m else self.m
            pair = tag_pair if tag_pair != 1 else self.st_pair
            if cls.is_massive and self.mu <= 0:
                problems.append(f"class {cls.value} needs a positive mass, got {self.mu}")
            if not cls.is_massive and self.mu != 0:
                problems.append(f"class {cls.value} is massless; pass mu = 0")
            if cls is not TripletClass.MASSLESS_PM and m != 0:
                problems.append("the coupling integer m only applies to the massless two-block class")
            if m % 2 != 0:
                problems.append(f"the coupling integer must be even, got {m}")
            if pair not in (1, 2, 3):
                problems.append(f"inversion pair index must be 1, 2 or 3, got {pair}")
            bad = [s for s in self.suites if s not in SUITE_NAMES]
            if bad:
                problems.append(f"unknown suites {bad}; available: {', '.join(SUITE_NAMES)}")
            bad_tol = sorted(set(self.tolerance_overrides) - {"exact", "order_window"})
            if bad_tol:
                problems.append(f"unknown tolerance overrides {bad_tol}; available: exact, order_window")
            if "kg" in self.suites and cls not in (
                    TripletClass.MASSIVE_PM_1, TripletClass.MASSIVE_PM_2):
                problems.append("the kg suite applies only to the two-block massive classes")
        if self.command == "localizability":
            if not self.m_list:
                problems.append("--m with at least one coupling integer is required")
            if any(m % 2 != 0 for m in self.m_list):
                problems.append("coupling integers must be even")
            if len(self.grid_sizes) < 3:
                problems.append("the resolution ladder needs at least three sizes")
            if self.mu != 0:
                problems.append("the localizability experiment runs on massless grids (mu = 0)")
        if self.command == "evolve":
            if self.steps < 2:
                problems.append("need at least two time steps")
            if self.t_max <= 0:
                problems.append("t_max must be positive")
            if self.width <= 0:
                problems.append("packet width must be positive")
            excess = float(np.linalg.norm(self.center)) + 3.0 * self.width - self.p_max
            if excess >= 0:
                problems.append(
                    "packet support violates the boundary rule: |center| + 3 width "
                    f"exceeds p_max by {excess:.3f}")
        return problems


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="-" + os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(path: str | None, text: str) -> None:
    if path:
        _atomic_write(path, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def make_report(config: RunConfig, checks=None, experiments=None) -> dict:
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "config": config.to_dict(),
    }
    if checks is not None:
        report["checks"] = [c.to_dict() for c in checks]
        report["passed"] = all(c.passed for c in checks)
    if experiments is not None:
        report["experiments"] = experiments
    return report


def load_report(path: str) -> dict:
    """Strict read-back: unknown fields and schema drift are rejected."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ValueError(f"unknown report fields: {sorted(unknown)}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {data.get('schema_version')!r}")
    return data


def _apply_tolerance_overrides(checks, overrides: dict) -> None:
    """Re-judge recorded residuals against user-supplied bounds.  Overrides
    never touch the residuals themselves, only the pass verdicts."""
    exact_tol = overrides.get("exact")
    order_window = overrides.get("order_window")
    for check in checks:
        if exact_tol is not None and check.kind == "exact":
            check.passed = max(v for _, v in check.residuals) <= float(exact_tol)
        if order_window is not None and check.kind == "convergent" and check.order_estimate is not None:
            check.passed = abs(check.order_estimate - 4.0) <= float(order_window)


def _parse_int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_float_triple(text: str) -> list[float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return parts


def _parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise argparse.ArgumentTypeError(f"override {pair!r} is not name=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = float(value)
    return out


def _default_mu(class_tag: str, mu: float | None) -> float:
    if mu is not None:
        return mu
    try:
        cls = parse_class_tag(class_tag)[0]
    except ValueError:
        return 0.0  # validate() reports the bad tag
    return 1.0 if cls.is_massive else 0.0


def _thread_setup() -> int | None:
    raw = os.environ.get("FREEPARTICLE_THREADS")
    if not raw:
        return None
    try:
        count = int(raw)
    except ValueError:
        return None
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(count)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(count))
    return count


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    config = RunConfig(
        command="verify",
        class_tag=args.class_tag,
        grid_sizes=_parse_int_list(args.n),
        p_max=args.p_max,
        mu=_default_mu(args.class_tag, args.mu),
        m=args.m,
        st_pair=args.pair,
        suites=args.suites.split(",") if args.suites else [],
        seed=args.seed,
        tolerance_overrides=_parse_overrides(args.tol),
        output=args.output,
        expect=args.expect,
        threads=_thread_setup(),
    )
    if not config.suites:
        cls = None
        try:
            cls = parse_class_tag(config.class_tag)[0]
        except ValueError:
            pass
        names = list(SUITE_NAMES)
        if cls not in (TripletClass.MASSIVE_PM_1, TripletClass.MASSIVE_PM_2):
            names.remove("kg")
        config.suites = names
    problems = config.validate()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_USAGE

    try:
        result = run_suites(
            config.class_tag, config.grid_sizes, config.p_max, config.mu,
            m=config.m, st_pair=config.st_pair, suites=config.suites,
            seed=config.seed, config_echo=config.to_dict())
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if config.tolerance_overrides:
        _apply_tolerance_overrides(result.checks, config.tolerance_overrides)

    report = make_report(config, checks=result.checks)
    _emit(config.output, json.dumps(report, indent=2))

    failed = [c for c in result.checks if not c.passed]
    if config.expect == "obstructed":
        # the designed covariance failure: rotation rows refuse to decay
        obstruction = [c for c in failed if c.name.startswith("covariance:rotation_covariance")]
        clean = len(obstruction) == len(failed) and obstruction
        return EXIT_OK if clean else EXIT_CHECK_FAILED
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def cmd_localizability(args) -> int:
    config = RunConfig(
        command="localizability",
        grid_sizes=_parse_int_list(args.n),
        p_max=args.p_max,
        mu=0.0 if args.mu is None else args.mu,
        m_list=_parse_int_list(args.m) if args.m else [],
        seed=args.seed,
        output=args.output,
        threads=_thread_setup(),
    )
    problems = config.validate()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_USAGE

    experiments = []
    verdicts = {}
    for m in config.m_list:
        result = localizability_experiment(m, config.grid_sizes, p_max=config.p_max)
        experiments.append(result.to_dict())
        verdicts[m] = result.verdict

    print(f"{'m':>4}  verdict")
    for m, verdict in verdicts.items():
        print(f"{m:>4}  {verdict}")

    expected_ok = all(
        (verdict == LOCALIZABLE if m == 0 else verdict == OBSTRUCTED)
        for m, verdict in verdicts.items())
    report = make_report(config, experiments=experiments)
    report["passed"] = expected_ok
    _emit(config.output, json.dumps(report, indent=2))

    if any(v.startswith(INDETERMINATE) for v in verdicts.values()):
        return EXIT_CHECK_FAILED
    return EXIT_OK if expected_ok else EXIT_CHECK_FAILED


def _density_slice_csv(chi, xgrid) -> str:
    from .kgmap import kg_density

    n = xgrid.n_per_axis
    rho = kg_density(chi).reshape(n, n, n)
    plane = rho[:, :, n // 2]
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    coords = xgrid.axis_coords
    writer.writerow(["x1\\x2"] + [f"{x:.6f}" for x in coords])
    for i in range(n):
        writer.writerow([f"{coords[i]:.6f}"] + [repr(float(v)) for v in plane[i]])
    return buffer.getvalue()


def cmd_evolve(args) -> int:
    config = RunConfig(
        command="evolve",
        class_tag=args.class_tag,
        grid_sizes=[args.n],
        p_max=args.p_max,
        mu=_default_mu(args.class_tag, args.mu),
        m=args.m,
        st_pair=args.pair,
        seed=args.seed,
        output=args.output,
        center=args.center,
        width=args.width,
        block_weights=args.weights.split(",") if args.weights else [],
        t_max=args.t_max,
        steps=args.steps,
        kg_slices=args.kg,
        kg_prefix=args.kg_prefix,
        threads=_thread_setup(),
    )
    problems = config.validate()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cls, tag_m, tag_pair = parse_class_tag(config.class_tag)
        m = tag_m if tag_m else config.m
        pair = tag_pair if tag_pair != 1 else config.st_pair
        grid = build_grid(config.grid_sizes[0], config.p_max, config.mu,
                          blocks=2 if cls.blocks == 2 else 1)
        triplet = make_triplet(cls, grid, m=m, st_pair=pair)
        weights = None
        if config.block_weights:
            weights = tuple(complex(w) for w in config.block_weights)
        packet = gaussian_packet(grid, config.center, config.width, weights)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    from .kgmap import position_grid_for

    if config.kg_slices and cls not in (TripletClass.MASSIVE_PM_1, TripletClass.MASSIVE_PM_2):
        print("error: --kg needs a two-block massive class", file=sys.stderr)
        return EXIT_USAGE

    # past the box edge the synthesized field wraps and the moment phases
    # alias, so a packet that would travel that far is refused outright
    xgrid = position_grid_for(grid)
    speed = float(np.linalg.norm(config.center)) / np.sqrt(
        config.mu**2 + float(np.dot(config.center, config.center)))
    excursion = 3.0 / config.width + speed * config.t_max
    if excursion >= xgrid.x_max:
        print(
            "error: the packet would reach the edge of the sampled box: "
            f"computed excursion {excursion:.3f} exceeds x_max {xgrid.x_max:.3f}",
            file=sys.stderr)
        return EXIT_USAGE

    times = np.linspace(0.0, config.t_max, config.steps)
    trajectory = ehrenfest_evolution(triplet, packet, times)

    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(trajectory.header)
    for row in trajectory.rows():
        writer.writerow([repr(v) for v in row])
    _emit(config.output, buffer.getvalue())

    if config.kg_slices:
        from .kgmap import kg_evolve, kg_forward

        chi0 = kg_forward(packet)
        for index, t in enumerate((0.0, 0.5 * config.t_max, config.t_max)):
            chi = kg_evolve(chi0, float(t))
            _atomic_write(f"{config.kg_prefix}_t{index}.csv", _density_slice_csv(chi, chi.xgrid))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freeparticle",
        description="Check suites and experiments for the momentum-space representations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p-max", type=float, default=6.0, dest="p_max")
    common.add_argument("--mu", type=float, default=None)
    common.add_argument("--seed", type=int, default=1729)
    common.add_argument("--output", default=None, help="write here (atomic); default stdout")

    p_verify = sub.add_parser("verify", parents=[common], help="run check suites over a ladder")
    p_verify.add_argument("--class", required=True, dest="class_tag")
    p_verify.add_argument("--n", default="16,24,32", help="comma-separated even grid sizes")
    p_verify.add_argument("--m", type=int, default=0, help="coupling integer (massless two-block)")
    p_verify.add_argument("--pair", type=int, default=1, help="inversion pair index for m = 0")
    p_verify.add_argument("--suites", default="", help=f"comma list from: {','.join(SUITE_NAMES)}")
    p_verify.add_argument("--tol", action="append", metavar="NAME=VALUE",
                          help="re-judge verdicts: exact=<tol>, order_window=<w>")
    p_verify.add_argument("--expect", choices=["obstructed"], default=None,
                          help="invert the exit code for the designed covariance failure")
    p_verify.set_defaults(func=cmd_verify)

    p_loc = sub.add_parser("localizability", parents=[common],
                           help="position-operator experiment over coupling integers")
    p_loc.add_argument("--m", required=False, default="",
                       help="comma-separated even coupling integers, e.g. 0,2,4")
    p_loc.add_argument("--n", default="16,24,32", help="resolution ladder (needs >= 3)")
    p_loc.set_defaults(func=cmd_localizability)

    p_ev = sub.add_parser("evolve", parents=[common], help="evolve a packet, write moments CSV")
    p_ev.add_argument("--class", required=True, dest="class_tag")
    p_ev.add_argument("--n", type=int, default=24)
    p_ev.add_argument("--m", type=int, default=0)
    p_ev.add_argument("--pair", type=int, default=1)
    p_ev.add_argument("--center", type=_parse_float_triple, default=[1.0, 0.0, 0.0])
    p_ev.add_argument("--width", type=float, default=1.0)
    p_ev.add_argument("--weights", default="", help="comma-separated complex block weights")
    p_ev.add_argument("--t-max", type=float, default=2.0, dest="t_max")
    p_ev.add_argument("--steps", type=int, default=50)
    p_ev.add_argument("--kg", action="store_true", help="also emit density plane slices")
    p_ev.add_argument("--kg-prefix", default="density", dest="kg_prefix")
    p_ev.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; keep --version/-h at 0
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
