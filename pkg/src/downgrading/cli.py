"""Command-line front end.

Every subcommand reads a JSON config, writes its outputs into ``--out`` and
finishes with a ``manifest.json`` listing each emitted file with its sha256.
Exit codes: 0 success, 2 invalid input, 3 regime error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DowngradingError
from .fluid import integrate, stability_report
from .invariant import at_fixed_point, build_distribution, moments, moments_by_summation
from .loss import compare, sweep_rate
from .model import ModelParams, classify, fixed_point, validate
from .provisioning import CURVE_HEADER, FINITE_N_NOTE, ProvisionQuery, downgrade_curve
from .simulation import PRNG_NAME, SimConfig, empirical_offset_distribution, merge, replicate, simulate

SIG_DIGITS = 12
FIGURES = ("fig1", "fig2a", "fig2b", "fig3", "fig4")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.{SIG_DIGITS}g}"
    return str(x)


class Run:
    """Collects output files and writes the manifest last."""

    def __init__(self, command: str, out: Path, config: dict):
        self.command = command
        self.out = out
        self.config = config
        self.files: list[tuple[str, str]] = []
        self.prng = None
        self.notes: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str):
        data = text.encode()
        (self.out / name).write_bytes(data)
        self.files.append((name, hashlib.sha256(data).hexdigest()))

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def write_csv(self, name: str, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        self.write_text(name, buf.getvalue())

    def finish(self):
        manifest = {
            "command": self.command,
            "config": self.config,
            "version": __version__,
            "outputs": [{"path": p, "sha256": h} for p, h in self.files],
        }
        if self.prng is not None:
            manifest["prng"] = self.prng
        if self.notes:
            manifest["notes"] = self.notes
        text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        (self.out / "manifest.json").write_text(text)


def _read_config(path) -> dict:
    if path is None:
        raise ConfigError("--config is required")
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _params(raw: dict) -> ModelParams:
    return ModelParams.from_dict(raw["params"] if "params" in raw else raw)


def _parse_range(text: str) -> tuple[int, int]:
    try:
        a, b = (int(s) for s in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"--range expects a:b with integers, got {text!r}") from exc
    if b < a:
        raise ConfigError("--range a:b needs a <= b")
    return a, b


def _default_range(dist, mass: float = 1e-12) -> tuple[int, int]:
    """Window [lo, hi], grown by doubling, outside which the mass is below ``mass``."""
    hi = dist.AJ
    while dist.tail_at_or_above(hi + 1) > mass:
        hi *= 2
    lo = -dist.AJ
    while 1.0 - dist.tail_at_or_above(lo) > mass:
        lo *= 2
    return lo, hi


def _sweep_values(sweep: dict) -> tuple[int, np.ndarray]:
    try:
        index = int(sweep["class"]) - 1
        if "values" in sweep:
            values = np.asarray(sweep["values"], dtype=float)
        else:
            values = np.linspace(float(sweep["start"]), float(sweep["stop"]), int(sweep["num"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep block: {exc}") from exc
    return index, values


# subcommands


def cmd_validate(args, raw, run: Run) -> int:
    params = _params(raw)
    rep = validate(params)
    run.write_json("validate.json", {"params": params.to_dict(), "report": rep.to_dict()})
    ok = rep.R and rep.R1 and rep.R2
    if not ok:
        run.finish()
        print("validate: " + "; ".join(rep.messages), file=sys.stderr)
        return 2
    return 0


def cmd_fixed_point(args, raw, run: Run) -> int:
    params = _params(raw)
    fp = fixed_point(params)
    run.write_json(
        "fixed_point.json",
        {
            "ell": fp.ell.tolist(),
            "pi_minus": fp.pi_minus,
            "occupancy": float(params.A @ fp.ell),
            "region": classify(params, fp.ell).value,
            "report": validate(params).to_dict(),
        },
    )
    return 0


def cmd_invariant(args, raw, run: Run) -> int:
    params = _params(raw)
    star = fixed_point(params).ell if "ell" not in raw else None
    ell = star if star is not None else np.asarray(raw["ell"], dtype=float)
    dist = build_distribution(params, ell)
    if args.range:
        lo, hi = _parse_range(args.range)
    elif "range" in raw:
        lo, hi = _parse_range(str(raw["range"]))
    else:
        lo, hi = _default_range(dist)
    ns = np.arange(lo, hi + 1)
    run.write_csv("invariant.csv", ["n", "pi_n"], zip(ns, dist.pmf(ns)))
    side = {"kappa": dist.kappa, "z1": dist.z1, "pi_neg": dist.negative_mass(), "ell": list(map(float, ell))}
    if star is not None:
        side.update({k: v for k, v in moments(dist, params).to_dict().items() if k in (
            "mean", "variance", "third_central", "standardized_skew")})
    else:
        mean, var, third = moments_by_summation(dist)
        side.update(mean=mean, variance=var, third_central=third, standardized_skew=third / var**1.5)
    run.write_json("invariant.json", side)
    if args.dump_roots:
        run.write_json("roots.json", dist.profile.to_dict())
    return 0


def cmd_moments(args, raw, run: Run) -> int:
    params = _params(raw)
    dist = at_fixed_point(params)
    closed = moments(dist, params)
    mean, var, third = moments_by_summation(dist)
    run.write_json(
        "moments.json",
        {
            "closed_form": closed.to_dict(),
            "summation": {"mean": mean, "variance": var, "third_central": third},
        },
    )
    if args.dump_roots:
        run.write_json("roots.json", dist.profile.to_dict())
    return 0


def cmd_fluid(args, raw, run: Run) -> int:
    params = _params(raw)
    ell0 = np.asarray(raw.get("ell0", np.zeros(params.J)), dtype=float)
    traj = integrate(
        params,
        ell0,
        float(raw.get("horizon", 50.0)),
        step=raw.get("step"),
        record_every=int(raw.get("record_every", 100)),
    )
    header = ["t", *(f"ell_{j + 1}" for j in range(params.J)), "occupancy", "region"]
    run.write_csv("fluid.csv", header, traj.rows(params.A))
    rep = stability_report(params)
    d = rep.to_dict()
    d["fixed_point"] = fixed_point(params).ell.tolist()
    run.write_json("stability.json", d)
    return 0


def cmd_simulate(args, raw, run: Run) -> int:
    if args.seed is not None:
        raw = {**raw, "seed": args.seed}
        run.config = raw
    cfg = SimConfig.from_dict(raw)
    run.prng = {"name": PRNG_NAME, "seed": cfg.seed}
    k = args.replicas or 1
    if k == 1:
        out = simulate(cfg)
        outcomes = [out]
        run.write_json("outcome.json", out.to_dict())
    else:
        outcomes = replicate(cfg, k)
        run.prng["spawned_children"] = k
        pooled = merge(outcomes)
        run.write_json(
            "outcome.json",
            {
                "replicas": [o.to_dict() for o in outcomes],
                "merged": {
                    "counts": pooled["counts"].tolist(),
                    "occupancy_time": {str(m): t for m, t in pooled["occupancy_time"].items()},
                },
            },
        )
    if k == 1:
        emp = empirical_offset_distribution(outcomes[0])
        run.write_csv("histogram.csv", ["m", "probability"], sorted(emp.items()))
        if outcomes[0].trace_times is not None:
            header = ["t", *(f"ell_{j + 1}" for j in range(cfg.params.J))]
            rows = ([t, *s] for t, s in zip(outcomes[0].trace_times, outcomes[0].trace_states))
            run.write_csv("trace.csv", header, rows)
    return 0


def _compare_rows(raw: dict):
    params = _params(raw)
    if "sweep" in raw:
        index, values = _sweep_values(raw["sweep"])
        return f"lambda_{index + 1}", sweep_rate(params, index, values, params.c0)
    grid = raw.get("c0_grid", [params.c0])
    return "c0", [(r.c0, r.beta, r.W_L, r.W_D) for r in compare(params, grid)]


def cmd_compare_loss(args, raw, run: Run) -> int:
    name, rows = _compare_rows(raw)
    run.write_csv("compare_loss.csv", ["sweep_var", "beta", "W_L", "W_D"], rows)
    run.notes.append(f"sweep_var = {name}")
    return 0


def _threshold_rows(raw: dict):
    query = ProvisionQuery.from_dict(raw)
    eps = raw["epsilon"] if isinstance(raw["epsilon"], list) else [raw["epsilon"]]
    grid = raw.get("lambda2_grid", [float(query.params.lam[-1])])
    return downgrade_curve(query, grid, eps)


def cmd_threshold(args, raw, run: Run) -> int:
    rows = _threshold_rows(raw)
    run.write_csv("threshold.csv", CURVE_HEADER, (r.as_list() for r in rows))
    run.notes.append(FINITE_N_NOTE)
    return 0


def load_fixture(name: str) -> dict:
    text = resources.files("downgrading").joinpath("fixtures", f"{name}.json").read_text()
    return json.loads(text)


def cmd_figures(args, raw, run: Run) -> int:
    run.config = {name: load_fixture(name) for name in FIGURES}
    fig1 = run.config["fig1"]
    params = _params(fig1)
    dist = at_fixed_point(params)
    lo, hi = _default_range(dist)
    ns = np.arange(lo, hi + 1)
    run.write_csv("fig1_histogram.csv", ["n", "pi_n"], zip(ns, dist.pmf(ns)))
    run.write_json("fig1_moments.json", moments(dist, params).to_dict())
    for name in ("fig2a", "fig2b"):
        var, rows = _compare_rows(run.config[name])
        run.write_csv(f"{name}.csv", ["sweep_var", "beta", "W_L", "W_D"], rows)
    for name in ("fig3", "fig4"):
        rows = _threshold_rows(run.config[name])
        run.write_csv(f"{name}.csv", CURVE_HEADER, (r.as_list() for r in rows))
    run.notes.append(FINITE_N_NOTE)
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "fixed-point": cmd_fixed_point,
    "invariant": cmd_invariant,
    "moments": cmd_moments,
    "fluid": cmd_fluid,
    "simulate": cmd_simulate,
    "compare-loss": cmd_compare_loss,
    "threshold": cmd_threshold,
    "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="downgrading", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "figures")
        p.add_argument("--out", default="out")
        if name == "simulate":
            p.add_argument("--seed", type=int)
            p.add_argument("--replicas", type=int, default=1)
        if name == "invariant":
            p.add_argument("--range")
        if name in ("invariant", "moments"):
            p.add_argument("--dump-roots", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = {} if args.command == "figures" else _read_config(args.config)
        job = Run(args.command, Path(args.out), raw)
        status = COMMANDS[args.command](args, raw, job)
        if status == 0:
            job.finish()
        return status
    except DowngradingError as exc:
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        print(f"{args.command}: invalid input: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
