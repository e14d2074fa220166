"""Command-line interface: ``qtruss {brute,landscape,solve,export-qubo}``.

Exit codes: 0 success, 1 solve did not converge, 2 usage/config error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import AllIterationsInvalid, ParseError, QTrussError, UnknownProblem, ValidationError
from .pipeline import (
    IterationRecord,
    PipelineParams,
    SolveReport,
    dinkelbach_solve,
    process_objective,
)
from .solvers import (
    SamplerParams,
    SimulatedAnnealingSampler,
    brute_force_sampler,
    brute_force_valid,
    decode_sample,
)
from .symfem import build_objective, export_objective
from .truss import BUILTIN_NAMES, TrussProblem, resolve_problem

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULT_READS = {"two_truss": 16, "three_truss": 256, "four_truss": 256}

log = logging.getLogger("qtruss")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    problem: str
    objective: str
    pipeline: PipelineParams
    sampler: SamplerParams
    out: Path | None
    repeat: int = 1
    inner: str = "sa"
    lam: float = 0.0


def _seed_from(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("QTRUSS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QTRUSS_SEED must be an integer, got {env!r}") from None


def _load_overrides(path: str | None) -> tuple[dict, dict]:
    if path is None:
        return {}, {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read --params file: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("--params file must hold a JSON object")
    sampler = doc.pop("sampler", {})
    known = {f.name for f in fields(PipelineParams)}
    unknown = set(doc) - known
    if unknown:
        raise UsageError(f"unknown pipeline parameters: {', '.join(sorted(unknown))}")
    return doc, sampler


def build_config(args, problem: TrussProblem) -> RunConfig:
    pipe_over, samp_over = _load_overrides(args.params)
    try:
        pipeline = PipelineParams.for_problem(problem, **pipe_over)
        reads = getattr(args, "reads", None) or samp_over.pop("num_reads", None) \
            or DEFAULT_READS.get(problem.name, 256)
        samp_over.pop("num_reads", None)
        sampler = SamplerParams(num_reads=int(reads), seed=_seed_from(args), **samp_over)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad parameters: {exc}") from None
    repeat = getattr(args, "repeat", 1) or 1
    if repeat < 1:
        raise UsageError("--repeat must be at least 1")
    out = Path(args.out) if args.out else None
    return RunConfig(args.problem, args.objective, pipeline, sampler, out, repeat,
                     getattr(args, "sampler", "sa"), getattr(args, "lam", 0.0))


def _emit(cfg: RunConfig, filename: str, text: str, stdout) -> None:
    if cfg.out is None:
        stdout.write(text)
        return
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / filename).write_text(text)


def _stem(problem: TrussProblem, cfg: RunConfig) -> str:
    return f"{problem.name}_{cfg.objective}"


# -- commands -------------------------------------------------------------------


def cmd_brute(cfg: RunConfig, problem: TrussProblem, stdout) -> int:
    t0 = time.perf_counter()
    obj = build_objective(problem, cfg.objective)
    land = brute_force_valid(obj, problem)
    wall = time.perf_counter() - t0
    bits = "".join(map(str, land.argmin_bits))
    stdout.write(f"problem      {problem.name}\n")
    stdout.write(f"objective    {cfg.objective}\n")
    stdout.write(f"argmin       {bits}\n")
    stdout.write(f"index        {land.argmin_index}\n")
    stdout.write(f"value        {land.min_value!r}\n")
    stdout.write(f"wall_time_s  {wall:.4f}\n")
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        export_objective(obj, cfg.out / f"objective_{_stem(problem, cfg)}.txt", problem.name)
        doc = {"problem": problem.name, "objective": cfg.objective, "argmin": bits,
               "index": land.argmin_index, "value": land.min_value,
               "metadata": {"wall_time_s": wall}}
        (cfg.out / f"brute_{_stem(problem, cfg)}.json").write_text(json.dumps(doc, indent=1) + "\n")
    return EXIT_OK


def landscape_csv(problem: TrussProblem, kind: str) -> str:
    land = brute_force_valid(build_objective(problem, kind), problem)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_index", "bitstring", "objective_value", "is_argmin"])
    best = land.argmin_index
    for idx, row, val in zip(land.indices, land.bits, land.values):
        w.writerow([int(idx), "".join(map(str, row)), repr(float(val)), int(idx == best)])
    return buf.getvalue()


def cmd_landscape(cfg: RunConfig, problem: TrussProblem, stdout) -> int:
    _emit(cfg, f"landscape_{_stem(problem, cfg)}.csv", landscape_csv(problem, cfg.objective), stdout)
    return EXIT_OK


def trial_seed(seed: int, trial: int) -> int:
    if trial == 0:
        return seed
    return int(np.random.SeedSequence([seed & (2**64 - 1), trial, 1]).generate_state(1, np.uint64)[0])


def _solve_flawed(cfg: RunConfig, problem: TrussProblem, sampler, seed: int) -> SolveReport:
    # the flawed objective is already a polynomial: one QUBO, one sampling pass
    poly = build_objective(problem, "flawed")
    qubo = process_objective(poly, problem, cfg.pipeline)
    samples = sampler(qubo, seed)
    dec = decode_sample(samples[0], qubo.aux_registry, qubo.num_original,
                        problem.num_elements, problem.num_choices)
    value = poly.evaluate(dec.assignment)
    rep = SolveReport(rng_seed=seed)
    rep.iterations.append(IterationRecord(
        1, 0.0, len(poly), poly.degree, qubo.num_vars, qubo.num_aux,
        "".join(map(str, dec.assignment)), samples[0].energy, dec.valid,
        dec.penalty_violation, dec.solution_index, value))
    if dec.valid:
        rep.converged = True
        rep.final_assignment = list(dec.assignment)
        rep.final_objective_value = value
        rep.final_solution_index = dec.solution_index
    return rep


def cmd_solve(cfg: RunConfig, problem: TrussProblem, stdout) -> int:
    if cfg.inner == "sa":
        sampler = SimulatedAnnealingSampler(cfg.sampler)
    elif cfg.inner == "brute":
        sampler = brute_force_sampler
    else:
        sampler = None
    obj = build_objective(problem, "fractional") if cfg.objective == "fractional" else None
    counts: Counter = Counter()
    statuses = []
    reports = []
    for trial in range(cfg.repeat):
        seed = trial_seed(cfg.sampler.seed, trial)
        if obj is None:
            if sampler is None:
                raise UsageError("the flawed objective needs a QUBO sampler (sa or brute)")
            rep = _solve_flawed(cfg, problem, sampler, seed)
        else:
            try:
                rep = dinkelbach_solve(obj, problem, sampler, cfg.pipeline, seed=seed)
            except AllIterationsInvalid as exc:
                rep = exc.report
        reports.append(rep)
        statuses.append(rep.status)
        counts[rep.final_solution_index if rep.final_assignment is not None else "NV"] += 1
        stdout.write(f"trial {trial + 1}/{cfg.repeat}: {rep.status}, "
                     f"solution {rep.final_solution_index}, "
                     f"value {rep.final_objective_value!r}, "
                     f"{len(rep.iterations)} iterations\n")
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        stem = _stem(problem, cfg)
        for trial, rep in enumerate(reports):
            (cfg.out / f"solve_{stem}_trial{trial + 1:03d}.jsonl").write_text(rep.to_jsonl())
        (cfg.out / f"histogram_{stem}.csv").write_text(histogram_csv(counts, problem))
        meta = {"problem": problem.name, "objective": cfg.objective,
                "pipeline": asdict(cfg.pipeline), "sampler": asdict(cfg.sampler),
                "inner": cfg.inner, "repeat": cfg.repeat}
        (cfg.out / f"solve_{stem}_config.json").write_text(json.dumps(meta, indent=1) + "\n")
    if cfg.repeat > 1:
        stdout.write(histogram_csv(counts, problem))
    return EXIT_OK if all(s == "converged" for s in statuses) else EXIT_NOT_CONVERGED


def histogram_csv(counts: Counter, problem: TrussProblem) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_index", "count"])
    for idx in range(1, problem.num_valid + 1):
        if counts.get(idx):
            w.writerow([idx, counts[idx]])
    if counts.get("NV"):
        w.writerow(["NV", counts["NV"]])
    return buf.getvalue()


def cmd_export_qubo(cfg: RunConfig, problem: TrussProblem, stdout) -> int:
    obj = build_objective(problem, cfg.objective)
    if cfg.objective == "fractional":
        nf = obj.num - obj.den.scale(cfg.lam)
    else:
        nf = obj
    qubo = process_objective(nf, problem, cfg.pipeline)
    name = f"qubo_{_stem(problem, cfg)}_lambda{cfg.lam:g}.json"
    _emit(cfg, name, json.dumps(qubo.to_dict(), indent=1) + "\n", stdout)
    return EXIT_OK


COMMANDS = {
    "brute": cmd_brute,
    "landscape": cmd_landscape,
    "solve": cmd_solve,
    "export-qubo": cmd_export_qubo,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", required=True,
                        help=f"builtin name ({', '.join(BUILTIN_NAMES)}) or problem JSON path")
    common.add_argument("--objective", choices=("fractional", "flawed"), default="fractional")
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (falls back to $QTRUSS_SEED, then 0)")
    common.add_argument("--out", default=None, help="output directory (default: stdout)")
    common.add_argument("--params", default=None, help="JSON file overriding default parameters")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qtruss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("brute", parents=[common], help="exhaustive minimum over valid solutions")
    sub.add_parser("landscape", parents=[common], help="objective at every valid solution (CSV)")
    solve = sub.add_parser("solve", parents=[common], help="iterative QUBO solve")
    solve.add_argument("--reads", type=int, default=None)
    solve.add_argument("--repeat", type=int, default=1)
    solve.add_argument("--sampler", choices=("sa", "brute", "exact"), default="sa",
                       help="sa: simulated annealing; brute: exhaustive QUBO; "
                            "exact: exhaustive over valid solutions, no QUBO passes")
    exp = sub.add_parser("export-qubo", parents=[common], help="write a processed QUBO as JSON")
    exp.add_argument("--lambda", dest="lam", type=float, default=0.0)
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        problem = resolve_problem(args.problem)
        cfg = build_config(args, problem)
        return COMMANDS[args.command](cfg, problem, stdout)
    except (UsageError, UnknownProblem, ParseError, ValidationError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"qtruss: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except QTrussError as exc:
        print(f"qtruss: failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"qtruss: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
