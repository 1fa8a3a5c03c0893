"""Batch driver: budgets, certification runs, scaling sweeps and schedule export.

Usage::

    liesuzuki run --config exp.json [--workers 4] [--output-dir out]
    liesuzuki compare-bounds --config exp.json
    liesuzuki schedule-export --config exp.json

Exit codes: 0 success, 1 invalid config, 2 a certification row saw an
observed error above its predicted bound, 3 a budget diverged or could not
be met.  Errors are reported as a single JSON line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import bounds, cases, suzuki
from .algebra import StructureConstants, beta, validate
from .numerics import band_limited_state, evaluate_schedule, evaluate_schedule_mp

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION, EXIT_DIVERGENT = 0, 1, 2, 3
D_CAP = 1024
CASE_KINDS = ("qho", "coupled_qho", "anharmonic", "spin", "custom")
FOCK_KINDS = ("qho", "coupled_qho", "anharmonic")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    t: float
    epsilon: float
    p_list: tuple[int, ...]
    r_list: tuple[int, ...] = ()
    m_prime_list: tuple[int, ...] = ()
    D: int | None = None
    seed: int = 0
    output_dir: str | None = None
    M: int | None = None
    q: int | None = None
    J: float | None = None
    coupling: float = 0.25
    p_max: int | None = None
    precision: str = "double"
    max_eval_segments: int = 2**16
    evolve: bool = True
    custom: dict | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def case_id(self) -> str:
        if self.kind == "coupled_qho":
            return f"coupled_qho(M={self.M})"
        if self.kind == "anharmonic":
            return f"anharmonic(q={self.q})"
        if self.kind == "spin":
            return f"spin(J={self.J:g})"
        return self.kind

    @property
    def config_hash(self) -> str:
        """Digest of the config minus ``output_dir``, which cannot change any number."""
        doc = {k: v for k, v in self.raw.items() if k != "output_dir"}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_CASE_RE = re.compile(r"^\s*(\w+)\s*(?:\(\s*([^)]*?)\s*\))?\s*$")


def _parse_case(spec) -> tuple[str, dict]:
    """``"qho"``, ``"anharmonic(4)"`` or ``{"name": "anharmonic", "q": 4}``."""
    if isinstance(spec, dict):
        spec = dict(spec)
        name = spec.pop("name", None)
        return name, spec
    if not isinstance(spec, str):
        raise ConfigError("case must be a string or an object")
    m = _CASE_RE.match(spec)
    if not m:
        raise ConfigError(f"cannot parse case {spec!r}")
    name, arg = m.group(1), m.group(2)
    params = {}
    if arg:
        key = {"coupled_qho": "M", "anharmonic": "q", "spin": "J"}.get(name)
        if key is None:
            raise ConfigError(f"case {name!r} takes no argument")
        try:
            params[key] = float(arg) if key == "J" else int(arg)
        except ValueError:
            raise ConfigError(f"bad argument {arg!r} for case {name!r}") from None
    return name, params


def _int_list(doc, key, required=False) -> tuple[int, ...]:
    if key not in doc:
        if required:
            raise ConfigError(f"missing required field {key!r}")
        return ()
    vals = doc[key]
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"{key} must be a non-empty list")
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in vals):
        raise ConfigError(f"{key} must contain integers")
    return tuple(vals)


def _real(doc, key, default=None) -> float:
    if key not in doc:
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{key} must be a finite number")
    return float(v)


def parse_config(doc: dict, need_m_prime: bool = True, simulate: bool = True) -> ExperimentConfig:
    """Validate a config document.  ``simulate=False`` skips the truncation checks
    for commands that only evaluate bounds."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "case" not in doc:
        raise ConfigError("missing required field 'case'")
    kind, params = _parse_case(doc["case"])
    if kind not in CASE_KINDS:
        raise ConfigError(f"unknown case {kind!r}; expected one of {', '.join(CASE_KINDS)}")
    params = {**{k: doc[k] for k in ("M", "q", "J") if k in doc}, **params}

    t = _real(doc, "t")
    eps = _real(doc, "epsilon")
    if t < 0:
        raise ConfigError("t must be >= 0")
    if eps <= 0:
        raise ConfigError("epsilon must be > 0")
    p_list = _int_list(doc, "p_list", required=True)
    if min(p_list) < 1:
        raise ConfigError("p_list entries must be >= 1")
    r_list = _int_list(doc, "r_list")
    if r_list and min(r_list) < 1:
        raise ConfigError("r_list entries must be >= 1")
    m_list = _int_list(doc, "m_prime_list", required=need_m_prime and kind in FOCK_KINDS)
    if m_list and min(m_list) < 1:
        raise ConfigError("m_prime_list entries must be >= 1")

    evolve = doc.get("evolve", True)
    if not isinstance(evolve, bool):
        raise ConfigError("evolve must be true or false")
    D = doc.get("D")
    simulate = simulate and evolve and kind in FOCK_KINDS
    if simulate:
        if not isinstance(D, int) or isinstance(D, bool) or D < 2:
            raise ConfigError("D must be an integer >= 2")
        if m_list and D < 2 * max(m_list):
            raise ConfigError(f"D = {D} is below 2 * max(m_prime_list) = {2 * max(m_list)}")

    M = q = J = None
    if kind == "coupled_qho":
        M = params.get("M")
        if not isinstance(M, int) or M < 1:
            raise ConfigError("coupled_qho needs an integer mode count M >= 1")
        if simulate and D ** M > D_CAP:
            raise ConfigError(f"total dimension D^M = {D ** M} exceeds the dense cap {D_CAP}")
    elif kind == "anharmonic":
        q = params.get("q")
        if not isinstance(q, int) or not 2 <= q <= 6:
            raise ConfigError("anharmonic needs an integer q with 2 <= q <= 6")
    elif kind == "spin":
        J = params.get("J")
        if isinstance(J, bool) or not isinstance(J, (int, float)) or J < 0 or (2 * J) % 1:
            raise ConfigError("spin needs J >= 0 with 2J an integer")
        J = float(J)
    elif kind == "custom":
        if "algebra" not in doc or "y" not in doc:
            raise ConfigError("custom case needs 'algebra' (document or path) and 'y'")
    if simulate and D > D_CAP:
        raise ConfigError(f"D = {D} exceeds the dense cap {D_CAP}")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    p_max = doc.get("p_max")
    if p_max is not None and (not isinstance(p_max, int) or p_max < 1):
        raise ConfigError("p_max must be an integer >= 1")
    precision = doc.get("precision", "double")
    if precision not in ("double", "mp"):
        raise ConfigError("precision must be 'double' or 'mp'")
    max_eval = doc.get("max_eval_segments", 2**16)
    if not isinstance(max_eval, int) or max_eval < 1:
        raise ConfigError("max_eval_segments must be an integer >= 1")

    return ExperimentConfig(
        kind=kind, t=t, epsilon=eps, p_list=p_list, r_list=r_list, m_prime_list=m_list,
        D=D, seed=seed, output_dir=doc.get("output_dir"), M=M, q=q, J=J,
        coupling=_real(doc, "coupling", 0.25), p_max=p_max, precision=precision,
        max_eval_segments=max_eval, evolve=evolve,
        custom={"algebra": doc["algebra"], "y": doc["y"]} if kind == "custom" else None,
        raw=doc,
    )


# ---------------------------------------------------------------------------
# case plumbing

def build_case(cfg: ExperimentConfig) -> cases.Case | None:
    # profiles do not depend on D, so bound-only runs get a small placeholder rep
    D = cfg.D if cfg.evolve and cfg.D else (4 if cfg.kind == "coupled_qho" else 16)
    if cfg.kind == "qho":
        return cases.qho(D)
    if cfg.kind == "coupled_qho":
        return cases.coupled_qho(cfg.M, D, cfg.coupling)
    if cfg.kind == "anharmonic":
        return cases.anharmonic(cfg.q, D)
    if cfg.kind == "spin":
        return cases.spin(cfg.J)
    return None


def custom_profile(cfg: ExperimentConfig) -> tuple[int, bounds.CommutatorNormProfile]:
    alg = cfg.custom["algebra"]
    try:
        sc = StructureConstants.load(alg) if isinstance(alg, str) else StructureConstants.from_json(json.dumps(alg))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"cannot load custom algebra: {exc}") from None
    bad = validate(sc)
    if bad:
        raise ConfigError(f"custom algebra fails validation: {bad[0].kind} at {bad[0].indices}")
    y = cfg.custom["y"]
    if isinstance(y, bool) or not isinstance(y, (int, float)) or y < 0:
        raise ConfigError("y must be a number >= 0")
    return sc.basis.L, bounds.finite_dim(beta(sc), float(y))


def initial_state(cfg: ExperimentConfig, case: cases.Case, m_prime: int) -> np.ndarray:
    """Seeded random state on levels below ``m'`` (in every mode); full space for spins."""
    rng = np.random.default_rng([cfg.seed, m_prime])
    if cfg.kind == "spin":
        psi = rng.normal(size=case.rep.D) + 1j * rng.normal(size=case.rep.D)
        return psi / np.linalg.norm(psi)
    if cfg.kind == "coupled_qho":
        shape = (cfg.D,) * cfg.M
        psi = np.zeros(shape, dtype=complex)
        block = (slice(0, m_prime),) * cfg.M
        psi[block] = rng.normal(size=(m_prime,) * cfg.M) + 1j * rng.normal(size=(m_prime,) * cfg.M)
        psi = psi.ravel()
        return psi / np.linalg.norm(psi)
    return band_limited_state(cfg.D, m_prime, seed=int(rng.integers(2**31)))


# ---------------------------------------------------------------------------
# CSV output

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows: list[dict], key) -> Path:
    rows = sorted(rows, key=key)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(row.get(h)) for h in header])
    return path


BUDGET_COLUMNS = ["config_hash", "case_id", "m_prime", "p", "L", "t", "epsilon", "r",
                  "N_unmerged", "N_merged", "predicted_error", "profile_source", "status"]
EVOLUTION_COLUMNS = ["config_hash", "case_id", "D", "m_prime", "p", "r", "t", "source",
                     "observed_error", "leakage", "adjusted_error", "predicted_error", "violation"]
SCALING_COLUMNS = ["config_hash", "case_id", "m_prime", "p_opt", "r", "N_unmerged",
                   "local_slope", "heuristic_p", "status"]
COMPARE_COLUMNS = ["config_hash", "case_id", "q", "p", "m_prime", "N_structure", "N_naive",
                   "ratio", "status"]


@dataclass
class Outcome:
    violations: int = 0
    divergent: int = 0
    files: list = field(default_factory=list)

    @property
    def code(self) -> int:
        if self.violations:
            return EXIT_VIOLATION
        if self.divergent:
            return EXIT_DIVERGENT
        return EXIT_OK


def _budget_or_status(t, eps, p, L, profile):
    try:
        return bounds.solve_segments(t, eps, p, L, profile), "ok"
    except bounds.UnsatisfiableBudgetError:
        return None, "unsatisfiable"
    except bounds.DivergentSeriesError:
        return None, "divergent"


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands

def run(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Outcome:
    """Budgets for every (m', p), certification evolutions and an optional optimal-p sweep."""
    h, cid = cfg.config_hash, cfg.case_id
    case = build_case(cfg)
    if case is None:
        L, fixed = custom_profile(cfg)
        profile_for = lambda m: fixed  # noqa: E731
    else:
        L, profile_for = case.L, case.profile
        if not cfg.evolve:
            case = None
    m_list = cfg.m_prime_list or (0,)
    outcome = Outcome()

    def budget_point(point):
        m, p = point
        b, status = _budget_or_status(cfg.t, cfg.epsilon, p, L, profile_for(m))
        row = {"config_hash": h, "case_id": cid, "m_prime": m, "p": p, "L": L,
               "t": cfg.t, "epsilon": cfg.epsilon, "status": status}
        if b is not None:
            row.update(b.row())
        return row, b

    points = [(m, p) for m in m_list for p in cfg.p_list]
    budget_results = _map(budget_point, points, workers)
    brows = [row for row, _ in budget_results]
    outcome.divergent += sum(row["status"] != "ok" for row in brows)
    outcome.files.append(write_csv(out_dir / "budgets.csv", BUDGET_COLUMNS, brows,
                                   key=lambda r: (r["m_prime"], r["p"])))

    if case is not None:
        jobs = []
        for (m, p), (_, b) in zip(points, budget_results):
            if b is not None:
                jobs.append((m, p, b.r, "budget", b.predicted_error))
            for r in cfg.r_list:
                jobs.append((m, p, r, "r_list", None))

        def evolve(job):
            m, p, r, source, pred = job
            if pred is None:
                pred = bounds.segments_error(r, cfg.t, p, L, profile_for(m))
            row = {"config_hash": h, "case_id": cid, "D": case.rep.D, "m_prime": m, "p": p,
                   "r": r, "t": cfg.t, "source": source, "predicted_error": pred}
            if r > cfg.max_eval_segments:
                return row  # too long to simulate; bound only
            sched = suzuki.build(p, L, cfg.t, r, labels=case.labels)
            psi = initial_state(cfg, case, m)
            if cfg.precision == "mp":
                res = evaluate_schedule_mp(case.rep, sched, psi)
            else:
                res = evaluate_schedule(case.rep, sched, psi, leak=case.leak)
            adj = res.adjusted_error()
            row.update(observed_error=res.observed_error, leakage=res.leakage,
                       adjusted_error=adj, violation=bool(adj > pred))
            return row

        erows = _map(evolve, jobs, workers)
        outcome.violations += sum(bool(row.get("violation")) for row in erows)
        outcome.files.append(write_csv(out_dir / "evolutions.csv", EVOLUTION_COLUMNS, erows,
                                       key=lambda r: (r["m_prime"], r["p"], r["source"], r["r"])))

    if cfg.p_max is not None:
        def sweep_point(m):
            row = {"config_hash": h, "case_id": cid, "m_prime": m, "status": "ok"}
            try:
                p, b = bounds.optimal_p(cfg.t, cfg.epsilon, L, profile_for(m), cfg.p_max)
                row.update(p_opt=p, r=b.r, N_unmerged=b.N)
            except (bounds.UnsatisfiableBudgetError, bounds.DivergentSeriesError):
                row["status"] = "unsatisfiable"
            if m > 0 and cfg.t > 0:
                row["heuristic_p"] = bounds.heuristic_p(m, cfg.t, cfg.epsilon)
            return row

        srows = sorted(_map(sweep_point, sorted(set(m_list)), workers), key=lambda r: r["m_prime"])
        for prev, cur in zip(srows, srows[1:]):
            if prev.get("N_unmerged") and cur.get("N_unmerged") and cur["m_prime"] > 0 < prev["m_prime"]:
                cur["local_slope"] = (math.log(cur["N_unmerged"] / prev["N_unmerged"])
                                      / math.log(cur["m_prime"] / prev["m_prime"]))
        outcome.divergent += sum(r["status"] != "ok" for r in srows)
        outcome.files.append(write_csv(out_dir / "scaling.csv", SCALING_COLUMNS, srows,
                                       key=lambda r: r["m_prime"]))
    return outcome


def compare_bounds(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Outcome:
    """Segment counts from the x^q commutator profile against the product-of-norms profile."""
    if cfg.kind != "anharmonic":
        raise ConfigError("compare-bounds needs case anharmonic(q) with 2 <= q <= 6")
    h, cid = cfg.config_hash, cfg.case_id
    outcome = Outcome()

    def point(pm):
        p, m = pm
        row = {"config_hash": h, "case_id": cid, "q": cfg.q, "p": p, "m_prime": m}
        s, s_status = _budget_or_status(cfg.t, cfg.epsilon, p, 2, bounds.weyl_profile(cfg.q, m))
        n, n_status = _budget_or_status(cfg.t, cfg.epsilon, p, 2, bounds.naive_profile(cfg.q, m))
        row["status"] = s_status if s_status != "ok" else n_status
        row["N_structure"] = s.N if s else None
        row["N_naive"] = n.N if n else None
        if s and n:
            row["ratio"] = n.N / s.N
        return row

    rows = _map(point, [(p, m) for p in cfg.p_list for m in cfg.m_prime_list], workers)
    outcome.divergent += sum(r["status"] != "ok" for r in rows)
    outcome.files.append(write_csv(out_dir / "compare_bounds.csv", COMPARE_COLUMNS, rows,
                                   key=lambda r: (r["p"], r["m_prime"])))
    return outcome


def schedule_export(cfg: ExperimentConfig, out_dir: Path, workers: int = 1) -> Outcome:
    """One CSV per (p, r); ``r`` comes from ``r_list`` or else from the budget at the first m'."""
    case = build_case(cfg)
    if case is None:
        L, fixed = custom_profile(cfg)
        labels, profile_for = None, (lambda m: fixed)
    else:
        L, labels, profile_for = case.L, case.labels, case.profile
    outcome = Outcome()
    jobs = []
    for p in cfg.p_list:
        if cfg.r_list:
            jobs.extend((p, r) for r in cfg.r_list)
        else:
            m = cfg.m_prime_list[0] if cfg.m_prime_list else 0
            b, status = _budget_or_status(cfg.t, cfg.epsilon, p, L, profile_for(m))
            if b is None:
                outcome.divergent += 1
                continue
            jobs.append((p, b.r))
    out_dir.mkdir(parents=True, exist_ok=True)
    for p, r in sorted(set(jobs)):
        path = out_dir / f"schedule_p{p}_r{r}.csv"
        path.write_text(suzuki.build(p, L, cfg.t, r, labels=labels).to_csv())
        outcome.files.append(path)
    return outcome


COMMANDS = {"run": run, "compare-bounds": compare_bounds, "schedule-export": schedule_export}


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="liesuzuki", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output-dir", default=None, help="overrides output_dir in the config")
    args = ap.parse_args(argv)

    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        try:
            doc: Any = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        cfg = parse_config(doc, need_m_prime=args.command != "schedule-export",
                           simulate=args.command == "run")
        out_dir = Path(args.output_dir or cfg.output_dir or ".")
        outcome = COMMANDS[args.command](cfg, out_dir, args.workers)
    except ConfigError as exc:
        return _fail(EXIT_INVALID, "validation", str(exc))
    except bounds.PreconditionError as exc:
        return _fail(EXIT_INVALID, "validation", str(exc))

    summary = {"command": args.command, "config_hash": cfg.config_hash,
               "files": [str(f) for f in outcome.files],
               "violations": outcome.violations, "divergent": outcome.divergent}
    print(json.dumps(summary))
    if outcome.code == EXIT_VIOLATION:
        return _fail(EXIT_VIOLATION, "bound_violation",
                     f"{outcome.violations} row(s) exceed their predicted error")
    if outcome.code == EXIT_DIVERGENT:
        return _fail(EXIT_DIVERGENT, "divergent_budget",
                     f"{outcome.divergent} budget(s) diverged or were unsatisfiable")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
