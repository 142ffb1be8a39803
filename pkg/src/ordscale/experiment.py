"""Scenario grids, the four PRRI tables, config parsing and table output."""

from __future__ import annotations

import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import yaml

from .estimators import EstimatorId
from .loss import LinexShape
from .risk import DEFAULT_REPLICATIONS, Scenario, estimate_risks, prri, prri_std_error

DEFAULT_SEED = 1
SEED_ENV = "ORDSCALE_SEED"
REPS_ENV = "ORDSCALE_REPS"
# A run is flagged when more than this share of replications had to be redrawn.
MAX_REDRAW_FRACTION = 0.001

SAMPLE_SIZES = [(3, 5), (10, 15), (8, 5), (15, 10)]
SIGMAS = [
    (0.2, 0.5), (0.2, 1.0), (0.2, 1.5),
    (0.5, 1.0), (0.5, 1.5), (0.5, 2.0),
    (1.0, 1.5), (1.0, 2.0), (1.0, 2.5),
]

E = EstimatorId
_KNOWN_PAIRS = [
    (E.IMPROVED_BSEE, E.BSEE), (E.RMLE_KNOWN, E.BSEE), (E.IMPROVED_RMLE_KNOWN, E.BSEE),
    (E.IMPROVED_BSEE, E.RMLE_KNOWN), (E.BSEE, E.RMLE_KNOWN), (E.IMPROVED_RMLE_KNOWN, E.RMLE_KNOWN),
]
_UNKNOWN_PAIRS = [
    (E.IMPROVED_BAEE, E.BAEE), (E.RMLE_UNKNOWN, E.BAEE), (E.IMPROVED_RMLE_UNKNOWN, E.BAEE),
    (E.IMPROVED_BAEE, E.RMLE_UNKNOWN), (E.BAEE, E.RMLE_UNKNOWN), (E.IMPROVED_RMLE_UNKNOWN, E.RMLE_UNKNOWN),
]
# table id -> (linex p, column pairs (new, base))
TABLES = {
    1: (0.5, _KNOWN_PAIRS),
    2: (-0.5, _KNOWN_PAIRS),
    3: (0.5, _UNKNOWN_PAIRS),
    4: (-0.5, _UNKNOWN_PAIRS),
}


class ConfigError(ValueError):
    pass


Pair = tuple[EstimatorId, EstimatorId]


@dataclass
class TableRow:
    n: tuple[int, ...]
    sigma: tuple[float, ...]
    p: float
    pairs: list[Pair]
    prri: list[np.ndarray]
    se: list[np.ndarray]
    replications: int
    redraw_count: int = 0
    overflow_count: int = 0

    @property
    def flagged(self) -> bool:
        return self.overflow_count > 0 or self.redraw_count > MAX_REDRAW_FRACTION * self.replications


@dataclass
class ExperimentConfig:
    scenarios: list[Scenario]
    estimator_pairs: list[Pair]
    output_format: str = "csv"
    output_path: str = "-"


@dataclass
class ExperimentResult:
    rows: list[TableRow] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures and not any(r.flagged for r in self.rows)


def derive_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for sub-task ``key`` of a run seeded with ``seed``."""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)).generate_state(
        2, np.uint32
    )
    return int(state[0]) | (int(state[1]) << 32)


def run_scenario(scenario: Scenario, pairs: Sequence[Pair], workers: int = 1) -> TableRow:
    """PRRI and its standard error for every pair, on one shared set of draws."""
    needed = [e for pair in pairs for e in pair]
    risks = estimate_risks(needed, scenario, workers=workers)
    any_risk = next(iter(risks.values()))
    return TableRow(
        n=scenario.n,
        sigma=scenario.sigma,
        p=scenario.shape.p,
        pairs=list(pairs),
        prri=[prri(risks[a], risks[b]) for a, b in pairs],
        se=[prri_std_error(risks[a], risks[b]) for a, b in pairs],
        replications=scenario.replications,
        redraw_count=any_risk.redraw_count,
        overflow_count=sum(r.overflow_count for r in risks.values()),
    )


def table_scenarios(table_id: int, replications: int = DEFAULT_REPLICATIONS, seed: int = DEFAULT_SEED) -> list[Scenario]:
    """The 36 grid scenarios of a table: sample-size blocks, then scale pairs.

    Row ``j`` gets the same derived seed in every table, so the four tables are
    computed on common draws.
    """
    if table_id not in TABLES:
        raise ValueError(f"table id must be one of {sorted(TABLES)}, got {table_id}")
    p, _ = TABLES[table_id]
    shape = LinexShape(p)
    out = []
    for n in SAMPLE_SIZES:
        for sigma in SIGMAS:
            out.append(
                Scenario(n, sigma, shape, replications=replications, seed=derive_seed(seed, len(out)))
            )
    return out


def run_table(table_id: int, replications: int = DEFAULT_REPLICATIONS, seed: int = DEFAULT_SEED, workers: int = 1) -> list[TableRow]:
    """Reproduce one of the four PRRI tables: 36 rows, six estimator pairs each."""
    scenarios = table_scenarios(table_id, replications, seed)
    pairs = TABLES[table_id][1]
    return [run_scenario(sc, pairs, workers) for sc in scenarios]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every configured scenario; failures are collected, not raised."""
    result = ExperimentResult()
    for idx, sc in enumerate(config.scenarios):
        try:
            result.rows.append(run_scenario(sc, config.estimator_pairs, workers))
        except Exception as exc:  # reported per scenario; the run continues
            result.failures.append((idx, f"{type(exc).__name__}: {exc}"))
    return result


# ---------------------------------------------------------------- config


def _node_line(root, path: Sequence) -> int | None:
    node = root
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    node = v
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return line
        line = node.start_mark.line + 1
    return line


def _path_str(path: Sequence) -> str:
    out = ""
    for key in path:
        out += f"[{key}]" if isinstance(key, int) else (f".{key}" if out else str(key))
    return out or "<root>"


def parse_config(text: str, env: dict | None = None) -> ExperimentConfig:
    """Parse and validate a YAML experiment document.

    ``ORDSCALE_SEED`` replaces the top-level seed and ``ORDSCALE_REPS`` the
    replication count of every scenario. Errors carry the line and field path.
    """
    env = os.environ if env is None else env
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    def fail(path, msg):
        raise ConfigError(f"line {_node_line(root, path)}: {_path_str(path)}: {msg}")

    if not isinstance(data, dict):
        fail([], "expected a mapping at top level")
    known_keys = {"seed", "replications", "p", "format", "output", "pairs", "scenarios"}
    for key in data:
        if key not in known_keys:
            fail([key], f"unknown field (allowed: {', '.join(sorted(known_keys))})")

    def as_int(path, value, minimum):
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            fail(path, f"expected an integer >= {minimum}, got {value!r}")
        return value

    def as_real_list(path, value):
        if not isinstance(value, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        ):
            fail(path, f"expected a list of numbers, got {value!r}")
        return [float(v) for v in value]

    seed = as_int(["seed"], data.get("seed", DEFAULT_SEED), 0)
    if env.get(SEED_ENV):
        seed = _env_int(SEED_ENV, env[SEED_ENV], 0)
    default_reps = as_int(["replications"], data.get("replications", DEFAULT_REPLICATIONS), 1)
    reps_override = _env_int(REPS_ENV, env[REPS_ENV], 1) if env.get(REPS_ENV) else None
    default_p = data.get("p")

    fmt = data.get("format", "csv")
    if fmt not in ("csv", "markdown", "md"):
        fail(["format"], f"expected 'csv' or 'markdown', got {fmt!r}")
    fmt = "markdown" if fmt == "md" else fmt
    output = data.get("output", "-")
    if not isinstance(output, str) or not output:
        fail(["output"], "expected a file path or '-'")

    raw_pairs = data.get("pairs")
    if not isinstance(raw_pairs, list) or not raw_pairs:
        fail(["pairs"], "expected a nonempty list of [new, base] estimator pairs")
    pairs: list[Pair] = []
    for i, pair in enumerate(raw_pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            fail(["pairs", i], "expected [new, base]")
        try:
            pairs.append((EstimatorId(pair[0]), EstimatorId(pair[1])))
        except ValueError:
            fail(["pairs", i], f"unknown estimator in {pair!r}; choose from {', '.join(e.value for e in EstimatorId)}")

    raw_scenarios = data.get("scenarios")
    if not isinstance(raw_scenarios, list) or not raw_scenarios:
        fail(["scenarios"], "expected a nonempty list of scenarios")
    scenarios = []
    allowed = {"n", "sigma", "p", "mu", "replications", "seed"}
    for i, sc in enumerate(raw_scenarios):
        here = ["scenarios", i]
        if not isinstance(sc, dict):
            fail(here, "expected a mapping")
        for key in sc:
            if key not in allowed:
                fail(here + [key], f"unknown field (allowed: {', '.join(sorted(allowed))})")
        for key in ("n", "sigma"):
            if key not in sc:
                fail(here, f"missing required field '{key}'")
        n = sc["n"]
        if not isinstance(n, list) or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in n):
            fail(here + ["n"], f"expected a list of integers >= 1, got {n!r}")
        if len(n) < 2:
            fail(here + ["n"], "need at least two populations")
        sigma = as_real_list(here + ["sigma"], sc["sigma"])
        if len(sigma) != len(n):
            fail(here + ["sigma"], f"expected {len(n)} values to match n")
        if any(s <= 0 for s in sigma):
            fail(here + ["sigma"], "scales must be > 0")
        if any(a > b for a, b in zip(sigma, sigma[1:])):
            fail(here + ["sigma"], f"violates the order constraint sigma_1 <= ... <= sigma_k: {sigma}")
        mu = as_real_list(here + ["mu"], sc["mu"]) if "mu" in sc else None
        if mu is not None and len(mu) != len(n):
            fail(here + ["mu"], f"expected {len(n)} values to match n")
        p = sc.get("p", default_p)
        if p is None:
            fail(here, "missing 'p' (set it here or at top level)")
        if isinstance(p, bool) or not isinstance(p, (int, float)) or p == 0 or not math.isfinite(p):
            fail(here + ["p"] if "p" in sc else ["p"], f"expected a finite nonzero number, got {p!r}")
        reps = as_int(here + ["replications"], sc.get("replications", default_reps), 1)
        if reps_override is not None:
            reps = reps_override
        sc_seed = as_int(here + ["seed"], sc["seed"], 0) if "seed" in sc else derive_seed(seed, i)
        for a, b in pairs:
            for est in (a, b):
                if not est.known_location and min(n) < 2:
                    fail(here + ["n"], f"estimator {est} needs every n_i >= 2")
        scenarios.append(Scenario(tuple(n), tuple(sigma), LinexShape(float(p)), mu, reps, sc_seed))
    return ExperimentConfig(scenarios, pairs, fmt, output)


def load_config(path: str | os.PathLike, env: dict | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return parse_config(text, env)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _env_int(name: str, raw: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ConfigError(f"environment variable {name} must be >= {minimum}, got {value}")
    return value


# ---------------------------------------------------------------- output


def _num(x: float) -> str:
    return format(float(x), ".10g")


def pair_label(pair: Pair) -> str:
    return f"{pair[0].value}/{pair[1].value}"


def to_csv(rows: Sequence[TableRow]) -> str:
    """One line per (row, pair); header ``n1..nk,sigma1..sigmak,pair,prri_*,se_*``."""
    if not rows:
        raise ValueError("no rows to emit")
    k = max(len(r.n) for r in rows)
    idx = range(1, k + 1)
    header = (
        [f"n{i}" for i in idx] + [f"sigma{i}" for i in idx] + ["pair"]
        + [f"prri_{i}" for i in idx] + [f"se_{i}" for i in idx]
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        pad = [""] * (k - len(row.n))
        for pair, vals, ses in zip(row.pairs, row.prri, row.se):
            writer.writerow(
                [str(v) for v in row.n] + pad
                + [_num(v) for v in row.sigma] + pad
                + [pair_label(pair)]
                + [_num(v) for v in vals] + pad
                + [_num(v) for v in ses] + pad
            )
    return buf.getvalue()


def _tuple(values, fmt="{:.2f}") -> str:
    return "(" + ",".join(fmt.format(v) for v in values) + ")"


def to_markdown(rows: Sequence[TableRow], title: str | None = None) -> str:
    """Pipe table with one line per scenario and one column per estimator pair."""
    if not rows:
        raise ValueError("no rows to emit")
    pairs = rows[0].pairs
    lines = []
    if title:
        lines += [f"### {title}", ""]
    head = ["n", "sigma"] + [f"{a.value} vs {b.value}" for a, b in pairs]
    lines.append("| " + " | ".join(head) + " |")
    lines.append("|" + "---|" * len(head))
    last_n = None
    for row in rows:
        n_cell = _tuple(row.n, "{}") if row.n != last_n else ""
        last_n = row.n
        cells = [n_cell, _tuple(row.sigma, "{:g}")] + [_tuple(v) for v in row.prri]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit(rows: Sequence[TableRow], fmt: str, destination: str | os.PathLike | None = "-", title: str | None = None) -> None:
    """Write rows as ``csv`` or ``markdown`` to a path, or stdout for ``'-'``/None."""
    if fmt in ("md", "markdown"):
        text = to_markdown(rows, title)
    elif fmt == "csv":
        text = to_csv(rows)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if destination is None or str(destination) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write output to {destination}: {exc}") from exc


def table_title(table_id: int) -> str:
    p, pairs = TABLES[table_id]
    where = "known" if pairs[0][1].known_location else "unknown"
    return f"Table {table_id}: PRRI, k = 2, {where} locations, p = {p:g}"


def summarize_flags(rows: Iterable[TableRow]) -> list[str]:
    msgs = []
    for r in rows:
        if r.flagged:
            msgs.append(
                f"n={r.n} sigma={r.sigma}: {r.redraw_count} redraw(s), {r.overflow_count} saturated loss(es)"
            )
    return msgs
