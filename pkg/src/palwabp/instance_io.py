"""Instance text format, SALBP base readers and the ALWABP instance generator.

Instance format::

    # comments start with '#'
    tasks 5
    workers 3
    precedence
    1 2
    end
    times
    W1: 1 - 1 1 1
    W2: 1 1 - 1 1
    W3: 1 1 1 1 1
"""
from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO, Union

import numpy as np

from .core import (Instance, InstanceError, LineSolution, ParallelSolution, SolutionError, Station,
                   station_loads, throughput, transitive_reduction)

# spawn-key tag for the coverage-repair substreams; never a worker index
_REPAIR_TAG = 2**32 - 1


class ParseError(InstanceError):
    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _read_text(source: Union[str, TextIO, Path]) -> str:
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8")
    if hasattr(source, "read"):
        return source.read()
    return source


def parse_instance(source: Union[str, TextIO, Path]) -> Instance:
    lines = list(_content_lines(_read_text(source)))
    pos = 0

    def expect(keyword):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"unexpected end of file, expected '{keyword}'")
        lineno, line = lines[pos]
        parts = line.split()
        if parts[0] != keyword:
            raise ParseError(f"expected '{keyword}', got {line!r}", lineno)
        pos += 1
        return lineno, parts[1:]

    lineno, args = expect("tasks")
    n = _positive_int(args, lineno)
    lineno, args = expect("workers")
    m = _positive_int(args, lineno)

    expect("precedence")
    edges = set()
    while True:
        if pos >= len(lines):
            raise ParseError("precedence section not terminated by 'end'")
        lineno, line = lines[pos]
        pos += 1
        if line == "end":
            break
        parts = line.split()
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"bad precedence pair {line!r}", lineno)
        i, j = int(parts[0]), int(parts[1])
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"task id out of range in {line!r}", lineno)
        edges.add((i - 1, j - 1))

    expect("times")
    names, rows = [], []
    for lineno, line in lines[pos:]:
        if ":" not in line:
            raise ParseError(f"bad time row {line!r}", lineno)
        name, values = line.split(":", 1)
        name = name.strip()
        if not name or any(c.isspace() for c in name):
            raise ParseError(f"bad worker name {name!r}", lineno)
        if name in names:
            raise ParseError(f"duplicate time entry for worker {name}", lineno)
        vals = values.split()
        if len(vals) != n:
            raise ParseError(f"worker {name}: expected {n} times, got {len(vals)}", lineno)
        row = []
        for v in vals:
            if v == "-":
                row.append(None)
            elif v.isdigit() and int(v) > 0:
                row.append(int(v))
            else:
                raise ParseError(f"worker {name}: invalid time {v!r}", lineno)
        names.append(name)
        rows.append(tuple(row))
    if len(rows) != m:
        raise ParseError(f"expected {m} time rows, got {len(rows)}")
    try:
        edges = transitive_reduction(n, edges)
    except InstanceError:
        raise ParseError("precedence cycle") from None
    return Instance(n, edges, tuple(names), tuple(rows))


def _positive_int(args, lineno):
    if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
        raise ParseError("expected a positive integer", lineno)
    return int(args[0])


def write_instance(inst: Instance) -> str:
    out = io.StringIO()
    out.write(f"tasks {inst.n_tasks}\n")
    out.write(f"workers {inst.n_workers}\n")
    out.write("precedence\n")
    for i, j in sorted(inst.precedence):
        out.write(f"{i + 1} {j + 1}\n")
    out.write("end\n")
    out.write("times\n")
    for name, row in zip(inst.workers, inst.times):
        out.write(f"{name}: " + " ".join("-" if p is None else str(p) for p in row) + "\n")
    return out.getvalue()


def load_instance(path) -> Instance:
    return parse_instance(Path(path))


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(write_instance(inst), encoding="utf-8")


@dataclass(frozen=True)
class SalbpBase:
    """A single-worker base instance: task times plus 0-based precedence."""

    times: tuple
    precedence: frozenset

    def __post_init__(self):
        if not self.times or any(not isinstance(t, int) or t < 1 for t in self.times):
            raise InstanceError("base task times must be positive integers")
        object.__setattr__(self, "precedence", transitive_reduction(len(self.times), self.precedence))

    @property
    def n_tasks(self) -> int:
        return len(self.times)


def parse_salbp_base(source) -> SalbpBase:
    """Read a SALBP base in the classic ``.IN2`` layout or the ``.alb`` layout."""
    text = _read_text(source)
    if "<number of tasks>" in text:
        return _parse_alb(text)
    nums = [(ln, line) for ln, line in _content_lines(text)]
    if not nums:
        raise ParseError("empty base file")
    ln, first = nums[0]
    if not first.isdigit():
        raise ParseError("expected task count", ln)
    n = int(first)
    if len(nums) < n + 1:
        raise ParseError("truncated task times")
    times = []
    for ln, line in nums[1 : n + 1]:
        if not line.isdigit():
            raise ParseError(f"bad task time {line!r}", ln)
        times.append(int(line))
    edges = set()
    for ln, line in nums[n + 1 :]:
        parts = [p for p in re.split(r"[,\s]+", line) if p]
        if len(parts) != 2:
            raise ParseError(f"bad precedence pair {line!r}", ln)
        i, j = int(parts[0]), int(parts[1])
        if i == -1 and j == -1:
            break
        edges.add((i - 1, j - 1))
    return SalbpBase(tuple(times), frozenset(edges))


def _parse_alb(text: str) -> SalbpBase:
    section = None
    n = None
    times = {}
    edges = set()
    for ln, line in _content_lines(text):
        if line.startswith("<"):
            section = line
            continue
        if section == "<number of tasks>":
            n = int(line)
        elif section == "<task times>":
            a, b = line.split()
            times[int(a)] = int(b)
        elif section == "<precedence relations>":
            a, b = line.split(",")
            edges.add((int(a) - 1, int(b) - 1))
    if n is None or len(times) != n:
        raise ParseError("incomplete .alb file")
    return SalbpBase(tuple(times[i] for i in range(1, n + 1)), frozenset(edges))


def write_salbp_base(base: SalbpBase) -> str:
    lines = [str(base.n_tasks)] + [str(t) for t in base.times]
    lines += [f"{i + 1},{j + 1}" for i, j in sorted(base.precedence)]
    lines.append("-1,-1")
    return "\n".join(lines) + "\n"


def random_base(n_tasks: int, order_strength: float, seed: int, t_min: int = 1, t_max: int = 100) -> SalbpBase:
    """Random precedence graph with roughly the requested order strength.

    Pairs (i, j), i < j, are added in random order and kept while the
    transitive closure stays within the target number of comparable pairs.
    """
    rng = np.random.default_rng(seed)
    times = tuple(int(t) for t in rng.integers(t_min, t_max, size=n_tasks, endpoint=True))
    target = round(order_strength * n_tasks * (n_tasks - 1) / 2)
    pairs = [(i, j) for i in range(n_tasks) for j in range(i + 1, n_tasks)]
    rng.shuffle(pairs)
    desc = [0] * n_tasks
    anc = [0] * n_tasks
    count = 0
    edges = set()
    for i, j in pairs:
        if count >= target:
            break
        if desc[i] >> j & 1:
            continue
        new_anc = anc[i] | (1 << i)
        new_desc = desc[j] | (1 << j)
        added = 0
        for a in range(n_tasks):
            if new_anc >> a & 1:
                added += bin(new_desc & ~desc[a]).count("1")
        if count + added > target:
            continue
        edges.add((i, j))
        count += added
        for a in range(n_tasks):
            if new_anc >> a & 1:
                desc[a] |= new_desc
        for d in range(n_tasks):
            if new_desc >> d & 1:
                anc[d] |= new_anc
    return SalbpBase(times, frozenset(edges))


@dataclass(frozen=True)
class GeneratorConfig:
    time_factor: int = 2
    infeasibility_rate: float = 0.10
    worker_count: int = 4
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.time_factor, int) or self.time_factor < 1:
            raise ValueError("time_factor must be an integer >= 1")
        if not 0.0 <= self.infeasibility_rate < 1.0:
            raise ValueError("infeasibility_rate must lie in [0, 1)")
        if not isinstance(self.worker_count, int) or self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def cell_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 substream for one generator cell.

    The stream is fully determined by (seed, key) through numpy's SeedSequence
    hashing, so results do not depend on the order cells are visited.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class GeneratedCell:
    infeasible: bool
    time: int


def draw_cell(base_time: int, cfg: GeneratorConfig, w: int, i: int) -> GeneratedCell:
    rng = cell_rng(cfg.seed, w, i)
    u = rng.random()
    t = int(rng.integers(base_time, cfg.time_factor * base_time, endpoint=True))
    return GeneratedCell(u < cfg.infeasibility_rate, t)


def generate_instance(base: SalbpBase, cfg: GeneratorConfig, return_repairs: bool = False):
    """Worker times uniform in [t, factor*t]; each cell infeasible with the configured rate.

    A task left without any capable worker gets one uniformly chosen worker's
    cell restored to its drawn time.
    """
    m, n = cfg.worker_count, base.n_tasks
    cells = [[draw_cell(base.times[i], cfg, w, i) for i in range(n)] for w in range(m)]
    times = [[None if c.infeasible else c.time for c in row] for row in cells]
    repairs = []
    for i in range(n):
        if all(times[w][i] is None for w in range(m)):
            w = int(cell_rng(cfg.seed, _REPAIR_TAG, i).integers(m))
            times[w][i] = cells[w][i].time
            repairs.append((w, i))
    inst = Instance(n, base.precedence, tuple(f"W{w + 1}" for w in range(m)), tuple(map(tuple, times)))
    return (inst, repairs) if return_repairs else inst


def read_worker_counts(path) -> dict:
    """Sidecar CSV ``base_name,worker_count``."""
    counts = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#") or row[0] == "base_name":
                continue
            counts[row[0].strip()] = int(row[1])
    return counts


def iter_instance_files(directory) -> Iterable[Path]:
    return sorted(p for p in Path(directory).iterdir() if p.is_file() and not p.name.startswith("."))


# ---------------------------------------------------------------- solutions
#
# Solution format::
#
#     kmax 2
#     line 1
#     station 1 worker W1: 1 3 5  # load 3
#     station 2 worker W2: 2 4  # load 2
#     cycle 3
#     throughput 1200.000
#     line 2
#     ...
#     combined 1.875000
#     combined_throughput 1920.000


@dataclass
class SolutionClaims:
    line_cycles: list
    combined: float | None


def write_solution(inst: Instance, sol: ParallelSolution, header: Iterable[str] = ()) -> str:
    out = io.StringIO()
    for h in header:
        out.write(f"# {h}\n")
    out.write(f"kmax {sol.k_max}\n")
    k = 0
    for line in sol.lines:
        if not line.stations:
            continue
        k += 1
        out.write(f"line {k}\n")
        loads = station_loads(inst, line.stations)
        for s, (st, load) in enumerate(zip(line.stations, loads), start=1):
            tasks = " ".join(str(i + 1) for i in st.tasks)
            out.write(f"station {s} worker {inst.workers[st.worker]}: {tasks}".rstrip() + f"  # load {load}\n")
        out.write(f"cycle {_fmt_ct(line.cycle_time)}\n")
        out.write(f"throughput {throughput(line.cycle_time):.3f}\n")
    out.write(f"combined {sol.combined_cycle_time:.6f}\n")
    out.write(f"combined_throughput {sol.combined_throughput:.3f}\n")
    return out.getvalue()


def _fmt_ct(ct) -> str:
    return str(int(ct)) if float(ct).is_integer() else f"{ct:.6f}"


def parse_solution(inst: Instance, source) -> tuple:
    """Read a solution file; returns ``(ParallelSolution, SolutionClaims)``.

    Stated line cycle times are kept on the LineSolution so validation can
    compare them with the recomputed loads.
    """
    lines = list(_content_lines(_read_text(source)))
    k_max = None
    blocks = []  # [stations, cycle]
    combined = None
    for lineno, line in lines:
        parts = line.split()
        key = parts[0]
        if key == "kmax":
            k_max = _positive_int(parts[1:], lineno)
        elif key == "line":
            blocks.append([[], None])
        elif key == "station":
            if not blocks:
                raise ParseError("station outside a line", lineno)
            head, _, tail = line.partition(":")
            hp = head.split()
            if len(hp) != 4 or hp[2] != "worker":
                raise ParseError(f"bad station line {line!r}", lineno)
            if hp[3] not in inst.workers:
                raise ParseError(f"unknown worker {hp[3]!r}", lineno)
            tasks = []
            for tok in tail.split():
                if not tok.isdigit() or not 1 <= int(tok) <= inst.n_tasks:
                    raise ParseError(f"bad task id {tok!r}", lineno)
                tasks.append(int(tok) - 1)
            blocks[-1][0].append(Station(inst.workers.index(hp[3]), tuple(tasks)))
        elif key == "cycle":
            if not blocks:
                raise ParseError("cycle outside a line", lineno)
            blocks[-1][1] = _float(parts, lineno)
        elif key == "combined":
            combined = _float(parts, lineno)
        elif key in ("throughput", "combined_throughput"):
            _float(parts, lineno)
        else:
            raise ParseError(f"unexpected {key!r}", lineno)
    if k_max is None:
        raise ParseError("missing 'kmax'")
    sols = []
    for stations, cycle in blocks:
        if cycle is None:
            try:
                cycle = max(station_loads(inst, stations), default=0)
            except SolutionError:
                cycle = 0
        sols.append(LineSolution(tuple(stations), cycle))
    return ParallelSolution(tuple(sols), k_max), SolutionClaims([c for _, c in blocks], combined)


def _float(parts, lineno) -> float:
    if len(parts) != 2:
        raise ParseError("expected one value", lineno)
    try:
        return float(parts[1])
    except ValueError:
        raise ParseError(f"bad number {parts[1]!r}", lineno) from None


def seeded_suite(count: int, seed: int = 0, max_tasks: int = 8, max_workers: int = 4, min_tasks: int = 4,
                 min_workers: int = 2, order_strength: float = 0.3, infeasibility_rate: float = 0.2,
                 unit_times: bool = False) -> list:
    """Small random instances for oracle comparisons; entry k depends only on (seed, k).

    Returns ``[(label, Instance), ...]``. With ``unit_times`` every feasible
    time is 1, otherwise base times are drawn in [1, 10] with time factor 2.
    """
    out = []
    for k in range(count):
        rng = np.random.default_rng([seed, k])
        n = int(rng.integers(min_tasks, max_tasks, endpoint=True))
        m = int(rng.integers(min_workers, max_workers, endpoint=True))
        sub = int(rng.integers(2**63))
        base = random_base(n, order_strength, sub, t_min=1, t_max=1 if unit_times else 10)
        cfg = GeneratorConfig(1 if unit_times else 2, infeasibility_rate, m, sub)
        out.append((f"s{seed}-{k:03d}-n{n}-w{m}", generate_instance(base, cfg)))
    return out
