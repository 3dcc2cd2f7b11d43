"""Ground truth and baselines: exhaustive oracle, catalog enumeration, MILP export/verification."""
from __future__ import annotations

import io
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .constructive import SerialCache
from .core import Instance, LineSolution, NoSolutionError, ParallelSolution, Station, bits
from .preprocess import WorkerSetCatalog, worker_sets

ORACLE_MAX_TASKS = 10
ORACLE_MAX_WORKERS = 5


class OracleSizeError(ValueError):
    pass


class EnumerationError(RuntimeError):
    pass


def _team_key(team) -> tuple:
    return tuple(sorted(team))


def _topo_sorted(inst: Instance, tasks) -> tuple:
    pos = {t: k for k, t in enumerate(inst.topo_order)}
    return tuple(sorted(tasks, key=pos.__getitem__))


def ideals(inst: Instance) -> list:
    """All predecessor-closed task sets, as bitmasks in increasing order."""
    pred = inst.pred_mask
    out = []
    for d in range(1 << inst.n_tasks):
        if all(pred[i] & ~d == 0 for i in bits(d)):
            out.append(d)
    return out


def _load_tables(inst: Instance) -> list:
    # load[w][mask], -1 when the mask holds a task w cannot do
    size = 1 << inst.n_tasks
    tables = []
    for w in range(inst.n_workers):
        row = inst.times[w]
        tab = [0] * size
        for mask in range(1, size):
            low = mask & -mask
            i = low.bit_length() - 1
            rest = tab[mask ^ low]
            tab[mask] = -1 if rest < 0 or row[i] is None else rest + row[i]
        tables.append(tab)
    return tables


def team_optima(inst: Instance) -> dict:
    """Optimal single line for every nonempty worker subset.

    Dynamic program over (workers placed so far, tasks done so far); the
    tasks done always form a predecessor-closed set and the next worker's
    station takes the difference to a larger closed set (possibly nothing).
    Returns ``{team: LineSolution}`` for teams that can build a line.
    """
    if inst.n_tasks > ORACLE_MAX_TASKS or inst.n_workers > ORACLE_MAX_WORKERS:
        raise OracleSizeError(
            f"oracle size guard: |N| = {inst.n_tasks} (max {ORACLE_MAX_TASKS}), "
            f"|W| = {inst.n_workers} (max {ORACLE_MAX_WORKERS})"
        )
    m = inst.n_workers
    full = inst.all_tasks
    ids = ideals(inst)
    supers = {d: [e for e in ids if e & d == d] for d in ids}
    load = _load_tables(inst)
    best = {0: {0: 0}}
    parent = {}
    for u in sorted(range(1 << m), key=lambda x: (bin(x).count("1"), x)):
        states = best.get(u)
        if not states:
            continue
        for w in range(m):
            if u >> w & 1:
                continue
            nu = u | 1 << w
            target = best.setdefault(nu, {})
            tab = load[w]
            for d, val in states.items():
                for e in supers[d]:
                    ld = tab[e ^ d]
                    if ld < 0:
                        continue
                    nv = val if val >= ld else ld
                    cur = target.get(e)
                    if cur is None or nv < cur:
                        target[e] = nv
                        parent[(nu, e)] = (u, d, w)
    out = {}
    for u, states in best.items():
        if u and full in states:
            stations = []
            key = (u, full)
            while key[0]:
                pu, pd, w = parent[key]
                stations.append(Station(w, _topo_sorted(inst, bits(key[1] ^ pd))))
                key = (pu, pd)
            stations.reverse()
            out[frozenset(bits(u))] = LineSolution(tuple(stations), states[full])
    return out


def set_partitions(items, max_blocks: int):
    """Yield every partition of ``items`` into at most ``max_blocks`` blocks."""
    items = list(items)
    if not items:
        yield []
        return

    def rec(k, blocks):
        if k == len(items):
            yield [frozenset(b) for b in blocks]
            return
        x = items[k]
        for b in blocks:
            b.append(x)
            yield from rec(k + 1, blocks)
            b.pop()
        if len(blocks) < max_blocks:
            blocks.append([x])
            yield from rec(k + 1, blocks)
            blocks.pop()

    yield from rec(0, [])


def exhaustive_oracle(inst: Instance, k_max: int, optima: Optional[dict] = None) -> ParallelSolution:
    """True optimum over all worker partitions into at most k_max lines.

    Ties on the total rate go to the partition listed first (lexicographic
    order of the sorted teams).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    optima = team_optima(inst) if optima is None else optima
    best, best_rate, best_key = None, Fraction(-1), None
    for part in set_partitions(range(inst.n_workers), k_max):
        if any(t not in optima for t in part):
            continue
        rate = sum(Fraction(1, optima[t].cycle_time) for t in part)
        key = sorted(_team_key(t) for t in part)
        if rate > best_rate or (rate == best_rate and key < best_key):
            best, best_rate, best_key = part, rate, key
    if best is None:
        raise NoSolutionError("no solution exists")
    lines = tuple(optima[t] for t in sorted(best, key=_team_key))
    return ParallelSolution(lines, k_max)


def _partition_rate(evaluate, partition) -> float:
    total = 0.0
    for team in partition:
        ct = evaluate.cycle_time(team)
        if math.isinf(ct):
            return -math.inf
        total += 1.0 / ct
    return total


def _complete(evaluate, teams, everyone) -> list:
    """Append each leftover worker (in index order) to the line where it helps most."""
    part = list(teams)
    for w in sorted(everyone.difference(*part)):
        best_j, best_r = 0, -math.inf
        for j in range(len(part)):
            trial = part[:j] + [part[j] | {w}] + part[j + 1 :]
            r = _partition_rate(evaluate, trial)
            if r > best_r:
                best_j, best_r = j, r
        part[best_j] = part[best_j] | {w}
    return part


def enumerate_solve(inst: Instance, k_max: int, catalog: Optional[WorkerSetCatalog] = None,
                    evaluate: Optional[SerialCache] = None) -> ParallelSolution:
    """Best partition built from at most k_max pairwise disjoint catalogued teams.

    The full team as a single line is always a candidate.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    evaluate = evaluate or SerialCache(inst)
    everyone = inst.all_workers
    candidates = [[everyone]]
    if k_max > 1:
        if catalog is None:
            catalog = worker_sets(inst)
        if catalog.overflow:
            raise EnumerationError("enumeration infeasible: worker-set catalog overflow")
        teams = catalog.teams

        def combos(start, chosen, used):
            if chosen:
                yield list(chosen)
            if len(chosen) == k_max:
                return
            for idx in range(start, len(teams)):
                t = teams[idx]
                if not (t & used):
                    chosen.append(t)
                    yield from combos(idx + 1, chosen, used | t)
                    chosen.pop()

        for combo in combos(0, [], frozenset()):
            candidates.append(_complete(evaluate, combo, everyone))
    best, best_rate = None, -math.inf
    for part in candidates:
        r = _partition_rate(evaluate, part)
        if r > best_rate:
            best, best_rate = part, r
    if best is None:
        raise NoSolutionError("no solution exists")
    lines = tuple(evaluate(t) for t in sorted(best, key=_team_key))
    return ParallelSolution(lines, k_max)


# ---------------------------------------------------------------- MILP

_NAME_RE = re.compile(
    r"^(?:x_s(?P<xs>\d+)_w(?P<xw>\d+)_i(?P<xi>\d+)_k(?P<xk>\d+)"
    r"|v_s(?P<vs>\d+)_w(?P<vw>\d+)_i(?P<vi>\d+)_k(?P<vk>\d+)"
    r"|(?P<swk>[yfu])_s(?P<s>\d+)_w(?P<w>\d+)_k(?P<k>\d+)"
    r"|(?P<line>[zCF])_k(?P<lk>\d+))$"
)


def x_name(s, w, i, k):
    return f"x_s{s + 1}_w{w + 1}_i{i + 1}_k{k + 1}"


def v_name(s, w, i, k):
    return f"v_s{s + 1}_w{w + 1}_i{i + 1}_k{k + 1}"


def swk_name(kind, s, w, k):
    return f"{kind}_s{s + 1}_w{w + 1}_k{k + 1}"


def line_name(kind, k):
    return f"{kind}_k{k + 1}"


@dataclass
class Row:
    name: str
    tag: str              # equation tag, e.g. "2" or "15"
    coeffs: dict          # variable name -> coefficient
    sense: str            # "<=", ">=", "="
    rhs: float

    def lhs(self, values: dict) -> float:
        return sum(c * values.get(v, 0.0) for v, c in self.coeffs.items())

    def violation(self, values: dict) -> float:
        a = self.lhs(values)
        if self.sense == "<=":
            return max(0.0, a - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - a)
        return abs(a - self.rhs)


@dataclass
class MilpModel:
    n_stations: int
    k_max: int
    big_m: float
    variables: dict = field(default_factory=dict)  # name -> "binary" | "continuous"
    rows: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    fixed_zero: list = field(default_factory=list)  # incompatibility fixings (tag 8)
    allow_idle: bool = True

    def count(self, prefix: str) -> int:
        return sum(1 for v in self.variables if v.startswith(prefix + "_"))

    def rows_with_tag(self, tag: str) -> list:
        return [r for r in self.rows if r.tag == tag]

    def to_lp(self) -> str:
        out = io.StringIO()
        out.write("\\ parallel assembly line worker assignment and balancing\n")
        out.write(f"\\ stations per line {self.n_stations}, lines {self.k_max}, M = {self.big_m:g}\n")
        out.write("\\ rates in products per second; equation tags follow each row as comments\n")
        out.write("Maximize\n")
        out.write(" obj: " + _expr(self.objective) + "\n")
        out.write("\\ eq 12: total production rate\n")
        out.write("Subject To\n")
        last = None
        for r in self.rows:
            if r.tag != last:
                out.write(f"\\ eq {r.tag}\n")
                last = r.tag
            rhs = _num(r.rhs)
            out.write(f" {r.name}: {_expr(r.coeffs)} {r.sense} {rhs}\n")
        out.write("Bounds\n")
        out.write("\\ eq 8: incompatible assignments fixed to zero\n")
        for v in self.fixed_zero:
            out.write(f" {v} = 0\n")
        out.write("\\ eqs 19-21 and nonnegative cycle times\n")
        for v, kind in self.variables.items():
            if kind == "continuous":
                out.write(f" {v} >= 0\n")
        out.write("Binaries\n")
        out.write("\\ eqs 9-11\n")
        names = [v for v, kind in self.variables.items() if kind == "binary"]
        for k in range(0, len(names), 8):
            out.write(" " + " ".join(names[k : k + 8]) + "\n")
        out.write("End\n")
        return out.getvalue()


def _num(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def _expr(coeffs: dict) -> str:
    parts = []
    for v, c in coeffs.items():
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        term = v if mag == 1 else f"{_num(mag)} {v}"
        parts.append(f"{sign} {term}")
    if not parts:
        return "0"
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else s


def build_milp(inst: Instance, k_max: int, allow_idle: bool = True) -> MilpModel:
    """Linearized model with |W| stations per line and M = 1.

    With ``allow_idle`` an extra binary u marks a staffed station that does
    no task; without it every staffed station must hold a task.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n, m = inst.n_tasks, inst.n_workers
    S, K = m, k_max
    M = 1.0
    model = MilpModel(S, K, M, allow_idle=allow_idle)
    var = model.variables
    for k in range(K):
        for s in range(S):
            for w in range(m):
                for i in range(n):
                    var[x_name(s, w, i, k)] = "binary"
    for k in range(K):
        for s in range(S):
            for w in range(m):
                var[swk_name("y", s, w, k)] = "binary"
    for k in range(K):
        var[line_name("z", k)] = "binary"
    if allow_idle:
        for k in range(K):
            for s in range(S):
                for w in range(m):
                    var[swk_name("u", s, w, k)] = "binary"
    for k in range(K):
        var[line_name("C", k)] = "continuous"
    for k in range(K):
        var[line_name("F", k)] = "continuous"
    for k in range(K):
        for s in range(S):
            for w in range(m):
                var[swk_name("f", s, w, k)] = "continuous"
    for k in range(K):
        for s in range(S):
            for w in range(m):
                for i in range(n):
                    var[v_name(s, w, i, k)] = "continuous"
    model.objective = {line_name("F", k): 1.0 for k in range(K)}
    rows = model.rows

    def add(tag, name, coeffs, sense, rhs):
        rows.append(Row(name, tag, coeffs, sense, rhs))

    for i in range(n):
        for k in range(K):
            c = {x_name(s, w, i, k): 1.0 for w in range(m) for s in range(S)}
            c[line_name("z", k)] = -1.0
            add("2", f"cover_i{i + 1}_k{k + 1}", c, "=", 0)
    for w in range(m):
        add("3", f"assign_w{w + 1}", {swk_name("y", s, w, k): 1.0 for k in range(K) for s in range(S)}, "=", 1)
    for s in range(S):
        for k in range(K):
            c = {swk_name("y", s, w, k): 1.0 for w in range(m)}
            c[line_name("z", k)] = -1.0
            add("4", f"staff_s{s + 1}_k{k + 1}", c, "<=", 0)
    for i, j in sorted(inst.precedence):
        for t in range(S):
            for k in range(K):
                c = {}
                for w in range(m):
                    for s in range(t, S):
                        c[x_name(s, w, i, k)] = 1.0
                        c[x_name(s, w, j, k)] = -1.0
                add("5", f"prec_i{i + 1}_j{j + 1}_t{t + 1}_k{k + 1}", c, "<=", 0)
    for w in range(m):
        for s in range(S):
            for k in range(K):
                c = {x_name(s, w, i, k): 1.0 for i in range(n)}
                c[swk_name("y", s, w, k)] = -float(n)
                add("6", f"link_s{s + 1}_w{w + 1}_k{k + 1}", c, "<=", 0)
    for s in range(S):
        for w in range(m):
            for k in range(K):
                c = {x_name(s, w, i, k): float(inst.times[w][i]) for i in range(n) if inst.times[w][i] is not None}
                c[line_name("C", k)] = -1.0
                add("7", f"load_s{s + 1}_w{w + 1}_k{k + 1}", c, "<=", 0)
    for w in range(m):
        for i in bits(inst.incompatible[w]):
            for s in range(S):
                for k in range(K):
                    model.fixed_zero.append(x_name(s, w, i, k))
    for k in range(K):
        add("13", f"active_k{k + 1}", {line_name("F", k): 1.0, line_name("z", k): -M}, "<=", 0)
    for s in range(S):
        for k in range(K):
            c = {swk_name("f", s, w, k): 1.0 for w in range(m)}
            c[line_name("F", k)] = -1.0
            for w in range(m):
                c[swk_name("y", s, w, k)] = -M
            add("14", f"slowest_s{s + 1}_k{k + 1}", c, ">=", -M)
    for w in range(m):
        for s in range(S):
            for k in range(K):
                c = {v_name(s, w, i, k): float(inst.times[w][i]) for i in range(n) if inst.times[w][i] is not None}
                if allow_idle:
                    c[swk_name("u", s, w, k)] = 1.0
                c[swk_name("y", s, w, k)] = -1.0
                add("15", f"rate_s{s + 1}_w{w + 1}_k{k + 1}", c, "=", 0)
    if allow_idle:
        for w in range(m):
            for s in range(S):
                for k in range(K):
                    u = swk_name("u", s, w, k)
                    add("15-idle", f"idle_s{s + 1}_w{w + 1}_k{k + 1}", {u: 1.0, swk_name("y", s, w, k): -1.0}, "<=", 0)
                    for i in range(n):
                        add("15-idle", f"idle_s{s + 1}_w{w + 1}_i{i + 1}_k{k + 1}",
                            {u: 1.0, x_name(s, w, i, k): 1.0}, "<=", 1)
    for w in range(m):
        for s in range(S):
            for k in range(K):
                add("16", f"frate_s{s + 1}_w{w + 1}_k{k + 1}",
                    {swk_name("f", s, w, k): 1.0, swk_name("y", s, w, k): -M}, "<=", 0)
    for s in range(S):
        for w in range(m):
            for i in range(n):
                for k in range(K):
                    add("17", f"vlow_s{s + 1}_w{w + 1}_i{i + 1}_k{k + 1}",
                        {v_name(s, w, i, k): 1.0, swk_name("f", s, w, k): -1.0, x_name(s, w, i, k): -M}, ">=", -M)
    for s in range(S):
        for w in range(m):
            for i in range(n):
                for k in range(K):
                    add("18", f"vup_s{s + 1}_w{w + 1}_i{i + 1}_k{k + 1}",
                        {v_name(s, w, i, k): 1.0, x_name(s, w, i, k): -M}, "<=", 0)
    return model


def export_milp(inst: Instance, k_max: int, allow_idle: bool = True) -> str:
    return build_milp(inst, k_max, allow_idle).to_lp()


def solution_to_milp_map(inst: Instance, sol: ParallelSolution, allow_idle: bool = True) -> dict:
    """Encode a solution as a model point (station s of line k = s-th station listed)."""
    values = {}
    for k, line in enumerate(ln for ln in sol.lines if ln.stations):
        values[line_name("z", k)] = 1.0
        values[line_name("C", k)] = float(line.cycle_time)
        values[line_name("F", k)] = 1.0 / line.cycle_time
        for s, st in enumerate(line.stations):
            w = st.worker
            values[swk_name("y", s, w, k)] = 1.0
            load = sum(inst.times[w][i] for i in st.tasks)
            if not st.tasks:
                if not allow_idle:
                    raise ValueError("idle station needs the idle-station extension")
                values[swk_name("u", s, w, k)] = 1.0
                values[swk_name("f", s, w, k)] = 1.0
                continue
            rate = 1.0 / load
            values[swk_name("f", s, w, k)] = rate
            for i in st.tasks:
                values[x_name(s, w, i, k)] = 1.0
                values[v_name(s, w, i, k)] = rate
    return values


def parse_var_name(name: str) -> tuple:
    """``name -> (kind, indices)`` with 0-based indices; ValueError if malformed."""
    mt = _NAME_RE.match(name)
    if not mt:
        raise ValueError(f"malformed variable name {name!r}")
    g = mt.groupdict()
    if g["xs"]:
        return "x", tuple(int(g[k]) - 1 for k in ("xs", "xw", "xi", "xk"))
    if g["vs"]:
        return "v", tuple(int(g[k]) - 1 for k in ("vs", "vw", "vi", "vk"))
    if g["swk"]:
        return g["swk"], tuple(int(g[k]) - 1 for k in ("s", "w", "k"))
    return g["line"], (int(g["lk"]) - 1,)


def read_solution_map(source) -> dict:
    """Parse ``name value`` lines; blank lines and lines starting with '#' or '\\' are skipped."""
    text = source.read() if hasattr(source, "read") else str(source)
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#\\":
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'name value', got {line!r}")
        try:
            values[parts[0]] = float(parts[1])
        except ValueError:
            raise ValueError(f"line {lineno}: bad value {parts[1]!r}") from None
    return values


def write_solution_map(values: dict) -> str:
    return "".join(f"{k} {values[k]:.12g}\n" for k in sorted(values))


@dataclass
class RowViolation:
    row: str
    tag: str
    amount: float


@dataclass
class MilpReport:
    feasible: bool
    objective: float
    violations: list
    solution: Optional[ParallelSolution]
    ct_consistent: bool

    def tags(self) -> set:
        return {v.tag for v in self.violations}


def verify_milp_solution(inst: Instance, k_max: int, assignment: dict, tol: float = 1e-6,
                         allow_idle: bool = True, model: Optional[MilpModel] = None) -> MilpReport:
    """Re-check every row of the exported model at a given point.

    Missing variables count as 0. Domain violations are reported with tags
    "9-11" (binaries) and "19-21" (nonnegativity); fixings with tag "8".
    """
    model = model or build_milp(inst, k_max, allow_idle)
    for name in assignment:
        parse_var_name(name)
        if name not in model.variables:
            raise ValueError(f"variable {name!r} is outside the model dimensions")
    vals = assignment
    violations = []
    for r in model.rows:
        amt = r.violation(vals)
        if amt > tol:
            violations.append(RowViolation(r.name, r.tag, amt))
    for v in model.fixed_zero:
        if abs(vals.get(v, 0.0)) > tol:
            violations.append(RowViolation(v, "8", abs(vals[v])))
    for v, kind in model.variables.items():
        a = vals.get(v, 0.0)
        if kind == "binary" and min(abs(a), abs(a - 1)) > tol:
            violations.append(RowViolation(v, "9-11", min(abs(a), abs(a - 1))))
        elif kind == "continuous" and a < -tol:
            violations.append(RowViolation(v, "19-21", -a))
    objective = sum(c * vals.get(v, 0.0) for v, c in model.objective.items())
    solution = _reconstruct(inst, model, vals)
    consistent = False
    if solution is not None and objective > 0:
        try:
            consistent = abs(solution.total_rate - objective) <= tol
        except (ValueError, ZeroDivisionError):
            consistent = False
    return MilpReport(not violations, objective, violations, solution, consistent)


def _reconstruct(inst: Instance, model: MilpModel, vals: dict) -> Optional[ParallelSolution]:
    lines = []
    for k in range(model.k_max):
        if vals.get(line_name("z", k), 0.0) < 0.5:
            continue
        stations = []
        for s in range(model.n_stations):
            for w in range(inst.n_workers):
                if vals.get(swk_name("y", s, w, k), 0.0) > 0.5:
                    tasks = [i for i in range(inst.n_tasks) if vals.get(x_name(s, w, i, k), 0.0) > 0.5]
                    stations.append(Station(w, _topo_sorted(inst, tasks)))
        if not stations:
            continue
        loads = [sum(inst.times[st.worker][i] or 0 for i in st.tasks) for st in stations]
        lines.append(LineSolution(tuple(stations), max(loads)))
    if not lines or any(ln.cycle_time <= 0 for ln in lines):
        return None
    return ParallelSolution(tuple(lines), model.k_max)
