"""Task windows per worker and the catalog of worker teams able to cover a line."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .core import Instance, bits, mask_of

DEFAULT_ENTRY_LIMIT = 10**6


@dataclass(frozen=True)
class TaskSet:
    """Tasks one worker can take at a single station.

    ``start`` marks the window generated with no incompatible task done
    upstream; only such windows can open a line.
    """

    mask: int
    start: bool = False

    @property
    def tasks(self) -> frozenset:
        return frozenset(bits(self.mask))

    def __contains__(self, task: int) -> bool:
        return bool(self.mask >> task & 1)

    def label(self) -> str:
        items = (["∅"] if self.start else []) + [str(i + 1) for i in bits(self.mask)]
        return "{" + ",".join(items) + "}"


@dataclass(frozen=True)
class TaskWindowStep:
    """One iteration of the window generator, kept for auditing."""

    done_upstream: int
    window: int


def _window(inst: Instance, w: int, done_upstream: int) -> int:
    incompatible = inst.incompatible[w]
    before = 0
    for j in bits(done_upstream):
        before |= inst.ancestors[j]
    after = 0
    for j in bits(incompatible & ~done_upstream):
        after |= inst.descendants[j]
    return inst.all_tasks & ~incompatible & ~before & ~after


def task_window_steps(inst: Instance, w: int) -> list:
    """Iterate the window generator for worker ``w`` and return every step.

    Starting with nothing done upstream, each step keeps the feasible tasks
    that precede no task assumed done upstream and follow no incompatible task
    still pending. The next upstream set is the incompatible tasks that are
    immediate successors of the window.
    """
    incompatible = inst.incompatible[w]
    steps = []
    seen = set()
    done = 0
    for _ in range(inst.n_tasks):
        s = _window(inst, w, done)
        steps.append(TaskWindowStep(done, s))
        seen.add(done)
        nxt = 0
        for i in bits(incompatible):
            if inst.pred_mask[i] & s:
                nxt |= 1 << i
        if nxt == 0 or nxt in seen:
            break
        done = nxt
    return steps


def task_sets(inst: Instance, w: int) -> list:
    out = []
    masks = set()
    for k, step in enumerate(task_window_steps(inst, w)):
        if step.window == 0 or step.window in masks:
            continue
        masks.add(step.window)
        out.append(TaskSet(step.window, start=(k == 0)))
    return out


def task_set_catalog(inst: Instance) -> list:
    return [task_sets(inst, w) for w in range(inst.n_workers)]


@dataclass(frozen=True)
class CatalogEntry:
    choices: tuple  # ((worker, TaskSet), ...) sorted by worker

    @property
    def team(self) -> frozenset:
        return frozenset(w for w, _ in self.choices)

    @property
    def team_mask(self) -> int:
        return mask_of(w for w, _ in self.choices)

    def label(self, inst: Optional[Instance] = None) -> str:
        name = (lambda w: inst.workers[w]) if inst is not None else (lambda w: f"w{w + 1}")
        return "workers: " + ",".join(name(w) for w, _ in self.choices) + " | sets: " + ";".join(
            s.label() for _, s in self.choices
        )


@dataclass
class WorkerSetCatalog:
    entries: list
    n_workers: int
    overflow: bool = False
    teams: list = field(init=False)

    def __post_init__(self):
        seen = {}
        for e in self.entries:
            seen.setdefault(e.team_mask, e.team)
        self._masks = list(seen)
        self._mask_set = set(seen)
        self.teams = list(seen.values())

    @classmethod
    def from_teams(cls, teams: Iterable[Iterable[int]], n_workers: int) -> "WorkerSetCatalog":
        """Catalog without window witnesses, for hand-built neighbourhood tests."""
        entries = [CatalogEntry(tuple((w, TaskSet(0)) for w in sorted(t))) for t in teams]
        return cls(entries, n_workers)

    def __len__(self) -> int:
        return len(self.entries)

    def contains(self, team: Iterable[int]) -> bool:
        return mask_of(team) in self._mask_set

    def covers(self, team: Iterable[int]) -> bool:
        """True when ``team`` includes some catalogued team."""
        m = mask_of(team)
        if m in self._mask_set:
            return True
        return any(t & ~m == 0 for t in self._masks)

    def dump(self, inst: Optional[Instance] = None) -> str:
        return "".join(e.label(inst) + "\n" for e in self.entries)


def _canonical(choices: dict) -> tuple:
    return tuple(sorted(choices.items(), key=lambda kv: kv[0]))


def worker_sets(inst: Instance, catalog: Optional[Sequence[list]] = None,
                limit: int = DEFAULT_ENTRY_LIMIT) -> WorkerSetCatalog:
    """Enumerate every choice of at most one window per worker that covers all tasks.

    Backtracking starts from the artificial first-station task (a window with
    the start marker), then repeatedly covers the lowest-index uncovered task
    with a window of a worker not used yet. Each covering found is recorded
    together with all its extensions by windows of the remaining workers.
    """
    if catalog is None:
        catalog = task_set_catalog(inst)
    m = inst.n_workers
    full = inst.all_tasks
    # union of all windows of workers w.. m-1, for pruning
    found = {}
    overflow = False

    class _Stop(Exception):
        pass

    def record(choices):
        nonlocal overflow
        key = _canonical(choices)
        if key not in found:
            if len(found) >= limit:
                overflow = True
                raise _Stop
            found[key] = None

    def extend(choices, w):
        # all supersets obtained by adding windows of workers >= w not yet used
        if w == m:
            record(choices)
            return
        extend(choices, w + 1)
        if w in choices:
            return
        for s in catalog[w]:
            choices[w] = s
            extend(choices, w + 1)
            del choices[w]

    def reachable(choices):
        r = 0
        for w in range(m):
            if w not in choices:
                for s in catalog[w]:
                    r |= s.mask
        return r

    def cover(choices, covered):
        if covered == full:
            extend(choices, 0)
            return
        if covered | reachable(choices) != full:
            return
        low = covered ^ full
        i = (low & -low).bit_length() - 1
        for w in range(m):
            if w in choices:
                continue
            for s in catalog[w]:
                if i in s:
                    choices[w] = s
                    cover(choices, covered | s.mask)
                    del choices[w]

    try:
        for w in range(m):
            for s in catalog[w]:
                if s.start:
                    cover({w: s}, s.mask)
    except _Stop:
        pass
    entries = [CatalogEntry(k) for k in found]
    entries.sort(key=lambda e: (len(e.choices), tuple(w for w, _ in e.choices),
                                tuple(catalog[w].index(s) for w, s in e.choices)))
    return WorkerSetCatalog(entries, m, overflow)
