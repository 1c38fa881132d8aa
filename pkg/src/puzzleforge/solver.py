"""Genetic-algorithm solver: kernel-growing crossover with a seven-phase
placement hierarchy, roulette selection, elitism, stall-based termination,
and seeded restarts.

Determinism contract: every random draw comes from a stream derived from
(seed, restart, generation, offspring index), so identical configs produce
bit-identical reports regardless of evaluation order.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import Arrangement, CompatibilityTensor, PuzzleBundle, adjacent_pairs, opposite

ALL_PHASES = ("1.1", "1.2", "2", "3", "4.1", "4.2", "5")
ESSENTIAL_PHASES = frozenset({"4.1", "4.2", "5"})

# Grid deltas per facing direction Top/Right/Bottom/Left.
_DELTA = ((-1, 0), (0, 1), (1, 0), (0, -1))


@dataclass(frozen=True)
class GaConfig:
    population: int = 100
    elitism: int = 1
    stall_generations: int = 50
    alpha0: float = 0.8
    skip_phase1_prob: float = 0.10
    skip_phase23_prob: float = 0.20
    restarts: int = 1
    seed: int = 0
    dims_mode: str = "known"  # "known" | "unknown"
    disabled_phases: frozenset = frozenset()

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0.0 < self.alpha0 < 1.0:
            raise ValueError("alpha0 must lie in (0, 1)")
        for p in (self.skip_phase1_prob, self.skip_phase23_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("skip probabilities must lie in [0, 1]")
        if self.dims_mode not in ("known", "unknown"):
            raise ValueError("dims_mode must be 'known' or 'unknown'")
        unknown = set(self.disabled_phases) - set(ALL_PHASES)
        if unknown:
            raise ValueError(f"unknown phases: {sorted(unknown)}")


def ablate(cfg: GaConfig, disabled_phases) -> GaConfig:
    """Config whose crossover skips the given phases entirely; the greedy
    and random fallback phases (4.x, 5) cannot be disabled."""
    disabled = frozenset(str(p) for p in disabled_phases)
    if disabled & ESSENTIAL_PHASES:
        raise ValueError("phases 4 and 5 are essential and cannot be disabled")
    if disabled - set(ALL_PHASES):
        raise ValueError(f"unknown phases: {sorted(disabled - set(ALL_PHASES))}")
    return replace(cfg, disabled_phases=disabled)


@dataclass
class SolverReport:
    best_arrangement: Arrangement
    best_fitness: float
    best_restart: int
    fitness_traces: list  # per restart: best fitness per generation
    phase_counts: dict  # phase label -> placements across the whole run
    generations: list  # per restart generation count
    config: GaConfig

    def to_dict(self) -> dict:
        a = self.best_arrangement
        return {
            "best_fitness": self.best_fitness,
            "best_restart": self.best_restart,
            "rows": a.rows,
            "cols": a.cols,
            "cells": {
                str(pid): [r, c, 90 * o]
                for pid, (r, c, o) in sorted(a.cells.items())
            },
            "fitness_traces": self.fitness_traces,
            "phase_counts": {k: self.phase_counts.get(k, 0) for k in ALL_PHASES},
            "generations": self.generations,
            "config": {
                "population": self.config.population,
                "elitism": self.config.elitism,
                "stall_generations": self.config.stall_generations,
                "alpha0": self.config.alpha0,
                "skip_phase1_prob": self.config.skip_phase1_prob,
                "skip_phase23_prob": self.config.skip_phase23_prob,
                "restarts": self.config.restarts,
                "seed": self.config.seed,
                "dims_mode": self.config.dims_mode,
                "disabled_phases": sorted(self.config.disabled_phases),
            },
        }


def fitness(a: Arrangement, t: CompatibilityTensor) -> float:
    """Sum of the (symmetric) boundary scores, one term per boundary."""
    if not t.normalized or not t.symmetric:
        raise ValueError("fitness requires a normalized, symmetric tensor")
    total = 0.0
    for p, pe, q, qe in adjacent_pairs(a):
        total += t.score(p, pe, q, qe)
    return total


class SolverTables:
    """Per-tensor lookups shared by all crossovers: raw scores, the top-two
    ranked candidates per (piece, edge), and the best-buddy map."""

    def __init__(self, t: CompatibilityTensor):
        self.tensor = t
        self.n = t.n
        self.puzzle_type = t.puzzle_type
        self.scores = t.scores
        off_diag = ~np.eye(t.n, dtype=bool)
        self.sentinel = float(
            t.scores[np.broadcast_to(off_diag[:, None, :], t.scores.shape)].min()
        ) if t.n > 1 else 0.0
        self.ranked = {}  # (piece, edge) -> ((cand, cand_edge, score), ...)
        best = {}
        for a in range(t.n):
            for ae in range(4):
                cands = []
                for ce in range(4):
                    ri = t.rel_index(ae, ce)
                    if ri is None:
                        continue
                    row = t.scores[a, ri]
                    for c in range(t.n):
                        if c == a:
                            continue
                        s = row[c]
                        if s > self.sentinel:
                            cands.append((-s, c, ce))
                cands.sort()
                top = tuple((c, ce, -negs) for negs, c, ce in cands[:2])
                self.ranked[(a, ae)] = top
                if top:
                    best[(a, ae)] = (top[0][0], top[0][1])
        self.best_buddy = {}
        for key, val in best.items():
            if best.get(val) == key:
                self.best_buddy[key] = val

    def score(self, a, ae, c, ce) -> float:
        ri = self.tensor.rel_index(ae, ce)
        if ri is None:
            return self.sentinel
        return float(self.scores[a, ri, c])


class _ParentView:
    """Adjacency structure of one parent plus its per-piece average scores
    and the chromosome-mean boundary score."""

    def __init__(self, a: Arrangement, tables: SolverTables, fit: float):
        self.fitness = fit
        n = len(a.cells)
        self.neighbors = [[None] * 4 for _ in range(n)]
        sums = np.zeros(n)
        counts = np.zeros(n)
        boundaries = 0
        for p, pe, q, qe in adjacent_pairs(a):
            self.neighbors[p][pe] = (q, qe)
            self.neighbors[q][qe] = (p, pe)
            s = tables.score(p, pe, q, qe)
            sums[p] += s
            sums[q] += s
            counts[p] += 1
            counts[q] += 1
            boundaries += 1
        with np.errstate(invalid="ignore"):
            self.piece_score = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        self.c_mean = (sums.sum() / 2.0) / boundaries if boundaries else 0.0


def _allowed_shapes(n: int, puzzle_type: int, dims_mode: str, known_dims):
    if dims_mode == "known":
        if known_dims is None:
            raise ValueError("known dims_mode requires bundle dimensions")
        r, c = known_dims
        shapes = {(r, c)}
        if puzzle_type == 2:
            shapes.add((c, r))
        return tuple(sorted(shapes))
    shapes = set()
    for r in range(1, n + 1):
        if n % r == 0:
            shapes.add((r, n // r))
    return tuple(sorted(shapes))


def most_square_dims(n: int):
    best = (1, n)
    for r in range(1, int(np.sqrt(n)) + 1):
        if n % r == 0:
            best = (r, n // r)
    return best


class _Kernel:
    """Growing connected partial placement with its free boundary."""

    def __init__(self, n: int, shapes):
        self.n = n
        self.shapes = shapes
        self.placed = {}  # (r, c) -> (pid, orient)
        self.used = [False] * n
        self.count = 0
        self.bbox = None  # (min_r, max_r, min_c, max_c)
        self.boundary = []  # sorted list of open slots
        self._boundary_set = set()

    def fits(self, pos) -> bool:
        r, c = pos
        if self.bbox is None:
            return True
        min_r, max_r, min_c, max_c = self.bbox
        h = max(max_r, r) - min(min_r, r) + 1
        w = max(max_c, c) - min(min_c, c) + 1
        return any(sr >= h and sc >= w for sr, sc in self.shapes)

    def place(self, pos, pid: int, orient: int) -> None:
        r, c = pos
        self.placed[pos] = (pid, orient)
        self.used[pid] = True
        self.count += 1
        if self.bbox is None:
            self.bbox = (r, r, c, c)
        else:
            min_r, max_r, min_c, max_c = self.bbox
            self.bbox = (min(min_r, r), max(max_r, r), min(min_c, c), max(max_c, c))
        if pos in self._boundary_set:
            self._boundary_set.remove(pos)
            self.boundary.remove(pos)
        for dr, dc in _DELTA:
            npos = (r + dr, c + dc)
            if npos not in self.placed and npos not in self._boundary_set:
                self._boundary_set.add(npos)
                insort(self.boundary, npos)

    def arrangement(self) -> Arrangement:
        min_r, max_r, min_c, max_c = self.bbox
        cells = {
            pid: (r - min_r, c - min_c, o)
            for (r, c), (pid, o) in self.placed.items()
        }
        return Arrangement(cells, max_r - min_r + 1, max_c - min_c + 1)


def crossover(
    parent_a: Arrangement,
    parent_b: Arrangement,
    tables: SolverTables,
    cfg: GaConfig,
    rng: np.random.Generator,
    phase_counts: Optional[dict] = None,
    fitness_a: Optional[float] = None,
    fitness_b: Optional[float] = None,
) -> Arrangement:
    """Grow an offspring from a random seed piece, scanning the placement
    phases in order and taking the first that yields a legal placement.
    Skip draws happen once per placement attempt."""
    t = tables.tensor
    fa = fitness(parent_a, t) if fitness_a is None else fitness_a
    fb = fitness(parent_b, t) if fitness_b is None else fitness_b
    va = _ParentView(parent_a, tables, fa)
    vb = _ParentView(parent_b, tables, fb)
    high, low = (va, vb) if fa >= fb else (vb, va)
    puzzle_type = tables.puzzle_type
    n = tables.n
    shapes = _allowed_shapes(
        n,
        puzzle_type,
        cfg.dims_mode,
        (parent_a.rows, parent_a.cols) if cfg.dims_mode == "known" else None,
    )
    kernel = _Kernel(n, shapes)
    disabled = cfg.disabled_phases
    seed_piece = int(rng.integers(0, n))
    kernel.place((0, 0), seed_piece, 0)

    def slot_contacts(pos):
        """(kernel piece, its facing edge, direction from kernel piece to
        slot) for every placed neighbor of an open slot, in direction order."""
        r, c = pos
        out = []
        for d, (dr, dc) in enumerate(_DELTA):
            npos = (r + dr, c + dc)
            entry = kernel.placed.get(npos)
            if entry is not None:
                k, omega = entry
                ek = (opposite(d) - omega) % 4
                out.append((k, ek, d))
        return out

    def parent_suggestion(view, k, ek, d):
        nb = view.neighbors[k][ek]
        if nb is None:
            return None
        x, ex = nb
        if kernel.used[x]:
            return None
        omega_x = (d - ex) % 4
        if puzzle_type == 1 and omega_x != 0:
            return None
        return x, omega_x, ex

    def phase_parent(view, threshold=None, buddy=False):
        for pos in list(kernel.boundary):
            if not kernel.fits(pos):
                continue
            for k, ek, d in slot_contacts(pos):
                sug = parent_suggestion(view, k, ek, d)
                if sug is None:
                    continue
                x, omega_x, ex = sug
                if threshold is not None and not view.piece_score[x] > threshold:
                    continue
                if buddy and tables.best_buddy.get((k, ek)) != (x, ex):
                    continue
                return pos, x, omega_x
        return None

    def phase_agreement():
        for pos in list(kernel.boundary):
            if not kernel.fits(pos):
                continue
            for k, ek, d in slot_contacts(pos):
                sa = parent_suggestion(va, k, ek, d)
                if sa is None:
                    continue
                sb = parent_suggestion(vb, k, ek, d)
                if sb is None or sa[:2] != sb[:2]:
                    continue
                return pos, sa[0], sa[1]
        return None

    def phase_ranked(rank):
        for pos in list(kernel.boundary):
            if not kernel.fits(pos):
                continue
            for k, ek, d in slot_contacts(pos):
                cands = tables.ranked[(k, ek)]
                if len(cands) <= rank:
                    continue
                x, ex, _ = cands[rank]
                if kernel.used[x]:
                    continue
                omega_x = (d - ex) % 4
                if puzzle_type == 1 and omega_x != 0:
                    continue
                return pos, x, omega_x
        return None

    def phase_random():
        remaining = [pid for pid in range(n) if not kernel.used[pid]]
        x = int(remaining[rng.integers(0, len(remaining))])
        slots = [pos for pos in kernel.boundary if kernel.fits(pos)]
        pos = slots[int(rng.integers(0, len(slots)))]
        omega = int(rng.integers(0, 4)) if puzzle_type == 2 else 0
        return pos, x, omega

    while kernel.count < n:
        skip1 = rng.random() < cfg.skip_phase1_prob
        skip23 = rng.random() < cfg.skip_phase23_prob
        placement = None
        label = None
        if not skip1:
            if "1.1" not in disabled:
                placement = phase_parent(high, threshold=max(cfg.alpha0, high.c_mean))
                label = "1.1"
            if placement is None and "1.2" not in disabled:
                placement = phase_parent(low, threshold=max(cfg.alpha0, low.c_mean))
                label = "1.2"
        if placement is None and not skip23:
            if "2" not in disabled:
                placement = phase_agreement()
                label = "2"
            if placement is None and "3" not in disabled:
                for view in (high, low):
                    placement = phase_parent(view, buddy=True)
                    if placement is not None:
                        break
                label = "3"
        if placement is None:
            placement = phase_ranked(0)
            label = "4.1"
        if placement is None:
            placement = phase_ranked(1)
            label = "4.2"
        if placement is None:
            placement = phase_random()
            label = "5"
        pos, pid, omega = placement
        kernel.place(pos, pid, omega)
        if phase_counts is not None:
            phase_counts[label] = phase_counts.get(label, 0) + 1
    return kernel.arrangement()


def random_arrangement(
    n: int,
    puzzle_type: int,
    dims,
    rng: np.random.Generator,
) -> Arrangement:
    rows, cols = dims
    perm = rng.permutation(n)
    orients = rng.integers(0, 4, size=n) if puzzle_type == 2 else np.zeros(n, int)
    cells = {}
    for k in range(n):
        r, c = divmod(k, cols)
        cells[int(perm[k])] = (r, c, int(orients[k]))
    return Arrangement(cells, rows, cols)


def _stream(*path) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(path)))


def evolve(
    bundle: PuzzleBundle,
    t: CompatibilityTensor,
    cfg: GaConfig,
) -> SolverReport:
    """Run the GA for cfg.restarts independent seeded runs and return the
    best-of-all report."""
    if t.n != bundle.n or t.puzzle_type != bundle.puzzle_type:
        raise ValueError("tensor does not match the bundle")
    tables = SolverTables(t)
    if cfg.dims_mode == "known":
        if bundle.known_dims is None:
            raise ValueError("known dims_mode requires bundle dimensions")
        init_dims = bundle.known_dims
    else:
        init_dims = most_square_dims(bundle.n)

    best_overall = None
    best_fit = -np.inf
    best_restart = -1
    traces = []
    generations = []
    phase_counts = {}
    for restart in range(cfg.restarts):
        pop = [
            random_arrangement(
                bundle.n,
                bundle.puzzle_type,
                init_dims,
                _stream(cfg.seed, restart, 0, i, 0),
            )
            for i in range(cfg.population)
        ]
        fits = [fitness(a, t) for a in pop]
        trace = []
        stall = 0
        best_run = max(fits)
        gen = 0
        while stall < cfg.stall_generations:
            gen += 1
            order = np.argsort(fits, kind="stable")[::-1]
            elite_idx = list(order[: cfg.elitism])
            weights = np.asarray(fits, dtype=np.float64)
            weights = weights - weights.min() + 1e-9
            probs = weights / weights.sum()
            sel_rng = _stream(cfg.seed, restart, gen, 0, 1)
            n_children = cfg.population - cfg.elitism
            parent_pairs = [
                (
                    int(sel_rng.choice(cfg.population, p=probs)),
                    int(sel_rng.choice(cfg.population, p=probs)),
                )
                for _ in range(n_children)
            ]
            new_pop = [pop[i] for i in elite_idx]
            new_fits = [fits[i] for i in elite_idx]
            for child_idx, (ia, ib) in enumerate(parent_pairs):
                child_rng = _stream(cfg.seed, restart, gen, child_idx, 2)
                child = crossover(
                    pop[ia],
                    pop[ib],
                    tables,
                    cfg,
                    child_rng,
                    phase_counts=phase_counts,
                    fitness_a=fits[ia],
                    fitness_b=fits[ib],
                )
                new_pop.append(child)
                new_fits.append(fitness(child, t))
            pop, fits = new_pop, new_fits
            gen_best = max(fits)
            trace.append(gen_best)
            if gen_best > best_run:
                best_run = gen_best
                stall = 0
            else:
                stall += 1
        traces.append(trace)
        generations.append(gen)
        idx = int(np.argmax(fits))
        if fits[idx] > best_fit:
            best_fit = float(fits[idx])
            best_overall = pop[idx]
            best_restart = restart
    return SolverReport(
        best_arrangement=best_overall,
        best_fitness=best_fit,
        best_restart=best_restart,
        fitness_traces=traces,
        phase_counts=phase_counts,
        generations=generations,
        config=cfg,
    )
