"""
Planning layer for lattice studies.

This module turns already validated study parameters into an ordered list of
independent work items. The planner does not sample, solve, or write
anything: it only describes *what* must be computed, one item per
(parameter point, seed), in the canonical order results are emitted in.

Typical flow:
    public API -> validate parameters -> build StudyPlan -> execution engine -> ordered rows

Seeds are derived as ``base_seed + k``; the same k reuses the same
realization across parameter points, so sweeps compare like with like.
"""

from dataclasses import dataclass, field
from typing import Any, Iterable, Literal

import numpy as np

from .lattice_solver import SolverConfig

WorkType = Literal["converge", "scale", "subadd"]


@dataclass(slots=True)
class WorkItem:
    """
    One independent unit of a study.

    Attributes
    ----------
    type : WorkType
        Kind of computation the execution engine dispatches on.
    index : int
        Position of the item in the canonical output order.
    seed : int
        Seed of the realization the item works on.
    params : dict[str, Any]
        Parameters of the computation (p, b, g_rho, sizes, solver config...).
    """
    type: WorkType
    index: int
    seed: int
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(slots=True)
class StudyPlan:
    """
    Ordered sequence of work items forming a complete study.
    """
    items: list[WorkItem] = field(default_factory=list)

    def add(self, type: WorkType, seed: int, **params: Any) -> None:
        self.items.append(WorkItem(type=type, index=len(self.items), seed=int(seed), params=params))

    def __len__(self) -> int:
        return len(self.items)

    def is_empty(self) -> bool:
        return not self.items


# -------------------------------------------------------
# |                     Plan builders                   |
# -------------------------------------------------------

def build_convergence_plan(
    *,
    sizes: Iterable[int],
    seeds_per_size: int,
    base_seed: int,
    p: float,
    b: float,
    g_rho: float,
    solver: SolverConfig,
) -> StudyPlan:
    """
    One fixed-length solve per (L, seed), sizes outermost.

    Returns
    -------
    StudyPlan
        ``len(sizes) * seeds_per_size`` items of type ``"converge"``.
    """
    plan = StudyPlan()

    for L in sizes:
        for k in range(seeds_per_size):
            plan.add("converge", base_seed + k, L=int(L), p=p, b=b, g_rho=g_rho, solver=solver)

    return plan


def build_scaling_plan(
    *,
    g_rho_values: Iterable[float],
    seeds: int,
    base_seed: int,
    n: int,
    p: float,
    b: float,
    norm_target: float,
    epsilons: tuple[float, ...],
    solver: SolverConfig,
) -> StudyPlan:
    """
    One fixed-interval-count realization per (g_rho, seed), g_rho outermost.

    Returns
    -------
    StudyPlan
        ``len(g_rho_values) * seeds`` items of type ``"scale"``.
    """
    plan = StudyPlan()

    for g_rho in g_rho_values:
        for k in range(seeds):
            plan.add(
                "scale",
                base_seed + k,
                n=int(n), p=p, b=b, g_rho=float(g_rho),
                norm_target=norm_target, epsilons=tuple(epsilons), solver=solver,
            )

    return plan


def draw_split(L: int, seed: int) -> int:
    """Deterministic split point in [1, L) for a given seed."""
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return int(gen.integers(1, L))


def build_subadditivity_plan(
    *,
    L: int,
    seeds: int,
    base_seed: int,
    p: float,
    b: float,
    g_rho: float,
    split: int | None,
    solver: SolverConfig,
) -> StudyPlan:
    """
    One (realization, split) pair per seed.

    A fixed ``split`` is used for every seed when given; otherwise each seed
    draws its own split point.

    Returns
    -------
    StudyPlan
        ``seeds`` items of type ``"subadd"``.
    """
    plan = StudyPlan()

    for k in range(seeds):
        seed = base_seed + k
        cut = split if split is not None else draw_split(L, seed)
        plan.add("subadd", seed, L=int(L), split=int(cut), p=p, b=b, g_rho=g_rho, solver=solver)

    return plan
