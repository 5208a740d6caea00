"""
Execution engine for study plans.

The engine takes a ``StudyPlan`` built by the planning layer and runs its
work items, each one through the worker registered for its type. Items are
independent and pure, so they are dispatched through ``joblib.Parallel``;
joblib returns results in submission order, which makes the emitted rows
identical whatever the number of workers.

    public API -> build StudyPlan -> StudyExecutionEngine.execute -> ordered rows
"""

from typing import Any, Callable, Mapping, Optional
import logging

from joblib import Parallel, delayed

from .lattice_errors import InvalidParameter
from .lattice_planner import StudyPlan, WorkItem

Worker = Callable[[WorkItem], dict[str, Any]]


class StudyExecutionEngine:
    """
    Runs study plans, in parallel when asked to.
    """

    def __init__(
        self,
        workers: Mapping[str, Worker],
        n_jobs: int = 1,
        backend: Optional[str] = None,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        """
        Attributes
        ----------
        workers:
            Mapping from work-item type to the module-level function that
            computes its row. Workers must be picklable for process backends.
        n_jobs:
            Number of joblib workers. 1 runs sequentially in-process.
        backend:
            Optional joblib backend name; joblib's default when omitted.
        logger:
            Receives one warning per row flagged as not converged.
        """
        if n_jobs < 1:
            raise InvalidParameter(f"n_jobs={n_jobs!r} must be >= 1")
        self.workers = dict(workers)
        self.n_jobs = n_jobs
        self.backend = backend
        self.logger = logger

    def _worker_for(self, item: WorkItem) -> Worker:
        try:
            return self.workers[item.type]
        except KeyError:
            raise ValueError(f"Unsupported work item type: {item.type}") from None

    def execute(self, plan: StudyPlan) -> list[dict[str, Any]]:
        """
        Execute every item of the plan.

        Parameters
        ----------
        plan:
            Study plan to execute.

        Returns
        -------
        list[dict[str, Any]]
            One row per work item, in plan order.
        """
        if plan.is_empty():
            return []

        calls = [delayed(self._worker_for(item))(item) for item in plan.items]
        if self.n_jobs == 1:
            rows = [fn(*args, **kwargs) for fn, args, kwargs in calls]
        else:
            rows = Parallel(n_jobs=self.n_jobs, backend=self.backend)(calls)

        if self.logger is not None:
            for item, row in zip(plan.items, rows):
                if row.get("converged") is False:
                    self.logger.warning(
                        "Work item %d (%s, seed=%d) did not converge (residual=%.3e)",
                        item.index, item.type, item.seed, row.get("residual", float("nan")),
                    )

        return list(rows)
