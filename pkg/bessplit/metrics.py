from __future__ import annotations

from pathlib import Path

from prometheus_client import CollectorRegistry, Counter, Histogram, write_to_textfile

HORIZON_BUCKETS = (0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 30.0, 60.0)


class RunMetrics:
    """Solver and plant counters of one run, kept in a private registry."""

    def __init__(self, run_label: str = "run") -> None:
        self.registry = CollectorRegistry(auto_describe=True)
        self.run_label = run_label
        self.lp_solves = Counter(
            "bsplit_lp_solves", "LP relaxations solved", ["run"], registry=self.registry
        )
        self.bnb_nodes = Counter(
            "bsplit_bnb_nodes", "Branch-and-bound nodes created", ["run"], registry=self.registry
        )
        self.simplex_iterations = Counter(
            "bsplit_simplex_iterations", "Simplex pivots and bound flips", ["run"], registry=self.registry
        )
        self.slp_iterations = Counter(
            "bsplit_slp_iterations", "Sequential linearization iterations", ["run"], registry=self.registry
        )
        self.slp_unconverged = Counter(
            "bsplit_slp_unconverged", "Horizons returned without SLP convergence", ["run"],
            registry=self.registry,
        )
        self.ecm_clamps = Counter(
            "bsplit_ecm_clamps", "Setpoints clamped to the deliverable power", ["run"],
            registry=self.registry,
        )
        self.horizon_seconds = Histogram(
            "bsplit_horizon_solve_seconds", "Wall time per horizon solve", ["run"],
            buckets=HORIZON_BUCKETS, registry=self.registry,
        )

    def record_solve(self, node_count: int, lp_count: int, iterations: int) -> None:
        self.bnb_nodes.labels(run=self.run_label).inc(node_count)
        self.lp_solves.labels(run=self.run_label).inc(lp_count)
        self.simplex_iterations.labels(run=self.run_label).inc(iterations)

    def record_slp(self, iterations: int, converged: bool) -> None:
        self.slp_iterations.labels(run=self.run_label).inc(iterations)
        if not converged:
            self.slp_unconverged.labels(run=self.run_label).inc()

    def record_clamp(self) -> None:
        self.ecm_clamps.labels(run=self.run_label).inc()

    def observe_horizon(self, seconds: float) -> None:
        self.horizon_seconds.labels(run=self.run_label).observe(seconds)

    def value(self, name: str) -> float:
        """Current sample value, e.g. ``value("bsplit_lp_solves_total")``."""
        sample = self.registry.get_sample_value(name, {"run": self.run_label})
        return 0.0 if sample is None else sample

    def write(self, path: Path) -> None:
        write_to_textfile(str(path), self.registry)
