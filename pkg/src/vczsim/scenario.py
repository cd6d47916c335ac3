"""Problem instances and the precondition checks that gate every run.

A scenario bundles the plant, the obstacle field, the target, the
confinement geometry, and all controller settings. validate() machine-checks
the assumptions the guarantees rest on; a run is refused if any mandatory
check fails, because the verdict would be meaningless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .barriers import ClassKappa, Obstacle, ShrinkSchedule, TargetSet
from .confinement import ConfinementLaw
from .oracles import sphere_sample
from .plant import NEGATIVE_DEFINITE, POSITIVE_DEFINITE, PlantModel, benchmark_plant, sign_class_margin
from .virtual import VirtualSystem

DEFAULT_INVARIANCE_TOL = 1e-3
DEFAULT_CLEARANCE_TOL = 1e-6
DEFAULT_REGULARITY_BAND = 0.5
DEFAULT_UC_CEILING = 100.0

MANDATORY_CHECKS = ("V1", "V2", "V3", "V4", "V5")


class ScenarioInvalidError(RuntimeError):
    """A mandatory precondition check failed; the run was refused."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        failed = [c.check_id for c in report.checks if not c.passed]
        super().__init__(f"scenario failed validation checks: {failed}")


@dataclass(frozen=True)
class Scenario:
    """Complete problem instance plus solver and verdict tolerances."""

    plant: PlantModel
    obstacles: tuple[Obstacle, ...]
    target: TargetSet
    r_c: float
    t_f: float
    x0: np.ndarray
    shrink: ShrinkSchedule
    virtual_system: VirtualSystem
    alphas: tuple[ClassKappa, ...]
    qp_h: np.ndarray
    qp_f: np.ndarray
    confinement: ConfinementLaw
    dt: float
    seed: int = 0
    invariance_tol: float = DEFAULT_INVARIANCE_TOL
    clearance_tol: float = DEFAULT_CLEARANCE_TOL
    regularity_band: float = DEFAULT_REGULARITY_BAND
    u_c_ceiling: float = DEFAULT_UC_CEILING

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "qp_h", np.asarray(self.qp_h, dtype=float))
        object.__setattr__(self, "qp_f", np.asarray(self.qp_f, dtype=float))
        if self.r_c <= 0:
            raise ValueError(f"r_c must be > 0, got {self.r_c}")
        if self.t_f <= 0 or self.dt <= 0:
            raise ValueError("t_f and dt must be > 0")
        if self.x0.shape != (self.plant.n,):
            raise ValueError("initial state dimension disagrees with the plant")
        if self.virtual_system.n != self.plant.n:
            raise ValueError("virtual system dimension disagrees with the plant")
        if len(self.alphas) != self.barrier_count:
            raise ValueError(
                f"need {self.barrier_count} class-K slopes, got {len(self.alphas)}"
            )
        if abs(self.shrink.t_f - self.t_f) > 1e-12 * max(1.0, self.t_f):
            raise ValueError("shrink schedule horizon disagrees with t_f")
        if abs(self.confinement.r_c - self.r_c) > 1e-12 * max(1.0, self.r_c):
            raise ValueError("confinement law radius disagrees with r_c")
        expected_sign = POSITIVE_DEFINITE if self.confinement.gain > 0 else NEGATIVE_DEFINITE
        if self.plant.sign_class != expected_sign:
            raise ValueError("confinement gain sign disagrees with plant sign class")

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def barrier_count(self) -> int:
        return len(self.obstacles) + 1

    def with_overrides(self, **kwargs) -> "Scenario":
        if "t_f" in kwargs and "shrink" not in kwargs:
            kwargs["shrink"] = replace(self.shrink, t_f=kwargs["t_f"])
        return replace(self, **kwargs)


def uniform_alphas(count: int, slope: float = 1.0) -> tuple[ClassKappa, ...]:
    return tuple(ClassKappa(slope) for _ in range(count))


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    worst_margin: float
    worst_time: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def format(self) -> str:
        lines = []
        for c in self.checks:
            at = "" if c.worst_time is None else f" at t = {c.worst_time:.4g}"
            note = f" ({c.detail})" if c.detail else ""
            lines.append(
                f"{c.check_id}: {'pass' if c.passed else 'FAIL'}"
                f"  worst margin {c.worst_margin:.6g}{at}{note}"
            )
        verdict = "all checks passed" if self.all_passed else "VALIDATION FAILED"
        return "\n".join(lines + [verdict])


def workspace_box(scenario: Scenario, pad: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box covering everything the run can touch."""
    pts = [scenario.x0, scenario.target.center]
    for obs in scenario.obstacles:
        for t in np.linspace(0.0, scenario.t_f, 16):
            pts.append(obs.center(t))
    pts = np.array(pts)
    spread = max(
        pad,
        scenario.r_c,
        scenario.target.radius,
        max((o.radius for o in scenario.obstacles), default=0.0),
    )
    return pts.min(axis=0) - spread, pts.max(axis=0) + spread


def validate(scenario: Scenario, time_samples: int = 1001) -> ValidationReport:
    """Machine-check the assumptions behind the reach-avoid guarantee.

    V1 pairwise obstacle separation over the horizon, V2 target clear of
    obstacles at t_f, V3 initial state clear of inflated obstacles, V4 radius
    orderings between target, confinement, and shrink schedule, V5 sampled
    sign-definiteness and finiteness of the plant maps.
    """
    if time_samples < 2:
        raise ValueError("time_samples must be >= 2")
    grid = np.linspace(0.0, scenario.t_f, time_samples)
    obstacles = scenario.obstacles
    centers = [np.array([obs.center(t) for t in grid]) for obs in obstacles]
    checks = []

    # V1: ||b_i(t) - b_j(t)|| >= 2 r_c + r_i + r_j for every pair, all t.
    v1_margin, v1_time = math.inf, None
    for i in range(len(obstacles)):
        for j in range(i + 1, len(obstacles)):
            need = 2 * scenario.r_c + obstacles[i].radius + obstacles[j].radius
            dist = np.linalg.norm(centers[i] - centers[j], axis=1) - need
            k = int(np.argmin(dist))
            if dist[k] < v1_margin:
                v1_margin, v1_time = float(dist[k]), float(grid[k])
    checks.append(CheckResult("V1", v1_margin >= 0, v1_margin, v1_time, "obstacle separation"))

    # V2: at t_f the target ball is obstacle-free.
    v2_margin, v2_detail = math.inf, "target obstacle-free at t_f"
    for obs in obstacles:
        need = obs.radius + scenario.target.radius
        v2_margin = min(
            v2_margin,
            float(np.linalg.norm(obs.center(scenario.t_f) - scenario.target.center) - need),
        )
    checks.append(CheckResult("V2", v2_margin >= 0, v2_margin, scenario.t_f, v2_detail))

    # V3: initial state outside every inflated obstacle.
    v3_margin = math.inf
    for obs in obstacles:
        need = obs.radius + scenario.r_c
        v3_margin = min(v3_margin, float(np.linalg.norm(scenario.x0 - obs.center(0.0)) - need))
    checks.append(CheckResult("V3", v3_margin >= 0, v3_margin, 0.0, "initial clearance"))

    # V4: r_c < r_R, r_end <= r_R - r_c, r_start >= ||x0 - b_R||.
    gap_rc = scenario.target.radius - scenario.r_c
    gap_end = (scenario.target.radius - scenario.r_c) - scenario.shrink.r_end
    gap_start = scenario.shrink.r_start - float(
        np.linalg.norm(scenario.x0 - scenario.target.center)
    )
    v4_margin = min(gap_rc, gap_end, gap_start)
    v4_pass = gap_rc > 0 and gap_end >= 0 and gap_start >= 0
    checks.append(CheckResult("V4", v4_pass, v4_margin, None, "radius orderings"))

    # V5: sampled sign-definiteness of (g+g')/2 and finiteness of f, g, omega.
    lo, hi = workspace_box(scenario)
    v5_margin = sign_class_margin(scenario.plant, lo, hi, 100, scenario.seed)
    omega_ok = all(
        np.all(np.isfinite(scenario.plant.disturbance(t))) for t in grid[:: max(1, time_samples // 50)]
    )
    v5_pass = v5_margin > 0 and omega_ok
    checks.append(CheckResult("V5", v5_pass, v5_margin, None, "plant sign class"))

    return ValidationReport(tuple(checks))


def tightened_unsafe_distance(c, t: float, scenario: Scenario) -> float:
    """Distance of the center to the nearest r_c-inflated obstacle boundary.

    Nonnegative iff c lies outside the tightened unsafe set; +inf with no
    obstacles.
    """
    c = np.asarray(c, dtype=float)
    dist = math.inf
    for obs in scenario.obstacles:
        dist = min(
            dist, float(np.linalg.norm(c - obs.center(t))) - (obs.radius + scenario.r_c)
        )
    return dist


def sphere_containment_violations(
    c, t: float, scenario: Scenario, count: int = 64, seed: int = 0, shrink_factor: float = 1e-9
) -> int:
    """Count sampled points of the confinement sphere that fall inside a true obstacle.

    Samples the sphere of radius r_c(1 - shrink_factor) about c; zero
    violations witnesses that center-level safety transfers to every point
    the true state can occupy.
    """
    pts = sphere_sample(c, scenario.r_c * (1.0 - shrink_factor), count, seed)
    violations = 0
    for obs in scenario.obstacles:
        d = np.linalg.norm(pts - obs.center(t), axis=1)
        violations += int(np.sum(d < obs.radius))
    return violations


def benchmark_scenario(dt: float = 1e-3) -> Scenario:
    """Bundled benchmark: unknown-drift 2-D plant, one static and one moving
    obstacle, target ball of radius 1.1 at [10, 10], horizon 10 s."""
    obstacles = (
        Obstacle.static([1.5, 2.0], 0.5),
        Obstacle.linear([5.0, 5.0], [0.4, -0.4], 1.5),
    )
    return Scenario(
        plant=benchmark_plant(),
        obstacles=obstacles,
        target=TargetSet(np.array([10.0, 10.0]), 1.1),
        r_c=0.5,
        t_f=10.0,
        x0=np.zeros(2),
        shrink=ShrinkSchedule(15.0, 0.5, 10.0),
        virtual_system=VirtualSystem.single_integrator(2),
        alphas=uniform_alphas(3),
        qp_h=np.eye(2),
        qp_f=np.zeros(2),
        confinement=ConfinementLaw(gain=10.0, r_c=0.5),
        dt=dt,
        seed=0,
    )
