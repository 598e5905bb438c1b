"""Data models for the cdd package."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Optional, Sequence

import numpy as np

from .exceptions import InvalidArgumentError

if TYPE_CHECKING:
    from .weightfns import Weighting


ShapeKind = Literal["sphere", "cube", "torus"]
LossKind = Literal["cd_l1", "cd_l2", "hypercd", "weighted_cd"]
ApproxMode = Literal["dominant", "finite_diff"]
OptimizerKind = Literal["sgd", "adam"]
InitPolicy = Literal["jitter", "copy_partial", "uniform_box"]

SHAPE_KINDS: tuple[str, ...] = ("sphere", "cube", "torus")
LOSS_KINDS: tuple[str, ...] = ("cd_l1", "cd_l2", "hypercd", "weighted_cd")
APPROX_MODES: tuple[str, ...] = ("dominant", "finite_diff")
OPTIMIZERS: tuple[str, ...] = ("sgd", "adam")
INIT_POLICIES: tuple[str, ...] = ("jitter", "copy_partial", "uniform_box")

MAX_SEED = 2**64 - 1


def _frozen_array(values, *, dtype=np.float64) -> np.ndarray:
    """Copy ``values`` into a read-only contiguous array."""
    arr = np.array(values, dtype=dtype, copy=True, order="C")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered, non-empty set of finite 3D points.

    Attributes:
        points: Read-only ``(n, 3)`` float64 array of coordinates.
    """
    points: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.points, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise InvalidArgumentError(
                f"point cloud must have shape (n, 3), got {arr.shape}"
            )
        if arr.shape[0] == 0:
            raise InvalidArgumentError("point cloud must contain at least one point")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("point cloud coordinates must be finite")
        object.__setattr__(self, "points", _frozen_array(arr))

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "PointCloud":
        """Build a cloud from any nested sequence of 3-vectors."""
        return cls(np.asarray(points, dtype=np.float64).reshape(-1, 3))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self) -> int:
        return hash(self.points.tobytes())


@dataclass(frozen=True)
class ShapeSpec:
    """Recipe for a synthetic point cloud.

    Attributes:
        kind: Surface to sample (sphere, cube, torus)
        count: Number of points to draw
        seed: 64-bit unsigned seed of the generator
    """
    kind: ShapeKind
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise InvalidArgumentError(
                f"Unknown shape '{self.kind}'. Valid shapes: {', '.join(SHAPE_KINDS)}"
            )
        if self.count < 1:
            raise InvalidArgumentError(f"count must be >= 1, got {self.count}")
        if not 0 <= self.seed <= MAX_SEED:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class CropSpec:
    """Half-space crop that keeps the points lying furthest against ``direction``.

    Attributes:
        direction: Unit 3-vector
        keep_ratio: Fraction of points kept, in (0, 1]
    """
    direction: tuple[float, float, float]
    keep_ratio: float

    def __post_init__(self):
        direction = tuple(float(c) for c in self.direction)
        if len(direction) != 3:
            raise InvalidArgumentError("crop direction must have three components")
        norm = float(np.sqrt(sum(c * c for c in direction)))
        if abs(norm - 1.0) > 1e-9:
            raise InvalidArgumentError(f"crop direction must be a unit vector, norm is {norm}")
        if not 0.0 < self.keep_ratio <= 1.0:
            raise InvalidArgumentError(f"keep_ratio must be in (0, 1], got {self.keep_ratio}")
        object.__setattr__(self, "direction", direction)

    @classmethod
    def toward(cls, direction: Sequence[float], keep_ratio: float) -> "CropSpec":
        """Build a crop spec from any non-zero direction, normalizing it."""
        vec = np.asarray(direction, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise InvalidArgumentError("crop direction must be non-zero")
        return cls(tuple(float(c) for c in vec / norm), keep_ratio)


@dataclass(frozen=True, eq=False)
class NearestAssignment:
    """Nearest-neighbour assignment in both directions between two clouds.

    Attributes:
        forward_dist: Distance from each source point to its nearest target point
        forward_idx: Index into target of that nearest point
        backward_dist: Distance from each target point to its nearest source point
        backward_idx: Index into source of that nearest point
    """
    forward_dist: np.ndarray
    forward_idx: np.ndarray
    backward_dist: np.ndarray
    backward_idx: np.ndarray

    @property
    def forward(self) -> list[tuple[float, int]]:
        """Forward pairs as ``(min_distance, argmin_index)`` tuples."""
        return [(float(d), int(i)) for d, i in zip(self.forward_dist, self.forward_idx)]

    @property
    def backward(self) -> list[tuple[float, int]]:
        """Backward pairs as ``(min_distance, argmin_index)`` tuples."""
        return [(float(d), int(i)) for d, i in zip(self.backward_dist, self.backward_idx)]


@dataclass(frozen=True)
class LossSpec:
    """Which member of the Chamfer distance family to evaluate.

    Attributes:
        kind: cd_l1, cd_l2, hypercd or weighted_cd
        alpha: HyperCD curvature (hypercd only)
        weighting: Weighting function f (weighted_cd only)
        mode_shift: Evaluate f at mode(f) + d instead of d (weighted_cd only)
    """
    kind: LossKind
    alpha: float = 1.0
    weighting: Optional["Weighting"] = None
    mode_shift: bool = True

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise InvalidArgumentError(
                f"Unknown loss '{self.kind}'. Valid losses: {', '.join(LOSS_KINDS)}"
            )
        if self.kind == "hypercd" and not self.alpha > 0:
            raise InvalidArgumentError(f"hypercd alpha must be > 0, got {self.alpha}")
        if self.kind == "weighted_cd" and self.weighting is None:
            raise InvalidArgumentError("weighted_cd requires a weighting function")

    def describe(self) -> str:
        """Render the spec in the command-line loss grammar."""
        if self.kind == "hypercd":
            return f"hypercd:alpha={self.alpha!r}"
        if self.kind == "weighted_cd":
            label = getattr(self.weighting, "label", None)
            if callable(label):
                return f"weighted:{label()}"
            return f"weighted:{self.weighting!r}"
        return self.kind


@dataclass(frozen=True, eq=False)
class LossGradient:
    """Loss value together with its gradient with respect to the predicted points.

    Attributes:
        value: Non-negative loss value
        grad: ``(|pred|, 3)`` array of partial derivatives
    """
    value: float
    grad: np.ndarray


@dataclass(frozen=True)
class DistillConfig:
    """Settings of the gradient-matching search.

    Attributes:
        alpha: HyperCD alpha of the reference curve
        d_max: Largest sampled distance
        step: Sampling step of the distance grid
        approx: How z^(W) is approximated (dominant or finite_diff)
        delta: Forward-difference step of the finite_diff approximation
    """
    alpha: float = 1.0
    d_max: float = 0.01
    step: float = 2e-4
    approx: ApproxMode = "dominant"
    delta: float = 1e-4

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidArgumentError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.step <= self.d_max:
            raise InvalidArgumentError(
                f"step must satisfy 0 < step <= d_max, got step={self.step}, d_max={self.d_max}"
            )
        if not self.delta > 0:
            raise InvalidArgumentError(f"delta must be > 0, got {self.delta}")
        if self.approx not in APPROX_MODES:
            raise InvalidArgumentError(
                f"Unknown approximation '{self.approx}'. Valid: {', '.join(APPROX_MODES)}"
            )

    def grid(self) -> np.ndarray:
        """Sampled distances ``0, step, 2*step, ..., d_max``."""
        n = int(round(self.d_max / self.step))
        if abs(n * self.step - self.d_max) <= 1e-9 * self.d_max:
            return np.linspace(0.0, self.d_max, n + 1)
        return self.step * np.arange(int(np.floor(self.d_max / self.step)) + 1)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "alpha": self.alpha,
            "d_max": self.d_max,
            "step": self.step,
            "approx": self.approx,
            "delta": self.delta,
        }


@dataclass(frozen=True, eq=False)
class ReferenceDistribution:
    """Sampled reference distance distribution ``(d, p(d))``.

    Attributes:
        d_values: Strictly increasing sampled distances
        p_values: Probabilities, summing to one
    """
    d_values: np.ndarray
    p_values: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_values, dtype=np.float64)
        p = np.asarray(self.p_values, dtype=np.float64)
        if d.ndim != 1 or d.shape != p.shape or d.size == 0:
            raise InvalidArgumentError("distribution needs equally long, non-empty d and p")
        if np.any(np.diff(d) <= 0) or d[0] < 0:
            raise InvalidArgumentError("distribution distances must be >= 0 and strictly increasing")
        if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
            raise InvalidArgumentError("distribution probabilities must be >= 0 and sum to 1")
        object.__setattr__(self, "d_values", _frozen_array(d))
        object.__setattr__(self, "p_values", _frozen_array(p))


@dataclass(frozen=True, eq=False)
class GradientWeightCurve:
    """Gradient weight z sampled on a distance grid.

    Attributes:
        d_values: Sampled distances
        z_values: Gradient weight at each distance
        rescaled: Whether the curve has been divided by its maximum
    """
    d_values: np.ndarray
    z_values: np.ndarray
    rescaled: bool = False

    def __post_init__(self):
        d = np.asarray(self.d_values, dtype=np.float64)
        z = np.asarray(self.z_values, dtype=np.float64)
        if d.shape != z.shape or d.ndim != 1:
            raise InvalidArgumentError("curve needs equally long d and z arrays")
        if self.rescaled and (z.size == 0 or abs(float(np.max(z)) - 1.0) > 1e-12):
            raise InvalidArgumentError("a rescaled curve must peak at 1")
        object.__setattr__(self, "d_values", _frozen_array(d))
        object.__setattr__(self, "z_values", _frozen_array(z))


@dataclass(frozen=True, eq=False)
class DistillResult:
    """Outcome of the grid search for one weighting family.

    Attributes:
        kind: Weighting family
        best_params: Winning parameters (empty for landau)
        objective: Matching objective at ``best_params``
        reference_curve: Rescaled HyperCD curve
        fitted_curve: Rescaled candidate curve at ``best_params``
        approx: Approximation used for the candidate curve
        evaluated: Number of grid points with a valid objective
    """
    kind: str
    best_params: dict[str, float]
    objective: float
    reference_curve: GradientWeightCurve
    fitted_curve: GradientWeightCurve
    approx: ApproxMode = "dominant"
    evaluated: int = 0


@dataclass
class TrainConfig:
    """Hyperparameters of a free-point completion run.

    Attributes:
        loss: Loss optimized by the run
        iters: Number of optimizer steps
        lr: Learning rate
        optimizer: sgd or adam
        seed: Seed for initialization
        eval_every: Log a row every this many iterations
        output_size: Number of free points (None: size of the ground truth)
        init: Initialization policy (jitter, copy_partial, uniform_box)
        jitter_sigma: Standard deviation of the jitter policy
        tau: F1 distance threshold
        snapshot_every: Keep a copy of the points every this many iterations
    """
    loss: LossSpec
    iters: int = 2000
    lr: float = 0.01
    optimizer: OptimizerKind = "adam"
    seed: int = 0
    eval_every: int = 10
    output_size: Optional[int] = None
    init: InitPolicy = "jitter"
    jitter_sigma: float = 0.05
    tau: float = 0.01
    snapshot_every: Optional[int] = None

    def __post_init__(self):
        if self.iters < 1:
            raise InvalidArgumentError(f"iters must be >= 1, got {self.iters}")
        if not self.lr > 0:
            raise InvalidArgumentError(f"lr must be > 0, got {self.lr}")
        if self.optimizer not in OPTIMIZERS:
            raise InvalidArgumentError(
                f"Unknown optimizer '{self.optimizer}'. Valid: {', '.join(OPTIMIZERS)}"
            )
        if self.init not in INIT_POLICIES:
            raise InvalidArgumentError(
                f"Unknown init policy '{self.init}'. Valid: {', '.join(INIT_POLICIES)}"
            )
        if self.eval_every < 1:
            raise InvalidArgumentError(f"eval_every must be >= 1, got {self.eval_every}")
        if self.output_size is not None and self.output_size < 1:
            raise InvalidArgumentError(f"output_size must be >= 1, got {self.output_size}")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise InvalidArgumentError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        if not 0 <= self.seed <= MAX_SEED:
            raise InvalidArgumentError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "loss": self.loss.describe(),
            "mode_shift": self.loss.mode_shift,
            "iters": self.iters,
            "lr": self.lr,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "eval_every": self.eval_every,
            "output_size": self.output_size,
            "init": self.init,
            "jitter_sigma": self.jitter_sigma,
            "tau": self.tau,
            "snapshot_every": self.snapshot_every,
        }


@dataclass(frozen=True, eq=False)
class FreePointModel:
    """The trainable parameters of a run: the output points themselves.

    Attributes:
        points: ``(output_size, 3)`` coordinates
        init: Policy the points were initialized with
    """
    points: np.ndarray
    init: InitPolicy = "jitter"

    def to_cloud(self) -> PointCloud:
        """Current points as an immutable cloud."""
        return PointCloud(self.points)


@dataclass(frozen=True)
class LogRow:
    """One logged evaluation of a training run."""
    iter: int
    loss: float
    grad_norm: float
    l1cd: float
    l2cd: float
    f1: float
    elapsed_ms: float

    def values(self) -> tuple:
        """Values in TrainLog column order."""
        return (self.iter, self.loss, self.grad_norm, self.l1cd, self.l2cd, self.f1, self.elapsed_ms)


@dataclass
class TrainLog:
    """Convergence record of a training run.

    Attributes:
        rows: Logged rows, strictly increasing in ``iter``
    """
    rows: list[LogRow] = field(default_factory=list)

    COLUMNS = ("iter", "loss", "grad_norm", "l1cd", "l2cd", "f1", "elapsed_ms")

    def append(self, row: LogRow) -> None:
        """Add a row, keeping iterations strictly increasing."""
        if self.rows and row.iter <= self.rows[-1].iter:
            raise InvalidArgumentError(
                f"log rows must be strictly increasing, got {row.iter} after {self.rows[-1].iter}"
            )
        self.rows.append(row)

    @property
    def first(self) -> LogRow:
        return self.rows[0]

    @property
    def last(self) -> LogRow:
        return self.rows[-1]


@dataclass
class RunManifest:
    """Replayable record written next to every command's outputs.

    Attributes:
        command: Name of the command (gen, eval, curves, distill, train, compare)
        argv: Exact argument list the command was invoked with
        config: Fully resolved configuration
        seed: Seed used by the command, if any
        version: Version of the tool that produced the outputs
        outputs: Names of the files written, relative to the output directory
    """
    command: str
    argv: list[str]
    config: dict
    version: str
    seed: Optional[int] = None
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "command": self.command,
            "argv": list(self.argv),
            "config": self.config,
            "seed": self.seed,
            "version": self.version,
            "outputs": list(self.outputs),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        """Create from dictionary during JSON deserialization."""
        return cls(
            command=data["command"],
            argv=list(data["argv"]),
            config=data.get("config", {}),
            version=data.get("version", ""),
            seed=data.get("seed"),
            outputs=list(data.get("outputs", [])),
        )
