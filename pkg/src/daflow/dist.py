"""Finite joint, marginal, and conditional distributions on a grid.

Everything lives on an nx-by-ny grid under counting measure. A joint density
is a dense matrix of cell probabilities, a marginal is a vector on one axis,
and a conditional kernel holds one probability vector per conditioning slice.
All types validate on construction and are immutable afterwards, so instances
can be shared freely across threads; every operation here is a pure function.

Normalization policy, applied by every constructor:
  - entries must be finite and nonnegative (NaN, inf, and negative mass are
    rejected outright);
  - a total within 1e-12 of 1 is accepted as normalized;
  - a total off by more than 1e-12 but at most 1e-9 is silently renormalized
    (floating drift from upstream arithmetic);
  - anything further off is rejected.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from ._fsio import atomic_write_text
from ._numeric import readonly, stable_sum
from .errors import DimensionMismatch, DistributionError, PositivityViolation

SUM_TOL = 1e-12
RENORM_TOL = 1e-9
COMPOSE_TOL = 1e-12


class Axis(enum.Enum):
    """The two coordinate axes of the grid."""

    X = "x"
    Y = "y"


class Direction(enum.Enum):
    """Orientation of a conditional kernel."""

    X_GIVEN_Y = "x_given_y"
    Y_GIVEN_X = "y_given_x"

    @property
    def conditioning_axis(self) -> Axis:
        """The axis whose value is held fixed by this kernel."""
        return Axis.Y if self is Direction.X_GIVEN_Y else Axis.X

    @property
    def refreshed_axis(self) -> Axis:
        """The axis the kernel assigns probabilities over."""
        return Axis.X if self is Direction.X_GIVEN_Y else Axis.Y


def _validated_pmf(a: np.ndarray, what: str) -> np.ndarray:
    """Apply the module normalization policy, returning a read-only copy."""
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise DistributionError(f"{what} contains NaN or infinite entries")
    if np.any(a < 0.0):
        raise DistributionError(f"{what} contains negative mass")
    total = stable_sum(a)
    if abs(total - 1.0) > RENORM_TOL:
        raise DistributionError(f"{what} sums to {total!r}, too far from 1 to renormalize")
    if abs(total - 1.0) > SUM_TOL:
        a = a / total
    return readonly(a)


@dataclass(frozen=True, eq=False)
class JointDensity:
    """A probability mass function on an nx-by-ny grid.

    ``w[i, j]`` is the mass of cell ``(i, j)``. Rows index the X axis and
    columns the Y axis.
    """

    w: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DistributionError(f"joint weights must be a nonempty 2-D matrix, got shape {w.shape}")
        object.__setattr__(self, "w", _validated_pmf(w, "joint density"))

    @property
    def nx(self) -> int:
        return self.w.shape[0]

    @property
    def ny(self) -> int:
        return self.w.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.w.shape

    @property
    def min_entry(self) -> float:
        return float(self.w.min())

    @property
    def strictly_positive(self) -> bool:
        return bool(self.w.min() > 0.0)


@dataclass(frozen=True, eq=False)
class MarginalDensity:
    """A probability mass function on one axis of the grid."""

    axis: Axis
    v: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.v, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] < 1:
            raise DistributionError(f"marginal weights must be a nonempty vector, got shape {v.shape}")
        object.__setattr__(self, "v", _validated_pmf(v, f"{self.axis.value}-marginal"))

    def __len__(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """A family of conditional pmfs, one per conditioning slice.

    The matrix ``k`` always has the joint's nx-by-ny shape. For
    ``X_GIVEN_Y`` each column is a pmf over x; for ``Y_GIVEN_X`` each row is
    a pmf over y. ``defined_mask[s]`` is False for slices whose conditioning
    event had zero mass in the source joint; those slices carry the uniform
    pmf as a placeholder.
    """

    direction: Direction
    k: np.ndarray
    defined_mask: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.k, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] < 1 or k.shape[1] < 1:
            raise DistributionError(f"kernel must be a nonempty 2-D matrix, got shape {k.shape}")
        if not np.all(np.isfinite(k)):
            raise DistributionError("kernel contains NaN or infinite entries")
        if np.any(k < 0.0):
            raise DistributionError("kernel contains negative mass")
        mask = np.asarray(self.defined_mask, dtype=bool)
        if mask.shape != (self.n_slices_for(k.shape),):
            raise DistributionError(
                f"defined_mask has shape {mask.shape}, expected ({self.n_slices_for(k.shape)},)"
            )
        sums = k.sum(axis=0) if self.direction is Direction.X_GIVEN_Y else k.sum(axis=1)
        err = np.abs(sums - 1.0)
        if np.any(err > RENORM_TOL):
            raise DistributionError("a kernel slice sums too far from 1 to renormalize")
        if np.any(err > SUM_TOL):
            k = k / sums[None, :] if self.direction is Direction.X_GIVEN_Y else k / sums[:, None]
        object.__setattr__(self, "k", readonly(k))
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "defined_mask", mask)

    def n_slices_for(self, shape: tuple[int, int]) -> int:
        return shape[1] if self.direction is Direction.X_GIVEN_Y else shape[0]

    @property
    def n_slices(self) -> int:
        return self.n_slices_for(self.k.shape)

    @property
    def shape(self) -> tuple[int, int]:
        return self.k.shape

    def slice_pmf(self, index: int) -> np.ndarray:
        """The conditional pmf for one value of the conditioning axis."""
        if self.direction is Direction.X_GIVEN_Y:
            return self.k[:, index]
        return self.k[index, :]


@dataclass(frozen=True, eq=False)
class Target:
    """A joint density bundled with its conditionals and marginals.

    Construct through :func:`make_target`, which derives every field from
    the joint. The constructor re-checks that composing each marginal with
    its matching conditional reproduces the joint, so a hand-assembled
    inconsistent Target is rejected.
    """

    joint: JointDensity
    cond_x_given_y: ConditionalKernel
    cond_y_given_x: ConditionalKernel
    marg_x: MarginalDensity
    marg_y: MarginalDensity
    strictly_positive: bool

    def __post_init__(self) -> None:
        nx, ny = self.joint.shape
        if self.cond_x_given_y.shape != (nx, ny) or self.cond_y_given_x.shape != (nx, ny):
            raise DimensionMismatch("conditional kernel shape does not match the joint")
        if len(self.marg_x) != nx or len(self.marg_y) != ny:
            raise DimensionMismatch("marginal length does not match the joint")
        if self.strictly_positive != self.joint.strictly_positive:
            raise DistributionError("strictly_positive flag contradicts the joint's minimum entry")
        for m, k in ((self.marg_y, self.cond_x_given_y), (self.marg_x, self.cond_y_given_x)):
            recomposed, _ = compose_with_drift(m, k)
            if float(np.max(np.abs(recomposed.w - self.joint.w))) > COMPOSE_TOL:
                raise DistributionError("marginal and conditional do not recompose to the joint")

    @property
    def nx(self) -> int:
        return self.joint.nx

    @property
    def ny(self) -> int:
        return self.joint.ny

    @property
    def shape(self) -> tuple[int, int]:
        return self.joint.shape


def marginal(p: JointDensity, axis: Axis) -> MarginalDensity:
    """Sum the joint over the other axis."""
    v = p.w.sum(axis=1) if axis is Axis.X else p.w.sum(axis=0)
    return MarginalDensity(axis, v)


def conditional(p: JointDensity, direction: Direction) -> ConditionalKernel:
    """Divide the joint by the conditioning marginal, slice by slice.

    Slices whose conditioning event has zero mass cannot be normalized; they
    are filled with the uniform pmf and flagged False in ``defined_mask``.
    Only target conditionals must be everywhere defined, and targets are
    validated separately, so this is a reporting convention rather than an
    error.
    """
    w = p.w
    if direction is Direction.X_GIVEN_Y:
        mass = w.sum(axis=0)
        defined = mass > 0.0
        k = np.full_like(w, 1.0 / p.nx)
        k[:, defined] = w[:, defined] / mass[defined]
    else:
        mass = w.sum(axis=1)
        defined = mass > 0.0
        k = np.full_like(w, 1.0 / p.ny)
        k[defined, :] = w[defined, :] / mass[defined][:, None]
    return ConditionalKernel(direction, k, defined)


def compose_with_drift(m: MarginalDensity, k: ConditionalKernel) -> tuple[JointDensity, float]:
    """Multiply a marginal into a kernel and renormalize.

    Returns the joint together with the renormalization drift, the absolute
    deviation of the raw product's total mass from 1. The drift is pure
    floating residue (at most a few ulps per entry) but is reported so long
    iterations can record it.
    """
    if m.axis is not k.direction.conditioning_axis:
        raise DimensionMismatch(
            f"cannot compose a {m.axis.value}-marginal with a {k.direction.value} kernel"
        )
    if len(m) != k.n_slices:
        raise DimensionMismatch(
            f"marginal length {len(m)} does not match kernel slice count {k.n_slices}"
        )
    if k.direction is Direction.X_GIVEN_Y:
        raw = k.k * m.v[None, :]
    else:
        raw = k.k * m.v[:, None]
    total = stable_sum(raw)
    drift = abs(total - 1.0)
    return JointDensity(raw / total), drift


def compose(m: MarginalDensity, k: ConditionalKernel) -> JointDensity:
    """Multiply a marginal into a kernel: joint(x, y) = m * k, renormalized."""
    joint, _ = compose_with_drift(m, k)
    return joint


def make_target(p: JointDensity, require_positive: bool = True) -> Target:
    """Derive conditionals and marginals from a joint and bundle them.

    With ``require_positive`` (the default), a joint containing a zero cell
    raises :class:`PositivityViolation`: conditional draws from such a target
    are ill-defined somewhere and the uniqueness of the stationary law is no
    longer guaranteed. Pass ``require_positive=False`` to build the Target
    anyway with ``strictly_positive`` set False.
    """
    strictly_positive = p.strictly_positive
    if require_positive and not strictly_positive:
        raise PositivityViolation(
            f"target has a zero cell (min entry {p.min_entry!r}); "
            "strict positivity is required"
        )
    return Target(
        joint=p,
        cond_x_given_y=conditional(p, Direction.X_GIVEN_Y),
        cond_y_given_x=conditional(p, Direction.Y_GIVEN_X),
        marg_x=marginal(p, Axis.X),
        marg_y=marginal(p, Axis.Y),
        strictly_positive=strictly_positive,
    )


def random_positive_target(nx: int, ny: int, seed: int, concentration: float = 1.0) -> Target:
    """Draw a strictly positive target, deterministically from the seed.

    Cells are iid gamma variates with the given shape parameter, normalized
    to total mass 1 (jointly a symmetric Dirichlet draw). Larger
    concentration flattens the target toward uniform; smaller concentration
    spreads the mass unevenly. The rare draw with a cell that underflows to
    zero is rejected and redrawn from the same stream, so the result is
    always strictly positive.
    """
    if nx < 1 or ny < 1:
        raise DistributionError(f"grid must be at least 1x1, got {nx}x{ny}")
    if not (np.isfinite(concentration) and concentration > 0.0):
        raise DistributionError(f"concentration must be a positive real, got {concentration!r}")
    rng = np.random.default_rng(seed)
    while True:
        w = rng.gamma(concentration, size=(nx, ny))
        total = stable_sum(w)
        if total > 0.0 and np.all(w / total > 0.0):
            return make_target(JointDensity(w / total), require_positive=True)


def independence_target(px: MarginalDensity, py: MarginalDensity) -> Target:
    """The product target joint(i, j) = px[i] * py[j]."""
    if px.axis is not Axis.X or py.axis is not Axis.Y:
        raise DimensionMismatch("independence_target needs an X marginal and a Y marginal")
    if px.v.min() <= 0.0 or py.v.min() <= 0.0:
        raise PositivityViolation("both marginals must be strictly positive")
    return make_target(JointDensity(np.outer(px.v, py.v)), require_positive=True)


# --- JSON interchange -------------------------------------------------------
#
# Schema: {"nx": int, "ny": int, "w": [[row-major nonnegative reals]]}.
# Weights may arrive unnormalized; they are normalized on load and rejected
# if the total is nonpositive or any entry is negative or non-finite.


def joint_to_json_dict(p: JointDensity) -> dict:
    return {"nx": p.nx, "ny": p.ny, "w": [[float(x) for x in row] for row in p.w]}


def joint_from_json_dict(obj: dict) -> JointDensity:
    if not isinstance(obj, dict):
        raise DistributionError("density JSON must be an object")
    for key in ("nx", "ny", "w"):
        if key not in obj:
            raise DistributionError(f"density JSON is missing the {key!r} field")
    nx, ny = obj["nx"], obj["ny"]
    if not (isinstance(nx, int) and isinstance(ny, int) and nx >= 1 and ny >= 1):
        raise DistributionError(f"nx and ny must be positive integers, got {nx!r}, {ny!r}")
    try:
        w = np.asarray(obj["w"], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise DistributionError("the w field is not a numeric matrix") from e
    if w.shape != (nx, ny):
        raise DistributionError(f"w has shape {w.shape}, expected ({nx}, {ny})")
    if not np.all(np.isfinite(w)):
        raise DistributionError("w contains NaN or infinite entries")
    if np.any(w < 0.0):
        raise DistributionError("w contains negative entries")
    total = stable_sum(w)
    if total <= 0.0:
        raise DistributionError("w has nonpositive total mass")
    # already-normalized weights pass through untouched so that a save/load
    # cycle is bit-stable; anything else is scaled to total mass 1
    if abs(total - 1.0) > SUM_TOL:
        w = w / total
    return JointDensity(w)


def save_joint(path: str, p: JointDensity) -> None:
    """Write a joint density as JSON, atomically."""
    atomic_write_text(path, json.dumps(joint_to_json_dict(p), sort_keys=True, indent=1) + "\n")


def load_joint(path: str) -> JointDensity:
    with open(path, encoding="utf-8") as f:
        return joint_from_json_dict(json.load(f))
