"""Synthetic benchmark systems and their built-in symmetry representations.

Two reference systems are provided: a planar Hamiltonian flow whose vector
field commutes with a four-element signed-swap group, and a five-species
discrete competition map (representation-ranking dynamics) that is
shift-equivariant when all growth rates coincide.  A planted linear map is
included as a test oracle.
"""

from dataclasses import dataclass, field

import numpy as np

from . import tensorops
from .errors import DivergenceError, ShapeError, UnknownNameError, ValidationError
from .groups import close_group

INTERACTION_MATRIX = np.array([
    [1.0, 1.1, 0.0, 0.0, 1.0],
    [1.0, 1.0, 1.1, 0.0, 0.0],
    [0.0, 1.0, 1.0, 1.1, 0.0],
    [0.0, 0.0, 1.0, 1.0, 1.1],
    [1.1, 0.0, 0.0, 1.0, 1.0],
])
"""Circulant five-bank interaction network; every row sums to 3.1."""

GROWTH_RATE = 0.376
"""Uniform growth rate under which the competition map is shift-equivariant."""

DEFAULT_COMPETITION_START = np.array([0.2, 0.35, 0.5, 0.65, 0.8])
"""Asymmetric interior start for competition runs (no start is canonical)."""

COMPETITION_RANGE = 10.0
"""Competition states leaving [-10, 10] are treated as divergent."""

PRINTED_HAMILTONIAN_START = (1.0, 0.0)
"""Historic initial condition; an equilibrium of the vector field, kept for fidelity."""


@dataclass(frozen=True)
class HamiltonianConfig:
    """Fixed-step integration request for the planar Hamiltonian system.

    The default start (0.5, 0) lies on a closed orbit around the centre
    (1, 0); the historic start (1, 0) is an equilibrium and produces a
    constant series.
    """

    q0: float = 0.5
    p0: float = 0.0
    dt: float = 0.01
    steps: int = 600

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.steps < 1:
            raise ValidationError(f"steps must be >= 1, got {self.steps}")


@dataclass(frozen=True)
class CompetitionConfig:
    """Iteration request for the five-species competition map."""

    p0: np.ndarray = field(default_factory=lambda: DEFAULT_COMPETITION_START.copy())
    r: np.ndarray = field(default_factory=lambda: np.full(5, GROWTH_RATE))
    interactions: np.ndarray = field(default_factory=lambda: INTERACTION_MATRIX.copy())
    steps: int = 425

    def __post_init__(self):
        p0 = np.asarray(self.p0, dtype=np.float64)
        if np.any(p0 <= 0.0) or np.any(p0 >= 1.0):
            raise ValidationError("all start components must lie in (0, 1)")
        if np.any(np.asarray(self.interactions) < 0.0):
            raise ValidationError("interaction entries must be nonnegative")
        if self.steps < 0:
            raise ValidationError(f"steps must be >= 0, got {self.steps}")


def hamiltonian_vector_field(state):
    """(dq/dt, dp/dt) = (p^3 - p, q^3 - q)."""
    q, p = state
    return np.array([p ** 3 - p, q ** 3 - q])


def hamiltonian_energy(q, p):
    """Conserved energy p^4/4 - p^2/2 + q^2/2 - q^4/4 of the flow."""
    return p ** 4 / 4 - p ** 2 / 2 + q ** 2 / 2 - q ** 4 / 4


def hamiltonian_generate(cfg):
    """Classical fixed-step RK4 trajectory, returned as a (steps+1, 2) series."""
    y = np.array([cfg.q0, cfg.p0], dtype=np.float64)
    rows = np.empty((cfg.steps + 1, 2))
    rows[0] = y
    dt = cfg.dt
    for k in range(cfg.steps):
        k1 = hamiltonian_vector_field(y)
        k2 = hamiltonian_vector_field(y + 0.5 * dt * k1)
        k3 = hamiltonian_vector_field(y + 0.5 * dt * k2)
        k4 = hamiltonian_vector_field(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"integration diverged at step {k + 1}")
        rows[k + 1] = y
    return rows


def competition_step(p, r, interactions):
    """One update of the competition recurrence p + r * p * (1 - N p)."""
    p = tensorops._as_vector(p, "p")
    r = tensorops._as_vector(r, "r")
    n_matrix = tensorops._as_matrix(interactions, "interactions")
    if n_matrix.shape != (p.shape[0], p.shape[0]) or r.shape != p.shape:
        raise ShapeError(
            f"inconsistent dims: p {p.shape}, r {r.shape}, N {n_matrix.shape}"
        )
    return p + r * p * (1.0 - n_matrix @ p)


def competition_generate(cfg):
    """Iterated competition map, returned as a (steps+1, 5) series."""
    p = np.asarray(cfg.p0, dtype=np.float64)
    r = np.asarray(cfg.r, dtype=np.float64)
    n_matrix = np.asarray(cfg.interactions, dtype=np.float64)
    rows = np.empty((cfg.steps + 1, p.shape[0]))
    rows[0] = p
    for k in range(cfg.steps):
        p = competition_step(p, r, n_matrix)
        if not np.all(np.isfinite(p)) or np.any(np.abs(p) > COMPETITION_RANGE):
            raise DivergenceError(f"competition state left the admissible range at step {k + 1}")
        rows[k + 1] = p
    return rows


def builtin_rep(name):
    """Built-in representations: "k4" (signed swap, order 4) or "z5" (cyclic shift, order 5)."""
    if name == "k4":
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        flip = -np.eye(2)
        return close_group([swap, flip])
    if name == "z5":
        shift = np.zeros((5, 5))
        for i in range(5):
            shift[i, (i + 1) % 5] = 1.0
        return close_group([shift])
    raise UnknownNameError(f"no built-in representation named {name!r}; choose k4 or z5")


def planted_linear(a, x0, steps):
    """Orbit of x(t+1) = A x(t), returned as a (steps+1, n) series."""
    a = tensorops._as_matrix(a, "a")
    x = tensorops._as_vector(x0, "x0")
    if a.shape[0] != a.shape[1] or a.shape[0] != x.shape[0]:
        raise ShapeError(f"matrix {a.shape} does not act on start of dim {x.shape[0]}")
    if steps < 0:
        raise ShapeError(f"steps must be >= 0, got {steps}")
    rows = np.empty((steps + 1, x.shape[0]))
    rows[0] = x
    for k in range(steps):
        x = a @ x
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e12:
            raise DivergenceError(f"linear orbit overflowed at step {k + 1}")
        rows[k + 1] = x
    return rows
