"""Discretized crosswalk decision process solved by QMDP-style value iteration.

The comparison controller plans over a coarse grid of (speed, pedestrian
in crosswalk, distance, previous action). Vehicle motion is a deterministic
point mass; the crosswalk flag follows a hazard derived from the same
gap-acceptance distribution the simulator's pedestrian uses, so the planner
and the world share one behavioral model. With the pedestrian posture fixed
and the crosswalk flag directly observed, the belief is a point mass and the
QMDP policy reduces to a greedy lookup on the solved Q-table.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ControllerParams, PedestrianState, VehicleState, WorldGeometry
from .hybrid import in_crosswalk
from .pedestrian import GapAcceptanceModel

log = logging.getLogger(__name__)

_erf = np.frompyfunc(math.erf, 1, 1)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + _erf(z / math.sqrt(2.0)).astype(float))


@dataclass(frozen=True)
class RewardWeights:
    """Relative importance of the four reward terms; shapes are fixed."""

    w_legality: float = 10.0
    w_safety: float = 50.0
    w_efficient: float = 1.0
    w_smooth: float = 2.0

    def scaled(self, factor: float) -> "RewardWeights":
        return RewardWeights(
            self.w_legality * factor,
            self.w_safety * factor,
            self.w_efficient * factor,
            self.w_smooth * factor,
        )


@dataclass(frozen=True)
class DiscretizedState:
    """One grid cell; the flattened index is a bijection over all cells."""

    v_bin: int
    c: bool
    d_bin: int
    a_prev_bin: int

    def index(self, model: "PomdpModel") -> int:
        nd, na = len(model.d_grid), len(model.a_grid)
        return ((self.v_bin * 2 + int(self.c)) * nd + self.d_bin) * na + self.a_prev_bin

    @staticmethod
    def from_index(i: int, model: "PomdpModel") -> "DiscretizedState":
        nd, na = len(model.d_grid), len(model.a_grid)
        a_prev = i % na
        rest = i // na
        d_bin = rest % nd
        rest //= nd
        c = bool(rest % 2)
        return DiscretizedState(v_bin=rest // 2, c=c, d_bin=d_bin, a_prev_bin=a_prev)


class PomdpModel:
    """Grids, transition kernel, and reward table for the planner."""

    def __init__(
        self,
        params: ControllerParams,
        geometry: WorldGeometry,
        gap_model: GapAcceptanceModel,
        weights: RewardWeights = RewardWeights(),
        dt: float = 0.25,
        discount: float = 0.99,
        n_v_bins: int = 13,
        n_d_bins: int = 51,
        d_range: tuple[float, float] = (-5.0, 45.0),
        actions: tuple[float, ...] = (-4.0, -2.0, -1.0, 0.0, 1.0, 2.0),
    ):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 <= discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if n_v_bins < 2 or n_d_bins < 2 or not actions:
            raise ValueError("grids must be non-empty")
        if d_range[1] <= d_range[0]:
            raise ValueError("inconsistent d_range")

        self.params = params
        self.geometry = geometry
        self.gap_model = gap_model
        self.weights = weights
        self.dt = dt
        self.discount = discount
        v_max = max(6.0, params.v_speedlimit + 1.5)
        self.v_grid = np.linspace(0.0, v_max, n_v_bins)
        self.d_grid = np.linspace(d_range[0], d_range[1], n_d_bins)
        self.a_grid = np.array(sorted(actions), dtype=float)
        if self.a_grid.min() < -params.a_max or self.a_grid.max() > params.a_cmf:
            raise ValueError("action grid exceeds [-a_max, +a_cmf]")
        self.crossing_exit_prob = dt / (geometry.roadway_width / gap_model.walk_speed)

        self._build()

    # -- grid helpers --------------------------------------------------------

    def v_bin(self, v: float) -> int:
        return self._snap(v, self.v_grid)

    def d_bin(self, d: float) -> int:
        return self._snap(d, self.d_grid)

    def a_bin(self, a: float) -> int:
        return int(np.argmin(np.abs(self.a_grid - a)))

    @staticmethod
    def _snap(x: float, grid: np.ndarray) -> int:
        step = grid[1] - grid[0]
        i = int(round((x - grid[0]) / step))
        return min(max(i, 0), len(grid) - 1)

    @property
    def n_states(self) -> int:
        return len(self.v_grid) * 2 * len(self.d_grid) * len(self.a_grid)

    @property
    def n_actions(self) -> int:
        return len(self.a_grid)

    def crossing_entry_prob(self, d_bin: int, v_bin: int, a_idx: int = 3) -> float:
        return float(self._entry_p[v_bin, d_bin, a_idx])

    # -- construction --------------------------------------------------------

    def _build(self) -> None:
        gm, geo = self.gap_model, self.geometry
        nv, nd, na = len(self.v_grid), len(self.d_grid), len(self.a_grid)
        v = self.v_grid[:, None, None]
        d = self.d_grid[None, :, None]
        a = self.a_grid[None, None, :]

        v_next = np.clip(v + a * self.dt, self.v_grid[0], self.v_grid[-1])
        d_next = d - v * self.dt - 0.5 * a * self.dt * self.dt
        v_step = self.v_grid[1] - self.v_grid[0]
        d_step = self.d_grid[1] - self.d_grid[0]
        self._v_next_idx = np.clip(
            np.round((v_next - self.v_grid[0]) / v_step), 0, nv - 1
        ).astype(np.int64)
        self._d_next_idx = np.clip(
            np.round((d_next - self.d_grid[0]) / d_step), 0, nd - 1
        ).astype(np.int64)

        # Entry hazard: probability that the sampled accepted gap falls inside
        # the gap interval swept during this step, zero once the vehicle has
        # reached the walking line and capped at the largest actionable gap.
        v_eff = np.maximum(v, 0.5 * v_step)
        v_eff_next = np.maximum(v_next, 0.5 * v_step)
        g_now = np.broadcast_to((d + geo.delta) / v_eff, (nv, nd, na))
        g_next = (d_next + geo.delta) / v_eff_next

        def z(g):
            return (np.minimum(g, gm.max_trigger_gap) - gm.mu_gap) / gm.sigma_gap

        hazard = _normal_cdf(z(g_now)) - _normal_cdf(z(g_next))
        past = np.broadcast_to(d + geo.delta <= 0.0, (nv, nd, na))
        self._entry_p = np.clip(np.where(past, 0.0, hazard), 0.0, 1.0)

        # Reward table over (v, c, d, a_prev, a), flattened to (S, A).
        w = self.weights
        vv = self.v_grid[:, None, None, None]
        dd = self.d_grid[None, :, None, None]
        aa_prev = self.a_grid[None, None, :, None]
        aa = self.a_grid[None, None, None, :]
        moving = vv > 0.3
        legality = -1.0 * (moving & (dd >= -1.0) & (dd <= 12.0))
        safety = -1.0 * (moving & (dd >= -1.0) & (dd <= 6.0))
        efficient = -np.abs(vv - self.params.v_speedlimit) / self.params.v_speedlimit
        smooth = -np.abs(aa - aa_prev)
        full = (nv, nd, na, na)
        r_c = np.broadcast_to(
            w.w_legality * legality + w.w_safety * safety + w.w_smooth * smooth, full
        )
        r_nc = np.broadcast_to(w.w_efficient * efficient + w.w_smooth * smooth, full)
        r = np.stack([r_nc, r_c], axis=1)  # c axis sits after v
        self.reward_table = r.reshape(self.n_states, na).copy()

        # Next-state index tables for c'=0 and c'=1 and P(c'=1).
        s_v = self._v_next_idx[:, None, :, None, :]  # v,c,d,ap,a
        s_d = self._d_next_idx[:, None, :, None, :]
        aa_idx = np.arange(na)[None, None, None, None, :]
        flat0 = ((s_v * 2 + 0) * nd + s_d) * na + aa_idx
        flat1 = ((s_v * 2 + 1) * nd + s_d) * na + aa_idx
        shape = (nv, 2, nd, na, na)
        self._ns0 = np.broadcast_to(flat0, shape).reshape(self.n_states, na).copy()
        self._ns1 = np.broadcast_to(flat1, shape).reshape(self.n_states, na).copy()

        entry = self._entry_p[:, None, :, None, :]  # from c=0
        exit_ = np.full_like(entry, self.crossing_exit_prob)
        p_c1 = np.concatenate(
            [np.broadcast_to(entry, (nv, 1, nd, na, na)),
             np.broadcast_to(1.0 - exit_, (nv, 1, nd, na, na))],
            axis=1,
        )
        self._p_c1 = p_c1.reshape(self.n_states, na).copy()

    def reward(self, state: DiscretizedState, a_idx: int) -> float:
        """Scalar reward for one grid cell and action."""
        return float(self.reward_table[state.index(self), a_idx])

    def cache_key(self) -> str:
        h = hashlib.sha256()
        for arr in (self.v_grid, self.d_grid, self.a_grid):
            h.update(arr.tobytes())
        w = self.weights
        meta = (
            w.w_legality, w.w_safety, w.w_efficient, w.w_smooth,
            self.dt, self.discount, self.crossing_exit_prob,
            self.params.v_speedlimit, self.geometry.delta,
            self.gap_model.mu_gap, self.gap_model.sigma_gap, self.gap_model.max_trigger_gap,
        )
        h.update(repr(meta).encode())
        return h.hexdigest()[:16]


def build_model(
    params: ControllerParams,
    geometry: WorldGeometry,
    gap_model: GapAcceptanceModel,
    **kwargs,
) -> PomdpModel:
    """Construct the discretized model; kwargs override grid/weight defaults."""
    return PomdpModel(params, geometry, gap_model, **kwargs)


class ConvergenceError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"value iteration residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass
class QTable:
    """Converged state-action values plus the greedy policy."""

    q: np.ndarray
    residuals: list[float] = field(default_factory=list)
    cache_key: str = ""

    def value(self, state_index: int, a_idx: int) -> float:
        return float(self.q[state_index, a_idx])


def qmdp_solve(model: PomdpModel, tol: float = 1e-6, max_iters: int = 5000) -> QTable:
    """Value-iterate Q to a sup-norm residual below ``tol``.

    Raises ``ConvergenceError`` carrying the final residual if the budget
    runs out first.
    """
    r = model.reward_table
    gamma = model.discount
    q = np.zeros_like(r)
    residuals: list[float] = []
    for _ in range(max_iters):
        v = q.max(axis=1)
        q_new = r + gamma * ((1.0 - model._p_c1) * v[model._ns0] + model._p_c1 * v[model._ns1])
        residual = float(np.max(np.abs(q_new - q)))
        residuals.append(residual)
        q = q_new
        if residual < tol:
            table = QTable(q=q, residuals=residuals, cache_key=model.cache_key())
            if not np.all(np.isfinite(q)):
                raise ConvergenceError(residual, len(residuals))
            return table
    raise ConvergenceError(residuals[-1], max_iters)


def greedy_action_table(model: PomdpModel, qtable: QTable) -> np.ndarray:
    """Per-state greedy action index; ties go to the lowest-|a| action."""
    order = np.argsort(np.abs(model.a_grid), kind="stable")
    best_in_order = np.argmax(qtable.q[:, order], axis=1)
    return order[best_in_order].astype(np.int64)


def pomdp_step(
    qtable: QTable,
    model: PomdpModel,
    vehicle: VehicleState,
    ped: PedestrianState,
    a_prev_bin: int,
    greedy: Optional[np.ndarray] = None,
) -> tuple[float, int]:
    """Greedy acceleration for the observed state; returns (command, action bin)."""
    if greedy is None:
        greedy = greedy_action_table(model, qtable)
    if not (model.d_grid[0] <= vehicle.d <= model.d_grid[-1]) or not (
        model.v_grid[0] <= vehicle.v <= model.v_grid[-1]
    ):
        log.debug("state outside grid, clamping: d=%.2f v=%.2f", vehicle.d, vehicle.v)
    state = DiscretizedState(
        v_bin=model.v_bin(vehicle.v),
        c=in_crosswalk(ped, model.geometry),
        d_bin=model.d_bin(vehicle.d),
        a_prev_bin=a_prev_bin,
    )
    a_idx = int(greedy[state.index(model)])
    return float(model.a_grid[a_idx]), a_idx


class PomdpController:
    """Solved-policy controller behind the same per-tick step interface.

    The policy was optimized at the model's coarser decision period, so the
    command is re-evaluated on that period and held between decisions.
    """

    def __init__(self, model: PomdpModel, qtable: QTable, sim_dt: float):
        self.model = model
        self.qtable = qtable
        self.greedy = greedy_action_table(model, qtable)
        self.hold_ticks = max(1, int(round(model.dt / sim_dt)))
        self.reset()

    def reset(self) -> None:
        self._a_idx = self.model.a_bin(0.0)
        self._a = 0.0
        self._tick = 0

    def step(self, vehicle: VehicleState, ped: PedestrianState) -> float:
        if self._tick % self.hold_ticks == 0:
            self._a, self._a_idx = pomdp_step(
                self.qtable, self.model, vehicle, ped, self._a_idx, self.greedy
            )
        self._tick += 1
        return self._a


def save_policy(path: Path, model: PomdpModel, qtable: QTable) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, q=qtable.q, cache_key=np.array(model.cache_key()))


def load_policy(path: Path, model: PomdpModel) -> Optional[QTable]:
    """Load a cached table if it matches the model's cache key."""
    if not path.exists():
        return None
    data = np.load(path, allow_pickle=False)
    if str(data["cache_key"]) != model.cache_key():
        return None
    return QTable(q=data["q"], cache_key=model.cache_key())


def policy_cache_path(cache_dir: Path, model: PomdpModel) -> Path:
    return Path(cache_dir) / f"pomdp_policy_{model.cache_key()}.npz"


def solve_or_load(model: PomdpModel, cache_dir: Optional[Path] = None,
                  tol: float = 1e-6, max_iters: int = 5000) -> QTable:
    if cache_dir is not None:
        path = policy_cache_path(cache_dir, model)
        cached = load_policy(path, model)
        if cached is not None:
            return cached
    table = qmdp_solve(model, tol=tol, max_iters=max_iters)
    if cache_dir is not None:
        save_policy(policy_cache_path(cache_dir, model), model, table)
    return table


def export_policy_csv(path: Path, model: PomdpModel, qtable: QTable) -> None:
    """Flat (state index, action index, Q-value) table for external tooling."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("state_index,action_index,q_value\n")
        for s in range(model.n_states):
            for a in range(model.n_actions):
                f.write(f"{s},{a},{qtable.q[s, a]:.9g}\n")
