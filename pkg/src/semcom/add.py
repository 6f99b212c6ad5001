"""Diffusion-chain bandwidth allocator with twin Q-critics.

The policy denoises a Gaussian action vector through T learned steps,
squashes it to per-user token budgets, and is trained by ascending the
critics' value of the generated action. Everything runs in float64 on CPU;
the networks are small MLPs.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .metrics import JpsqParams, ScoreTable, user_utility, jpsq

STATE_GRID = 16

torch.set_default_dtype(torch.float64)


# ---------------------------------------------------------------------------
# state encoding

@dataclass
class AllocState:
    grids: np.ndarray   # bool, (N, 16, 16) OR-pooled semantic maps
    caps: np.ndarray    # float, (N,) per-user token budget caps
    image_ids: list[str] | None = None  # set by table environments

    @property
    def n_users(self) -> int:
        return self.grids.shape[0]

    def flat(self) -> np.ndarray:
        return self.grids.reshape(-1).astype(np.float64)


def or_pool(mask: np.ndarray, grid: int = STATE_GRID) -> np.ndarray:
    """Reduce a boolean mask to ``grid x grid`` by block-wise OR, padding
    ragged dimensions with zeros."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    bh = -(-h // grid)
    bw = -(-w // grid)
    padded = np.zeros((bh * grid, bw * grid), dtype=bool)
    padded[:h, :w] = mask
    return padded.reshape(grid, bh, grid, bw).any(axis=(1, 3))


def make_state(union_masks: list[np.ndarray], caps, image_ids=None) -> AllocState:
    grids = np.stack([or_pool(m) for m in union_masks])
    caps = np.asarray(caps, dtype=np.float64)
    if caps.shape != (grids.shape[0],):
        raise ValueError("one cap per user required")
    return AllocState(grids=grids, caps=caps, image_ids=image_ids)


@dataclass
class AllocAction:
    b: np.ndarray  # tokens per user, within [0, cap] after projection


# ---------------------------------------------------------------------------
# networks

def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Classic sin/cos timestep features, ``t`` shaped (batch,)."""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=t.dtype) / max(half - 1, 1))
    angles = t[:, None] * freqs[None, :]
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)


def _mlp(in_dim: int, hidden: int, out_dim: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Linear(in_dim, hidden), nn.SiLU(),
        nn.Linear(hidden, hidden), nn.SiLU(),
        nn.Linear(hidden, out_dim),
    )


class EpsilonNet(nn.Module):
    """Noise estimator over (action, timestep, state embedding)."""

    def __init__(self, action_dim: int, state_dim: int, hidden: int = 256, t_dim: int = 16):
        super().__init__()
        self.t_dim = t_dim
        self.body = _mlp(action_dim + t_dim + state_dim, hidden, action_dim)
        # zero-init the head so the untrained chain is unbiased; otherwise the
        # repeated 1/sqrt(alpha) amplification saturates the squash and the
        # policy starts in a flat-gradient region
        last = self.body[-1]
        nn.init.zeros_(last.weight)
        nn.init.zeros_(last.bias)

    def forward(self, b: torch.Tensor, t: torch.Tensor, state: torch.Tensor) -> torch.Tensor:
        temb = sinusoidal_embedding(t, self.t_dim)
        return self.body(torch.cat([b, temb, state], dim=1))


class Critic(nn.Module):
    def __init__(self, state_dim: int, action_dim: int, hidden: int = 256):
        super().__init__()
        self.body = _mlp(state_dim + action_dim, hidden, 1)

    def forward(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        return self.body(torch.cat([state, action], dim=1)).squeeze(-1)


# ---------------------------------------------------------------------------
# diffusion policy

class DiffusionPolicy:
    """T-step denoising chain over normalized actions in (0, 1)."""

    def __init__(self, action_dim: int, state_dim: int, T: int = 5, hidden: int = 256,
                 beta_lo: float = 0.05, beta_hi: float = 0.5):
        if T < 1:
            raise ValueError("T must be >= 1")
        self.action_dim = action_dim
        self.state_dim = state_dim
        self.T = T
        self.hidden = hidden
        self.betas = torch.linspace(beta_lo, beta_hi, T)
        self.alphas = 1.0 - self.betas
        self.alpha_bars = torch.cumprod(self.alphas, dim=0)
        self.net = EpsilonNet(action_dim, state_dim, hidden)
        self.step_count = 0  # denoise_step invocations, for chain-shape checks

    def denoise_step(self, b_t: torch.Tensor, t: int, state: torch.Tensor,
                     z: torch.Tensor) -> torch.Tensor:
        """One reverse step t -> t-1 with sigma_t = beta_t."""
        if not 1 <= t <= self.T:
            raise ValueError(f"t must be in [1, {self.T}]")
        beta = self.betas[t - 1]
        alpha = self.alphas[t - 1]
        abar = self.alpha_bars[t - 1]
        eps = self.net(b_t, torch.full((b_t.shape[0],), float(t), dtype=b_t.dtype), state)
        self.step_count += 1
        return (b_t - beta / torch.sqrt(1.0 - abar) * eps) / torch.sqrt(alpha) + beta * z

    def chain(self, state: torch.Tensor, b_T: torch.Tensor,
              zs: torch.Tensor | None) -> torch.Tensor:
        """Full denoising pass; ``zs`` is (T, batch, action_dim) or None for
        the deterministic z = 0 chain. Differentiable end to end."""
        b = b_T
        for t in range(self.T, 0, -1):
            z = zs[t - 1] if zs is not None else torch.zeros_like(b)
            b = self.denoise_step(b, t, state, z)
        return b

    def parameters(self):
        return self.net.parameters()


def sample_action(policy: DiffusionPolicy, state: AllocState,
                  rng: np.random.Generator | None = None,
                  explore_sigma: float = 0.0) -> AllocAction:
    """Draw one allocation. Training mode (rng given) seeds the chain with
    Gaussian noise and perturbs the squashed action by ``explore_sigma``
    cap-fractions before projection; inference mode is fully deterministic."""
    s = torch.from_numpy(state.flat()).unsqueeze(0)
    if rng is not None:
        b_T = torch.from_numpy(rng.standard_normal((1, policy.action_dim)))
        zs = torch.from_numpy(rng.standard_normal((policy.T, 1, policy.action_dim)))
    else:
        b_T = torch.zeros((1, policy.action_dim))
        zs = None
    with torch.no_grad():
        b0 = policy.chain(s, b_T, zs)
        a_norm = torch.sigmoid(b0).squeeze(0).numpy()
    b = a_norm * state.caps
    if rng is not None and explore_sigma > 0:
        b = b + rng.standard_normal(policy.action_dim) * explore_sigma * state.caps
    b = np.clip(b, 0.0, state.caps)
    return AllocAction(b=b)


def allocate(policy: DiffusionPolicy, state: AllocState) -> AllocAction:
    """Deterministic trained-policy allocation (z = 0, no exploration)."""
    return sample_action(policy, state, rng=None, explore_sigma=0.0)


# ---------------------------------------------------------------------------
# critics and replay

class TwinCritics:
    def __init__(self, state_dim: int, action_dim: int, hidden: int = 256,
                 sync_period: int = 100):
        self.q1 = Critic(state_dim, action_dim, hidden)
        self.q2 = Critic(state_dim, action_dim, hidden)
        self.q1_target = Critic(state_dim, action_dim, hidden)
        self.q2_target = Critic(state_dim, action_dim, hidden)
        self.sync_period = sync_period
        self.sync()

    def sync(self) -> None:
        self.q1_target.load_state_dict(self.q1.state_dict())
        self.q2_target.load_state_dict(self.q2.state_dict())

    def parameters(self):
        return list(self.q1.parameters()) + list(self.q2.parameters())


def q_target(critics: TwinCritics, reward: torch.Tensor, state: torch.Tensor,
             action: torch.Tensor, gamma: float) -> tuple[torch.Tensor, torch.Tensor]:
    """Bellman target y = R + gamma * min_i Q*_i(s, b0) and the index j of
    the critic attaining the min (ties go to the first critic)."""
    with torch.no_grad():
        t1 = critics.q1_target(state, action)
        t2 = critics.q2_target(state, action)
        y = reward + gamma * torch.minimum(t1, t2)
        j = (t2 < t1).long()  # 0 -> first critic, 1 -> second
    return y, j


def critic_loss(critics: TwinCritics, state: torch.Tensor, action: torch.Tensor,
                y: torch.Tensor, j: torch.Tensor) -> torch.Tensor:
    """Squared Bellman error against the min-attaining critic per sample."""
    q1 = critics.q1(state, action)
    q2 = critics.q2(state, action)
    q_j = torch.where(j == 0, q1, q2)
    return torch.mean((y - q_j) ** 2)


def policy_loss(policy: DiffusionPolicy, critics: TwinCritics, state: torch.Tensor,
                b_T: torch.Tensor, zs: torch.Tensor | None) -> torch.Tensor:
    """Negative expected conservative value of freshly denoised actions;
    the gradient flows through the whole chain (pathwise, frozen z)."""
    b0 = policy.chain(state, b_T, zs)
    a_norm = torch.sigmoid(b0)
    q = torch.minimum(critics.q1(state, a_norm), critics.q2(state, a_norm))
    return -torch.mean(q)


class ReplayBuffer:
    """Fixed-capacity ring of (state, normalized action, utility) records."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros((capacity, action_dim))
        self.utilities = np.zeros(capacity)
        self.size = 0
        self.next = 0

    def add(self, state: np.ndarray, action: np.ndarray, utility: float) -> None:
        i = self.next
        self.states[i] = state
        self.actions[i] = action
        self.utilities[i] = utility
        self.next = (self.next + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int):
        idx = rng.choice(self.size, size=min(batch, self.size), replace=False)
        return (torch.from_numpy(self.states[idx]),
                torch.from_numpy(self.actions[idx]),
                torch.from_numpy(self.utilities[idx]))


# ---------------------------------------------------------------------------
# training

@dataclass
class AddHyper:
    T: int = 5
    gamma: float = 0.95
    lr: float = 1e-4
    batch_size: int = 64
    episodes: int = 2000
    hidden: int = 256
    explore_start: float = 0.1
    explore_end: float = 0.01
    sync_period: int = 100
    buffer_capacity: int = 10_000
    seed: int = 0
    policy_lr: float | None = None  # defaults to lr
    warmup: int = 0                 # critic-only episodes before policy updates


@dataclass
class TrainResult:
    policy: DiffusionPolicy
    critics: TwinCritics
    rewards: list[float] = field(default_factory=list)


def train(env, hyper: AddHyper) -> TrainResult:
    """Algorithm: sample an allocation for a fresh state, score it, store the
    transition, then ascend the critics' value through the denoising chain
    and regress the critics onto the Bellman target. One-shot episodes."""
    rng = np.random.Generator(np.random.Philox(hyper.seed))
    torch.manual_seed(hyper.seed)
    state_dim = env.n_users * STATE_GRID * STATE_GRID
    action_dim = env.n_users
    policy = DiffusionPolicy(action_dim, state_dim, T=hyper.T, hidden=hyper.hidden)
    critics = TwinCritics(state_dim, action_dim, hidden=hyper.hidden,
                          sync_period=hyper.sync_period)
    policy_opt = torch.optim.Adam(policy.parameters(),
                                  lr=hyper.policy_lr if hyper.policy_lr is not None
                                  else hyper.lr)
    critic_opt = torch.optim.Adam(critics.parameters(), lr=hyper.lr)
    buffer = ReplayBuffer(hyper.buffer_capacity, state_dim, action_dim)
    rewards: list[float] = []

    for episode in range(hyper.episodes):
        frac = episode / max(hyper.episodes - 1, 1)
        sigma = hyper.explore_start + (hyper.explore_end - hyper.explore_start) * frac
        state = env.sample_state(rng)
        action = sample_action(policy, state, rng=rng, explore_sigma=sigma)
        u = float(env.utility(state, action.b))
        if not math.isfinite(u):
            raise RuntimeError(f"non-finite utility at episode {episode}")
        a_norm = np.divide(action.b, state.caps, out=np.zeros_like(action.b),
                           where=state.caps > 0)
        buffer.add(state.flat(), a_norm, u)
        rewards.append(u)

        if buffer.size >= hyper.batch_size:
            s_b, a_b, u_b = buffer.sample(rng, hyper.batch_size)

            y, j = q_target(critics, u_b, s_b, a_b, hyper.gamma)
            c_loss = critic_loss(critics, s_b, a_b, y, j)
            critic_opt.zero_grad()
            c_loss.backward()
            critic_opt.step()

            if episode >= hyper.warmup:
                b_T = torch.from_numpy(rng.standard_normal((s_b.shape[0], action_dim)))
                zs = torch.from_numpy(rng.standard_normal((hyper.T, s_b.shape[0], action_dim)))
                p_loss = policy_loss(policy, critics, s_b, b_T, zs)
                policy_opt.zero_grad()
                p_loss.backward()
                policy_opt.step()
                if not torch.isfinite(p_loss):
                    raise RuntimeError(f"training diverged at episode {episode}")
            if not torch.isfinite(c_loss):
                raise RuntimeError(f"training diverged at episode {episode}")

        if (episode + 1) % hyper.sync_period == 0:
            critics.sync()

    return TrainResult(policy=policy, critics=critics, rewards=rewards)


# ---------------------------------------------------------------------------
# baselines

def baseline_allocate(kind: str, state: AllocState,
                      rng: np.random.Generator | None = None,
                      env=None) -> AllocAction:
    if kind == "fixed":
        return AllocAction(b=state.caps.copy())
    if kind == "random":
        if rng is None:
            raise ValueError("random baseline needs a generator")
        return AllocAction(b=rng.random(state.n_users) * state.caps)
    if kind == "greedy_table":
        if env is None or not hasattr(env, "greedy_action"):
            raise ValueError("greedy baseline needs a score-table environment")
        return env.greedy_action(state)
    raise ValueError(f"unknown baseline {kind!r}")


# ---------------------------------------------------------------------------
# table-driven environment

class TableAllocEnv:
    """One-shot allocation environment scored by a (D, Q) table.

    Each user is assigned one image; the state concatenates the images'
    16x16 semantic grids and the caps equal the tables' largest breakpoints
    (or explicit per-image caps).
    """

    def __init__(self, table: ScoreTable, params: JpsqParams, n_users: int,
                 grids: dict[str, np.ndarray], caps: dict[str, float] | None = None):
        self.table = table
        self.params = params
        self.n_users = n_users
        self.grids = grids
        self.image_pool = table.image_ids()
        for image_id in self.image_pool:
            if image_id not in grids:
                raise ValueError(f"no semantic grid for image {image_id!r}")
        self.caps = caps or {i: float(table.rows[i][-1][0]) for i in self.image_pool}

    def sample_state(self, rng: np.random.Generator) -> AllocState:
        ids = [self.image_pool[int(rng.integers(len(self.image_pool)))]
               for _ in range(self.n_users)]
        grids = np.stack([self.grids[i] for i in ids])
        caps = np.array([self.caps[i] for i in ids])
        return AllocState(grids=grids, caps=caps, image_ids=ids)

    def user_utility(self, image_id: str, b: float, cap: float) -> float:
        d, q = self.table.score(image_id, b)
        return user_utility(jpsq(d, q, self.params), q, b, self.params, cap=cap)

    def utility(self, state: AllocState, b: np.ndarray) -> float:
        return sum(self.user_utility(img, float(bi), float(cap))
                   for img, bi, cap in zip(state.image_ids, b, state.caps))

    def greedy_action(self, state: AllocState) -> AllocAction:
        """Per-user argmax of tabulated utility over the breakpoints."""
        b = np.zeros(state.n_users)
        for k, (img, cap) in enumerate(zip(state.image_ids, state.caps)):
            candidates = [float(t) for t, _, _ in self.table.rows[img] if t <= cap]
            b[k] = max(candidates, key=lambda t: self.user_utility(img, t, cap))
        return AllocAction(b=b)

    def optimal(self, state: AllocState, steps: int = 512) -> tuple[np.ndarray, float]:
        """Exhaustive per-user grid scan; the objective is separable so the
        per-user argmax composes the global optimum."""
        b = np.zeros(state.n_users)
        total = 0.0
        for k, (img, cap) in enumerate(zip(state.image_ids, state.caps)):
            grid = np.linspace(0.0, cap, steps)
            vals = [self.user_utility(img, float(t), float(cap)) for t in grid]
            best = int(np.argmax(vals))
            b[k] = grid[best]
            total += vals[best]
        return b, total


# ---------------------------------------------------------------------------
# checkpoints: shape-tagged little-endian float64 arrays

_CKPT_MAGIC = b"SEMCKPT1"


def _named_arrays(policy: DiffusionPolicy, critics: TwinCritics) -> dict[str, np.ndarray]:
    arrays = {
        "meta": np.array([policy.action_dim, policy.state_dim, policy.T,
                          policy.hidden], dtype=np.float64),
        "betas": policy.betas.numpy().astype(np.float64),
    }
    for prefix, module in [("policy", policy.net), ("q1", critics.q1),
                           ("q2", critics.q2)]:
        for name, tensor in module.state_dict().items():
            arrays[f"{prefix}.{name}"] = tensor.detach().numpy().astype(np.float64)
    return arrays


def save_checkpoint(path: str, policy: DiffusionPolicy, critics: TwinCritics) -> None:
    arrays = _named_arrays(policy, critics)
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for name in sorted(arrays):
            arr = np.ascontiguousarray(arrays[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for dim in arr.shape:
                fh.write(struct.pack("<Q", dim))
            fh.write(arr.tobytes())


def load_checkpoint(path: str) -> tuple[DiffusionPolicy, TwinCritics]:
    with open(path, "rb") as fh:
        if fh.read(8) != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a policy checkpoint")
        (count,) = struct.unpack("<I", fh.read(4))
        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(ndim))
            n = int(np.prod(shape)) if shape else 1
            arrays[name] = np.frombuffer(fh.read(n * 8), dtype="<f8").reshape(shape)

    action_dim, state_dim, t_steps, hidden = (int(v) for v in arrays["meta"])
    policy = DiffusionPolicy(action_dim, state_dim, T=t_steps, hidden=hidden)
    policy.betas = torch.from_numpy(arrays["betas"].copy())
    policy.alphas = 1.0 - policy.betas
    policy.alpha_bars = torch.cumprod(policy.alphas, dim=0)
    critics = TwinCritics(state_dim, action_dim, hidden=hidden)
    for prefix, module in [("policy", policy.net), ("q1", critics.q1),
                           ("q2", critics.q2)]:
        sd = {name[len(prefix) + 1:]: torch.from_numpy(arr.copy())
              for name, arr in arrays.items() if name.startswith(prefix + ".")}
        module.load_state_dict(sd)
    critics.sync()
    return policy, critics
