"""Tree-structured Parzen Estimator search plus training-protocol math.

The optimizer only ever sees trial objectives through their ranks (the
good/bad split), so any strictly increasing transform of the objective leaves
the suggestion sequence bitwise unchanged for a fixed seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import CaneError, ConfigurationError

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# search space

@dataclass(frozen=True)
class Dimension:
    name: str
    kind: str                      # "uniform" | "loguniform" | "categorical"
    low: float = 0.0
    high: float = 0.0
    choices: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == "categorical":
            if not self.choices:
                raise ConfigurationError(f"{self.name}: categorical needs choices")
        elif self.kind in ("uniform", "loguniform"):
            if not self.low < self.high:
                raise ConfigurationError(f"{self.name}: low must be < high")
            if self.kind == "loguniform" and self.low <= 0:
                raise ConfigurationError(f"{self.name}: log dimension needs positive bounds")
        else:
            raise ConfigurationError(f"{self.name}: unknown kind {self.kind!r}")

    def transform(self, v: float) -> float:
        return math.log10(v) if self.kind == "loguniform" else v

    def untransform(self, v: float) -> float:
        return 10.0 ** v if self.kind == "loguniform" else v

    def contains(self, v) -> bool:
        if self.kind == "categorical":
            return v in self.choices
        return self.low <= v <= self.high


@dataclass(frozen=True)
class SearchSpace:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        if not self.dimensions:
            raise ConfigurationError("search space has no dimensions")

    def validate(self, assignment: dict):
        for d in self.dimensions:
            if d.name not in assignment:
                raise CaneError(f"assignment missing dimension {d.name!r}")
            if not d.contains(assignment[d.name]):
                raise CaneError(f"dimension {d.name!r}: value {assignment[d.name]!r} out of bounds")


def default_space() -> SearchSpace:
    """The eight-dimensional fine-tuning space searched for every backbone."""
    return SearchSpace((
        Dimension("lr", "loguniform", 1e-5, 1e-2),
        Dimension("optimizer", "categorical", choices=("Adam", "AdamW")),
        Dimension("weight_decay", "loguniform", 1e-6, 1e-2),
        Dimension("dropout1", "uniform", 0.1, 0.6),
        Dimension("dropout2", "uniform", 0.1, 0.6),
        Dimension("freeze_ratio", "uniform", 0.0, 0.8),
        Dimension("label_smoothing", "uniform", 0.0, 0.2),
        Dimension("grad_clip", "uniform", 0.5, 2.0),
    ))


@dataclass
class TrialRecord:
    assignment: dict
    objective: float
    state: str = "completed"  # completed | pruned


@dataclass(frozen=True)
class TpeConfig:
    gamma: float = 0.25
    n_startup: int = 10
    n_candidates: int = 24
    bandwidth_floor_frac: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError("gamma must be in (0, 1)")
        if self.n_startup < 1:
            raise ConfigurationError("n_startup must be >= 1")


# ---------------------------------------------------------------------------
# TPE internals

def _trunc_norm_mass(low, high, mu, sigma):
    """Integral of N(mu, sigma) over [low, high]."""
    a = (low - mu) / (sigma * SQRT2)
    b = (high - mu) / (sigma * SQRT2)
    return 0.5 * (math.erf(b) - math.erf(a))


class _NumericKde:
    """Per-dimension Gaussian mixture over observations, truncated to bounds.

    The mixture carries one extra uniform component over the full range. It
    keeps density ratios bounded, so a single dimension with a tight cluster
    cannot dominate the candidate score.
    """

    def __init__(self, dim: Dimension, values: list[float], floor_frac: float):
        self.low = dim.transform(dim.low)
        self.high = dim.transform(dim.high)
        self.centers = np.asarray([dim.transform(v) for v in values], dtype=np.float64)
        self.span = self.high - self.low
        n = max(len(self.centers), 1)
        std = float(self.centers.std()) if len(self.centers) > 1 else 0.0
        # Scott-style rule with two floors: a hard fraction of the range, and a
        # count-dependent clip so small clusters cannot freeze exploration
        self.bw = max(std * n ** (-0.2),
                      self.span / min(100.0, 1.0 + len(self.centers)),
                      floor_frac * self.span)

    def sample(self, rng: np.random.Generator) -> float:
        idx = int(rng.integers(len(self.centers) + 1))
        if idx == len(self.centers):  # uniform prior component
            return float(rng.uniform(self.low, self.high))
        center = self.centers[idx]
        for _ in range(100):
            x = rng.normal(center, self.bw)
            if self.low <= x <= self.high:
                return float(x)
        return float(np.clip(rng.normal(center, self.bw), self.low, self.high))

    def log_density(self, x: float) -> float:
        total = 1.0 / self.span  # uniform prior component
        for mu in self.centers:
            z = _trunc_norm_mass(self.low, self.high, mu, self.bw)
            if z <= 0.0:
                continue
            pdf = math.exp(-0.5 * ((x - mu) / self.bw) ** 2) / (self.bw * math.sqrt(2 * math.pi))
            total += pdf / z
        total /= len(self.centers) + 1
        return math.log(total)


class _CategoricalModel:
    """Smoothed frequency table with a +1 prior."""

    def __init__(self, dim: Dimension, values: list[str]):
        counts = {c: 1 for c in dim.choices}
        for v in values:
            counts[v] += 1
        total = sum(counts.values())
        self.probs = {c: counts[c] / total for c in dim.choices}
        self.choices = dim.choices

    def sample(self, rng: np.random.Generator) -> str:
        p = np.asarray([self.probs[c] for c in self.choices])
        return self.choices[int(rng.choice(len(self.choices), p=p))]

    def log_density(self, v: str) -> float:
        return math.log(self.probs[v])


def _uniform_draw(space: SearchSpace, rng: np.random.Generator) -> dict:
    out = {}
    for d in space.dimensions:
        if d.kind == "categorical":
            out[d.name] = d.choices[int(rng.integers(len(d.choices)))]
        else:
            t = rng.uniform(d.transform(d.low), d.transform(d.high))
            out[d.name] = float(d.untransform(t))
    return out


def suggest(history: list[TrialRecord], space: SearchSpace,
            config: TpeConfig | None = None) -> dict:
    """Propose the next assignment from the trial history.

    Random draws until n_startup completed trials exist; afterwards fits l(x)
    on the best ceil(gamma*N) trials and g(x) on the rest, samples candidates
    from l, and returns the candidate maximizing l(x)/g(x).
    """
    config = config or TpeConfig()
    completed = [t for t in history if t.state == "completed"]
    rng = np.random.default_rng([config.seed, len(history)])

    if len(completed) < config.n_startup:
        return _uniform_draw(space, rng)

    ranked = sorted(completed, key=lambda t: t.objective)
    n_good = math.ceil(config.gamma * len(ranked))
    good, bad = ranked[:n_good], ranked[n_good:]
    if not bad:
        return _uniform_draw(space, rng)

    models = {}
    for d in space.dimensions:
        gv = [t.assignment[d.name] for t in good]
        bv = [t.assignment[d.name] for t in bad]
        if d.kind == "categorical":
            models[d.name] = (_CategoricalModel(d, gv), _CategoricalModel(d, bv))
        else:
            models[d.name] = (
                _NumericKde(d, gv, config.bandwidth_floor_frac),
                _NumericKde(d, bv, config.bandwidth_floor_frac),
            )

    best_score = -math.inf
    best_candidate = None
    for _ in range(config.n_candidates):
        candidate = {}
        score = 0.0
        for d in space.dimensions:
            lmodel, gmodel = models[d.name]
            if d.kind == "categorical":
                v = lmodel.sample(rng)
                score += lmodel.log_density(v) - gmodel.log_density(v)
                candidate[d.name] = v
            else:
                x = lmodel.sample(rng)
                score += lmodel.log_density(x) - gmodel.log_density(x)
                candidate[d.name] = float(d.untransform(x))
        if score > best_score:
            best_score = score
            best_candidate = candidate
    return best_candidate


def observe(history: list[TrialRecord], record: TrialRecord,
            space: SearchSpace | None = None) -> list[TrialRecord]:
    """Append a trial, validating bounds against the space when given."""
    if space is not None:
        space.validate(record.assignment)
    return [*history, record]


def best(history: list[TrialRecord]) -> TrialRecord:
    completed = [t for t in history if t.state == "completed"]
    if not completed:
        raise CaneError("no completed trials")
    return min(completed, key=lambda t: t.objective)


# ---------------------------------------------------------------------------
# study persistence (append-only JSON lines)

def append_trial(path, record: TrialRecord):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")


def load_study(path) -> list[TrialRecord]:
    p = Path(path)
    if not p.exists():
        return []
    out = []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(TrialRecord(**json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# training-protocol math

@dataclass(frozen=True)
class ProtocolConfig:
    batch_size: int = 32
    max_epochs: int = 100
    trial_epochs: int = 25
    trials: int = 20
    patience: int = 10

    def __post_init__(self):
        if self.patience < 1 or self.max_epochs < 1:
            raise ConfigurationError("patience and epochs must be >= 1")


def cosine_lr(t: int, total: int, eta_max: float, eta_min: float = 0.0) -> float:
    """Cosine annealing: eta_min + (eta_max - eta_min) * (1 + cos(pi*t/T)) / 2."""
    if total < 1:
        raise CaneError("total epochs must be >= 1")
    if not 0 <= t <= total:
        raise CaneError(f"epoch {t} outside [0, {total}]")
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + math.cos(math.pi * t / total))


@dataclass
class EarlyStopState:
    patience: int = 10
    best: float = math.inf
    counter: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1")


IMPROVEMENT_TOL = 1e-8


def early_stop_step(state: EarlyStopState, epoch_loss: float) -> tuple[EarlyStopState, bool]:
    """Advance early stopping one epoch; stop on the patience-th non-improvement."""
    if epoch_loss < state.best - IMPROVEMENT_TOL:
        new = EarlyStopState(state.patience, epoch_loss, 0)
        return new, False
    new = EarlyStopState(state.patience, state.best, state.counter + 1)
    return new, new.counter >= state.patience


def label_smooth_ce(logits, true_class: int, epsilon: float) -> float:
    """Cross-entropy against (1-eps)*onehot + eps/K uniform targets."""
    if not 0.0 <= epsilon < 1.0:
        raise CaneError("epsilon must lie in [0, 1)")
    z = np.asarray(logits, dtype=np.float64)
    k = z.shape[-1]
    if not 0 <= true_class < k:
        raise CaneError(f"class {true_class} out of range [0, {k})")
    logp = z - z.max()
    logp = logp - math.log(np.exp(logp).sum())
    target = np.full(k, epsilon / k)
    target[true_class] += 1.0 - epsilon
    return float(-(target * logp).sum())


def clip_scale(global_norm: float, max_norm: float) -> float:
    """Gradient clipping scale factor: min(1, max_norm / global_norm)."""
    if global_norm < 0 or max_norm <= 0:
        raise CaneError("norms must be non-negative, max_norm positive")
    if global_norm == 0.0:
        return 1.0
    return min(1.0, max_norm / global_norm)
