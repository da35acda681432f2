"""Numerical checks of the eviction theory.

Three suites:

* ``lemma1``: masking logits before softmax equals renormalizing the
  post-softmax weights over the retained entries.
* ``bound``: on a toy stack where each layer's attention output is the next
  layer's input, the L1 distance between compressed and uncompressed final
  outputs stays below ``2 C_L (1 - prod_l sum_i I_i A_i)``.
* ``greedy``: exhaustive search for the best product-of-sums selection
  compared against global top-K and a marginal-gain greedy.

Everything here runs in float64 numpy and deliberately avoids the float32
kernels in :mod:`artk.tensor`, so it can serve as an independent reference.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from artk.errors import InputError
from artk.rng import SplitMix64, derive_seed

GREEDY_EXPONENT = 1.0 - 1.0 / math.e
BRUTE_FORCE_LIMIT = 22


def default_workers() -> int:
    env = os.environ.get("ARTK_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"ARTK_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _map_trials(fn, trials: int, workers: int):
    if workers <= 1 or trials < 2:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials)))


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()


# --- renormalization identity -------------------------------------------------


def _check_mask(I) -> np.ndarray:
    I = np.asarray(I)
    if not np.all((I == 0) | (I == 1)):
        raise InputError("mask entries must be 0 or 1")
    if not I.any():
        raise InputError("mask drops every entry")
    return I.astype(bool)


def masked_softmax_reference(logits, I) -> np.ndarray:
    """Softmax with dropped logits set to -inf."""
    keep = _check_mask(I)
    x = np.where(keep, np.asarray(logits, dtype=np.float64), -np.inf)
    return _softmax(x)


def renormalized_weights(A_hat, I) -> np.ndarray:
    """``(A_hat * I) / ||A_hat * I||_1``."""
    keep = _check_mask(I)
    w = np.where(keep, np.asarray(A_hat, dtype=np.float64), 0.0)
    mass = w.sum()
    if mass <= 0:
        raise InputError("retained attention mass is zero")
    return w / mass


@dataclass
class RenormalizationReport:
    trial: int
    n: int
    max_abs_diff: float
    ok: bool


def check_renormalization(trials: int, seed: int, tol: float = 1e-6, workers: int = 1) -> list[RenormalizationReport]:
    def one(t: int) -> RenormalizationReport:
        rng = SplitMix64(derive_seed(seed, t))
        n = rng.integers(1, 9)
        logits = rng.normal(n) * 4.0
        I = (rng.uniform(n) < 0.6).astype(np.int64)
        if not I.any():
            I[rng.integers(0, n)] = 1
        diff = np.abs(masked_softmax_reference(logits, I) - renormalized_weights(_softmax(logits), I)).max()
        return RenormalizationReport(t, n, float(diff), bool(diff <= tol))

    return _map_trials(one, trials, workers)


# --- compression loss bound ---------------------------------------------------


@dataclass
class OracleInstance:
    """Single query token ``x`` flowing through L layers of cached K/V.

    Layer ``l`` computes ``q = x W_Q``, ``A = softmax(q K^T)`` and
    ``y = A V W_O``; ``y`` becomes the next layer's ``x``.
    """

    x: np.ndarray
    K: list[np.ndarray]
    V: list[np.ndarray]
    W_Q: list[np.ndarray]
    W_O: list[np.ndarray]

    @property
    def L(self) -> int:
        return len(self.K)

    def constants(self) -> list[float]:
        """``C_l``: induced inf-norm (max absolute row sum) of ``V W_O``."""
        return [float(np.abs(V @ W).sum(axis=1).max()) for V, W in zip(self.V, self.W_O)]

    def key_inf_norm(self) -> float:
        return float(max(np.abs(K).max() for K in self.K))

    def query_map_norm(self) -> float:
        return float(max(np.abs(W).sum(axis=1).max() for W in self.W_Q))

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "K": [k.tolist() for k in self.K],
            "V": [v.tolist() for v in self.V],
            "W_Q": [w.tolist() for w in self.W_Q],
            "W_O": [w.tolist() for w in self.W_O],
        }


def random_instance(rng: SplitMix64, L: int, n: int, d: int) -> OracleInstance:
    """Instance satisfying the bound's structural assumptions.

    Key entries lie in [-1, 1] and each ``W_Q`` has max absolute row sum 1, so
    a perturbation of ``x`` moves every logit by at most its L1 norm.
    """
    Ks, Vs, WQs, WOs = [], [], [], []
    for _ in range(L):
        Ks.append(rng.uniform((n, d)) * 2.0 - 1.0)
        Vs.append(rng.normal((n, d)))
        wq = rng.normal((d, d))
        WQs.append(wq / np.abs(wq).sum(axis=1).max())
        WOs.append(rng.normal((d, d)) / math.sqrt(d))
    return OracleInstance(rng.normal(d), Ks, Vs, WQs, WOs)


def _forward(inst: OracleInstance, choices=None) -> tuple[np.ndarray, list[np.ndarray]]:
    x = inst.x
    rows = []
    for l in range(inst.L):
        A = _softmax((x @ inst.W_Q[l]) @ inst.K[l].T)
        rows.append(A)
        I = np.ones(A.size, dtype=np.int64) if choices is None else choices[l]
        x = renormalized_weights(A, I) @ inst.V[l] @ inst.W_O[l]
    return x, rows


def attention_rows(inst: OracleInstance) -> list[np.ndarray]:
    """Uncompressed attention row of the query at every layer."""
    return _forward(inst)[1]


def compression_loss(inst: OracleInstance, choices) -> float:
    """``||y_L - y_hat_L||_1`` between the uncompressed and compressed passes."""
    choices = [_check_mask(I).astype(np.int64) for I in choices]
    if len(choices) != inst.L:
        raise InputError(f"need {inst.L} choice vectors, got {len(choices)}")
    y, _ = _forward(inst)
    y_hat, _ = _forward(inst, choices)
    return float(np.abs(y - y_hat).sum())


def retained_mass(A, I) -> float:
    """``sum_i I_i A_i``, computed as one minus the dropped mass (exactly 1 when keeping all)."""
    keep = np.asarray(I).astype(bool)
    return 1.0 - float(np.asarray(A, dtype=np.float64)[~keep].sum())


def loss_upper_bound(rows, choices, C) -> float:
    """``2 C_L (1 - prod_l sum_i I_i A_i)``; requires ``4 C_l > 1`` for every layer."""
    if any(4 * c <= 1 for c in C):
        raise InputError("bound assumes 4*C_l > 1 for every layer")
    prod = 1.0
    for A, I in zip(rows, choices):
        prod *= retained_mass(A, I)
    return 2.0 * C[-1] * (1.0 - prod)


@dataclass
class BoundReport:
    trial: int
    L: int
    n: int
    d: int
    C: list[float]
    D: float
    bound: float
    slack: float
    ok: bool
    four_c_ok: bool
    key_inf_ok: bool
    skipped: int
    choices: list[list[int]]
    instance: dict | None = None


def _random_choices(rng: SplitMix64, L: int, n: int) -> list[np.ndarray]:
    out = []
    for _ in range(L):
        I = (rng.uniform(n) < rng.uniform()).astype(np.int64)
        if not I.any():
            I[rng.integers(0, n)] = 1
        out.append(I)
    return out


def verify_bound(
    trials: int,
    seed: int,
    L_choices=(1, 2, 3),
    n_range=(3, 6),
    d_choices=(2, 4),
    keep_all: bool = False,
    workers: int = 1,
    max_resample: int = 1000,
) -> list[BoundReport]:
    """Check ``D <= bound`` on random assumption-satisfying instances.

    Instances violating ``4 C_l > 1`` are redrawn (counted in ``skipped``).
    Violating trials carry their full instance for inspection.
    """

    def one(t: int) -> BoundReport:
        rng = SplitMix64(derive_seed(seed, t))
        L = int(L_choices[rng.integers(0, len(L_choices))])
        n = rng.integers(n_range[0], n_range[1] + 1)
        d = int(d_choices[rng.integers(0, len(d_choices))])
        skipped = 0
        while True:
            inst = random_instance(rng, L, n, d)
            C = inst.constants()
            if all(4 * c > 1 for c in C):
                break
            skipped += 1
            if skipped > max_resample:
                raise InputError("could not draw an instance with 4*C_l > 1")
        if keep_all:
            choices = [np.ones(n, dtype=np.int64) for _ in range(L)]
        else:
            choices = _random_choices(rng, L, n)
        D = compression_loss(inst, choices)
        bound = loss_upper_bound(attention_rows(inst), choices, C)
        ok = D <= bound
        return BoundReport(
            trial=t, L=L, n=n, d=d, C=C, D=D, bound=bound, slack=bound - D, ok=ok,
            four_c_ok=True,
            key_inf_ok=inst.key_inf_norm() <= 1.0,
            skipped=skipped,
            choices=[c.tolist() for c in choices],
            instance=None if ok else inst.to_dict(),
        )

    return _map_trials(one, trials, workers)


# --- greedy vs exhaustive selection -------------------------------------------


def F_value(A, sets) -> float:
    """``prod_l sum_{i in sets[l]} A_l[i]``; an empty layer gives 0."""
    F = 1.0
    for a, s in zip(A, sets):
        total = 0.0
        for i in sorted(s):
            total += float(a[i])
        F *= total
    return F


def _ground(A) -> list[tuple[int, int]]:
    return [(l, i) for l, a in enumerate(A) for i in range(len(a))]


def _to_sets(A, picks) -> list[list[int]]:
    sets: list[list[int]] = [[] for _ in A]
    for l, i in picks:
        sets[l].append(i)
    return [sorted(s) for s in sets]


def brute_force_best_F(A, K: int) -> tuple[float, list[list[int]]]:
    """Exhaustive max of ``F`` over all K-subsets of the (layer, index) ground set.

    Returns the lexicographically smallest maximizer.
    """
    A = [np.asarray(a, dtype=np.float64) for a in A]
    ground = _ground(A)
    G = len(ground)
    if G > BRUTE_FORCE_LIMIT:
        raise InputError(f"ground set of {G} elements exceeds enumeration limit {BRUTE_FORCE_LIMIT}")
    if not 0 <= K <= G:
        raise InputError(f"K={K} outside [0, {G}]")
    if K == 0:
        return F_value(A, [[] for _ in A]), [[] for _ in A]
    combos = np.array(list(itertools.combinations(range(G), K)), dtype=np.int64)
    layer = np.array([l for l, _ in ground])
    value = np.array([A[l][i] for l, i in ground])
    F = np.ones(combos.shape[0])
    for l in range(len(A)):
        v = np.where(layer == l, value, 0.0)
        # sequential column adds reproduce F_value's summation order exactly
        s = np.zeros(combos.shape[0])
        for j in range(K):
            s = s + v[combos[:, j]]
        F = F * s
    best = int(np.argmax(F))
    return float(F[best]), _to_sets(A, [ground[g] for g in combos[best]])


def greedy_F(A, K: int, strategy: str = "marginal-gain-seeded") -> tuple[float, list[list[int]]]:
    """Heuristic selections of K elements.

    ``global-topk`` keeps the K largest values over all layers (ties to the
    earlier element). ``marginal-gain-seeded`` first takes each layer's
    maximum, then repeatedly adds the element maximizing
    ``log(S_l + A_e) - log(S_l)``.
    """
    A = [np.asarray(a, dtype=np.float64) for a in A]
    ground = _ground(A)
    if not 0 <= K <= len(ground):
        raise InputError(f"K={K} outside [0, {len(ground)}]")
    if strategy == "global-topk":
        flat = np.array([A[l][i] for l, i in ground])
        order = np.argsort(-flat, kind="stable")[:K]
        picks = [ground[g] for g in sorted(order)]
        sets = _to_sets(A, picks)
        return F_value(A, sets), sets
    if strategy != "marginal-gain-seeded":
        raise InputError(f"unknown strategy {strategy!r}")
    L = len(A)
    if K < L:
        raise InputError(f"seeded greedy needs K >= L ({K} < {L})")
    chosen = {(l, int(np.argmax(a))) for l, a in enumerate(A)}
    sums = [float(A[l][i]) for l, i in sorted(chosen)]
    while len(chosen) < K:
        best, best_gain = None, -math.inf
        for l, i in ground:
            if (l, i) in chosen:
                continue
            gain = math.log(sums[l] + A[l][i]) - math.log(sums[l]) if sums[l] > 0 else math.inf
            if gain > best_gain:
                best, best_gain = (l, i), gain
        chosen.add(best)
        sums[best[0]] += float(A[best[0]][best[1]])
    sets = _to_sets(A, chosen)
    return F_value(A, sets), sets


def meets_stated_ratio(F: float, F_opt: float, tol: float = 1e-12) -> bool:
    """``F >= F_opt ** (1 - 1/e)``."""
    return F >= F_opt**GREEDY_EXPONENT - tol


def meets_log_ratio(F: float, F_opt: float, tol: float = 1e-12) -> bool:
    """``log F >= log F_opt / (1 - 1/e)``, the (1-1/e) guarantee read on ``-log F``."""
    return F >= F_opt ** (1.0 / GREEDY_EXPONENT) - tol


@dataclass
class GreedyReport:
    trial: int
    L: int
    n: int
    K: int
    F_topk: float
    F_greedy: float
    F_opt: float
    ratio_ok: bool
    topk_ratio_ok: bool
    log_ratio_ok: bool
    coincide: bool
    sets_opt: list[list[int]] = field(default_factory=list)


def random_score_rows(rng: SplitMix64, L: int, n: int) -> list[np.ndarray]:
    return [_softmax(rng.normal(n) * 2.0) for _ in range(L)]


def greedy_instance(A, K: int, trial: int = 0) -> GreedyReport:
    F_opt, sets_opt = brute_force_best_F(A, K)
    F_top, sets_top = greedy_F(A, K, "global-topk")
    F_g, sets_g = greedy_F(A, K, "marginal-gain-seeded")
    return GreedyReport(
        trial=trial,
        L=len(A),
        n=max(len(a) for a in A),
        K=K,
        F_topk=F_top,
        F_greedy=F_g,
        F_opt=F_opt,
        ratio_ok=meets_stated_ratio(F_g, F_opt),
        topk_ratio_ok=meets_stated_ratio(F_top, F_opt),
        log_ratio_ok=meets_log_ratio(F_g, F_opt),
        coincide=sets_top == sets_g,
        sets_opt=sets_opt,
    )


def check_near_optimality(
    trials: int,
    seed: int,
    L_choices=(2, 3),
    n_range=(2, 4),
    K_max: int = 6,
    workers: int = 1,
) -> list[GreedyReport]:
    """Greedy strategies against exhaustive search on random softmax rows."""

    def one(t: int) -> GreedyReport:
        rng = SplitMix64(derive_seed(seed, t))
        L = int(L_choices[rng.integers(0, len(L_choices))])
        n = rng.integers(n_range[0], n_range[1] + 1)
        A = random_score_rows(rng, L, n)
        K = rng.integers(L, min(K_max, L * n) + 1)
        return greedy_instance(A, K, t)

    return _map_trials(one, trials, workers)


def as_dicts(reports) -> list[dict]:
    return [asdict(r) for r in reports]
