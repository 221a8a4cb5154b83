"""Action-value network, hand-built on numpy with explicit backprop.

Three convolutional branches (shared architecture, separate weights) read the
top-image history and the positive/negative proxy blocks as single-channel
2-D maps (rows x feature-dim). Each branch is conv(8 filters, 3x3, stride 1,
same padding) -> ReLU -> 2x2 max-pool. Branch outputs are flattened,
concatenated with the flattened action history, and pushed through three
fully connected layers (ReLU, ReLU, linear) to produce one Q-value per
action. Gradients are derived analytically and are finite-difference checked
in the test suite.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

__all__ = ["QNetConfig", "QNetwork", "RMSProp", "LayerCheck", "gradient_check"]

_BRANCHES = ("top", "pos", "neg")


@dataclass(frozen=True)
class QNetConfig:
    d: int
    history: int = 3
    top_k: int = 5
    filters: int = 8
    kernel: int = 3
    pool: int = 2
    fc1: int = 256
    fc2: int = 64
    n_actions: int = 3

    def branch_rows(self, branch: str) -> int:
        return self.history * self.top_k if branch == "top" else self.top_k

    def branch_flat(self, branch: str) -> int:
        r, c = self.branch_rows(branch), self.d
        return self.filters * (r // self.pool) * (c // self.pool)

    @property
    def concat_size(self) -> int:
        return sum(self.branch_flat(b) for b in _BRANCHES) + self.history * self.n_actions


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class QNetwork:
    """Q(s, a) for the three interaction actions."""

    def __init__(self, config: QNetConfig, seed: int = 0):
        cfg = config
        if cfg.kernel != 3 or cfg.pool != 2:
            raise ValueError("architecture is fixed to 3x3 kernels with 2x2 pooling")
        for b in _BRANCHES:
            if cfg.branch_rows(b) < cfg.pool or cfg.d < cfg.pool:
                raise ValueError("branch maps too small to pool")
        self.config = cfg
        rng = np.random.default_rng([int(seed), 0x09E7])
        self.params: dict[str, np.ndarray] = {}
        for b in _BRANCHES:
            fan_in = cfg.kernel * cfg.kernel
            self.params[f"{b}_w"] = rng.normal(0.0, np.sqrt(2.0 / fan_in),
                                               size=(cfg.filters, cfg.kernel, cfg.kernel))
            self.params[f"{b}_b"] = np.zeros(cfg.filters)
        sizes = [(cfg.concat_size, cfg.fc1), (cfg.fc1, cfg.fc2), (cfg.fc2, cfg.n_actions)]
        for i, (n_in, n_out) in enumerate(sizes, start=1):
            self.params[f"fc{i}_w"] = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_in, n_out))
            self.params[f"fc{i}_b"] = np.zeros(n_out)
        # zero output layer: initial Q-values are exactly equal, so early greedy
        # choices fall to the action-index tie-break instead of init noise
        self.params["fc3_w"] = np.zeros_like(self.params["fc3_w"])

    # ----- convolution branch -----

    def _branch_forward(self, x: np.ndarray, w: np.ndarray, b: np.ndarray,
                        want_argmax: bool = True) -> dict:
        """x: (B, R, C) -> pooled activations (B, F, R//2, C//2) plus cache.

        im2col: every 3x3 patch becomes one row, so the convolution is a
        single matmul against the (F, 9) weight matrix.
        """
        bsz, rows, cols = x.shape
        f = self.config.filters
        xp = np.zeros((bsz, rows + 2, cols + 2))
        xp[:, 1:-1, 1:-1] = x
        windows = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(1, 2))
        patches = windows.reshape(bsz * rows * cols, 9)
        z = (patches @ w.reshape(f, 9).T + b).reshape(bsz, rows, cols, f)
        z = np.ascontiguousarray(z.transpose(0, 3, 1, 2))
        a = _relu(z)
        r2, c2 = rows // 2, cols // 2
        win = a[:, :, :2 * r2, :2 * c2].reshape(bsz, f, r2, 2, c2, 2)
        win = win.transpose(0, 1, 2, 4, 3, 5).reshape(bsz, f, r2, c2, 4)
        if not want_argmax:  # inference: max alone, no routing indices
            return {"pooled": win.max(axis=-1)}
        amax = np.argmax(win, axis=-1)
        pooled = np.take_along_axis(win, amax[..., None], axis=-1)[..., 0]
        return {"patches": patches, "z": z, "amax": amax, "pooled": pooled,
                "shape": (rows, cols)}

    def _branch_backward(self, cache: dict, d_pooled: np.ndarray,
                         w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of the conv weights/bias for one branch."""
        patches, z, amax = cache["patches"], cache["z"], cache["amax"]
        rows, cols = cache["shape"]
        bsz = z.shape[0]
        f = self.config.filters
        r2, c2 = rows // 2, cols // 2
        d_win = np.zeros((bsz, f, r2, c2, 4))
        np.put_along_axis(d_win, amax[..., None], d_pooled[..., None], axis=-1)
        d_a = np.zeros((bsz, f, rows, cols))
        d_a[:, :, :2 * r2, :2 * c2] = (
            d_win.reshape(bsz, f, r2, c2, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(bsz, f, 2 * r2, 2 * c2)
        )
        d_z = d_a * (z > 0)
        d_z_flat = d_z.transpose(0, 2, 3, 1).reshape(bsz * rows * cols, f)
        d_w = (d_z_flat.T @ patches).reshape(f, 3, 3)
        d_b = d_z.sum(axis=(0, 2, 3))
        return d_w, d_b

    # ----- full network -----

    def forward(self, top: np.ndarray, pos: np.ndarray, neg: np.ndarray,
                actions: np.ndarray, want_cache: bool = False):
        """Batched forward pass.

        top: (B, H*K, d); pos/neg: (B, K, d); actions: (B, H*A) flattened
        one-hot history. Returns (B, n_actions) Q-values, plus the cache
        needed for backward() when requested.
        """
        cfg = self.config
        bsz = top.shape[0]
        expect = {
            "top": (bsz, cfg.history * cfg.top_k, cfg.d),
            "pos": (bsz, cfg.top_k, cfg.d),
            "neg": (bsz, cfg.top_k, cfg.d),
        }
        inputs = {"top": top, "pos": pos, "neg": neg}
        for name, arr in inputs.items():
            if arr.shape != expect[name]:
                raise ValueError(f"{name} branch shape {arr.shape} != {expect[name]}")
        if actions.shape != (bsz, cfg.history * cfg.n_actions):
            raise ValueError(
                f"action history shape {actions.shape} != {(bsz, cfg.history * cfg.n_actions)}"
            )

        caches = {}
        flats = []
        for b in _BRANCHES:
            c = self._branch_forward(inputs[b], self.params[f"{b}_w"], self.params[f"{b}_b"],
                                     want_argmax=want_cache)
            caches[b] = c
            flats.append(c["pooled"].reshape(bsz, -1))
        concat = np.concatenate(flats + [actions], axis=1)
        assert concat.shape[1] == cfg.concat_size

        z1 = concat @ self.params["fc1_w"] + self.params["fc1_b"]
        a1 = _relu(z1)
        z2 = a1 @ self.params["fc2_w"] + self.params["fc2_b"]
        a2 = _relu(z2)
        q = a2 @ self.params["fc3_w"] + self.params["fc3_b"]
        if not want_cache:
            return q
        caches.update({"concat": concat, "z1": z1, "a1": a1, "z2": z2, "a2": a2})
        return q, caches

    def backward(self, caches: dict, d_q: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss wrt every parameter, given dLoss/dQ."""
        cfg = self.config
        bsz = d_q.shape[0]
        grads: dict[str, np.ndarray] = {}
        a1, a2, z1, z2, concat = (caches[k] for k in ("a1", "a2", "z1", "z2", "concat"))
        grads["fc3_w"] = a2.T @ d_q
        grads["fc3_b"] = d_q.sum(axis=0)
        d_a2 = d_q @ self.params["fc3_w"].T
        d_z2 = d_a2 * (z2 > 0)
        grads["fc2_w"] = a1.T @ d_z2
        grads["fc2_b"] = d_z2.sum(axis=0)
        d_a1 = d_z2 @ self.params["fc2_w"].T
        d_z1 = d_a1 * (z1 > 0)
        grads["fc1_w"] = concat.T @ d_z1
        grads["fc1_b"] = d_z1.sum(axis=0)
        d_concat = d_z1 @ self.params["fc1_w"].T

        offset = 0
        for b in _BRANCHES:
            flat = cfg.branch_flat(b)
            rows = cfg.branch_rows(b)
            d_pooled = d_concat[:, offset:offset + flat].reshape(
                bsz, cfg.filters, rows // 2, cfg.d // 2
            )
            offset += flat
            d_w, d_b = self._branch_backward(caches[b], d_pooled, self.params[f"{b}_w"])
            grads[f"{b}_w"] = d_w
            grads[f"{b}_b"] = d_b
        return grads

    # ----- persistence -----

    def params_hash(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.params):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.params[name]).tobytes())
        return h.hexdigest()

    def copy_params(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: dict[str, np.ndarray]) -> None:
        if set(params) != set(self.params):
            raise ValueError("parameter set mismatch")
        for k, v in params.items():
            if v.shape != self.params[k].shape:
                raise ValueError(f"shape mismatch for {k}: {v.shape}")
            self.params[k] = np.asarray(v, dtype=np.float64).copy()

    def save(self, path, extra: dict | None = None) -> None:
        meta = {"format": "mixsearch-qnet", "version": 1,
                "config": self.config.__dict__, "params_hash": self.params_hash()}
        if extra:
            meta.update(extra)
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
                 **self.params)

    @classmethod
    def load(cls, path) -> "QNetwork":
        with np.load(path, allow_pickle=False) as blob:
            meta = json.loads(bytes(blob["__meta__"]).decode())
            if meta.get("format") != "mixsearch-qnet":
                raise ValueError(f"{path} is not a checkpoint file")
            net = cls(QNetConfig(**meta["config"]), seed=0)
            net.load_params({k: blob[k] for k in blob.files if k != "__meta__"})
        if net.params_hash() != meta["params_hash"]:
            raise ValueError("checkpoint hash mismatch: file damaged")
        return net


class RMSProp:
    """Root-mean-square propagation with per-parameter caches."""

    def __init__(self, lr: float = 1e-5, decay: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.cache: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, g in grads.items():
            c = self.cache.get(name)
            if c is None:
                c = np.zeros_like(g)
                self.cache[name] = c
            # in-place: c = decay*c + (1-decay)*g^2; p -= lr*g/(sqrt(c)+eps)
            c *= self.decay
            sq = np.multiply(g, g)
            sq *= 1.0 - self.decay
            c += sq
            denom = np.sqrt(c)
            denom += self.eps
            update = np.divide(g, denom, out=denom)
            update *= self.lr
            params[name] -= update


@dataclass
class LayerCheck:
    """Finite-difference comparison summary for one parameter tensor."""

    max_rel_err: float
    checked: int
    skipped: int


def gradient_check(net: QNetwork, top, pos, neg, actions, taken, targets,
                   h: float = 1e-4, samples_per_layer: int = 100,
                   seed: int = 0) -> dict[str, LayerCheck]:
    """Compare analytic gradients against central finite differences.

    Loss is the mean squared error between Q(s, taken action) and the target
    values. For each parameter tensor, entries are probed in seeded random
    order until ``samples_per_layer`` valid probes are collected (or the
    tensor is exhausted; small tensors are probed entirely).

    A probe whose central difference is inconsistent between step sizes h
    and h/2 sits on a ReLU/max-pool kink inside the h-ball, where finite
    differencing is not a valid oracle; such probes are skipped and counted.
    A wrong analytic gradient cannot hide this way: it disagrees with a
    *step-size-consistent* finite difference and still fails.
    """
    rng = np.random.default_rng([int(seed), 0x96AD])
    bsz = top.shape[0]

    def loss() -> float:
        q = net.forward(top, pos, neg, actions)
        err = q[np.arange(bsz), taken] - targets
        return float(np.mean(err * err))

    q, caches = net.forward(top, pos, neg, actions, want_cache=True)
    err = q[np.arange(bsz), taken] - targets
    d_q = np.zeros_like(q)
    d_q[np.arange(bsz), taken] = 2.0 * err / bsz
    grads = net.backward(caches, d_q)

    report: dict[str, LayerCheck] = {}
    for name, p in net.params.items():
        flat = p.reshape(-1)
        g_flat = grads[name].reshape(-1)
        order = rng.permutation(p.size)
        worst = 0.0
        checked = 0
        skipped = 0
        for i in order:
            if checked >= samples_per_layer:
                break
            keep = flat[i]

            def central(step: float) -> float:
                flat[i] = keep + step
                up = loss()
                flat[i] = keep - step
                down = loss()
                flat[i] = keep
                return (up - down) / (2.0 * step)

            fd = central(h)
            an = g_flat[i]
            if abs(fd) <= 1e-7 and abs(an) <= 1e-7:
                checked += 1  # dead path: both sides agree on (near-)zero
                continue
            fd_half = central(h / 2.0)
            # smooth points agree to ~1e-8 relative across step sizes; a kink
            # inside the h-ball shows up orders of magnitude above this
            if abs(fd - fd_half) > 1e-6 * max(abs(fd), abs(fd_half)):
                skipped += 1
                continue
            if abs(fd - an) <= 1e-9:
                rel = 0.0
            else:
                rel = abs(fd - an) / max(abs(fd), abs(an))
            worst = max(worst, rel)
            checked += 1
        report[name] = LayerCheck(max_rel_err=worst, checked=checked, skipped=skipped)
    return report
