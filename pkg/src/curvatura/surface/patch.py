"""Parametric patches phi: D -> M^3(c) and their derivative suppliers."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from curvatura.spaceform import SpaceForm
from curvatura.surface.domains import Domain

jax.config.update("jax_enable_x64", True)


class PatchError(ValueError):
    """Invalid patch data (non-immersion, point off the model, ...)."""


@dataclass(frozen=True, eq=False)
class ParametricPatch:
    """An immersed patch over a planar domain.

    ``position`` maps a parameter point ``uv`` of shape (2,) to an ambient
    vector.  When ``autodiff`` is true it must be written with ``jax.numpy``
    and derivatives are exact; otherwise it is a numpy callable on arrays of
    shape (n, 2) and derivatives use centred order-4 finite differences with
    step ``h_fd`` (default ``1e-4 * domain.scale``).
    """

    sf: SpaceForm
    domain: Domain
    position: Callable
    orientation_sign: int = 1
    name: str = "patch"
    params: dict = field(default_factory=dict)
    autodiff: bool = True
    h_fd: float | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def flipped(self) -> "ParametricPatch":
        return replace(self, orientation_sign=-self.orientation_sign)

    def with_orientation(self, sign: int) -> "ParametricPatch":
        if sign == self.orientation_sign:
            return self
        return replace(self, orientation_sign=int(sign))

    @property
    def fd_step(self) -> float:
        return self.h_fd if self.h_fd is not None else 1e-4 * self.domain.scale

    def evaluate(self, points) -> np.ndarray:
        return self.derivatives(points, order=0)[0]

    def derivatives(self, points, order: int = 2) -> list[np.ndarray]:
        """Partials up to ``order`` at ``points`` (n, 2).

        Returns ``[X, D1, D2, ...]`` with shapes (n, D), (n, D, 2),
        (n, D, 2, 2), ... (last axes index the parameter directions).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.autodiff:
            key = ("derivs", order)
            fn = self._cache.get(key)
            if fn is None:
                fn = batched_jit(derivative_stack(self.position, order))
                self._cache[key] = fn
            return [np.asarray(a) for a in fn(pts)]
        return _fd_derivatives(self.position, pts, order, self.fd_step)


# Low XLA optimisation: these kernels are compiled once per patch and run on a
# few thousand points, so compile time dominates.
_COMPILER_OPTIONS = {"xla_backend_optimization_level": 0, "xla_llvm_disable_expensive_passes": True}
_SMALL, _CHUNK = 64, 2048


class batched_jit:
    """Compile a per-point function for fixed batch sizes and map it over points.

    All positional arguments are arrays sharing the leading (point) axis.
    Inputs are padded by repeating the first row to ``_SMALL`` rows or to
    chunks of ``_CHUNK`` rows, so each kernel is compiled at most twice.
    """

    def __init__(self, one: Callable):
        self._jitted = jax.jit(jax.vmap(jax.jit(one)))
        self._exe: dict = {}
        self._lock = threading.Lock()

    def _run(self, blocks):
        key = tuple(b.shape for b in blocks)
        with self._lock:
            exe = self._exe.get(key)
            if exe is None:
                exe = self._jitted.lower(*blocks).compile(compiler_options=_COMPILER_OPTIONS)
                self._exe[key] = exe
        return exe(*blocks)

    def __call__(self, *arrays):
        arrs = [np.asarray(a, dtype=float) for a in arrays]
        n = arrs[0].shape[0]
        size = _SMALL if n <= _SMALL else _CHUNK
        outs = []
        for start in range(0, max(n, 1), size):
            blocks = []
            for a in arrs:
                blk = a[start : start + size]
                m = blk.shape[0]
                if m < size:
                    blk = np.concatenate([blk, np.repeat(blk[:1], size - m, axis=0)], axis=0)
                blocks.append(jnp.asarray(blk))
            m = min(size, n - start)
            res = self._run(blocks)
            outs.append(jax.tree_util.tree_map(lambda x, m=m: np.asarray(x)[:m], res))
        if len(outs) == 1:
            return outs[0]
        return jax.tree_util.tree_map(lambda *x: np.concatenate(x, axis=0), *outs)


def derivative_stack(f: Callable, order: int) -> Callable:
    """uv -> (f, Df, D^2 f, ...) using forward-mode autodiff."""
    fns = [f]
    d = f
    for _ in range(order):
        d = jax.jacfwd(d)
        fns.append(d)

    def stack(uv):
        return tuple(fn(uv) for fn in fns)

    return stack


_W1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_W2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_OFFS = np.array([-2, -1, 0, 1, 2])


def _fd_derivatives(f, pts, order, h):
    X = np.asarray(f(pts), dtype=float)
    out = [X]
    if order == 0:
        return out
    n, D = X.shape

    def shifted(base, axis, k):
        q = base.copy()
        q[:, axis] += k * h
        return q

    def d1(g, base, axis):
        return sum(w * g(shifted(base, axis, k)) for w, k in zip(_W1, _OFFS) if w != 0.0) / h

    def d2(g, base, axis):
        return sum(w * g(shifted(base, axis, k)) for w, k in zip(_W2, _OFFS)) / h**2

    fx = lambda q: np.asarray(f(q), dtype=float)  # noqa: E731
    D1 = np.stack([d1(fx, pts, 0), d1(fx, pts, 1)], axis=-1)
    out.append(D1)
    if order == 1:
        return out
    D2 = np.empty((n, D, 2, 2))
    D2[..., 0, 0] = d2(fx, pts, 0)
    D2[..., 1, 1] = d2(fx, pts, 1)
    D2[..., 0, 1] = D2[..., 1, 0] = d1(lambda q: d1(fx, q, 1), pts, 0)
    out.append(D2)
    if order == 2:
        return out
    if order > 3:
        raise ValueError("finite-difference fallback supports order <= 3")
    fu = lambda q: d1(fx, q, 0)  # noqa: E731
    fv = lambda q: d1(fx, q, 1)  # noqa: E731
    D3 = np.empty((n, D, 2, 2, 2))
    uuu = d2(fu, pts, 0)
    vvv = d2(fv, pts, 1)
    uuv = d2(fv, pts, 0)
    uvv = d2(fu, pts, 1)
    for idx in np.ndindex(2, 2, 2):
        nv = sum(idx)
        D3[(Ellipsis,) + idx] = (uuu, uuv, uvv, vvv)[nv]
    out.append(D3)
    return out
