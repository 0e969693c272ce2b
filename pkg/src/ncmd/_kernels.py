"""Projected-gradient-descent kernels.

Two implementations of the same algorithm: a loop-style kernel compiled
with numba and a vectorized pure-numpy twin. The active one is chosen by
the NCMD_BACKEND env var: "numba", "numpy", or "auto" (default; numba when
importable). Both run the identical iteration: Armijo backtracking from
step 1.0 with factor 0.5 and sufficient decrease 1e-4, projection
H <- max(H, 0) after every trial step, stop on projected-gradient norm or
relative objective change.

Y is the (N, N*K) target matrix aligned with class-major feature columns;
lw and lhk are the ridge weights on |W|^2 and |H|^2 (lhk already divided
by K).
"""

from __future__ import annotations

import os

import numpy as np

ARMIJO_C = 1e-4
ARMIJO_FACTOR = 0.5
STEP_INIT = 1.0
STEP_MIN = 1e-20

_ENV = os.environ.get("NCMD_BACKEND", "auto").lower()
if _ENV not in ("auto", "numba", "numpy"):
    raise ValueError(f"NCMD_BACKEND must be auto, numba or numpy, got {_ENV!r}")

HAS_NUMBA = False
if _ENV in ("auto", "numba"):
    try:
        from numba import njit
        HAS_NUMBA = True
    except ImportError:
        if _ENV == "numba":
            raise ImportError("NCMD_BACKEND=numba but numba is not importable")


def backend_name() -> str:
    """Backend the env var resolves to."""
    return "numba" if (HAS_NUMBA and _ENV != "numpy") else "numpy"


def _objective_np(W, H, Y, lw, lhk):
    Z = W @ H
    mx = Z.max(axis=0)
    loss = (np.log(np.exp(Z - mx).sum(axis=0)) + mx).sum() - (Y * Z).sum()
    loss /= Y.shape[1]
    return loss + lw * (W * W).sum() + lhk * (H * H).sum()


def _obj_grad_np(W, H, Y, lw, lhk):
    NK = Y.shape[1]
    Z = W @ H
    mx = Z.max(axis=0)
    E = np.exp(Z - mx)
    S = E.sum(axis=0)
    loss = ((np.log(S) + mx).sum() - (Y * Z).sum()) / NK
    obj = loss + lw * (W * W).sum() + lhk * (H * H).sum()
    D = (E / S - Y) / NK
    gW = D @ H.T + 2.0 * lw * W
    gH = W.T @ D + 2.0 * lhk * H
    return obj, gW, gH


def _pgd_np(W0, H0, Y, lw, lhk, max_iter, tol_grad, tol_obj):
    W = W0.copy()
    H = np.maximum(H0, 0.0)
    obj, gW, gH = _obj_grad_np(W, H, Y, lw, lhk)
    steps = 0
    converged = False
    while steps < max_iter:
        gHp = np.where(H > 0.0, gH, np.minimum(gH, 0.0))
        pg = np.sqrt((gW * gW).sum() + (gHp * gHp).sum())
        if pg <= tol_grad:
            converged = True
            break
        t = STEP_INIT
        accepted = False
        while t >= STEP_MIN:
            Wn = W - t * gW
            Hn = np.maximum(H - t * gH, 0.0)
            objn = _objective_np(Wn, Hn, Y, lw, lhk)
            dec = (gW * (Wn - W)).sum() + (gH * (Hn - H)).sum()
            if objn <= obj + ARMIJO_C * dec:
                accepted = True
                break
            t *= ARMIJO_FACTOR
        if not accepted:
            break
        steps += 1
        rel = (obj - objn) / max(1.0, abs(obj))
        W, H, obj = Wn, Hn, objn
        _, gW, gH = _obj_grad_np(W, H, Y, lw, lhk)
        if rel <= tol_obj:
            converged = True
            break
    gHp = np.where(H > 0.0, gH, np.minimum(gH, 0.0))
    pg = np.sqrt((gW * gW).sum() + (gHp * gHp).sum())
    return W, H, obj, pg, steps, converged


if HAS_NUMBA:

    @njit(cache=True)
    def _objective_nb(W, H, Y, lw, lhk):  # pragma: no cover - numba
        N = W.shape[0]
        NK = H.shape[1]
        Z = W @ H
        loss = 0.0
        for j in range(NK):
            mx = Z[0, j]
            for m in range(1, N):
                if Z[m, j] > mx:
                    mx = Z[m, j]
            s = 0.0
            for m in range(N):
                s += np.exp(Z[m, j] - mx)
                loss -= Y[m, j] * Z[m, j]
            loss += np.log(s) + mx
        obj = loss / NK
        for m in range(N):
            for i in range(W.shape[1]):
                obj += lw * W[m, i] * W[m, i]
        for i in range(H.shape[0]):
            for j in range(NK):
                obj += lhk * H[i, j] * H[i, j]
        return obj

    @njit(cache=True)
    def _obj_grad_nb(W, H, Y, lw, lhk):  # pragma: no cover - numba
        N = W.shape[0]
        NK = H.shape[1]
        Z = W @ H
        D = np.empty((N, NK))
        loss = 0.0
        for j in range(NK):
            mx = Z[0, j]
            for m in range(1, N):
                if Z[m, j] > mx:
                    mx = Z[m, j]
            s = 0.0
            for m in range(N):
                e = np.exp(Z[m, j] - mx)
                D[m, j] = e
                s += e
                loss -= Y[m, j] * Z[m, j]
            loss += np.log(s) + mx
            for m in range(N):
                D[m, j] = (D[m, j] / s - Y[m, j]) / NK
        obj = loss / NK
        for m in range(N):
            for i in range(W.shape[1]):
                obj += lw * W[m, i] * W[m, i]
        for i in range(H.shape[0]):
            for j in range(NK):
                obj += lhk * H[i, j] * H[i, j]
        gW = D @ H.T + 2.0 * lw * W
        gH = W.T @ D + 2.0 * lhk * H
        return obj, gW, gH

    @njit(cache=True)
    def _pgd_nb(W0, H0, Y, lw, lhk, max_iter, tol_grad, tol_obj):  # pragma: no cover - numba
        W = W0.copy()
        H = np.maximum(H0, 0.0)
        obj, gW, gH = _obj_grad_nb(W, H, Y, lw, lhk)
        steps = 0
        converged = False
        while steps < max_iter:
            gHp = np.where(H > 0.0, gH, np.minimum(gH, 0.0))
            pg = np.sqrt(np.sum(gW * gW) + np.sum(gHp * gHp))
            if pg <= tol_grad:
                converged = True
                break
            t = STEP_INIT
            accepted = False
            objn = obj
            Wn = W
            Hn = H
            while t >= STEP_MIN:
                Wn = W - t * gW
                Hn = np.maximum(H - t * gH, 0.0)
                objn = _objective_nb(Wn, Hn, Y, lw, lhk)
                dec = np.sum(gW * (Wn - W)) + np.sum(gH * (Hn - H))
                if objn <= obj + ARMIJO_C * dec:
                    accepted = True
                    break
                t *= ARMIJO_FACTOR
            if not accepted:
                break
            steps += 1
            rel = (obj - objn) / max(1.0, abs(obj))
            W = Wn
            H = Hn
            obj = objn
            _, gW, gH = _obj_grad_nb(W, H, Y, lw, lhk)
            if rel <= tol_obj:
                converged = True
                break
        gHp = np.where(H > 0.0, gH, np.minimum(gH, 0.0))
        pg = np.sqrt(np.sum(gW * gW) + np.sum(gHp * gHp))
        return W, H, obj, pg, steps, converged


def pgd_minimize(W0, H0, Y, lw, lhk, max_iter, tol_grad, tol_obj, backend=None):
    """Run PGD on the selected backend.

    Returns (W, H, objective, projected_grad_norm, steps, converged).
    """
    name = backend or backend_name()
    if name == "numba":
        if not HAS_NUMBA:
            raise ValueError("numba backend requested but numba is not available")
        return _pgd_nb(W0, H0, Y, lw, lhk, max_iter, tol_grad, tol_obj)
    if name == "numpy":
        return _pgd_np(W0, H0, Y, lw, lhk, max_iter, tol_grad, tol_obj)
    raise ValueError(f"unknown backend {name!r}")
