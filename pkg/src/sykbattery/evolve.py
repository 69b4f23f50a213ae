"""Exact double-quench dynamics on state vectors.

States are plain complex numpy arrays of length 2**(N/2); see
:mod:`sykbattery.spinrep` for the basis convention.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .disorder import derive_seed, sample_dense_couplings, sample_graph_couplings
from .graph import MajoranaGraph, make_graph
from .spinrep import PauliSum, build_battery, build_dense_charger, build_graph_charger

DEFAULT_TOL = 1e-10
MAX_KRYLOV = 40
MAX_HALVINGS = 12


class ConvergenceError(RuntimeError):
    pass


def ground_state(model: str, n: int) -> tuple[np.ndarray, float]:
    """Product ground state of the X or Z battery and its energy -N/2."""
    model = model.upper()
    if n < 2 or n % 2:
        raise ValueError(f"N must be even and >= 2, got {n}")
    nq = n // 2
    dim = 1 << nq
    if model == "Z":
        psi = np.zeros(dim, dtype=np.complex128)
        psi[dim - 1] = 1.0  # every qubit sigma^z = -1
    elif model == "X":
        basis = np.arange(dim, dtype=np.int64)
        sign = 1.0 - 2.0 * (np.bitwise_count(basis) & 1)
        psi = (sign / math.sqrt(dim)).astype(np.complex128)  # |-> on every qubit
    else:
        raise ValueError(f"battery model must be X or Z, got {model!r}")
    return psi, -n / 2


def battery_model(h0: PauliSum) -> Optional[str]:
    """'X' or 'Z' if ``h0`` is the corresponding battery, else None."""
    n = 2 * h0.n_qubits
    for model in ("X", "Z"):
        if h0.terms == build_battery(model, n).terms:
            return model
    return None


def _lanczos_exp(matvec, v: np.ndarray, dt: float, tol: float, m_max: int):
    """exp(-i H dt) v via Lanczos with full reorthogonalization.

    Returns (result, converged, krylov_dim).
    """
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy(), True, 0
    dim = v.shape[0]
    m_max = min(m_max, dim)
    V = np.empty((m_max + 1, dim), dtype=np.complex128)
    V[0] = v / beta0
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    for j in range(m_max):
        w = matvec(V[j])
        alpha[j] = np.vdot(V[j], w).real
        w = w - alpha[j] * V[j]
        if j:
            w -= beta[j - 1] * V[j - 1]
        w -= V[: j + 1].T @ (V[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        m = j + 1
        if m == 1:
            evals, evecs = np.array([alpha[0]]), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(alpha[:m], beta[: m - 1])
        y = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        breakdown = beta[j] < 1e-13 * max(1.0, abs(alpha[j]))
        err = beta[j] * abs(y[-1])
        if breakdown or err < tol:
            return beta0 * (y @ V[:m]), True, m
        V[j + 1] = w / beta[j]
    return beta0 * (y @ V[:m]), False, m_max


def _matvec(h):
    if isinstance(h, PauliSum):
        sp = h.sparse
        return sp.dot
    if callable(h):
        return h
    return h.dot


def evolve_step(
    h,
    v: np.ndarray,
    dt: float,
    tol: float = DEFAULT_TOL,
    *,
    max_krylov: int = MAX_KRYLOV,
    check_hermitian: bool = True,
) -> np.ndarray:
    """exp(-i H dt) v with estimated local error below ``tol``.

    ``h`` is a PauliSum (checked for hermiticity) or a Hermitian matvec.
    Steps whose Krylov space does not converge within ``max_krylov`` vectors
    are halved, at most ``MAX_HALVINGS`` times.
    """
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if isinstance(h, PauliSum) and check_hermitian and not h.is_hermitian():
        raise ValueError("evolution generator is not Hermitian")
    if dt == 0:
        return np.array(v, dtype=np.complex128)
    matvec = _matvec(h)
    return _evolve(matvec, np.asarray(v, dtype=np.complex128), dt, tol, max_krylov, 0)


def _evolve(matvec, v, dt, tol, max_krylov, depth):
    out, ok, _ = _lanczos_exp(matvec, v, dt, tol, max_krylov)
    if ok:
        return out
    if depth >= MAX_HALVINGS:
        raise ConvergenceError(f"Krylov propagator failed to converge for dt={dt:g}")
    half = _evolve(matvec, v, dt / 2, tol / 2, max_krylov, depth + 1)
    return _evolve(matvec, half, dt / 2, tol / 2, max_krylov, depth + 1)


@dataclass
class ChargingTrace:
    times: np.ndarray
    energies: np.ndarray
    e0: float
    powers: np.ndarray
    norm_drift: float = 0.0
    h1_drift: float = 0.0


def _powers(times, energies, e0):
    p = np.zeros_like(energies)
    p[1:] = (energies[1:] - e0) / times[1:]
    return p


def time_grid(t_max: float, n_t: int) -> np.ndarray:
    if t_max < 0:
        raise ValueError("t_max must be non-negative")
    if t_max == 0 or n_t <= 1:
        return np.zeros(1)
    return np.linspace(0.0, t_max, n_t)


def charging_trace(
    h0: PauliSum,
    h1: PauliSum,
    n: int,
    t_max: float,
    n_t: int = 200,
    tol: float = DEFAULT_TOL,
    psi0: Optional[np.ndarray] = None,
) -> ChargingTrace:
    """Energy E(t) = <psi(t)|H0|psi(t)> and average power on a uniform grid.

    The initial state defaults to the ground state of ``h0`` when it is the
    X or Z battery. P(0) is stored as 0.
    """
    if h0.n_qubits != n // 2 or h1.n_qubits != n // 2:
        raise ValueError("Hamiltonians do not act on N/2 qubits")
    if psi0 is None:
        model = battery_model(h0)
        if model is None:
            raise ValueError("psi0 required when h0 is not an X or Z battery")
        psi0, e0 = ground_state(model, n)
    else:
        e0 = h0.expectation(psi0).real
    if not h1.is_hermitian():
        raise ValueError("charging Hamiltonian is not Hermitian")

    times = time_grid(t_max, n_t)
    matvec = _matvec(h1)
    psi = np.array(psi0, dtype=np.complex128)
    energies = np.empty(times.size)
    energies[0] = h0.expectation(psi).real
    h1_start = np.vdot(psi, matvec(psi)).real
    norm_drift = h1_drift = 0.0
    for i in range(1, times.size):
        psi = _evolve(matvec, psi, times[i] - times[i - 1], tol, MAX_KRYLOV, 0)
        energies[i] = h0.expectation(psi).real
        norm_drift = max(norm_drift, abs(np.linalg.norm(psi) - 1.0))
        h1_drift = max(h1_drift, abs(np.vdot(psi, matvec(psi)).real - h1_start))
    return ChargingTrace(times, energies, e0, _powers(times, energies, e0), norm_drift, h1_drift)


def dense_charging_trace(h0: PauliSum, h1: PauliSum, times: np.ndarray, psi0: np.ndarray) -> np.ndarray:
    """E(t) by full eigendecomposition of H1 (small systems only)."""
    evals, evecs = np.linalg.eigh(h1.to_dense())
    h0d = h0.to_dense()
    c = evecs.conj().T @ psi0
    out = np.empty(len(times))
    for i, t in enumerate(times):
        psi = evecs @ (np.exp(-1j * evals * t) * c)
        out[i] = np.vdot(psi, h0d @ psi).real
    return out


@dataclass(frozen=True)
class ChargingSpec:
    """One disorder-averaged experiment: battery model, charger and grid."""

    model: str
    charger: str
    n: int
    t_max: float
    n_t: int = 200
    tol: float = DEFAULT_TOL
    kappa: int = 4
    p: float = 0.0
    q: int = 2

    def __post_init__(self):
        object.__setattr__(self, "model", self.model.upper())
        if self.model not in ("X", "Z"):
            raise ValueError(f"model must be X or Z, got {self.model!r}")
        if self.charger not in ("complete", "ring", "ws", "star", "dense"):
            raise ValueError(f"unknown charger {self.charger!r}")
        if self.n < 2 or self.n % 2:
            raise ValueError(f"N must be even and >= 2, got {self.n}")


def realization_seeds(root_seed: int, r: int) -> tuple[int, int]:
    """(graph seed, coupling seed) of realization ``r``."""
    s = derive_seed(root_seed, r)
    return derive_seed(s, 0), derive_seed(s, 1)


def realization_graph(spec: ChargingSpec, root_seed: int, r: int) -> Optional[MajoranaGraph]:
    if spec.charger == "dense":
        return None
    graph_seed, _ = realization_seeds(root_seed, r)
    return make_graph(spec.charger, spec.n, kappa=spec.kappa, p=spec.p, seed=graph_seed)


def realization_charger(spec: ChargingSpec, root_seed: int, r: int) -> PauliSum:
    _, coupling_seed = realization_seeds(root_seed, r)
    if spec.charger == "dense":
        return build_dense_charger(sample_dense_couplings(spec.n, spec.q, coupling_seed))
    g = realization_graph(spec, root_seed, r)
    return build_graph_charger(g, sample_graph_couplings(g, coupling_seed))


def run_realization(spec: ChargingSpec, root_seed: int, r: int) -> ChargingTrace:
    h0 = build_battery(spec.model, spec.n)
    h1 = realization_charger(spec, root_seed, r)
    return charging_trace(h0, h1, spec.n, spec.t_max, spec.n_t, spec.tol)


@dataclass
class AveragedTrace:
    times: np.ndarray
    e_mean: np.ndarray
    e_stderr: np.ndarray
    p_mean: np.ndarray
    p_stderr: np.ndarray
    n_realizations: int
    root_seed: int
    e0: float
    energies: np.ndarray = field(repr=False)
    max_norm_drift: float = 0.0
    max_h1_drift: float = 0.0

    @property
    def powers(self) -> np.ndarray:
        """Per-realization power curves, shape (n_realizations, n_t)."""
        p = np.zeros_like(self.energies)
        p[:, 1:] = (self.energies[:, 1:] - self.e0) / self.times[1:]
        return p


def _stderr(a: np.ndarray) -> np.ndarray:
    if a.shape[0] < 2:
        return np.zeros(a.shape[1:])
    return a.std(axis=0, ddof=1) / math.sqrt(a.shape[0])


def _run_one(args):
    return run_realization(*args)


def disorder_average(
    spec: ChargingSpec,
    n_real: int,
    root_seed: int,
    *,
    workers: int = 1,
    start: int = 0,
) -> AveragedTrace:
    """Average ``n_real`` realizations, each with a fresh graph and couplings.

    Realization ``r`` draws from ``derive_seed(root_seed, r)``; results are
    combined in index order, so the output does not depend on ``workers``.
    """
    if n_real < 1:
        raise ValueError("n_real must be >= 1")
    jobs = [(spec, root_seed, r) for r in range(start, start + n_real)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            traces = list(pool.map(_run_one, jobs))
    else:
        traces = [_run_one(j) for j in jobs]
    times = traces[0].times
    energies = np.stack([t.energies for t in traces])
    e0 = traces[0].e0
    powers = np.stack([t.powers for t in traces])
    return AveragedTrace(
        times=times,
        e_mean=energies.mean(axis=0),
        e_stderr=_stderr(energies),
        p_mean=powers.mean(axis=0),
        p_stderr=_stderr(powers),
        n_realizations=n_real,
        root_seed=root_seed,
        e0=e0,
        energies=energies,
        max_norm_drift=max(t.norm_drift for t in traces),
        max_h1_drift=max(t.h1_drift for t in traces),
    )
