"""Two-qubit state tomography: measurement schemes, linear inversion,
physical maximum-likelihood reconstruction, and Monte Carlo uncertainty.

The MLE maximizes the Poissonian log-likelihood
sum_k (n_k ln mu_k - mu_k) with mu_k = N_k Tr(rho Pi_k) over physical
states parameterized as rho = T^dag T / Tr(T^dag T) with triangular T
(16 real parameters).  The common exposure is profiled out analytically, so
the objective reduces to f = -sum n_k ln c_k + n_tot ln(sum c_k) with
c_k = d_k Tr(T^dag T Pi_k), which is invariant under rescaling of T.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import qstate
from .measure import AnalyzerSetting, CountRecord, setting_from_labels
from .seeding import child_seed

SINGLE_QUBIT_LABELS_36 = ("H", "V", "+", "-", "R", "L")
SINGLE_QUBIT_LABELS_16 = ("H", "V", "+", "R")


class TomographyError(ValueError):
    """Invalid tomography inputs (scheme, counts, or design)."""


@dataclass(frozen=True)
class TomographySettings:
    """A measurement scheme: its name and ordered analyzer settings."""

    scheme: str
    settings: tuple[AnalyzerSetting, ...]


@dataclass
class MleOptions:
    max_iter: int = 10_000
    # Converged when the likelihood improves by less than ftol_abs for
    # ftol_window successive iterations, or the gradient norm drops
    # below gtol.
    ftol_abs: float = 1e-10
    ftol_window: int = 5
    gtol: float = 1e-8


@dataclass
class TomographyResult:
    rho_hat: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    # Objective value (negative profiled log-likelihood) at the start and
    # after each accepted iteration; nonincreasing for a monotone ascent.
    objective_history: list[float] = field(repr=False, default_factory=list)


@dataclass
class McSummary:
    """Monte Carlo fidelity distribution over resampled data sets."""

    n_sets: int
    fidelity_mean: float
    fidelity_std: float
    samples: list[float] = field(repr=False, default_factory=list)
    n_nonconverged: int = 0


def make_settings(scheme: int | str) -> TomographySettings:
    """Build the 36-setting (all pairs of H,V,+,-,R,L) or 16-setting
    (all pairs of H,V,+,R) scheme.  Both are informationally complete."""
    key = str(scheme)
    if key == "36":
        labels = SINGLE_QUBIT_LABELS_36
    elif key == "16":
        labels = SINGLE_QUBIT_LABELS_16
    else:
        raise TomographyError(f"scheme must be 16 or 36, got {scheme!r}")
    settings = tuple(setting_from_labels(a, b) for a in labels for b in labels)
    ts = TomographySettings(scheme=key, settings=settings)
    if design_rank(ts) != 16:
        raise TomographyError(f"scheme {key} is not informationally complete")
    return ts


def _projector_stack(ts: TomographySettings) -> np.ndarray:
    return np.stack([s.joint_projector for s in ts.settings])


def design_rank(ts: TomographySettings) -> int:
    """Rank of the projector design (Gram) matrix; 16 means complete."""
    flat = _projector_stack(ts).reshape(len(ts.settings), 16)
    return int(np.linalg.matrix_rank(flat, tol=1e-10))


def forward_probabilities(rho: np.ndarray, ts: TomographySettings) -> np.ndarray:
    """Born-rule probabilities for every setting of the scheme."""
    pis = _projector_stack(ts)
    return np.real(np.einsum("kij,ji->k", pis, np.asarray(rho, dtype=complex)))


def exact_counts(rho: np.ndarray, ts: TomographySettings,
                 exposure: float) -> list[CountRecord]:
    """Noiseless synthetic counts: round(exposure * p_k) per setting."""
    probs = forward_probabilities(rho, ts)
    return [CountRecord(setting_label=s.label, counts=int(round(exposure * p)))
            for s, p in zip(ts.settings, probs)]


def _check_alignment(counts: list[CountRecord], ts: TomographySettings) -> None:
    if len(counts) != len(ts.settings):
        raise TomographyError(
            f"{len(counts)} count records for {len(ts.settings)} settings")
    for rec, s in zip(counts, ts.settings):
        if rec.setting_label != s.label:
            raise TomographyError(
                f"count record {rec.setting_label!r} does not match setting {s.label!r}")
    if sum(r.counts for r in counts) <= 0:
        raise TomographyError("total counts must be positive")


def _exposure_rate(counts: list[CountRecord], ts: TomographySettings) -> float:
    """Coincidences per second of exposure, estimated from the complete
    H/V basis group (HH, HV, VH, VV), whose probabilities sum to 1."""
    idx = [i for i, s in enumerate(ts.settings) if s.label in ("HH", "HV", "VH", "VV")]
    if len(idx) != 4:
        raise TomographyError(
            f"scheme {ts.scheme} lacks the full H/V group needed for exposure estimation")
    total = sum(counts[i].counts for i in idx)
    if total <= 0:
        raise TomographyError("no counts in the H/V group; cannot estimate exposure")
    # The four H/V probabilities sum to 1, so at a common per-setting
    # duration d the group total is lambda0 * d.  Unequal durations within
    # the group are averaged.
    mean_dur = sum(counts[i].duration_s for i in idx) / 4.0
    return total / mean_dur


# Two-qubit Pauli-product basis, B_0 = I (Tr(B_m B_n) = 4 delta_mn).
_PAULIS = [np.eye(2, dtype=complex),
           np.array([[0, 1], [1, 0]], dtype=complex),
           np.array([[0, -1j], [1j, 0]], dtype=complex),
           np.array([[1, 0], [0, -1]], dtype=complex)]
_PAULI_BASIS = np.stack([np.kron(a, b) for a in _PAULIS for b in _PAULIS])


def linear_inversion(counts: list[CountRecord], ts: TomographySettings) -> np.ndarray:
    """Least-squares state estimate: Hermitian, unit trace, possibly
    non-positive.  Exact on noiseless probabilities."""
    _check_alignment(counts, ts)
    pis = _projector_stack(ts)
    # Design: p_k = sum_m c_m Tr(B_m Pi_k), with c_0 = 1/4 fixed by trace.
    design = np.real(np.einsum("mij,kji->km", _PAULI_BASIS, pis))
    if np.linalg.matrix_rank(design, tol=1e-10) < 16:
        raise TomographyError(f"scheme {ts.scheme} design is rank deficient")
    rate = _exposure_rate(counts, ts)
    probs = np.array([r.counts / (rate * r.duration_s) for r in counts])
    rhs = probs - design[:, 0] * 0.25
    coeffs, *_ = np.linalg.lstsq(design[:, 1:], rhs, rcond=None)
    rho = 0.25 * _PAULI_BASIS[0] + np.einsum("m,mij->ij", coeffs, _PAULI_BASIS[1:])
    return rho


# ---------------------------------------------------------------------------
# MLE over the triangular parameterization
# ---------------------------------------------------------------------------

# Free entries of the upper-triangular factor T (rho = T^dag T / Tr).
_OFFDIAG_IDX = [(i, j) for i in range(4) for j in range(4) if i < j]


def _params_to_t(theta: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    t[np.diag_indices(4)] = theta[:4]
    for n, (i, j) in enumerate(_OFFDIAG_IDX):
        t[i, j] = theta[4 + 2 * n] + 1j * theta[5 + 2 * n]
    return t


def _t_to_params(t: np.ndarray) -> np.ndarray:
    theta = np.zeros(16)
    theta[:4] = np.real(np.diag(t))
    for n, (i, j) in enumerate(_OFFDIAG_IDX):
        theta[4 + 2 * n] = t[i, j].real
        theta[5 + 2 * n] = t[i, j].imag
    return theta


def _initial_params(counts: list[CountRecord], ts: TomographySettings) -> np.ndarray:
    rho0 = linear_inversion(counts, ts)
    rho0 = (rho0 + rho0.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(rho0)
    vals = np.clip(vals, 1e-6, None)
    rho0 = (vecs * vals) @ vecs.conj().T
    rho0 /= np.real(np.trace(rho0))
    t = np.linalg.cholesky(rho0 + 1e-12 * np.eye(4)).conj().T
    return _t_to_params(t)


def mle_reconstruct(counts: list[CountRecord], ts: TomographySettings,
                    opts: MleOptions | None = None) -> TomographyResult:
    """Poissonian maximum-likelihood state reconstruction.

    Runs a quasi-Newton ascent (L-BFGS-B on the 16 triangular parameters,
    analytic gradient) from the clamped linear-inversion start.  Returns the
    result flagged converged=False if the iteration cap is hit first.
    """
    opts = opts or MleOptions()
    _check_alignment(counts, ts)
    pis = _projector_stack(ts)
    n = np.array([float(r.counts) for r in counts])
    d = np.array([r.duration_s for r in counts])
    d = d / d.mean()
    n_tot = n.sum()

    def objective(theta: np.ndarray):
        t = _params_to_t(theta)
        a = t.conj().T @ t
        c = np.real(np.einsum("kij,ji->k", pis, a)) * d
        c = np.clip(c, 1e-300, None)
        c_sum = c.sum()
        f = -np.dot(n, np.log(c)) + n_tot * math.log(c_sum)
        weights = (n_tot / c_sum - n / c) * d
        m = np.einsum("k,kij->ij", weights, pis)
        tm = t @ m
        grad = np.zeros(16)
        grad[:4] = 2.0 * np.real(np.diag(tm))
        for idx, (i, j) in enumerate(_OFFDIAG_IDX):
            grad[4 + 2 * idx] = 2.0 * tm[i, j].real
            grad[5 + 2 * idx] = 2.0 * tm[i, j].imag
        return f, grad

    def callback(theta):
        history.append(objective(theta)[0])

    theta0 = _initial_params(counts, ts)
    history: list[float] = [objective(theta0)[0]]
    res = minimize(objective, theta0, jac=True, method="L-BFGS-B",
                   callback=callback,
                   options={"maxiter": opts.max_iter, "ftol": 1e-15,
                            "gtol": 1e-12, "maxcor": 30})

    grad_norm = float(np.linalg.norm(res.jac))
    window = opts.ftol_window
    flat_tail = (len(history) > window and
                 all(history[-k - 1] - history[-k] < opts.ftol_abs
                     for k in range(1, window + 1)))
    converged = bool(res.nit < opts.max_iter and
                     (grad_norm < opts.gtol or flat_tail or res.success))

    t = _params_to_t(res.x)
    a = t.conj().T @ t
    rho_hat = a / np.real(np.trace(a))
    rho_hat = (rho_hat + rho_hat.conj().T) / 2.0
    qstate.check_density_matrix(rho_hat, atol=qstate.CHANNEL_ATOL)

    # Report the actual Poissonian log-likelihood at the profiled exposure.
    c = np.clip(np.real(np.einsum("kij,ji->k", pis, rho_hat)) * d, 1e-300, None)
    lam = n_tot / c.sum()
    mu = lam * c
    log_l = float(np.dot(n, np.log(mu)) - mu.sum())
    return TomographyResult(rho_hat=rho_hat, log_likelihood=log_l,
                            converged=converged, iterations=int(res.nit),
                            objective_history=history)


def monte_carlo_fidelity(counts: list[CountRecord], ts: TomographySettings,
                         target: np.ndarray, n_sets: int, seed: int,
                         workers: int = 1) -> McSummary:
    """Poissonian-resampling uncertainty on the fidelity versus `target`.

    Each set resamples counts_k ~ Poisson(n_k), reruns the MLE, and records
    fidelity(rho_hat, target).  Sets draw independent child seeds from the
    master seed and are reduced in index order, so the summary is identical
    for any worker count.
    """
    if n_sets < 2:
        raise TomographyError(f"n_sets must be >= 2, got {n_sets}")
    _check_alignment(counts, ts)
    base = np.array([r.counts for r in counts], dtype=float)

    def one_set(index: int) -> tuple[float, bool]:
        rng = np.random.default_rng(child_seed(seed, "mc-tomo", index))
        resampled = [CountRecord(setting_label=r.setting_label,
                                 counts=int(k), duration_s=r.duration_s)
                     for r, k in zip(counts, rng.poisson(base))]
        result = mle_reconstruct(resampled, ts)
        return qstate.fidelity(result.rho_hat, target), result.converged

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one_set, range(n_sets)))
    else:
        outcomes = [one_set(i) for i in range(n_sets)]

    samples = [f for f, _ in outcomes]
    n_bad = sum(1 for _, ok in outcomes if not ok)
    arr = np.array(samples)
    return McSummary(n_sets=n_sets,
                     fidelity_mean=float(arr.mean()),
                     fidelity_std=float(arr.std(ddof=1)),
                     samples=samples,
                     n_nonconverged=n_bad)
