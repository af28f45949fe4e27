"""Gaussian-process emulation of scalar simulator outputs.

One independent model per (output name, report year): anisotropic
squared-exponential kernel plus nugget, optional linear or quadratic mean
estimated by generalized least squares inside the marginal likelihood,
hyperparameters chosen by multi-start maximum marginal likelihood in log
space.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.linalg import cho_solve, cholesky, solve_triangular

MODEL_FORMAT = "transuq-gp-1"

Z_95 = 1.959963984540054  # two-sided 95% normal quantile

MEAN_LINEAR = "linear"
MEAN_QUADRATIC = "quadratic"
MEAN_ZERO = "zero"


class EmulatorError(RuntimeError):
    """Raised for invalid training data, failed factorizations, or bad probes."""


class ModelVersionError(EmulatorError):
    """Raised when a serialized model carries an unknown format tag."""


class ModelCorruptionError(EmulatorError):
    """Raised when a serialized model fails checksum or cannot be parsed."""


class VarianceClampWarning(UserWarning):
    """Emitted when a predictive variance below -1e-10 is clamped to zero."""


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel: variance, per-dimension lengthscales, nugget."""

    signal_variance: float
    lengthscales: tuple[float, ...]
    nugget: float

    def validate(self) -> None:
        if not self.signal_variance > 0:
            raise EmulatorError("signal variance must be positive")
        if not all(l > 0 for l in self.lengthscales):
            raise EmulatorError("all lengthscales must be positive")
        if not self.nugget >= 1e-10:
            raise EmulatorError("nugget must be at least 1e-10")


@dataclass(frozen=True)
class TrainingSet:
    x: np.ndarray  # (n, d), normalized inputs in [0, 1]
    y: np.ndarray  # (n,)
    output_name: str
    year: int

    def validate(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise EmulatorError("training set shapes are inconsistent")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise EmulatorError("training data must be finite")
        order = np.lexsort(x.T[::-1])
        close = np.all(np.abs(np.diff(x[order], axis=0)) < 1e-12, axis=1)
        if np.any(close):
            i = int(np.argmax(close))
            raise EmulatorError(
                f"duplicate design rows {order[i]} and {order[i + 1]} "
                "(closer than 1e-12 in every coordinate)")


@dataclass(frozen=True)
class FitDiagnostics:
    log_marginal_likelihood: float  # in standardized-output space
    restarts_used: int
    jitter: float  # extra diagonal added beyond the nugget, 0 when clean


@dataclass(frozen=True)
class GpModel:
    kernel: KernelConfig
    x: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) raw outputs
    mean_type: str
    y_shift: float  # raw outputs were standardized as z = (y - shift) / scale
    y_scale: float
    beta: np.ndarray  # mean coefficients in standardized space
    output_name: str
    year: int
    diagnostics: FitDiagnostics
    # cached factorizations, all in standardized space
    chol: np.ndarray = field(repr=False, default=None)  # lower factor of K + nu I
    alpha: np.ndarray = field(repr=False, default=None)  # (K + nu I)^-1 residual
    kinv_h: np.ndarray = field(repr=False, default=None)  # (K + nu I)^-1 H
    gram_chol: np.ndarray = field(repr=False, default=None)  # lower factor of H' Kinv H


def split(design: np.ndarray, y: np.ndarray, output_name: str, year: int,
          train_fraction: float = 0.8, seed: int = 0
          ) -> tuple[TrainingSet, TrainingSet]:
    """Seed-reproducible disjoint random partition into train and test sets."""
    x = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    if n < 5:
        raise EmulatorError("need at least 5 runs to split")
    if not 0.0 < train_fraction < 1.0:
        raise EmulatorError("train_fraction must lie strictly between 0 and 1")
    n_train = int(round(n * train_fraction))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    tr = np.sort(perm[:n_train])
    te = np.sort(perm[n_train:])
    train = TrainingSet(x[tr], y[tr], output_name, year)
    test = TrainingSet(x[te], y[te], output_name, year)
    train.validate()
    test.validate()
    return train, test


def _mean_basis(x: np.ndarray, mean_type: str) -> np.ndarray | None:
    if mean_type == MEAN_LINEAR:
        return np.column_stack([np.ones(x.shape[0]), x])
    if mean_type == MEAN_QUADRATIC:
        return np.column_stack([np.ones(x.shape[0]), x, x * x])
    if mean_type == MEAN_ZERO:
        return None
    raise EmulatorError(f"unknown mean type {mean_type!r}")


def _sq_dist_stack(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape (na, nb, d)."""
    return (xa[:, None, :] - xb[None, :, :]) ** 2


def _kernel_from_stack(kernel: KernelConfig, d2: np.ndarray) -> np.ndarray:
    ell2 = np.asarray(kernel.lengthscales, dtype=float) ** 2
    return kernel.signal_variance * np.exp(-0.5 * (d2 / ell2).sum(axis=-1))


def _chol_with_jitter(k_noisy: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter 1e-10 to 1e-6."""
    scale = float(np.mean(np.diag(k_noisy)))
    jitter = 0.0
    while True:
        try:
            return cholesky(k_noisy + jitter * np.eye(len(k_noisy)),
                            lower=True), jitter
        except np.linalg.LinAlgError:
            pass
        jitter = 1e-10 * scale if jitter == 0.0 else jitter * 10.0
        if jitter > 1e-6 * scale * (1 + 1e-9):
            eigs = np.linalg.eigvalsh(k_noisy)
            raise EmulatorError(
                "covariance factorization failed after jitter escalation "
                f"(eigenvalue range [{eigs.min():.3e}, {eigs.max():.3e}])")


def _gls_solve(lower: np.ndarray, h: np.ndarray | None, y: np.ndarray
               ) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Profile out the mean: returns (beta, residual, Kinv_H, gram factor)."""
    if h is None:
        return np.zeros(0), y, None, None
    kinv_h = cho_solve((lower, True), h)
    gram = h.T @ kinv_h
    gram_lower = cholesky(gram, lower=True)
    rhs = h.T @ cho_solve((lower, True), y)
    beta = cho_solve((gram_lower, True), rhs)
    return beta, y - h @ beta, kinv_h, gram_lower


def log_marginal_likelihood(kernel: KernelConfig, x: np.ndarray, y: np.ndarray,
                            mean: str = MEAN_LINEAR, with_grad: bool = False,
                            _d2: np.ndarray | None = None):
    """Profile log marginal likelihood with the mean coefficients solved by GLS.

    With `with_grad`, also returns the gradient with respect to the
    log-hyperparameters ordered as (log variance, log lengthscales, log nugget).
    The mean solve does not enter the gradient: the generalized-least-squares
    normal equations zero the relevant inner product.
    """
    kernel.validate()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    d2 = _sq_dist_stack(x, x) if _d2 is None else _d2
    k_se = _kernel_from_stack(kernel, d2)
    k_noisy = k_se + kernel.nugget * np.eye(n)
    try:
        lower = cholesky(k_noisy, lower=True)
    except np.linalg.LinAlgError:
        eigs = np.linalg.eigvalsh(k_noisy)
        raise EmulatorError(
            "covariance not positive definite "
            f"(eigenvalue range [{eigs.min():.3e}, {eigs.max():.3e}])")
    h = _mean_basis(x, mean)
    _, resid, _, _ = _gls_solve(lower, h, y)
    alpha = cho_solve((lower, True), resid)
    value = float(-0.5 * resid @ alpha - np.log(np.diag(lower)).sum()
                  - 0.5 * n * np.log(2.0 * np.pi))
    if not with_grad:
        return value
    kinv = cho_solve((lower, True), np.eye(n))
    w = np.outer(alpha, alpha) - kinv
    ell2 = np.asarray(kernel.lengthscales, dtype=float) ** 2
    grad = np.empty(2 + len(ell2))
    grad[0] = 0.5 * float((w * k_se).sum())
    grad[1:-1] = 0.5 * np.einsum("ij,ijd->d", w * k_se, d2) / ell2
    grad[-1] = 0.5 * kernel.nugget * float(np.trace(w))
    return value, grad


def _build(x: np.ndarray, y_raw: np.ndarray, kernel: KernelConfig, mean_type: str,
           y_shift: float, y_scale: float, output_name: str, year: int,
           restarts_used: int, lml: float | None = None) -> GpModel:
    z = (y_raw - y_shift) / y_scale
    n = x.shape[0]
    d2 = _sq_dist_stack(x, x)
    k_noisy = _kernel_from_stack(kernel, d2) + kernel.nugget * np.eye(n)
    lower, jitter = _chol_with_jitter(k_noisy)
    h = _mean_basis(x, mean_type)
    beta, resid, kinv_h, gram_lower = _gls_solve(lower, h, z)
    alpha = cho_solve((lower, True), resid)
    if lml is None:
        lml = float(-0.5 * resid @ alpha - np.log(np.diag(lower)).sum()
                    - 0.5 * n * np.log(2.0 * np.pi))
    return GpModel(
        kernel=kernel, x=x, y=y_raw, mean_type=mean_type,
        y_shift=y_shift, y_scale=y_scale, beta=beta,
        output_name=output_name, year=year,
        diagnostics=FitDiagnostics(lml, restarts_used, jitter),
        chol=lower, alpha=alpha, kinv_h=kinv_h, gram_chol=gram_lower)


def build_model(train: TrainingSet, kernel: KernelConfig,
                mean: str = MEAN_LINEAR, standardize: bool = True) -> GpModel:
    """Assemble a model at fixed hyperparameters (no optimization)."""
    train.validate()
    kernel.validate()
    x = np.asarray(train.x, dtype=float)
    y = np.asarray(train.y, dtype=float)
    if standardize:
        shift, scale = float(y.mean()), float(y.std())
        scale = scale if scale > 1e-12 else 1.0
    else:
        shift, scale = 0.0, 1.0
    return _build(x, y, kernel, mean, shift, scale, train.output_name,
                  train.year, restarts_used=0)


def fit(train: TrainingSet, n_restarts: int = 10, seed: int = 0,
        mean: str = MEAN_LINEAR, maxiter: int = 150) -> GpModel:
    """Maximize the marginal likelihood by seeded multi-start L-BFGS-B.

    Outputs are standardized internally; the returned model records the
    transform and predicts in raw units. The result is never worse than the
    documented default initialization (lengthscales 0.5, variance var(y),
    nugget 1e-6 var(y)).
    """
    train.validate()
    x = np.asarray(train.x, dtype=float)
    y = np.asarray(train.y, dtype=float)
    n, dim = x.shape
    if mean == MEAN_LINEAR and n < dim + 2:
        raise EmulatorError(f"linear mean needs at least {dim + 2} runs, got {n}")
    if mean == MEAN_QUADRATIC and n < 2 * dim + 3:
        raise EmulatorError(
            f"quadratic mean needs at least {2 * dim + 3} runs, got {n}")
    shift, scale = float(y.mean()), float(y.std())
    scale = scale if scale > 1e-12 else 1.0
    z = (y - shift) / scale
    var_z = max(float(z.var()), 1e-12)

    d2 = _sq_dist_stack(x, x)

    def unpack(theta: np.ndarray) -> KernelConfig:
        # exp(log(1e-10)) can land one ulp under the validity floor.
        return KernelConfig(signal_variance=float(np.exp(theta[0])),
                            lengthscales=tuple(np.exp(theta[1:-1])),
                            nugget=float(max(np.exp(theta[-1]), 1e-10)))

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            value, grad = log_marginal_likelihood(
                unpack(theta), x, z, mean=mean, with_grad=True, _d2=d2)
        except EmulatorError:
            return 1e25, np.zeros_like(theta)
        if not np.isfinite(value):
            return 1e25, np.zeros_like(theta)
        return -value, -grad

    # Near-constant outputs drive var_z toward zero; keep the nugget bounds
    # above the KernelConfig validity floor.
    nug_lo = max(1e-10 * var_z, 1e-10)
    nug_hi = max(var_z, 10.0 * nug_lo)
    lo = np.concatenate([[np.log(1e-8)], np.full(dim, np.log(0.01)),
                         [np.log(nug_lo)]])
    hi = np.concatenate([[np.log(1e4)], np.full(dim, np.log(10.0)),
                         [np.log(nug_hi)]])
    theta_default = np.concatenate([[np.log(var_z)], np.full(dim, np.log(0.5)),
                                    [np.log(np.clip(1e-6 * var_z, nug_lo, nug_hi))]])

    rng = np.random.default_rng(seed)
    starts = [theta_default]
    for _ in range(max(n_restarts - 1, 0)):
        starts.append(np.concatenate([
            [rng.uniform(np.log(0.1), np.log(10.0))],
            rng.uniform(np.log(0.05), np.log(5.0), size=dim),
            [rng.uniform(np.log(np.clip(1e-8 * var_z, nug_lo, nug_hi)),
                         np.log(np.clip(1e-2 * var_z, nug_lo, nug_hi)))],
        ]))

    candidates: list[tuple[float, np.ndarray]] = []
    neg_default, _ = objective(theta_default)
    if neg_default < 1e24:
        candidates.append((-neg_default, theta_default))
    for theta0 in starts:
        res = optimize.minimize(objective, theta0, jac=True, method="L-BFGS-B",
                                bounds=list(zip(lo, hi)),
                                options={"maxiter": maxiter})
        if np.isfinite(res.fun) and res.fun < 1e24:
            candidates.append((-float(res.fun), res.x))
    if not candidates:
        raise EmulatorError("all optimizer restarts failed factorization")
    best_lml, best_theta = max(candidates, key=lambda c: c[0])
    return _build(x, y, unpack(best_theta), mean, shift, scale,
                  train.output_name, train.year,
                  restarts_used=len(starts), lml=best_lml)


_PREDICT_CHUNK = 1024  # caps the (m, n, d) distance stack at large batch sizes


def _predict_standardized(model: GpModel, probes: np.ndarray
                          ) -> tuple[np.ndarray, np.ndarray]:
    means, variances = [], []
    for lo in range(0, probes.shape[0], _PREDICT_CHUNK):
        chunk = probes[lo:lo + _PREDICT_CHUNK]
        d2 = _sq_dist_stack(chunk, model.x)
        c = _kernel_from_stack(model.kernel, d2)  # (m, n)
        mean = c @ model.alpha
        ct_l = solve_triangular(model.chol, c.T, lower=True)  # (n, m)
        var = model.kernel.signal_variance - (ct_l ** 2).sum(axis=0)
        if model.mean_type != MEAN_ZERO:
            h = _mean_basis(chunk, model.mean_type)
            mean = mean + h @ model.beta
            u = h.T - model.kinv_h.T @ c.T  # (p, m)
            u_l = solve_triangular(model.gram_chol, u, lower=True)
            var = var + (u_l ** 2).sum(axis=0)
        means.append(mean)
        variances.append(var)
    return np.concatenate(means), np.concatenate(variances)


def predict(model: GpModel, x: np.ndarray, observation: bool = False
            ) -> tuple[np.ndarray | float, np.ndarray | float]:
    """Predictive mean and variance in raw output units.

    Variance is for the latent function; with `observation`, the nugget is
    added, which is the right scale for standardized validation errors.
    Negative variances beyond -1e-10 trigger a VarianceClampWarning; all
    negatives are clamped to zero.
    """
    probes = np.asarray(x, dtype=float)
    single = probes.ndim == 1
    probes = np.atleast_2d(probes)
    if probes.shape[1] != model.x.shape[1]:
        raise EmulatorError(
            f"probe dimension {probes.shape[1]} != model dimension {model.x.shape[1]}")
    mean_z, var_z = _predict_standardized(model, probes)
    if observation:
        var_z = var_z + model.kernel.nugget
    if np.any(var_z < -1e-10):
        warnings.warn("negative predictive variance clamped to zero",
                      VarianceClampWarning, stacklevel=2)
    var_z = np.maximum(var_z, 0.0)
    mean = mean_z * model.y_scale + model.y_shift
    var = var_z * model.y_scale ** 2
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


@dataclass(frozen=True)
class ValidationReport:
    output_name: str
    year: int
    kind: str  # "loo" or "test"
    rmse: float
    standardized_errors: np.ndarray
    coverage95: float
    means: np.ndarray  # predictive means, raw units
    variances: np.ndarray  # predictive observation variances, raw units

    def validate(self) -> None:
        if not 0.0 <= self.coverage95 <= 1.0:
            raise EmulatorError("coverage must lie in [0, 1]")


def loo_validate(model: GpModel) -> ValidationReport:
    """Leave-one-out validation via the projected-precision shortcut.

    Equivalent to refitting the mean coefficients on each size n-1 subset at
    fixed hyperparameters; agrees with the naive refit within 1e-6 relative.
    """
    n = model.x.shape[0]
    if n < 3:
        raise EmulatorError("leave-one-out needs at least 3 points")
    z = (model.y - model.y_shift) / model.y_scale
    kinv = cho_solve((model.chol, True), np.eye(n))
    if model.mean_type != MEAN_ZERO:
        right = solve_triangular(model.gram_chol, model.kinv_h.T, lower=True)
        q = kinv - right.T @ right
    else:
        q = kinv
    q_diag = np.maximum(np.diag(q), 1e-300)
    loo_var_z = 1.0 / q_diag  # observation variance, standardized
    loo_mean_z = z - (q @ z) / q_diag
    errors = (z - loo_mean_z) / np.sqrt(loo_var_z)
    means = loo_mean_z * model.y_scale + model.y_shift
    variances = loo_var_z * model.y_scale ** 2
    rmse = float(np.sqrt(np.mean((means - model.y) ** 2)))
    report = ValidationReport(
        output_name=model.output_name, year=model.year, kind="loo",
        rmse=rmse, standardized_errors=errors,
        coverage95=float(np.mean(np.abs(errors) <= Z_95)),
        means=means, variances=variances)
    report.validate()
    return report


def validate_on_test(model: GpModel, test: TrainingSet) -> ValidationReport:
    """Held-out validation with observation-variance standardized errors."""
    test.validate()
    mean, var = predict(model, test.x, observation=True)
    errors = (test.y - mean) / np.sqrt(np.maximum(var, 1e-300))
    report = ValidationReport(
        output_name=test.output_name, year=test.year, kind="test",
        rmse=float(np.sqrt(np.mean((mean - test.y) ** 2))),
        standardized_errors=errors,
        coverage95=float(np.mean(np.abs(errors) <= Z_95)),
        means=mean, variances=var)
    report.validate()
    return report


def _payload(model: GpModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "output_name": model.output_name,
        "year": model.year,
        "mean_type": model.mean_type,
        "y_shift": model.y_shift,
        "y_scale": model.y_scale,
        "kernel": {
            "signal_variance": model.kernel.signal_variance,
            "lengthscales": list(model.kernel.lengthscales),
            "nugget": model.kernel.nugget,
        },
        "beta": model.beta.tolist(),
        "x": model.x.tolist(),
        "y": model.y.tolist(),
        "diagnostics": {
            "log_marginal_likelihood": model.diagnostics.log_marginal_likelihood,
            "restarts_used": model.diagnostics.restarts_used,
            "jitter": model.diagnostics.jitter,
        },
    }


def save_model(model: GpModel) -> bytes:
    """Versioned JSON with a sha256 checksum over the canonical payload."""
    payload = _payload(model)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    payload["checksum"] = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return json.dumps(payload, indent=1).encode("utf-8")


def load_model(data: bytes) -> GpModel:
    """Inverse of save_model; rejects unknown versions and corrupted payloads."""
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelCorruptionError(f"model payload unreadable: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelVersionError(
            f"unsupported model format {payload.get('format')!r}"
            if isinstance(payload, dict) else "model payload is not an object")
    stated = payload.pop("checksum", None)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    actual = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    if stated != actual:
        raise ModelCorruptionError("model checksum mismatch")
    kernel = KernelConfig(
        signal_variance=float(payload["kernel"]["signal_variance"]),
        lengthscales=tuple(float(v) for v in payload["kernel"]["lengthscales"]),
        nugget=float(payload["kernel"]["nugget"]))
    kernel.validate()
    diag = payload["diagnostics"]
    return _build(
        np.asarray(payload["x"], dtype=float),
        np.asarray(payload["y"], dtype=float),
        kernel, payload["mean_type"], float(payload["y_shift"]),
        float(payload["y_scale"]), payload["output_name"], int(payload["year"]),
        restarts_used=int(diag["restarts_used"]),
        lml=float(diag["log_marginal_likelihood"]))


def save_model_file(model: GpModel, path: str | Path) -> None:
    Path(path).write_bytes(save_model(model))


def load_model_file(path: str | Path) -> GpModel:
    return load_model(Path(path).read_bytes())


def save_training_set_csv(train: TrainingSet, ids: list[str], path: str | Path) -> None:
    """Design columns then the output column, 17 significant digits."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ids) + [f"{train.output_name}@{train.year}"])
        for row, target in zip(train.x, train.y):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{target:.17g}"])
