"""Task harnesses: XOR readout training and cat-state mixing optimization.

The XOR task drives the four canonical input pairs through the network,
reads output-mode occupations (optionally noisy), and fits an affine
readout by ridge-regularized least squares.  The cat task evolves a
coherent input through the lossy Kerr network, then optimizes a passive
mixing unitary with Nelder-Mead so that the vacuum-conditioned output mode
matches a target superposition state in Wigner distance.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize

from ._rng import substream
from .dynamics import (
    INFINITE_KERR,
    EvolutionConfig,
    MeanFieldState,
    NetworkParams,
    build_hamiltonian,
    chain_coupling,
    evolve_master_equation,
    evolve_mean_field,
)
from .fock import (
    Basis,
    NumericalHealthError,
    build_basis,
    coherent_state,
    vacuum_state,
)
from .readout import (
    MixingMatrix,
    NoiseModel,
    apply_measurement_noise,
    condition_on_vacuum,
    linear_readout,
    occupations,
)
from .wigner import GridSpec, target_cat_wigner, wigner_error, wigner_of_state

INPUT_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
XOR_TARGETS = np.array([[0.0], [1.0], [1.0], [0.0]])

ENCODINGS = ("pump_amplitude", "occupation", "mean_field_amplitude", "mean_field_intensity")


@dataclass
class XorTaskConfig:
    encoding: str
    params: NetworkParams
    mode_dim: int = 4
    total_cap: int | None = None
    noise: NoiseModel | None = None
    input_modes: tuple = (0, 1)
    output_modes: tuple = (2, 3)
    targets: np.ndarray = field(default_factory=lambda: XOR_TARGETS.copy())
    evolution: EvolutionConfig | None = None

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise ValueError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.shape[0] != len(INPUT_PAIRS):
            raise ValueError("targets must have one row per canonical input pair")

    def basis(self) -> Basis:
        dim = 2 if self.params.alpha == INFINITE_KERR else self.mode_dim
        return build_basis([dim] * self.params.n_modes, self.total_cap)


@dataclass
class OptimizerSettings:
    max_iter: int = 2000
    simplex_scale: float = 0.1
    xatol: float = 1e-6
    fatol: float = 1e-8

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class CatTaskConfig:
    beta_list: list
    params: NetworkParams
    k: int = 0
    mode_dim: int = 13
    total_cap: int | None = 12
    input_mode: int = 0
    output_mode: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    evolution: EvolutionConfig | None = None
    shared_weights: bool = False

    def __post_init__(self):
        if len(self.beta_list) < 1:
            raise ValueError("beta_list must be non-empty")

    def basis(self) -> Basis:
        dim = 2 if self.params.alpha == INFINITE_KERR else self.mode_dim
        cap = self.total_cap
        if cap is not None:
            cap = min(cap, (dim - 1) * self.params.n_modes)
        return build_basis([dim] * self.params.n_modes, cap)


@dataclass
class XorError:
    mean_abs: float
    max_abs: float

    @property
    def success(self) -> bool:
        return self.max_abs < 0.5


@dataclass
class TrainResult:
    """Trained weights with the evaluations that produced the reported errors."""

    task: str
    weights: dict
    outputs: list | None
    errors: dict
    probabilities: list | None
    iteration_log: list
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "weights": self.weights,
            "outputs": self.outputs,
            "errors": self.errors,
            "probabilities": self.probabilities,
            "iteration_log": self.iteration_log,
            "details": self.details,
        }


def _xor_evolution(cfg: XorTaskConfig, params: NetworkParams, basis: Basis) -> EvolutionConfig:
    if cfg.evolution is not None:
        return cfg.evolution
    return EvolutionConfig(dt=stable_dt(params, basis))


def run_xor_forward(cfg: XorTaskConfig, input_pair) -> np.ndarray:
    """Feature vector for one input pair under the configured encoding."""
    bits = tuple(int(b) for b in input_pair)
    if len(bits) != len(cfg.input_modes) or any(b not in (0, 1) for b in bits):
        raise ValueError(f"input pair must be two bits, got {input_pair}")
    params = cfg.params
    out = list(cfg.output_modes)

    mask = np.zeros(params.n_modes, dtype=complex)
    for mode, bit in zip(cfg.input_modes, bits):
        mask[mode] = bit

    if cfg.encoding in ("mean_field_amplitude", "mean_field_intensity"):
        driven = params.with_updates(P=params.P * mask)
        cfg_evo = cfg.evolution or EvolutionConfig(dt=min(1e-3 * params.tau, 0.01))
        psi = evolve_mean_field(MeanFieldState(np.zeros(params.n_modes)), driven, cfg_evo).psi
        if cfg.encoding == "mean_field_intensity":
            return np.abs(psi[out]) ** 2
        return np.concatenate([np.real(psi[out]), np.imag(psi[out])])

    basis = cfg.basis()
    if cfg.encoding == "pump_amplitude":
        driven = params.with_updates(P=params.P * mask)
        rho0 = vacuum_state(basis).density()
    else:  # occupation: coherent amplitudes sqrt(bit), pump off
        driven = params.with_updates(P=np.zeros(params.n_modes, dtype=complex))
        amps = np.zeros(params.n_modes, dtype=complex)
        for mode, bit in zip(cfg.input_modes, bits):
            amps[mode] = math.sqrt(bit)
        rho0 = coherent_state(basis, amps).density()

    result = evolve_master_equation(rho0, driven, _xor_evolution(cfg, driven, basis))
    return occupations(result.final)[out]


def compute_xor_features(cfg: XorTaskConfig) -> np.ndarray:
    return np.array([run_xor_forward(cfg, pair) for pair in INPUT_PAIRS])


def solve_readout_weights(features: np.ndarray, targets: np.ndarray, ridge: float = 1e-10):
    """Least-squares affine readout via normal equations with a ridge term."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = np.asarray(targets, dtype=float)
    if targets.ndim == 1:
        targets = targets[:, None]
    if features.shape[0] < 4:
        raise ValueError("need at least the four canonical rows to fit")
    if features.shape[0] != targets.shape[0]:
        raise ValueError("features and targets must have matching row counts")
    x = np.hstack([features, np.ones((features.shape[0], 1))])
    gram = x.T @ x + ridge * np.eye(x.shape[1])
    theta = np.linalg.solve(gram, x.T @ targets)
    weights = theta[:-1].T
    bias = theta[-1]
    return weights, bias


def xor_task_error(outputs: np.ndarray, targets: np.ndarray) -> XorError:
    """Mean and max absolute case error; the gate succeeds when max < 0.5."""
    outputs = np.asarray(outputs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if outputs.shape != targets.shape:
        raise ValueError(f"shape mismatch {outputs.shape} vs {targets.shape}")
    err = np.abs(outputs - targets)
    return XorError(mean_abs=float(err.mean()), max_abs=float(err.max()))


def _noisy_feature_stack(features, targets, noise: NoiseModel, first_draw: int):
    rows, target_rows, draws = [], [], []
    n_cases = features.shape[0]
    for d in range(noise.samples):
        case_rows = []
        for c in range(n_cases):
            draw_index = (first_draw + d) * n_cases + c
            case_rows.append(apply_measurement_noise(features[c], noise, draw_index))
        case_rows = np.array(case_rows)
        rows.append(case_rows)
        target_rows.append(targets)
        draws.append(case_rows)
    return np.vstack(rows), np.vstack(target_rows), draws


def train_xor(cfg: XorTaskConfig) -> TrainResult:
    """Fit the affine readout, then evaluate on fresh noise draws.

    With a noise model, `samples` noisy copies of the four feature rows are
    stacked into one least-squares problem and the trained map is scored on
    `samples` previously unseen draws.
    """
    features = compute_xor_features(cfg)
    targets = cfg.targets

    if cfg.noise is None:
        weights, bias = solve_readout_weights(features, targets)
        outputs = linear_readout(features, weights, bias)
        err = xor_task_error(outputs, targets)
        errors = {
            "mean_abs": err.mean_abs,
            "max_abs": err.max_abs,
            "noise_free_mean_abs": err.mean_abs,
            "noise_free_max_abs": err.max_abs,
            "success": err.success,
        }
        per_draw = []
    else:
        train_x, train_t, _ = _noisy_feature_stack(features, targets, cfg.noise, first_draw=0)
        weights, bias = solve_readout_weights(train_x, train_t)
        _, _, eval_draws = _noisy_feature_stack(
            features, targets, cfg.noise, first_draw=cfg.noise.samples
        )
        per_draw = []
        for draw in eval_draws:
            outputs = linear_readout(draw, weights, bias)
            e = xor_task_error(outputs, targets)
            per_draw.append({"mean_abs": e.mean_abs, "max_abs": e.max_abs})
        clean = xor_task_error(linear_readout(features, weights, bias), targets)
        mean_of_max = float(np.mean([d["max_abs"] for d in per_draw]))
        errors = {
            "mean_abs": float(np.mean([d["mean_abs"] for d in per_draw])),
            "max_abs": mean_of_max,
            "noise_free_mean_abs": clean.mean_abs,
            "noise_free_max_abs": clean.max_abs,
            "success": mean_of_max < 0.5,
        }
        outputs = linear_readout(features, weights, bias)

    return TrainResult(
        task="xor",
        weights={"weights": weights.tolist(), "bias": bias.tolist()},
        outputs=outputs.tolist(),
        errors=errors,
        probabilities=None,
        iteration_log=[],
        details={
            "encoding": cfg.encoding,
            "features": features.tolist(),
            "per_draw_errors": per_draw,
        },
    )


def evaluate_xor(cfg: XorTaskConfig, weights, bias) -> dict:
    """Re-evaluate stored weights; reproduces TrainResult.errors exactly."""
    features = compute_xor_features(cfg)
    weights = np.asarray(weights, dtype=float)
    bias = np.asarray(bias, dtype=float)
    if cfg.noise is None:
        e = xor_task_error(linear_readout(features, weights, bias), cfg.targets)
        return {"mean_abs": e.mean_abs, "max_abs": e.max_abs}
    _, _, eval_draws = _noisy_feature_stack(
        features, cfg.targets, cfg.noise, first_draw=cfg.noise.samples
    )
    errs = [xor_task_error(linear_readout(d, weights, bias), cfg.targets) for d in eval_draws]
    return {
        "mean_abs": float(np.mean([e.mean_abs for e in errs])),
        "max_abs": float(np.mean([e.max_abs for e in errs])),
    }


def unitary_from_generator(theta: np.ndarray) -> MixingMatrix:
    """Hermitian generator from a flat real vector of length N^2.

    The first N entries are the diagonal; the rest fill the strict upper
    triangle as (real, imaginary) pairs, row by row.
    """
    theta = np.asarray(theta, dtype=float)
    n = math.isqrt(theta.size)
    if n * n != theta.size:
        raise ValueError(f"theta length {theta.size} is not a perfect square")
    h = np.diag(theta[:n].astype(complex))
    idx = n
    for i in range(n):
        for j in range(i + 1, n):
            h[i, j] = theta[idx] + 1j * theta[idx + 1]
            h[j, i] = np.conj(h[i, j])
            idx += 2
    return MixingMatrix.from_generator(h)


def _initial_simplex(x0: np.ndarray, scale: float) -> np.ndarray:
    simplex = np.tile(x0, (x0.size + 1, 1))
    for i in range(x0.size):
        simplex[i + 1, i] += scale
    return simplex


def _evolved_network_state(cfg: CatTaskConfig, beta: complex):
    basis = cfg.basis()
    amps = np.zeros(cfg.params.n_modes, dtype=complex)
    amps[cfg.input_mode] = beta
    rho0 = coherent_state(basis, amps).density()
    evo = cfg.evolution or EvolutionConfig(dt=stable_dt(cfg.params, basis))
    return evolve_master_equation(rho0, cfg.params, evo).final


def _cat_objective(theta, rho_tau, target_grid, cfg):
    """Wigner error of the conditioned output; floor violations cost a penalty."""
    mix = unitary_from_generator(theta)
    try:
        conditioned = condition_on_vacuum(rho_tau, mix, cfg.output_mode)
    except NumericalHealthError:
        return 2.0, 0.0
    obtained = wigner_of_state(conditioned.rho_out, cfg.grid)
    return wigner_error(obtained, target_grid), conditioned.probability


def _minimize_cat(theta0, rho_tau, target_grid, cfg):
    log = []

    def fun(theta):
        value, _ = _cat_objective(theta, rho_tau, target_grid, cfg)
        if not log or value < log[-1][1]:
            log.append((len(log), float(value)))
        return value

    opt = cfg.optimizer
    res = scipy.optimize.minimize(
        fun,
        theta0,
        method="Nelder-Mead",
        options={
            "maxiter": opt.max_iter,
            "xatol": opt.xatol,
            "fatol": opt.fatol,
            "initial_simplex": _initial_simplex(theta0, opt.simplex_scale),
            "adaptive": False,
        },
    )
    return res.x, log


def optimize_cat_mixing(cfg: CatTaskConfig) -> TrainResult:
    """Optimize the mixing unitary so the conditioned output matches the target.

    By default each input amplitude gets its own unitary; with
    ``shared_weights`` a single unitary is trained on the mean error.
    """
    n = cfg.params.n_modes
    theta0 = np.zeros(n * n)
    evolved = [(beta, _evolved_network_state(cfg, beta)) for beta in cfg.beta_list]
    targets = [target_cat_wigner(beta, cfg.k, cfg.grid) for beta in cfg.beta_list]

    per_beta = []
    if cfg.shared_weights:
        def shared_fun(theta):
            return float(np.mean([
                _cat_objective(theta, rho, tgt, cfg)[0]
                for (_, rho), tgt in zip(evolved, targets)
            ]))

        log = []

        def wrapped(theta):
            v = shared_fun(theta)
            if not log or v < log[-1][1]:
                log.append((len(log), v))
            return v

        opt = cfg.optimizer
        res = scipy.optimize.minimize(
            wrapped, theta0, method="Nelder-Mead",
            options={
                "maxiter": opt.max_iter, "xatol": opt.xatol, "fatol": opt.fatol,
                "initial_simplex": _initial_simplex(theta0, opt.simplex_scale),
                "adaptive": False,
            },
        )
        thetas = [res.x] * len(evolved)
        logs = [log] * len(evolved)
    else:
        thetas, logs = [], []
        for (_, rho), tgt in zip(evolved, targets):
            theta, log = _minimize_cat(theta0, rho, tgt, cfg)
            thetas.append(theta)
            logs.append(log)

    for (beta, rho), tgt, theta, log in zip(evolved, targets, thetas, logs):
        delta, probability = _cat_objective(theta, rho, tgt, cfg)
        per_beta.append({
            "beta_real": float(np.real(beta)),
            "beta_imag": float(np.imag(beta)),
            "delta": float(delta),
            "probability": float(probability),
            "theta": [float(t) for t in theta],
            "iterations": len(log),
        })

    if all(entry["probability"] <= 0.0 for entry in per_beta):
        raise NumericalHealthError("every conditioning fell below the probability floor")

    deltas = [e["delta"] for e in per_beta]
    probabilities = [e["probability"] for e in per_beta]
    return TrainResult(
        task="cat",
        weights={"theta_per_beta": [e["theta"] for e in per_beta]},
        outputs=None,
        errors={
            "delta_mean": float(np.mean(deltas)),
            "delta_per_beta": deltas,
        },
        probabilities=probabilities,
        iteration_log=[list(map(float, pair)) for log in logs for pair in log],
        details={"per_beta": per_beta, "shared_weights": cfg.shared_weights, "k": cfg.k},
    )


def evaluate_cat(cfg: CatTaskConfig, beta: complex, theta) -> tuple:
    """(delta, probability) for stored generator parameters."""
    rho = _evolved_network_state(cfg, beta)
    target = target_cat_wigner(beta, cfg.k, cfg.grid)
    return _cat_objective(np.asarray(theta, dtype=float), rho, target, cfg)


def _format_alpha(alpha) -> float:
    return float("inf") if alpha == INFINITE_KERR else float(alpha)


def sweep_nonlinearity(cfg, alpha_values, seeds, draws_per_point: int = 10) -> list:
    """Retrain from scratch at each Kerr strength; returns one row per alpha.

    XOR sweeps vary the noise stream over ``seeds``; cat sweeps draw
    ``draws_per_point`` input amplitudes uniformly from [1.0, 1.4] per seed.
    """
    if len(alpha_values) == 0 or len(seeds) == 0:
        raise ValueError("alpha_values and seeds must be non-empty")
    rows = []
    for point, alpha in enumerate(sorted(alpha_values, key=_format_alpha)):
        if isinstance(cfg, XorTaskConfig):
            rows.append(_sweep_xor_point(cfg, alpha, seeds))
        elif isinstance(cfg, CatTaskConfig):
            rows.append(_sweep_cat_point(cfg, alpha, seeds, draws_per_point))
        else:
            raise TypeError(f"unsupported task config {type(cfg).__name__}")
    return rows


def _sweep_xor_point(cfg: XorTaskConfig, alpha, seeds) -> dict:
    params = cfg.params.with_updates(alpha=alpha)
    per_seed = []
    for seed in seeds:
        noise = None if cfg.noise is None else replace(cfg.noise, seed=seed)
        case = replace(cfg, params=params, noise=noise)
        result = train_xor(case)
        per_seed.append(result.errors["max_abs"])
    return {
        "alpha": _format_alpha(alpha),
        "error_mean": float(np.mean(per_seed)),
        "error_std": float(np.std(per_seed)),
        "probability_mean": float("nan"),
        "per_draw": [float(v) for v in per_seed],
        "probabilities": [],
    }


def _sweep_cat_point(cfg: CatTaskConfig, alpha, seeds, draws_per_point) -> dict:
    params = cfg.params.with_updates(alpha=alpha)
    deltas, probabilities = [], []
    for seed in seeds:
        rng = substream(seed, "cat-sweep-beta", repr(_format_alpha(alpha)))
        betas = rng.uniform(1.0, 1.4, size=draws_per_point)
        case = replace(cfg, params=params, beta_list=list(betas))
        result = optimize_cat_mixing(case)
        deltas.extend(result.errors["delta_per_beta"])
        probabilities.extend(result.probabilities)
    return {
        "alpha": _format_alpha(alpha),
        "error_mean": float(np.mean(deltas)),
        "error_std": float(np.std(deltas)),
        "probability_mean": float(np.mean(probabilities)),
        "per_draw": [float(v) for v in deltas],
        "probabilities": [float(p) for p in probabilities],
    }
