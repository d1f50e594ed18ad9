"""Seeded Monte-Carlo experiment engine: scatter data, expectation
tables, SER sweeps, and the closed-form-vs-oracle validation suite.

Reproducibility contract: every random draw comes from a stream keyed by
(master_seed, context indices..., batch index, phase tag), with trials
processed in fixed-size batches. Results are therefore bitwise
reproducible for a given master seed, independent of execution order.
"""

import csv
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import blmmse, detectors, theorem1
from .airlink import mrc_soft_symbols, quantize, uplink_data_block, uplink_pilot_block
from .channel import (
    CovarianceSet,
    SCENARIO_ANGLES,
    sample_channel_batch,
    scenario_covariances,
)
from .config import SystemConfig
from .constellation import by_name
from .errors import ConfigError
from .pilots import _is_odd_prime, pilot_matrix

BATCH = 2048
# Without an explicit opt-in, refuse scenarios whose dense pilot
# covariance would be unreasonably large (M*tau = 4096 is ~260 MB).
LARGE_MTAU_CAP = 4096

# Stream phase tags.
_PH_CHANNEL = 0
_PH_PILOT_NOISE = 1
_PH_SYMBOLS = 2
_PH_DATA_NOISE = 3

STRATEGIES = ("exhaustive", "heuristic", "genie")


def derive_rng(master_seed: int, *tags: int) -> np.random.Generator:
    """Independent stream for (master_seed, tags...); order-insensitive."""
    return np.random.default_rng((int(master_seed),) + tuple(int(t) for t in tags))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a CLI run needs; validated before use."""

    M: int = 32
    K: int = 2
    tau: int = 31
    constellation: str = "qam16"
    scenario: str = "two_ue"
    snr_grid_db: tuple = (-10.0, 0.0, 10.0, 20.0, 30.0, 40.0)
    trials: int = 2000
    master_seed: int = 12345
    strategies: tuple = STRATEGIES
    zc_root: int = 1
    out_dir: str = "."
    allow_large: bool = False
    cache_dir: str | None = None

    def validated(self) -> "ExperimentConfig":
        if self.M < 1:
            raise ConfigError(f"M must be >= 1, got {self.M}")
        if self.scenario not in SCENARIO_ANGLES:
            raise ConfigError(
                f"scenario must be one of {sorted(SCENARIO_ANGLES)}, got {self.scenario!r}"
            )
        if self.K != len(SCENARIO_ANGLES[self.scenario]):
            raise ConfigError(
                f"K={self.K} does not match scenario {self.scenario!r}"
                f" (needs K={len(SCENARIO_ANGLES[self.scenario])})"
            )
        if not _is_odd_prime(self.tau):
            raise ConfigError(f"tau must be an odd prime, got {self.tau}")
        if self.tau < self.K:
            raise ConfigError(f"tau={self.tau} must be >= K={self.K}")
        try:
            by_name(self.constellation)
        except ValueError as err:
            raise ConfigError(f"constellation: {err}") from None
        if len(self.snr_grid_db) == 0:
            raise ConfigError("snr_grid_db must be non-empty")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            raise ConfigError(f"master_seed must be non-negative, got {self.master_seed}")
        unknown = set(self.strategies) - set(STRATEGIES)
        if unknown:
            raise ConfigError(f"unknown strategies: {sorted(unknown)}")
        if not self.strategies:
            raise ConfigError("strategies must be non-empty")
        if not 1 <= self.zc_root < self.tau:
            raise ConfigError(f"zc_root must satisfy 1 <= root < tau, got {self.zc_root}")
        if self.M * self.tau > LARGE_MTAU_CAP and not self.allow_large:
            raise ConfigError(
                f"M*tau = {self.M * self.tau} exceeds {LARGE_MTAU_CAP}; the dense"
                " pilot covariance is large, pass allow_large to proceed"
            )
        return self

    def system(self, rho: float) -> SystemConfig:
        return SystemConfig(M=self.M, K=self.K, tau=self.tau, rho=rho, seed=self.master_seed)


_CONFIG_PARSERS = {
    "M": int,
    "K": int,
    "tau": int,
    "constellation": str,
    "scenario": str,
    "snr_grid_db": lambda s: tuple(float(v) for v in str(s).split(",") if v.strip()),
    "trials": int,
    "master_seed": int,
    "strategies": lambda s: tuple(v.strip() for v in str(s).split(",") if v.strip()),
    "zc_root": int,
    "out_dir": str,
    "allow_large": lambda s: str(s).strip().lower() in ("1", "true", "yes"),
    "cache_dir": str,
}


def config_from_file(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat ``key = value`` config file ('#' starts a comment)."""
    cfg = base or ExperimentConfig()
    overrides = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                overrides[key] = _CONFIG_PARSERS[key](value)
            except ValueError as err:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {err}") from None
    return replace(cfg, **overrides)


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def _scenario_setup(cfg: ExperimentConfig, rho: float):
    cov = scenario_covariances(cfg.system(rho), cfg.scenario)
    pm = pilot_matrix(cfg.tau, cfg.K, root=cfg.zc_root)
    return cov, pm


def _estimator_for(cfg: ExperimentConfig, cov: CovarianceSet, pm, rho: float):
    """Build the estimator, round-tripping through the cache when enabled."""
    if cfg.cache_dir:
        os.makedirs(cfg.cache_dir, exist_ok=True)
        path = os.path.join(cfg.cache_dir, f"estimator_{blmmse.state_key(cov, pm, rho)}.npz")
        if os.path.exists(path):
            return blmmse.EstimatorState.load(path)
        state = blmmse.build_estimator(cov, pm, rho)
        state.save(path)
        return state
    return blmmse.build_estimator(cov, pm, rho)


def _batches(trials: int):
    start = 0
    index = 0
    while start < trials:
        yield index, start, min(BATCH, trials - start)
        start += BATCH
        index += 1


# ---------------------------------------------------------------------------
# scatter experiments (soft symbols vs closed-form expectations)
# ---------------------------------------------------------------------------


@dataclass
class ScatterResult:
    """Soft-symbol draws and the closed-form references for one UE."""

    ue: int
    mode: str
    rho: float
    # fixed_interferers mode: one block of trials per target symbol.
    trial_index: np.ndarray | None
    symbol_index: np.ndarray | None
    soft_symbols: np.ndarray | None
    empirical_means: np.ndarray | None
    standard_errors: np.ndarray | None
    # expectations: per-symbol E values (fixed mode) or the full table.
    table: theorem1.ExpectationTable | None
    expectations: np.ndarray
    expectation_encodings: np.ndarray


def run_scatter(
    cfg: ExperimentConfig,
    ue: int,
    mode: str = "fixed_interferers",
    interferer_indices=None,
    snr_db: float = 0.0,
) -> ScatterResult:
    """Reproduce the scatter-figure data for one UE at one SNR.

    fixed_interferers: the target UE sweeps every alphabet symbol while
    the interferers transmit fixed symbols; emits per-trial soft symbols
    plus the L closed-form expectations and per-symbol empirical means.

    all_combinations: no Monte-Carlo; emits the full expectation table
    and its class means.
    """
    cfg = cfg.validated()
    if not 1 <= ue <= cfg.K:
        raise ConfigError(f"ue must satisfy 1 <= ue <= {cfg.K}, got {ue}")
    if mode not in ("fixed_interferers", "all_combinations"):
        raise ConfigError(f"unknown scatter mode {mode!r}")
    rho = db_to_linear(snr_db)
    const = by_name(cfg.constellation)
    L = const.L
    cov, pm = _scenario_setup(cfg, rho)
    state = _estimator_for(cfg, cov, pm, rho)
    ctx = theorem1.make_context(cov, pm, rho, state)

    if mode == "all_combinations":
        table = theorem1.build_expectation_table(ue, const, ctx)
        return ScatterResult(
            ue=ue,
            mode=mode,
            rho=rho,
            trial_index=None,
            symbol_index=None,
            soft_symbols=None,
            empirical_means=None,
            standard_errors=None,
            table=table,
            expectations=table.entries,
            expectation_encodings=np.arange(table.entries.size),
        )

    if interferer_indices is None:
        # Default interferer pattern: symbols (-3+3j) and (-3+j) scaled,
        # i.e. indices 3 and 2 in row-major order, cycled as needed.
        defaults = [3, 2, 1]
        interferer_indices = tuple(defaults[j % 3] for j in range(cfg.K - 1))
    interferer_indices = tuple(int(i) for i in interferer_indices)
    if len(interferer_indices) != cfg.K - 1:
        raise ConfigError(
            f"need {cfg.K - 1} interferer indices for K={cfg.K}, got"
            f" {len(interferer_indices)}"
        )
    if any(not 0 <= i < L for i in interferer_indices):
        raise ConfigError(f"interferer indices must lie in [0, {L}), got {interferer_indices}")

    # Closed-form expectations for the L target symbols, interferers fixed.
    digits = np.empty((L, cfg.K), dtype=np.int64)
    other = [j for j in range(cfg.K) if j != ue - 1]
    for j, idx in zip(other, interferer_indices):
        digits[:, j] = idx
    digits[:, ue - 1] = np.arange(L)
    encodings = theorem1.encode_digits(digits, L)
    expectations = np.array(
        [theorem1.expected_soft_symbol(ue, const.symbols[d], ctx) for d in digits]
    )

    trials = cfg.trials
    soft = np.empty((L, trials), dtype=np.complex128)
    for l in range(L):
        x = const.symbols[digits[l]]
        for b_idx, start, size in _batches(trials):
            H = sample_channel_batch(
                cov, derive_rng(cfg.master_seed, l, b_idx, _PH_CHANNEL), size
            )
            pilot = uplink_pilot_block(
                H, pm, rho, derive_rng(cfg.master_seed, l, b_idx, _PH_PILOT_NOISE)
            )
            h_hat = blmmse.estimate(state, pilot.rp)
            data = uplink_data_block(
                H,
                np.broadcast_to(x, (size, cfg.K)),
                rho,
                derive_rng(cfg.master_seed, l, b_idx, _PH_DATA_NOISE),
            )
            soft[l, start : start + size] = mrc_soft_symbols(h_hat, data.r)[:, ue - 1]

    means = soft.mean(axis=1)
    se = np.sqrt((soft.real.var(axis=1) + soft.imag.var(axis=1)) / trials)
    return ScatterResult(
        ue=ue,
        mode=mode,
        rho=rho,
        trial_index=np.tile(np.arange(trials), L),
        symbol_index=np.repeat(np.arange(L), trials),
        soft_symbols=soft.reshape(-1),
        empirical_means=means,
        standard_errors=se,
        table=None,
        expectations=expectations,
        expectation_encodings=encodings,
    )


# ---------------------------------------------------------------------------
# SER sweep
# ---------------------------------------------------------------------------


@dataclass
class SerResult:
    """Symbol-error statistics per (strategy, SNR point)."""

    strategies: tuple
    snr_db: np.ndarray
    errors: np.ndarray  # (S, N) int
    counts: np.ndarray  # (S, N) int
    per_ue_errors: np.ndarray  # (S, N, K) int

    @property
    def ser(self) -> np.ndarray:
        return self.errors / self.counts

    @property
    def stderr(self) -> np.ndarray:
        p = self.ser
        return np.sqrt(p * (1.0 - p) / self.counts)


def run_ser(cfg: ExperimentConfig) -> SerResult:
    """SER of each strategy over the SNR grid, seeded and batch-exact.

    Per SNR point the estimator and expectation tables are rebuilt (the
    SNR enters every closed form). Each trial draws a channel, a pilot
    block, and a data block with symbols uniform over the alphabet, then
    every strategy decides every UE's symbol from the same soft estimate.
    """
    cfg = cfg.validated()
    const = by_name(cfg.constellation)
    L = const.L
    K = cfg.K
    n_snr = len(cfg.snr_grid_db)
    strategies = tuple(cfg.strategies)
    errors = np.zeros((len(strategies), n_snr), dtype=np.int64)
    per_ue = np.zeros((len(strategies), n_snr, K), dtype=np.int64)

    for si, snr_db in enumerate(cfg.snr_grid_db):
        rho = db_to_linear(snr_db)
        cov, pm = _scenario_setup(cfg, rho)
        state = _estimator_for(cfg, cov, pm, rho)
        ctx = theorem1.make_context(cov, pm, rho, state)
        tables = [
            theorem1.build_expectation_table(k, const, ctx) for k in range(1, K + 1)
        ]
        for b_idx, _start, size in _batches(cfg.trials):
            H = sample_channel_batch(
                cov, derive_rng(cfg.master_seed, si, b_idx, _PH_CHANNEL), size
            )
            pilot = uplink_pilot_block(
                H, pm, rho, derive_rng(cfg.master_seed, si, b_idx, _PH_PILOT_NOISE)
            )
            h_hat = blmmse.estimate(state, pilot.rp)
            sym = derive_rng(cfg.master_seed, si, b_idx, _PH_SYMBOLS).integers(
                0, L, size=(size, K)
            )
            data = uplink_data_block(
                H,
                const.symbols[sym],
                rho,
                derive_rng(cfg.master_seed, si, b_idx, _PH_DATA_NOISE),
            )
            xhat = mrc_soft_symbols(h_hat, data.r)
            for k in range(1, K + 1):
                probes = xhat[:, k - 1]
                truth = sym[:, k - 1]
                for s_idx, strategy in enumerate(strategies):
                    if strategy == "exhaustive":
                        decided = detectors.detect_exhaustive_batch(probes, tables[k - 1])
                    elif strategy == "heuristic":
                        decided = detectors.detect_heuristic_batch(probes, tables[k - 1])
                    else:
                        decided = detectors.detect_genie_batch(
                            probes, np.delete(sym, k - 1, axis=1), tables[k - 1]
                        )
                    wrong = int(np.count_nonzero(decided != truth))
                    errors[s_idx, si] += wrong
                    per_ue[s_idx, si, k - 1] += wrong

    counts = np.full((len(strategies), n_snr), cfg.trials * K, dtype=np.int64)
    return SerResult(
        strategies=strategies,
        snr_db=np.asarray(cfg.snr_grid_db, dtype=float),
        errors=errors,
        counts=counts,
        per_ue_errors=per_ue,
    )


# ---------------------------------------------------------------------------
# validation suite (closed forms vs Monte-Carlo oracles)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self):
        return [
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in self.checks
        ]

    def __str__(self) -> str:
        return "\n".join(self.lines())


def _mc_crp(cov, pm, rho, trials, rng):
    """Empirical E[r_p r_p^H]; the oracle side of the C_rp check."""
    acc = np.zeros((cov.M * pm.tau, cov.M * pm.tau), dtype=np.complex128)
    done = 0
    while done < trials:
        size = min(BATCH * 8, trials - done)
        H = sample_channel_batch(cov, rng, size)
        rp = uplink_pilot_block(H, pm, rho, rng).rp
        acc += rp.T @ rp.conj()
        done += size
    return acc / trials


def _mc_crrp(cov, pm, rho, x, trials, rng):
    """Empirical E[r r_p^H] with x fixed, jointly sampling (H, z, z_p)."""
    acc = np.zeros((cov.M, cov.M * pm.tau), dtype=np.complex128)
    done = 0
    while done < trials:
        size = min(BATCH * 8, trials - done)
        H = sample_channel_batch(cov, rng, size)
        rp = uplink_pilot_block(H, pm, rho, rng).rp
        r = uplink_data_block(H, np.broadcast_to(x, (size, cov.K)), rho, rng).r
        acc += r.T @ rp.conj()
        done += size
    return acc / trials


def validate(seed: int = 2024, *, _omega=None) -> ValidationReport:
    """Fast consistency suite: closed forms vs small Monte-Carlo oracles.

    ``_omega`` is a test-only hook that replaces the arcsine map inside
    the closed-form C_rp (a mutation canary must make the check fail).
    """
    report = ValidationReport()
    const = by_name("qam16")

    def record(name, passed, detail):
        report.checks.append(CheckResult(name, bool(passed), detail))

    # Pilot orthogonality at the paper-relevant sizes.
    worst = 0.0
    for tau, K in ((5, 2), (31, 2), (31, 3), (61, 3)):
        pm = pilot_matrix(tau, K)
        gram = pm.P.conj().T @ pm.P
        worst = max(worst, np.abs(gram - tau * np.eye(K)).max())
    record("pilot_orthogonality", worst <= 1e-9, f"max |P^H P - tau I| = {worst:.2e}")

    # Two-UE desk scenario, small enough for fast oracles.
    rho = 1.0
    cfg = SystemConfig(M=4, K=2, tau=5, rho=rho)
    cov = scenario_covariances(cfg, "two_ue")
    pm = pilot_matrix(5, 2)
    q = rho * cov.K + 1.0

    crp = blmmse.crp_closed_form(cov, pm, rho, _omega=_omega)
    diag_err = np.abs(crp.diagonal() - q).max()
    record("crp_diagonal_exact", diag_err == 0.0, f"max |diag - (rho K + 1)| = {diag_err:.2e}")

    trials = 50_000
    emp = _mc_crp(cov, pm, rho, trials, derive_rng(seed, 0))
    err = np.abs(crp - emp).max()
    record("crp_oracle", err < 0.04, f"max entry error {err:.4f} (tol 0.04, N={trials})")

    x = np.array([const.symbols[11], const.symbols[2]])
    crrp = theorem1.crrp_closed_form(cov, pm, rho, x)
    emp = _mc_crrp(cov, pm, rho, x, trials, derive_rng(seed, 1))
    err = np.abs(crrp - emp).max()
    record("crrp_oracle", err < 0.04, f"max entry error {err:.4f} (tol 0.04, N={trials})")

    # Theorem-1 expectation vs the empirical mean soft symbol at M=8.
    cfg8 = SystemConfig(M=8, K=2, tau=5, rho=rho)
    cov8 = scenario_covariances(cfg8, "two_ue")
    state8 = blmmse.build_estimator(cov8, pm, rho)
    ctx8 = theorem1.make_context(cov8, pm, rho, state8)
    expected = theorem1.expected_soft_symbol(1, x, ctx8)
    n_exp = 20_000
    rng = derive_rng(seed, 2)
    H = sample_channel_batch(cov8, rng, n_exp)
    rp = uplink_pilot_block(H, pm, rho, rng).rp
    h_hat = blmmse.estimate(state8, rp)
    r = uplink_data_block(H, np.broadcast_to(x, (n_exp, 2)), rho, rng).r
    xhat = mrc_soft_symbols(h_hat, r)[:, 0]
    se = np.sqrt((xhat.real.var() + xhat.imag.var()) / n_exp)
    gap = abs(xhat.mean() - expected)
    tol = max(0.02 * abs(expected), 4.0 * se)
    record(
        "expectation_oracle",
        gap < tol,
        f"|mean - E| = {gap:.4f} vs tol {tol:.4f} (N={n_exp})",
    )

    # beta reduces to alpha for unit-modulus symbols.
    unit_x = np.array([1.0 + 0j, 1j])
    kernels = theorem1.scalar_kernels(cov, rho, unit_x)
    beta_gap = np.abs(kernels.beta - kernels.alpha).max()
    record("beta_equals_alpha", beta_gap < 1e-12, f"max |beta - alpha| = {beta_gap:.2e}")

    # Single-UE uncorrelated regression.
    cov1 = CovarianceSet((np.eye(6, dtype=np.complex128),))
    pm1 = pilot_matrix(5, 1)
    crp1 = blmmse.crp_closed_form(cov1, pm1, rho)
    emp1 = _mc_crp(cov1, pm1, rho, 30_000, derive_rng(seed, 3))
    err1 = np.abs(crp1 - emp1).max()
    record("single_ue_regression", err1 < 0.05, f"max entry error {err1:.4f} (tol 0.05)")

    return report


# ---------------------------------------------------------------------------
# CSV outputs (schema-stable; see README)
# ---------------------------------------------------------------------------


def write_scatter_csv(result: ScatterResult, path) -> None:
    """Columns: trial, re_xhat, im_xhat, true_symbol_index."""
    if result.soft_symbols is None:
        raise ValueError("scatter CSV requires a fixed_interferers run")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "re_xhat", "im_xhat", "true_symbol_index"])
        for t, v, l in zip(result.trial_index, result.soft_symbols, result.symbol_index):
            writer.writerow([t, repr(float(v.real)), repr(float(v.imag)), l])


def write_scatter_expectations_csv(result: ScatterResult, path) -> None:
    """Columns: x_encoding, ue, re_E, im_E (the closed-form references)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_encoding", "ue", "re_E", "im_E"])
        for enc, value in zip(result.expectation_encodings, result.expectations):
            writer.writerow([enc, result.ue, repr(float(value.real)), repr(float(value.imag))])


def write_ser_csv(result: SerResult, path) -> None:
    """Columns: strategy, snr_db, errors, count, ser, stderr."""
    ser = result.ser
    stderr = result.stderr
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "snr_db", "errors", "count", "ser", "stderr"])
        for s_idx, strategy in enumerate(result.strategies):
            for si, snr_db in enumerate(result.snr_db):
                writer.writerow(
                    [
                        strategy,
                        snr_db,
                        int(result.errors[s_idx, si]),
                        int(result.counts[s_idx, si]),
                        repr(float(ser[s_idx, si])),
                        repr(float(stderr[s_idx, si])),
                    ]
                )


def write_per_ue_csv(result: SerResult, path) -> None:
    """Columns: strategy, snr_db, ue, errors, count, ser."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "snr_db", "ue", "errors", "count", "ser"])
        K = result.per_ue_errors.shape[2]
        for s_idx, strategy in enumerate(result.strategies):
            for si, snr_db in enumerate(result.snr_db):
                count = int(result.counts[s_idx, si]) // K
                for k in range(K):
                    err = int(result.per_ue_errors[s_idx, si, k])
                    writer.writerow([strategy, snr_db, k + 1, err, count, repr(float(err / count))])
