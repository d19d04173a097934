"""Config-driven experiment runner with seeded, reproducible sweeps.

A scenario is described by a JSON object (schema below) and produces a
CSV table, one row per sweep point, aggregating independent Monte Carlo
trials.  Reproducibility contract: the per-trial random stream is
``numpy.random.default_rng([seed, point_index, trial_index])`` — no
global RNG state — so the same config and seed yield byte-identical CSV
regardless of worker count.

All angles in configs are degrees and all SNRs are dB; conversion to
radians/linear happens once, here.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .array_model import ArrayGeometry, Direction, pattern, steering_vector
from .blockage import (
    BlockageMap,
    BlockageModel,
    innovation_coeffs,
    place_group_blockage,
    sample_blockage,
)
from .block_recovery import BlockConfig, block_sparse_recover
from .errors import ArrayDoctorError, ConfigError
from .group_complete import default_tau_abs, diagnose_group
from .joint_diagnosis import diagnose_joint
from .metrics import mean_db, median_db, nmse, success, success_probability
from .pattern_stats import (
    empirical_pattern_stats,
    mainlobe_stats,
    sidelobe_stats,
)
from .recovery import (
    LassoConfig,
    default_omega,
    detect_support,
    diagnose_rx,
    genie_ls,
    lasso,
    ls_debias,
)
from .sensing import (
    Impairments,
    PhaseShifterCodebook,
    measure_group,
    measure_joint,
    measure_rx,
    random_unitary,
    random_weights,
)

SCHEMA_VERSION = 1
SCENARIOS = (
    "pattern_cut",
    "stats",
    "diagnose_rx",
    "diagnose_block",
    "diagnose_group",
    "diagnose_joint",
)


def db_to_linear(db: float) -> float:
    return math.inf if math.isinf(db) and db > 0 else 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SolverSettings:
    """Solver knobs; ``None`` falls back to the pinned defaults."""

    omega: float | None = None
    sigma: float | None = None
    tau_rel: float = 0.1
    max_iters: int = 2000
    rel_tol: float = 1e-8
    block_h: int = 8
    lambda_g: float | None = None
    block_max_iters: int = 200
    block_rel_tol: float = 1e-6
    tau_abs: float | None = None
    search_budget: int = 2**20

    def lasso_config(self, rho: float, n: int) -> LassoConfig:
        sigma = self.sigma
        if sigma is None:
            sigma = 0.0 if math.isinf(rho) else 1.0 / math.sqrt(rho)
        omega = self.omega if self.omega is not None else default_omega(n)
        return LassoConfig(
            omega=omega, sigma=sigma, max_iters=self.max_iters, rel_tol=self.rel_tol
        )

    def block_config(self, rho: float, n: int) -> BlockConfig:
        if self.lambda_g is not None:
            lam = self.lambda_g
        else:
            sigma = self.sigma
            if sigma is None:
                sigma = 0.0 if math.isinf(rho) else 1.0 / math.sqrt(rho)
            omega = self.omega if self.omega is not None else default_omega(n)
            lam = omega * sigma * math.sqrt(self.block_h)
        return BlockConfig(
            h=self.block_h,
            lambda_g=lam,
            max_iters=self.block_max_iters,
            rel_tol=self.block_rel_tol,
        )


@dataclass(frozen=True)
class GroupSpec:
    count: int
    rows: int
    cols: int


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, normalized scenario description."""

    scenario: str
    seed: int
    trials: int
    geometry: ArrayGeometry | None = None
    tx_geometry: ArrayGeometry | None = None
    direction: Direction | None = None
    tx_direction: Direction | None = None
    model: BlockageModel | None = None
    pb: float = 0.0
    groups: GroupSpec | None = None
    k_values: tuple[int, ...] = ()
    k_pairs: tuple[tuple[int, int], ...] = ()
    snr_db_values: tuple[float, ...] = ()
    impairments: Impairments = field(default_factory=Impairments)
    bits: int = 2
    solver: SolverSettings = field(default_factory=SolverSettings)
    # pattern_cut payload
    blocked_elements: tuple[tuple[int, complex], ...] = ()
    phi_grid_deg: tuple[float, float, int] = (0.0, 180.0, 181)
    # stats payload
    stats_models: tuple[str, ...] = ()
    stats_pb: tuple[float, ...] = ()
    stats_phi_deg: tuple[float, ...] = ()
    stats_beta: complex = 0.5


# ---------------------------------------------------------------------------
# config parsing / validation


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}: missing required field")
    return obj[key]


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected number, got {value!r}")
    return float(value)


def _as_number_list(value, path: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (float(value),)
    if isinstance(value, list) and value:
        return tuple(_as_number(v, f"{path}[{i}]") for i, v in enumerate(value))
    raise ConfigError(f"{path}: expected number or non-empty list of numbers")


def _as_int_list(value, path: str, minimum: int = 1) -> tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        return (_as_int(value, path, minimum),)
    if isinstance(value, list) and value:
        return tuple(_as_int(v, f"{path}[{i}]", minimum) for i, v in enumerate(value))
    raise ConfigError(f"{path}: expected integer or non-empty list of integers")


def _parse_geometry(obj, path: str) -> ArrayGeometry:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected object")
    try:
        return ArrayGeometry(
            nx=_as_int(_require(obj, "nx", path), f"{path}.nx", 1),
            ny=_as_int(_require(obj, "ny", path), f"{path}.ny", 1),
            dx_norm=_as_number(obj.get("dx_norm", 0.5), f"{path}.dx_norm"),
            dy_norm=_as_number(obj.get("dy_norm", 0.5), f"{path}.dy_norm"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_direction(obj, path: str, default: Direction | None = None) -> Direction:
    if obj is None:
        if default is not None:
            return default
        raise ConfigError(f"{path}: missing required field")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected object")
    theta = _as_number(obj.get("theta_deg", 90.0), f"{path}.theta_deg")
    phi = _as_number(_require(obj, "phi_deg", path), f"{path}.phi_deg")
    return Direction.from_degrees(theta, phi)


def _parse_model(obj: dict, path: str) -> BlockageModel:
    name = _require(obj, "model", path)
    if name == "complete":
        return BlockageModel.complete()
    if name == "constant_partial":
        beta = complex(
            _as_number(obj.get("beta_re", 0.0), f"{path}.beta_re"),
            _as_number(obj.get("beta_im", 0.0), f"{path}.beta_im"),
        )
        try:
            return BlockageModel.constant_partial(beta)
        except ValueError as exc:
            raise ConfigError(f"{path}.beta_re/beta_im: {exc}") from exc
    if name == "random_partial":
        return BlockageModel.random_partial()
    raise ConfigError(f"{path}.model: unknown model {name!r}")


def _parse_solver(obj, path: str) -> SolverSettings:
    if obj is None:
        return SolverSettings()
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected object")
    known = {
        "omega", "sigma", "tau_rel", "max_iters", "rel_tol", "block_h",
        "lambda_g", "block_max_iters", "block_rel_tol", "tau_abs", "search_budget",
    }
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{path}: unknown fields {sorted(unknown)}")
    kwargs = {}
    for key in ("omega", "sigma", "lambda_g", "tau_abs"):
        if obj.get(key) is not None:
            kwargs[key] = _as_number(obj[key], f"{path}.{key}")
    for key in ("tau_rel", "rel_tol", "block_rel_tol"):
        if key in obj:
            kwargs[key] = _as_number(obj[key], f"{path}.{key}")
    for key in ("max_iters", "block_h", "block_max_iters", "search_budget"):
        if key in obj:
            kwargs[key] = _as_int(obj[key], f"{path}.{key}", 1)
    try:
        return SolverSettings(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_blockage(cfg: dict, path: str) -> tuple[BlockageModel, float, GroupSpec | None]:
    obj = _require(cfg, "blockage", "config")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected object")
    model = _parse_model(obj, path)
    pb = 0.0
    groups = None
    if "groups" in obj:
        g = obj["groups"]
        if not isinstance(g, dict):
            raise ConfigError(f"{path}.groups: expected object")
        groups = GroupSpec(
            count=_as_int(_require(g, "count", f"{path}.groups"), f"{path}.groups.count", 1),
            rows=_as_int(_require(g, "rows", f"{path}.groups"), f"{path}.groups.rows", 1),
            cols=_as_int(_require(g, "cols", f"{path}.groups"), f"{path}.groups.cols", 1),
        )
    if "pb" in obj:
        pb = _as_number(obj["pb"], f"{path}.pb")
        if not 0.0 <= pb <= 1.0:
            raise ConfigError(f"{path}.pb: must be in [0, 1], got {pb}")
    if groups is None and "pb" not in obj:
        raise ConfigError(f"{path}: needs either 'pb' or 'groups'")
    return model, pb, groups


def _parse_impairments(obj, path: str) -> Impairments:
    if obj is None:
        return Impairments()
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected object")
    jitter = _as_number(obj.get("angle_jitter_deg", 0.0), f"{path}.angle_jitter_deg")
    multipath = None
    if obj.get("multipath") is not None:
        mp = obj["multipath"]
        if not isinstance(mp, dict):
            raise ConfigError(f"{path}.multipath: expected object")
        multipath = (
            _as_int(_require(mp, "num_paths", f"{path}.multipath"), f"{path}.multipath.num_paths", 2),
            _as_number(
                _require(mp, "direct_energy_fraction", f"{path}.multipath"),
                f"{path}.multipath.direct_energy_fraction",
            ),
        )
    try:
        return Impairments(angle_jitter_deg=jitter, multipath=multipath)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(cfg: dict) -> ScenarioConfig:
    """Validate a raw config dict; raises ConfigError with field paths."""
    if not isinstance(cfg, dict):
        raise ConfigError("config: expected a JSON object")
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: unsupported version {version}")
    scenario = _require(cfg, "scenario", "config")
    if scenario not in SCENARIOS:
        raise ConfigError(f"config.scenario: unknown scenario {scenario!r}")
    seed = _as_int(cfg.get("seed", 0), "config.seed", 0)
    trials = _as_int(cfg.get("trials", 1), "config.trials", 1)
    solver = _parse_solver(cfg.get("solver"), "config.solver")
    bits = _as_int(cfg.get("bits", 2), "config.bits", 1)
    if bits not in (1, 2):
        raise ConfigError(f"config.bits: must be 1 or 2, got {bits}")

    out = ScenarioConfig(scenario=scenario, seed=seed, trials=trials, solver=solver, bits=bits)

    if scenario == "pattern_cut":
        geom = _parse_geometry(_require(cfg, "geometry", "config"), "config.geometry")
        direction = _parse_direction(cfg.get("direction"), "config.direction")
        grid = cfg.get("phi_grid_deg", {})
        start = _as_number(grid.get("start", 0.0), "config.phi_grid_deg.start")
        stop = _as_number(grid.get("stop", 180.0), "config.phi_grid_deg.stop")
        num = _as_int(grid.get("num", 181), "config.phi_grid_deg.num", 2)
        blocked = []
        for i, entry in enumerate(cfg.get("blocked", [])):
            path = f"config.blocked[{i}]"
            idx = _as_int(_require(entry, "index", path), f"{path}.index", 0)
            if idx >= geom.n_elements:
                raise ConfigError(f"{path}.index: out of range for N={geom.n_elements}")
            value = complex(
                _as_number(entry.get("b_re", 0.0), f"{path}.b_re"),
                _as_number(entry.get("b_im", 0.0), f"{path}.b_im"),
            )
            blocked.append((idx, value))
        return replace(
            out,
            geometry=geom,
            direction=direction,
            blocked_elements=tuple(blocked),
            phi_grid_deg=(start, stop, num),
        )

    if scenario == "stats":
        stats = _require(cfg, "stats", "config")
        if not isinstance(stats, dict):
            raise ConfigError("config.stats: expected object")
        nx = _as_int(stats.get("nx", 16), "config.stats.nx", 1)
        geom = ArrayGeometry(nx=nx, ny=1)
        models = tuple(stats.get("models", ["complete", "constant_partial", "random_partial"]))
        for name in models:
            if name not in ("complete", "constant_partial", "random_partial"):
                raise ConfigError(f"config.stats.models: unknown model {name!r}")
        pbs = _as_number_list(stats.get("pb", [0.05, 0.1, 0.3]), "config.stats.pb")
        phis = _as_number_list(
            stats.get("phi_deg", [90.0, 40.0, 60.0, 75.0, 110.0, 135.0]),
            "config.stats.phi_deg",
        )
        phi_t = _as_number(stats.get("phi_t_deg", 90.0), "config.stats.phi_t_deg")
        beta = complex(
            _as_number(stats.get("beta_re", 0.5), "config.stats.beta_re"),
            _as_number(stats.get("beta_im", 0.0), "config.stats.beta_im"),
        )
        direction = Direction.from_degrees(90.0, phi_t)
        return replace(
            out,
            geometry=geom,
            direction=direction,  # steering direction of the cut
            stats_models=models,
            stats_pb=pbs,
            stats_phi_deg=phis,
            stats_beta=beta,
        )

    # diagnosis scenarios
    geom = _parse_geometry(_require(cfg, "geometry", "config"), "config.geometry")
    direction = _parse_direction(cfg.get("direction"), "config.direction",
                                 Direction.from_degrees(90.0, 60.0))
    model, pb, groups = _parse_blockage(cfg, "config.blockage")
    snr = tuple(_as_number_list(_require(cfg, "snr_db", "config"), "config.snr_db"))
    impairments = _parse_impairments(cfg.get("impairments"), "config.impairments")
    out = replace(
        out,
        geometry=geom,
        direction=direction,
        model=model,
        pb=pb,
        groups=groups,
        snr_db_values=snr,
        impairments=impairments,
    )

    if scenario == "diagnose_rx":
        if groups is not None and pb == 0.0 and "pb" not in cfg["blockage"]:
            raise ConfigError("config.blockage: diagnose_rx uses 'pb', not 'groups'")
        k_values = _as_int_list(_require(cfg, "k", "config"), "config.k")
        return replace(out, k_values=k_values)

    if scenario == "diagnose_block":
        if groups is None:
            raise ConfigError("config.blockage.groups: required for diagnose_block")
        k_values = _as_int_list(_require(cfg, "k", "config"), "config.k")
        return replace(out, k_values=k_values)

    if scenario == "diagnose_group":
        if groups is None:
            raise ConfigError("config.blockage.groups: required for diagnose_group")
        if model.kind != "complete":
            raise ConfigError(
                "config.blockage.model: the group-complete technique supports "
                "complete blockages only"
            )
        if "k" in cfg:
            k = _as_int_list(cfg["k"], "config.k")
            expected = geom.nx + geom.ny
            if k != (expected,):
                raise ConfigError(
                    f"config.k: the group scheme uses exactly nx+ny = {expected} measurements"
                )
        return replace(out, k_values=(geom.nx + geom.ny,))

    # diagnose_joint
    tx_geom = _parse_geometry(_require(cfg, "tx_geometry", "config"), "config.tx_geometry")
    tx_dir = _parse_direction(cfg.get("tx_direction"), "config.tx_direction",
                              Direction.from_degrees(90.0, 30.0))
    pairs_raw = _require(cfg, "k_pairs", "config")
    if not isinstance(pairs_raw, list) or not pairs_raw:
        raise ConfigError("config.k_pairs: expected non-empty list of [k_r, k_t] pairs")
    pairs = []
    for i, pair in enumerate(pairs_raw):
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"config.k_pairs[{i}]: expected [k_r, k_t]")
        pairs.append(
            (
                _as_int(pair[0], f"config.k_pairs[{i}][0]", 1),
                _as_int(pair[1], f"config.k_pairs[{i}][1]", 1),
            )
        )
    return replace(out, tx_geometry=tx_geom, tx_direction=tx_dir, k_pairs=tuple(pairs))


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc})") from exc
    return parse_config(raw)


# ---------------------------------------------------------------------------
# per-trial simulation


def trial_rng(seed: int, point_index: int, trial_index: int) -> np.random.Generator:
    """The documented counter scheme: one independent stream per trial."""
    return np.random.default_rng([seed, point_index, trial_index])


def _trial_diagnose_rx(cfg: ScenarioConfig, k: int, snr_db: float, rng) -> dict:
    geom = cfg.geometry
    n = geom.n_elements
    rho = db_to_linear(snr_db)
    bmap = sample_blockage(n, cfg.pb, cfg.model, rng)
    X = random_weights(k, n, cfg.bits, rng)
    ms = measure_rx(geom, bmap, X, cfg.direction, rho, cfg.impairments, rng)
    a = steering_vector(geom, cfg.direction)
    q_true = innovation_coeffs(bmap) * a
    has_faults = bmap.blocked.size > 0
    lcfg = cfg.solver.lasso_config(rho, n)
    result = {"failed": 0.0}
    try:
        rep = diagnose_rx(ms, a, lcfg, cfg.solver.tau_rel)
        exact, fp, fn = success(bmap.blocked, rep.support)
        result["nmse"] = nmse(q_true, rep.q_hat) if has_faults else math.nan
        result["exact"] = float(exact)
        result["no_miss"] = float(fn == 0)
        result["fp"] = float(fp)
        result["fn"] = float(fn)
        genie = genie_ls(ms, a, bmap.blocked)
        result["genie_nmse"] = nmse(q_true, genie.q_hat) if has_faults else math.nan
    except ArrayDoctorError:
        result = {
            "failed": 1.0, "nmse": math.nan, "exact": math.nan, "no_miss": math.nan,
            "fp": math.nan, "fn": math.nan, "genie_nmse": math.nan,
        }
    return result


def _trial_diagnose_block(cfg: ScenarioConfig, k: int, snr_db: float, rng) -> dict:
    geom = cfg.geometry
    n = geom.n_elements
    rho = db_to_linear(snr_db)
    g = cfg.groups
    bmap = place_group_blockage(geom, g.count, (g.rows, g.cols), cfg.model, rng)
    X = random_weights(k, n, cfg.bits, rng)
    ms = measure_rx(geom, bmap, X, cfg.direction, rho, cfg.impairments, rng)
    a = steering_vector(geom, cfg.direction)
    q_true = innovation_coeffs(bmap) * a
    lcfg = cfg.solver.lasso_config(rho, n)
    bcfg = cfg.solver.block_config(rho, n)
    result = {"failed": 0.0}
    try:
        rep = diagnose_rx(ms, a, lcfg, cfg.solver.tau_rel)
        result["lasso_nmse"] = nmse(q_true, rep.q_hat)
        result["lasso_exact"] = float(success(bmap.blocked, rep.support)[0])

        q_block = block_sparse_recover(ms.y, ms.X, bcfg)
        support = detect_support(q_block, cfg.solver.tau_rel)
        coeffs = ls_debias(ms.y, ms.X, support)
        q_hat = np.zeros(n, dtype=complex)
        q_hat[support] = coeffs
        result["block_nmse"] = nmse(q_true, q_hat)
        result["block_exact"] = float(success(bmap.blocked, support)[0])
    except ArrayDoctorError:
        result = {
            "failed": 1.0, "lasso_nmse": math.nan, "lasso_exact": math.nan,
            "block_nmse": math.nan, "block_exact": math.nan,
        }
    return result


def _trial_diagnose_group(cfg: ScenarioConfig, k: int, snr_db: float, rng) -> dict:
    geom = cfg.geometry
    n = geom.n_elements
    rho = db_to_linear(snr_db)
    g = cfg.groups
    bmap = place_group_blockage(geom, g.count, (g.rows, g.cols), cfg.model, rng)
    codebook = PhaseShifterCodebook(cfg.bits)
    W = random_unitary(geom.ny, rng)
    P = random_unitary(geom.nx, rng)
    w0 = codebook.draw(rng, geom.ny)
    p0 = codebook.draw(rng, geom.nx)
    ms = measure_group(geom, bmap, W, P, w0, p0, rho, cfg.direction, rng)
    tau_abs = cfg.solver.tau_abs if cfg.solver.tau_abs is not None else default_tau_abs(rho)
    result = {"failed": 0.0}
    try:
        mask = diagnose_group(
            ms, geom, W, P, w0, p0, tau_abs, cfg.direction, budget=cfg.solver.search_budget
        )
        exact, _, fn = success(bmap.blocked, mask.support(geom))
        result["group_exact"] = float(exact)
        result["group_no_miss"] = float(fn == 0)
    except ArrayDoctorError:
        result.update({"failed": 1.0, "group_exact": math.nan, "group_no_miss": math.nan})

    # plain-LASSO arm with the same number of measurements on the same faults
    X = random_weights(k, n, cfg.bits, rng)
    ms2 = measure_rx(geom, bmap, X, cfg.direction, rho, Impairments(), rng)
    lcfg = cfg.solver.lasso_config(rho, n)
    nu = lasso(ms2.y, ms2.X, lcfg)
    support = detect_support(nu, cfg.solver.tau_rel)
    result["lasso_exact"] = float(success(bmap.blocked, support)[0])
    return result


def _trial_diagnose_joint(cfg: ScenarioConfig, k_pair: tuple[int, int], snr_db: float, rng) -> dict:
    k_r, k_t = k_pair
    rho = db_to_linear(snr_db)
    rx_geom, tx_geom = cfg.geometry, cfg.tx_geometry
    map_rx = sample_blockage(rx_geom.n_elements, cfg.pb, cfg.model, rng)
    map_tx = sample_blockage(tx_geom.n_elements, cfg.pb, cfg.model, rng)
    jms = measure_joint(
        rx_geom, tx_geom, map_rx, map_tx, k_r, k_t,
        cfg.direction, cfg.tx_direction, rho, cfg.bits, rng,
    )
    a = steering_vector(rx_geom, cfg.direction)
    a_t = steering_vector(tx_geom, cfg.tx_direction)
    v_r = map_rx.b * a - a
    v_t = map_tx.b * a_t - a_t
    lcfg = cfg.solver.lasso_config(rho, rx_geom.n_elements * tx_geom.n_elements)
    result = {"failed": 0.0}
    try:
        rep = diagnose_joint(jms, a, a_t, lcfg, cfg.solver.tau_rel)
        n_r = rx_geom.n_elements
        n_t = tx_geom.n_elements
        est_rx_faults = np.setdiff1d(np.arange(n_r), rep.clean_rows)
        est_tx_faults = np.setdiff1d(np.arange(n_t), rep.clean_cols)
        result["rx_nmse"] = nmse(v_r, rep.q_r_hat) if map_rx.blocked.size else math.nan
        result["tx_nmse"] = nmse(v_t, rep.q_t_hat) if map_tx.blocked.size else math.nan
        result["rx_exact"] = float(success(map_rx.blocked, est_rx_faults)[0])
        result["tx_exact"] = float(success(map_tx.blocked, est_tx_faults)[0])
    except ArrayDoctorError:
        result = {
            "failed": 1.0, "rx_nmse": math.nan, "tx_nmse": math.nan,
            "rx_exact": math.nan, "tx_exact": math.nan,
        }
    return result


# ---------------------------------------------------------------------------
# sweep orchestration

_TRIAL_FUNCS = {
    "diagnose_rx": _trial_diagnose_rx,
    "diagnose_block": _trial_diagnose_block,
    "diagnose_group": _trial_diagnose_group,
    "diagnose_joint": _trial_diagnose_joint,
}

_WORKER_CFG: ScenarioConfig | None = None


def _sweep_points(cfg: ScenarioConfig) -> list[tuple]:
    if cfg.scenario == "diagnose_joint":
        return [(pair, snr) for pair in cfg.k_pairs for snr in cfg.snr_db_values]
    return [(k, snr) for k in cfg.k_values for snr in cfg.snr_db_values]


def _init_worker(raw_cfg: dict) -> None:
    global _WORKER_CFG
    _WORKER_CFG = parse_config(raw_cfg)


def _run_worker_task(task: tuple[int, int]) -> tuple[int, int, dict]:
    point_idx, trial_idx = task
    cfg = _WORKER_CFG
    point = _sweep_points(cfg)[point_idx]
    rng = trial_rng(cfg.seed, point_idx, trial_idx)
    result = _TRIAL_FUNCS[cfg.scenario](cfg, point[0], point[1], rng)
    return point_idx, trial_idx, result


def _collect_trials(cfg: ScenarioConfig, raw_cfg: dict | None, threads: int) -> dict[int, list[dict]]:
    points = _sweep_points(cfg)
    tasks = [(pi, ti) for pi in range(len(points)) for ti in range(cfg.trials)]
    by_point: dict[int, list] = {pi: [None] * cfg.trials for pi in range(len(points))}
    if threads > 1 and raw_cfg is not None and len(tasks) > 1:
        chunk = max(1, len(tasks) // (threads * 8))
        with ProcessPoolExecutor(
            max_workers=threads, initializer=_init_worker, initargs=(raw_cfg,)
        ) as pool:
            for pi, ti, result in pool.map(_run_worker_task, tasks, chunksize=chunk):
                by_point[pi][ti] = result
    else:
        func = _TRIAL_FUNCS[cfg.scenario]
        for pi, ti in tasks:
            rng = trial_rng(cfg.seed, pi, ti)
            by_point[pi][ti] = func(cfg, points[pi][0], points[pi][1], rng)
    return by_point


def _nan_mean(values: list[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


def _count_valid(values: list[float]) -> int:
    return sum(1 for v in values if not math.isnan(v))


# ---------------------------------------------------------------------------
# scenario table builders


def _run_pattern_cut(cfg: ScenarioConfig) -> tuple[list[str], list[list]]:
    geom = cfg.geometry
    b = np.ones(geom.n_elements, dtype=complex)
    for idx, value in cfg.blocked_elements:
        b[idx] = value
    a_steer = steering_vector(geom, cfg.direction)
    w = np.conj(a_steer) / geom.n_elements
    start, stop, num = cfg.phi_grid_deg
    header = [
        "scenario", "phi_deg", "ideal_re", "ideal_im", "ideal_mag_db",
        "damaged_re", "damaged_im", "damaged_mag_db",
    ]
    rows = []
    for phi_deg in np.linspace(start, stop, num):
        d = Direction.from_degrees(math.degrees(cfg.direction.theta), float(phi_deg))
        a = steering_vector(geom, d)
        ideal = pattern(w, a)
        damaged = pattern(w, a, b)
        rows.append([
            cfg.scenario, float(phi_deg),
            ideal.real, ideal.imag, _mag_db(ideal),
            damaged.real, damaged.imag, _mag_db(damaged),
        ])
    return header, rows


def _mag_db(value: complex) -> float:
    mag = abs(value)
    return -math.inf if mag == 0.0 else 20.0 * math.log10(mag)


def _stats_model(cfg: ScenarioConfig, name: str) -> BlockageModel:
    if name == "complete":
        return BlockageModel.complete()
    if name == "constant_partial":
        return BlockageModel.constant_partial(cfg.stats_beta)
    return BlockageModel.random_partial()


def _run_stats(cfg: ScenarioConfig) -> tuple[list[str], list[list]]:
    geom = cfg.geometry
    nx = geom.nx
    phi_t_deg = math.degrees(cfg.direction.phi)
    header = [
        "model", "pb", "nx", "phi", "phi_t",
        "mean_re", "mean_im", "var_closed", "var_mc", "stderr",
    ]
    rows = []
    point_idx = 0
    for name in cfg.stats_models:
        model = _stats_model(cfg, name)
        for pb in cfg.stats_pb:
            for phi_deg in cfg.stats_phi_deg:
                rng = trial_rng(cfg.seed, point_idx, 0)
                point_idx += 1
                mainlobe = math.isclose(phi_deg, phi_t_deg, abs_tol=1e-9)
                direction = Direction.from_degrees(90.0, phi_deg)
                if mainlobe:
                    # fixed-count main-lobe convention; variance at array scale
                    pb_eff = round(pb * nx) / nx
                    closed = mainlobe_stats(pb_eff, model)
                    mc = empirical_pattern_stats(
                        geom, pb, model, direction, cfg.direction,
                        cfg.trials, rng, fixed_count=True,
                    )
                    var_mc = nx * mc.variance
                    stderr = nx * mc.se_variance
                else:
                    closed = sidelobe_stats(
                        pb, model, nx, geom.dx_norm,
                        direction.phi, cfg.direction.phi,
                    )
                    mc = empirical_pattern_stats(
                        geom, pb, model, direction, cfg.direction, cfg.trials, rng
                    )
                    var_mc = mc.variance
                    stderr = mc.se_variance
                rows.append([
                    name, pb, nx, phi_deg, phi_t_deg,
                    closed.mean.real, closed.mean.imag,
                    closed.variance, var_mc, stderr,
                ])
    return header, rows


def _run_diagnose_rx(cfg: ScenarioConfig, raw_cfg: dict | None, threads: int):
    by_point = _collect_trials(cfg, raw_cfg, threads)
    points = _sweep_points(cfg)
    header = [
        "scenario", "nx", "ny", "pb", "model", "k", "snr_db", "trials",
        "nmse_median_db", "nmse_mean_db", "genie_nmse_median_db", "genie_nmse_mean_db",
        "success_prob", "success_no_miss_prob", "fp_mean", "fn_mean",
        "nmse_trials", "success_se", "failures",
    ]
    rows = []
    for pi, (k, snr) in enumerate(points):
        trials = by_point[pi]
        nmses = [t["nmse"] for t in trials]
        genies = [t["genie_nmse"] for t in trials]
        exact = [t["exact"] for t in trials if not math.isnan(t["exact"])]
        prob, se = success_probability(exact)
        rows.append([
            cfg.scenario, cfg.geometry.nx, cfg.geometry.ny, cfg.pb, cfg.model.kind,
            k, snr, cfg.trials,
            median_db(nmses), mean_db(nmses), median_db(genies), mean_db(genies),
            prob, _nan_mean([t["no_miss"] for t in trials]),
            _nan_mean([t["fp"] for t in trials]), _nan_mean([t["fn"] for t in trials]),
            _count_valid(nmses), se, int(sum(t["failed"] for t in trials)),
        ])
    return header, rows


def _run_diagnose_block(cfg: ScenarioConfig, raw_cfg: dict | None, threads: int):
    by_point = _collect_trials(cfg, raw_cfg, threads)
    points = _sweep_points(cfg)
    g = cfg.groups
    header = [
        "scenario", "nx", "ny", "groups", "group_rows", "group_cols", "model",
        "k", "snr_db", "trials",
        "lasso_nmse_median_db", "block_nmse_median_db", "gap_db",
        "lasso_success_prob", "block_success_prob", "nmse_trials", "failures",
    ]
    rows = []
    for pi, (k, snr) in enumerate(points):
        trials = by_point[pi]
        lasso_vals = [t["lasso_nmse"] for t in trials]
        block_vals = [t["block_nmse"] for t in trials]
        lasso_med = median_db(lasso_vals)
        block_med = median_db(block_vals)
        rows.append([
            cfg.scenario, cfg.geometry.nx, cfg.geometry.ny,
            g.count, g.rows, g.cols, cfg.model.kind, k, snr, cfg.trials,
            lasso_med, block_med, lasso_med - block_med,
            _nan_mean([t["lasso_exact"] for t in trials]),
            _nan_mean([t["block_exact"] for t in trials]),
            _count_valid(block_vals), int(sum(t["failed"] for t in trials)),
        ])
    return header, rows


def _run_diagnose_group(cfg: ScenarioConfig, raw_cfg: dict | None, threads: int):
    by_point = _collect_trials(cfg, raw_cfg, threads)
    points = _sweep_points(cfg)
    g = cfg.groups
    header = [
        "scenario", "nx", "ny", "groups", "group_rows", "group_cols",
        "k", "snr_db", "trials",
        "group_success_prob", "group_success_se",
        "lasso_success_prob", "lasso_success_se",
        "group_no_miss_prob", "failures",
    ]
    rows = []
    for pi, (k, snr) in enumerate(points):
        trials = by_point[pi]
        group_flags = [t["group_exact"] for t in trials if not math.isnan(t["group_exact"])]
        lasso_flags = [t["lasso_exact"] for t in trials if not math.isnan(t["lasso_exact"])]
        gp, gse = success_probability(group_flags)
        lp, lse = success_probability(lasso_flags)
        rows.append([
            cfg.scenario, cfg.geometry.nx, cfg.geometry.ny,
            g.count, g.rows, g.cols, k, snr, cfg.trials,
            gp, gse, lp, lse,
            _nan_mean([t["group_no_miss"] for t in trials]),
            int(sum(t["failed"] for t in trials)),
        ])
    return header, rows


def _run_diagnose_joint(cfg: ScenarioConfig, raw_cfg: dict | None, threads: int):
    by_point = _collect_trials(cfg, raw_cfg, threads)
    points = _sweep_points(cfg)
    header = [
        "scenario", "n_r", "n_t", "pb", "model", "k_r", "k_t", "k", "snr_db", "trials",
        "rx_nmse_median_db", "tx_nmse_median_db",
        "rx_success_prob", "tx_success_prob",
        "rx_nmse_trials", "tx_nmse_trials", "failures",
    ]
    rows = []
    for pi, ((k_r, k_t), snr) in enumerate(points):
        trials = by_point[pi]
        rx_vals = [t["rx_nmse"] for t in trials]
        tx_vals = [t["tx_nmse"] for t in trials]
        rows.append([
            cfg.scenario, cfg.geometry.n_elements, cfg.tx_geometry.n_elements,
            cfg.pb, cfg.model.kind, k_r, k_t, k_r * k_t, snr, cfg.trials,
            median_db(rx_vals), median_db(tx_vals),
            _nan_mean([t["rx_exact"] for t in trials]),
            _nan_mean([t["tx_exact"] for t in trials]),
            _count_valid(rx_vals), _count_valid(tx_vals),
            int(sum(t["failed"] for t in trials)),
        ])
    return header, rows


def run_scenario(
    cfg: ScenarioConfig,
    raw_cfg: dict | None = None,
    threads: int = 1,
) -> tuple[list[str], list[list]]:
    """Execute a scenario and return (header, rows) of the result table."""
    if cfg.scenario == "pattern_cut":
        return _run_pattern_cut(cfg)
    if cfg.scenario == "stats":
        return _run_stats(cfg)
    if cfg.scenario == "diagnose_rx":
        return _run_diagnose_rx(cfg, raw_cfg, threads)
    if cfg.scenario == "diagnose_block":
        return _run_diagnose_block(cfg, raw_cfg, threads)
    if cfg.scenario == "diagnose_group":
        return _run_diagnose_group(cfg, raw_cfg, threads)
    if cfg.scenario == "diagnose_joint":
        return _run_diagnose_joint(cfg, raw_cfg, threads)
    raise ConfigError(f"config.scenario: unknown scenario {cfg.scenario!r}")


def format_cell(value) -> str:
    """Deterministic cell formatting shared by every CSV writer."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    raise TypeError(f"unsupported cell type {type(value)!r}")


def rows_to_csv(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(format_cell(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"
