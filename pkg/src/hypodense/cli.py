"""Command line driver: config-described experiments over the library.

Every subcommand reads the same keys from a JSON config file and from
mirroring flags, with flags winning; unknown keys are rejected before
any work starts.  Outputs are deterministic functions of the resolved
config: exact scalars serialize as integer fractions, randomized checks
draw from a seed that is itself a config key, and artifacts are written
only after the computation finished, so a failing run leaves nothing
behind.  Exit codes: 0 when every requested check passes, 1 when a
check fails, 2 for configuration or validation problems.

The environment variable HYPODENSE_EXPONENT_CAP bounds the size of any
materialized power of two; it is read by the scalar layer on first use.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from gmpy2 import mpq

from .ctype import (
    SparseVec,
    apply_power,
    build_psi,
    build_schedule,
    orbit_rows,
    realize_params,
)
from .densities import (
    BlockConstantWeight,
    ExplicitSet,
    GeometricBlockSet,
    HarmonicWeight,
    PeriodicSet,
    UnitWeight,
    density_quotient,
    duality_check,
    empty_set,
    estimate_densities,
    evens,
    index_set_from_description,
    naturals,
    odds,
    weight_from_description,
)
from .dynlab import (
    build_shadowing_vector,
    flat_run,
    gamma_leak_constants,
    hitting_density,
    prop50_check,
    prop51_bound,
    prop51_check,
    set_identity_check,
)
from .errors import ConfigError, HypodenseError, ValidationError
from .exactnum import format_exact, parse_dyadic, parse_exact
from .weightforge import (
    alpha_sequence,
    multi_plan_report,
    round_robin_partition,
    synthesize_weight_thm1,
)

__all__ = ["main"]

_REQUIRED = object()


# ---------------------------------------------------------------------------
# config value parsing

_NAMED_SETS = {
    "evens": evens,
    "odds": odds,
    "naturals": naturals,
    "empty": empty_set,
    "pow4blocks": lambda: GeometricBlockSet(4, 2),
}

_NAMED_WEIGHTS = {
    "unit": UnitWeight,
    "harmonic": HarmonicWeight,
}


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def _as_exact(value, key: str):
    if isinstance(value, bool) or isinstance(value, float):
        raise ConfigError(f"{key} must be exact (integer or fraction string), got {value!r}")
    if isinstance(value, int):
        return mpq(value)
    if isinstance(value, str):
        try:
            if "2^" in value:
                return parse_dyadic(value)
            return parse_exact(value)
        except (ConfigError, ValueError):
            raise ConfigError(f"{key} is not an exact scalar: {value!r}") from None
    raise ConfigError(f"{key} must be exact, got {value!r}")


def _as_dict(value, key: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be an object, got {value!r}")
    return value


def _as_list(value, key: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"{key} must be an array, got {value!r}")
    return value


def _as_index_set(value, key: str):
    if isinstance(value, str):
        maker = _NAMED_SETS.get(value)
        if maker is None:
            raise ConfigError(f"{key}: unknown named set {value!r}; "
                              f"names are {sorted(_NAMED_SETS)}")
        return maker()
    return index_set_from_description(_as_dict(value, key))


def _as_weight(value, key: str):
    if isinstance(value, str):
        maker = _NAMED_WEIGHTS.get(value)
        if maker is None:
            raise ConfigError(f"{key}: unknown named weight {value!r}; "
                              f"names are {sorted(_NAMED_WEIGHTS)}")
        return maker()
    return weight_from_description(_as_dict(value, key))


def _as_vector(value, key: str) -> SparseVec:
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a basis index or an entry object")
    if isinstance(value, int):
        return SparseVec.basis(value)
    entries = {}
    for raw_index, raw_value in _as_dict(value, key).items():
        entries[_as_int(raw_index, f"{key} index")] = _as_exact(raw_value, f"{key} entry")
    return SparseVec(entries)


def _as_ball(value, key: str):
    spec = _as_dict(value, key)
    unknown = set(spec) - {"center", "radius"}
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    if "center" not in spec or "radius" not in spec:
        raise ConfigError(f"{key} needs center and radius")
    return _as_vector(spec["center"], f"{key}.center"), _as_exact(spec["radius"], f"{key}.radius")


_PSI_KEYS = ("i_max", "j_max", "multiplicity", "horizon")
_SCHEDULE_KEYS = {"psi", "mode", "k_max", "seeds", "delta_slack"}


def _as_schedule(value, key: str):
    spec = _as_dict(value, key)
    unknown = set(spec) - _SCHEDULE_KEYS
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    psi_spec = _as_dict(spec.get("psi"), f"{key}.psi")
    missing = [k for k in _PSI_KEYS if k not in psi_spec]
    extra = set(psi_spec) - set(_PSI_KEYS)
    if missing or extra:
        raise ConfigError(f"{key}.psi needs exactly the keys {list(_PSI_KEYS)}")
    psi = build_psi(*(_as_int(psi_spec[k], f"{key}.psi.{k}") for k in _PSI_KEYS))
    mode = spec.get("mode", "structural")
    if "k_max" not in spec:
        raise ConfigError(f"{key} needs k_max")
    seeds = tuple(_as_int(s, f"{key}.seeds") for s in _as_list(spec.get("seeds", [1, 1, 2]), f"{key}.seeds"))
    return build_schedule(
        mode,
        psi,
        _as_int(spec["k_max"], f"{key}.k_max"),
        seeds=seeds,
        delta_slack=_as_int(spec.get("delta_slack", 1), f"{key}.delta_slack"),
    )


def _params_from(cfg: dict):
    return realize_params(cfg["schedule"], cfg["n_max"])


# ---------------------------------------------------------------------------
# config gathering

class _Key:
    def __init__(self, name, convert, default=_REQUIRED, help=""):
        self.name = name
        self.convert = convert
        self.default = default
        self.help = help


def _json_or_text(text: str):
    # flags carry the same shapes as config values; structured ones
    # arrive as JSON literals, bare names stay strings
    stripped = text.strip()
    if stripped[:1] in "{[" or stripped in ("true", "false") or stripped.lstrip("-").isdigit():
        try:
            return json.loads(stripped)
        except json.JSONDecodeError:
            raise ConfigError(f"flag value is not valid JSON: {text!r}") from None
    return text


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        loaded = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from None
    return _as_dict(loaded, "config")


def _gather(args: argparse.Namespace, spec: list[_Key]) -> dict:
    config = _load_config(args.config)
    known = {key.name for key in spec}
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cooked = {}
    for key in spec:
        raw = getattr(args, key.name, None)
        if raw is not None:
            raw = _json_or_text(raw)
        elif key.name in config:
            raw = config[key.name]
        else:
            raw = key.default
        if raw is _REQUIRED:
            raise ConfigError(f"missing required key {key.name!r}")
        cooked[key.name] = None if raw is None else key.convert(raw, key.name)
    return cooked


def _emit(args: argparse.Namespace, payload: dict, csv_text: str | None = None) -> None:
    if args.emit == "csv":
        if csv_text is None:
            raise ConfigError("this subcommand has no CSV form; use --emit json")
        text = csv_text
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out is not None:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _ignore(value, key):
    return value


# ---------------------------------------------------------------------------
# subcommands

_DENSITY_SPEC = [
    _Key("set", _as_index_set, help="named set or JSON description"),
    _Key("weight", _as_weight, default="unit"),
    _Key("horizon", _as_int),
    _Key("tail_fraction", _as_exact, default="1/4"),
    _Key("ratio", _as_exact, default="5/4"),
]


def cmd_density(args) -> int:
    cfg = _gather(args, _DENSITY_SPEC)
    report = estimate_densities(
        cfg["set"], cfg["weight"], cfg["horizon"],
        tail_fraction=cfg["tail_fraction"], ratio=cfg["ratio"],
    )
    _emit(args, report.to_json_dict(), report.to_csv())
    return 0


_FORGE_SPEC = [
    _Key("mode", _ignore, default="thm1"),
    _Key("set", _as_index_set, default=None),
    _Key("delta", _as_exact, default=None),
    _Key("sets", _as_list, default=None),
    _Key("deltas", _as_list, default=None),
    _Key("horizon", _as_int),
    _Key("min_blocks", _as_int, default=None),
]


def cmd_forge(args) -> int:
    cfg = _gather(args, _FORGE_SPEC)
    if cfg["mode"] == "thm1":
        if cfg["set"] is None or cfg["delta"] is None:
            raise ConfigError("thm1 forging needs set and delta")
        plan, weight = synthesize_weight_thm1(
            cfg["set"], cfg["delta"], cfg["horizon"], min_blocks=cfg["min_blocks"]
        )
        plan.verify(cfg["set"])
        weighted = estimate_densities(cfg["set"], weight, cfg["horizon"])
        plain = estimate_densities(cfg["set"], UnitWeight(), cfg["horizon"])
        payload = {
            "mode": "thm1",
            "plan": plan.to_json_dict(),
            "weight": weight.describe(),
            "weighted": weighted.to_json_dict(),
            "unweighted": plain.to_json_dict(),
        }
        _emit(args, payload, weighted.to_csv())
        return 0
    if cfg["mode"] == "multi":
        if cfg["sets"] is None or cfg["deltas"] is None:
            raise ConfigError("multi forging needs sets and deltas")
        sets = [_as_index_set(s, "sets") for s in cfg["sets"]]
        deltas = [_as_exact(d, "deltas") for d in cfg["deltas"]]
        report = multi_plan_report(sets, deltas, round_robin_partition(len(sets)), cfg["horizon"])
        payload = {
            "mode": "multi",
            "weight": {"type": "block_constant", "breakpoints": list(report["breakpoints"])},
        }
        payload.update(report)
        _emit(args, payload)
        return 0
    raise ConfigError(f"unknown forge mode {cfg['mode']!r}")


_SCHEDULE_SPEC = [
    _Key("schedule", _as_schedule, help="psi/mode/k_max/seeds/delta_slack object"),
]


def cmd_schedule(args) -> int:
    cfg = _gather(args, _SCHEDULE_SPEC)
    schedule = cfg["schedule"]
    payload = schedule.to_json_dict()
    payload["final_conditions"] = {
        str(k): schedule.final_conditions(k) for k in range(1, schedule.k_max + 1)
    }
    _emit(args, payload)
    return 0


_ORBIT_SPEC = [
    _Key("schedule", _as_schedule),
    _Key("n_max", _as_int),
    _Key("index", _as_int),
    _Key("steps", _as_int),
]


def cmd_orbit(args) -> int:
    cfg = _gather(args, _ORBIT_SPEC)
    rows = orbit_rows(_params_from(cfg), cfg["index"], cfg["steps"])
    payload = {
        "start_index": cfg["index"],
        "steps": cfg["steps"],
        "rows": [list(row) for row in rows],
    }
    csv_text = "step,index,mantissa,exponent\n" + "".join(
        f"{step},{index},{mantissa},{exponent}\n" for step, index, mantissa, exponent in rows
    )
    _emit(args, payload, csv_text)
    return 0


_SHADOW_SPEC = [
    _Key("schedule", _as_schedule),
    _Key("n_max", _as_int),
    _Key("x", _as_vector),
    _Key("epsilon", _as_exact),
    _Key("alpha_weight", _as_weight, default="harmonic"),
    _Key("alpha_horizon", _as_int, default=1),
]


def cmd_shadow(args) -> int:
    cfg = _gather(args, _SHADOW_SPEC)
    alpha = alpha_sequence(cfg["alpha_weight"], cfg["alpha_horizon"])
    cert = build_shadowing_vector(_params_from(cfg), cfg["x"], cfg["epsilon"], alpha)
    _emit(args, cert.to_json_dict())
    return 0 if cert.holds else 1


_PROP50_SPEC = [
    _Key("schedule", _as_schedule),
    _Key("n_max", _as_int),
    _Key("x", _as_vector),
    _Key("l", _as_int),
    _Key("n", _as_int),
    _Key("j_max", _as_int),
    _Key("constants", _ignore, default="gamma"),
]


def cmd_prop50(args) -> int:
    cfg = _gather(args, _PROP50_SPEC)
    params = _params_from(cfg)
    raw = cfg["constants"]
    if raw == "gamma":
        constants = gamma_leak_constants(params, cfg["l"])
    else:
        constants = [None] + [_as_exact(c, "constants") for c in _as_list(raw, "constants")]
    passes = prop50_check(params, cfg["x"], cfg["l"], cfg["n"], constants, cfg["j_max"])
    payload = {
        "constants": [None if c is None else format_exact(c) for c in constants],
        "l": cfg["l"],
        "n": cfg["n"],
        "j_max": cfg["j_max"],
        "passes": passes,
    }
    _emit(args, payload)
    return 0 if passes else 1


_PROP51_SPEC = [
    _Key("block_length", _as_int, default=None),
    _Key("K0", _as_int, default=None),
    _Key("K1", _as_int, default=None),
    _Key("J", _as_int),
    _Key("schedule", _as_schedule, default=None),
    _Key("n_max", _as_int, default=None),
    _Key("x", _as_vector, default=None),
    _Key("l", _as_int, default=None),
]


def cmd_prop51(args) -> int:
    cfg = _gather(args, _PROP51_SPEC)
    bound_mode = cfg["block_length"] is not None
    if bound_mode and cfg["schedule"] is not None:
        raise ConfigError("give either block_length/K0/K1 or schedule/x/l, not both")
    if bound_mode:
        if cfg["K0"] is None or cfg["K1"] is None:
            raise ConfigError("closed-form bound needs block_length, K0, K1, J")
        bound = prop51_bound(cfg["block_length"], cfg["K0"], cfg["K1"], cfg["J"])
        _emit(args, {
            "block_length": cfg["block_length"],
            "K0": cfg["K0"],
            "K1": cfg["K1"],
            "J": cfg["J"],
            "bound": format_exact(bound),
        })
        return 0
    if cfg["schedule"] is None or cfg["n_max"] is None or cfg["x"] is None or cfg["l"] is None:
        raise ConfigError("counting check needs schedule, n_max, x, l, J")
    params = _params_from(cfg)
    K0, K1 = flat_run(params, cfg["l"])
    length = params.block_length(cfg["l"])
    passes = prop51_check(params, cfg["x"], cfg["l"], cfg["J"])
    _emit(args, {
        "l": cfg["l"],
        "J": cfg["J"],
        "block_length": length,
        "flat_run": [K0, K1],
        "bound": format_exact(prop51_bound(length, K0, K1, cfg["J"])),
        "passes": passes,
    })
    return 0 if passes else 1


_HITS_SPEC = [
    _Key("schedule", _as_schedule),
    _Key("n_max", _as_int),
    _Key("x", _as_vector),
    _Key("center", _as_vector),
    _Key("radius", _as_exact),
    _Key("step_horizon", _as_int),
    _Key("weight", _as_weight, default="unit"),
    _Key("tolerance", _as_exact, default="1/20"),
]


def cmd_hits(args) -> int:
    cfg = _gather(args, _HITS_SPEC)
    report = hitting_density(
        _params_from(cfg), cfg["x"], cfg["center"], cfg["radius"],
        cfg["step_horizon"], cfg["weight"], tolerance=cfg["tolerance"],
    )
    _emit(args, report.to_json_dict(), report.to_csv())
    return 0


_IDENTITY_SPEC = [
    _Key("schedule", _as_schedule),
    _Key("n_max", _as_int),
    _Key("vectors", _as_list),
    _Key("weights", _as_list),
    _Key("opens", _as_list),
    _Key("step_horizon", _as_int),
    _Key("tolerance", _as_exact, default="1/20"),
]


def cmd_identity(args) -> int:
    cfg = _gather(args, _IDENTITY_SPEC)
    report = set_identity_check(
        [_as_vector(v, "vectors") for v in cfg["vectors"]],
        [_as_weight(w, "weights") for w in cfg["weights"]],
        [_as_ball(b, "opens") for b in cfg["opens"]],
        _params_from(cfg),
        cfg["step_horizon"],
        tolerance=cfg["tolerance"],
    )
    _emit(args, report.to_json_dict())
    return 0 if report.all_chains_hold else 1


# ---------------------------------------------------------------------------
# verify: aggregated invariant suites

def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def _random_index_set(rng: random.Random):
    kind = rng.randrange(5)
    if kind == 0:
        modulus = rng.randint(2, 30)
        residues = rng.sample(range(modulus), rng.randint(1, modulus))
        return PeriodicSet(residues, modulus)
    if kind == 1:
        return ExplicitSet(rng.sample(range(3000), rng.randint(0, 40)))
    if kind == 2:
        base = rng.randint(2, 5)
        return GeometricBlockSet(base, rng.randint(2, base))
    if kind == 3:
        modulus = rng.randint(2, 12)
        return PeriodicSet([rng.randrange(modulus)], modulus).complement()
    return naturals()


def _random_weight(rng: random.Random):
    kind = rng.randrange(3)
    if kind == 0:
        return UnitWeight()
    if kind == 1:
        return HarmonicWeight()
    return BlockConstantWeight([0, 1, 3, 6, 10])


def _suite_density(seed: int) -> list:
    def duality_random():
        rng = random.Random(f"{seed}:density:duality")
        for trial in range(25):
            result = duality_check(
                _random_index_set(rng), _random_weight(rng), rng.randint(1, 2000)
            )
            _require(result.exact, f"duality broke on trial {trial}")
        return "25 randomized prefix partitions, all exact"

    def periodic_closed_form():
        _require(density_quotient(PeriodicSet([0], 4), UnitWeight(), 1000) == mpq(1, 4),
                 "4N at 1000 is not 1/4")
        _require(density_quotient(evens(), UnitWeight(), 10) == mpq(1, 2),
                 "evens at 10 is not 1/2")
        return "residue-class quotients match closed forms"

    def estimate_order():
        for index_set, weight in ((evens(), HarmonicWeight()),
                                  (GeometricBlockSet(4, 2), UnitWeight())):
            report = estimate_densities(index_set, weight, 3000)
            _require(report.lower_estimate <= report.upper_estimate, "window extrema out of order")
            _require(all(0 <= q <= 1 for q in report.quotients), "quotient outside [0, 1]")
        return "tail-window extrema ordered, quotients within [0, 1]"

    return [("duality_random", duality_random),
            ("periodic_closed_form", periodic_closed_form),
            ("estimate_order", estimate_order)]


def _suite_forge() -> list:
    def thm1_blocks():
        target = GeometricBlockSet(4, 2)
        plan, weight = synthesize_weight_thm1(target, mpq(2, 3), 4**10, min_blocks=5)
        plan.verify(target)
        weighted = estimate_densities(target, weight, 4**10)
        plain = estimate_densities(target, UnitWeight(), 4**10)
        _require(weighted.lower_estimate >= plain.lower_estimate + mpq(1, 10),
                 "forged weight did not lift the lower estimate")
        return (f"{plan.block_count()} blocks; lower estimate "
                f"{format_exact(weighted.lower_estimate)} vs plain "
                f"{format_exact(plain.lower_estimate)}")

    def multi_round_robin():
        report = multi_plan_report(
            [evens(), odds()], [mpq(1, 2), mpq(1, 2)], round_robin_partition(2), 10**4
        )
        for part in report["parts"]:
            _require(parse_exact(part["lower_estimate"]) >= mpq(1, 4) - mpq(1, 20),
                     f"part {part['part']} misses the interleaving floor")
        return "both parts clear 1/4 - 1/20 at horizon 10^4"

    def alpha_minimal():
        seq = alpha_sequence(HarmonicWeight(), 30)
        seq.verify(30)
        for n in range(1, 31):
            _require(seq.decrement_breaks(n), f"alpha at {n} is not minimal")
        return "harmonic window factors verified minimal through 30"

    return [("thm1_blocks", thm1_blocks),
            ("multi_round_robin", multi_round_robin),
            ("alpha_minimal", alpha_minimal)]


def _verify_schedule(mode: str):
    psi = build_psi(2, 4, 2, 11)
    return build_schedule(mode, psi, 4, seeds=(1, 1, 2))


def _suite_ctype(mode: str) -> list:
    schedule = _verify_schedule(mode)
    n_max = schedule.n[5] - 1 if mode == "structural" else 2
    params = realize_params(schedule, n_max)

    def schedule_valid():
        schedule.psi.validate()
        schedule.validate()
        return f"{mode} schedule to k_max 4 revalidated"

    def mode_conditions():
        if mode == "asymptotic":
            for k in range(1, 5):
                conditions = schedule.final_conditions(k)
                _require(all(conditions.values()), f"final conditions fail at {k}: {conditions}")
            return "leak, separation, and growth conditions hold through k_max"
        for k in range(1, 5):
            _require(schedule.delta[k] - schedule.tau[k] == k, f"run/drop gap at {k} is not {k}")
        return "run/drop gap equals the band index through k_max"

    def periodicity_spot():
        applied = 0
        for block in range(params.n_max + 1):
            period = 2 * params.block_length(block)
            for j in (params.b[block], params.b[block + 1] - 1):
                basis = SparseVec.basis(j)
                _require(apply_power(params, basis, period) == basis,
                         f"period {period} fails at index {j}")
                applied += period
        return f"block-edge returns verified with {applied} applications"

    def product_identity():
        for block in range(params.n_max + 1):
            total = sum(params.weight_exponent(block, offset)
                        for offset in range(1, params.block_length(block)))
            _require(total == params.product_exponent(block),
                     f"weight product off at block {block}")
        return "in-block weight products match the closed form"

    def boundedness():
        _require(params.boundedness_certificate() == 0,
                 "smallest running product is no longer 1")
        return "running products bounded below by 1"

    return [("schedule_valid", schedule_valid),
            ("mode_conditions", mode_conditions),
            ("periodicity_spot", periodicity_spot),
            ("product_identity", product_identity),
            ("boundedness", boundedness)]


def _suite_dynlab(mode: str, seed: int) -> list:
    if mode == "structural":
        def shadowing_toy():
            psi = build_psi(1, 12, 10, 200)
            params = realize_params(build_schedule("structural", psi, 140), 140)
            alpha = alpha_sequence(HarmonicWeight(), 1)
            cert = build_shadowing_vector(
                params, SparseVec.basis(0),
                _as_exact("1/16", "epsilon"), alpha,
            )
            _require(cert.holds, "shadowing certificate failed")
            return (f"level {cert.K}, band {cert.k}, window {cert.m_max}; "
                    f"orbit error {format_exact(cert.max_orbit_error)}")

        def hitting_period():
            psi = build_psi(2, 4, 2, 11)
            params = realize_params(build_schedule("structural", psi, 3), 3)
            report = hitting_density(
                params, SparseVec.basis(5), SparseVec.basis(5),
                _as_exact("1/64", "radius"), 256, UnitWeight(),
            )
            _require(report.visits == (0, 64, 128, 192, 256), "visit set drifted")
            _require(report.period == 64 and report.floor_met, "period floor missed")
            return "orbit returns every 64 steps and clears the periodic floor"

        def identity_chain():
            psi = build_psi(2, 4, 2, 11)
            params = realize_params(build_schedule("structural", psi, 3), 3)
            ball = (SparseVec.basis(0), mpq(1, 4))
            hit = hitting_density(params, ball[0], ball[0], ball[1], 1024, UnitWeight())
            _, forged = synthesize_weight_thm1(
                ExplicitSet(hit.visits), mpq(1, 4), 1025, min_blocks=3
            )
            report = set_identity_check([ball[0]], [forged], [ball], params, 1024)
            _require(report.all_chains_hold, "density chain broke under the forged weight")
            return "forged block weight closes the density chain at horizon 1024"

        return [("shadowing_toy", shadowing_toy),
                ("hitting_period", hitting_period),
                ("identity_chain", identity_chain)]

    schedule = _verify_schedule("asymptotic")
    params = realize_params(schedule, 2)

    def prop50_random():
        constants = gamma_leak_constants(params, 2)
        rng = random.Random(f"{seed}:dynlab:prop50")
        for trial in range(60):
            support = rng.sample(range(params.b[2], params.b[3]), rng.randint(1, 3))
            vec = SparseVec({
                s: mpq(rng.choice([1, -1]) * rng.randrange(1, 9, 2), 2 ** rng.randint(0, 3))
                for s in support
            })
            _require(prop50_check(params, vec, 2, rng.randint(0, 1), constants, 672),
                     f"leak bound broke on trial {trial}")
            _require(prop51_check(params, vec, 2, 672),
                     f"counting bound broke on trial {trial}")
        return "60 randomized leak and counting checks"

    def prop51_floor():
        _require(prop51_bound(100, 10, 90, 99) == mpq(1, 5), "closed-form floor drifted")
        _require(prop51_check(params, SparseVec.basis(3), 1, 672), "band-1 counting failed")
        return "closed-form floor 1/5 reproduced; band-1 count clears it"

    def hits_period():
        report = hitting_density(
            params, SparseVec.basis(3), SparseVec.basis(3),
            _as_exact("1/64", "radius"), 672, UnitWeight(),
        )
        _require(report.visits == (0, 672), "asymptotic return visits drifted")
        _require(report.floor_met, "periodic floor missed")
        return "basis orbit returns after 672 steps"

    return [("prop50_random", prop50_random),
            ("prop51_floor", prop51_floor),
            ("hits_period", hits_period)]


_SUITES = ("density", "forge", "ctype", "dynlab")

_VERIFY_SPEC = [
    _Key("suite", _ignore, default="all"),
    _Key("mode", _ignore, default="structural"),
    _Key("seed", _as_int, default=0),
]


def cmd_verify(args) -> int:
    cfg = _gather(args, _VERIFY_SPEC)
    if cfg["suite"] not in _SUITES + ("all",):
        raise ConfigError(f"unknown suite {cfg['suite']!r}; choose from {('all',) + _SUITES}")
    if cfg["mode"] not in ("structural", "asymptotic"):
        raise ConfigError(f"unknown mode {cfg['mode']!r}")
    wanted = _SUITES if cfg["suite"] == "all" else (cfg["suite"],)

    checks = []
    if "density" in wanted:
        checks += [("density", name, fn) for name, fn in _suite_density(cfg["seed"])]
    if "forge" in wanted:
        checks += [("forge", name, fn) for name, fn in _suite_forge()]
    if "ctype" in wanted:
        checks += [("ctype", name, fn) for name, fn in _suite_ctype(cfg["mode"])]
    if "dynlab" in wanted:
        checks += [("dynlab", name, fn) for name, fn in _suite_dynlab(cfg["mode"], cfg["seed"])]

    results = []
    for suite, name, fn in checks:
        try:
            detail = fn()
            passed = True
        except HypodenseError as err:
            detail = str(err)
            passed = False
        results.append({"suite": suite, "name": name, "passed": passed, "detail": detail})
    all_passed = all(r["passed"] for r in results)
    payload = {
        "suite": cfg["suite"],
        "mode": cfg["mode"],
        "seed": cfg["seed"],
        "checks": results,
        "all_passed": all_passed,
    }
    _emit(args, payload)
    return 0 if all_passed else 1


# ---------------------------------------------------------------------------
# argument wiring

_COMMANDS = {
    "density": (cmd_density, _DENSITY_SPEC, "weighted density estimates for an index set"),
    "forge": (cmd_forge, _FORGE_SPEC, "synthesize a weight realizing a density target"),
    "schedule": (cmd_schedule, _SCHEDULE_SPEC, "build and validate a parameter schedule"),
    "orbit": (cmd_orbit, _ORBIT_SPEC, "iterate the operator on a basis vector"),
    "shadow": (cmd_shadow, _SHADOW_SPEC, "build and certify a delayed-orbit companion"),
    "prop50": (cmd_prop50, _PROP50_SPEC, "exact leak bounds along a block orbit"),
    "prop51": (cmd_prop51, _PROP51_SPEC, "counting floor for flat-run blocks"),
    "hits": (cmd_hits, _HITS_SPEC, "visit set of an orbit into a ball, with densities"),
    "identity": (cmd_identity, _IDENTITY_SPEC, "finite-family density chain report"),
    "verify": (cmd_verify, _VERIFY_SPEC, "run aggregated invariant suites"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypodense",
        description=__doc__.splitlines()[0],
        epilog="HYPODENSE_EXPONENT_CAP bounds materialized power-of-two exponents.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (_, spec, description) in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=description, description=description)
        sub.add_argument("--config", default=None, help="JSON config file; flags override its keys")
        sub.add_argument("--emit", choices=("json", "csv"), default="json")
        sub.add_argument("--out", default=None, help="write the artifact here instead of stdout")
        for key in spec:
            sub.add_argument(f"--{key.name}", default=None, dest=key.name, help=key.help or None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = _COMMANDS[args.command][0]
    try:
        return handler(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except HypodenseError as err:
        print(f"check failed: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
