"""Problem-spec ingestion, task orchestration, and report emission.

Problem specs are JSON documents (``"schema": 1``).  Complex numbers are
two-element ``[re, im]`` arrays and norm exponents are decimal strings, so a
spec file round-trips without binary-float drift.  Reports are emitted as
canonical JSON (sorted keys) or as flat CSV; identical (spec, seed) pairs
produce byte-identical reports.  Wall-clock timing goes to stderr only, never
into the report body.

Exit codes: 0 = task ran (verdicts are in the report), 1 = validation error,
2 = internal numerical failure.
"""

import json
import math
import sys
import time
from typing import Any, List, Optional

import click
import numpy as np

from . import __version__
from .config import DEFAULT_TOLS
from .spaces import (
    DualVector,
    SipSpace,
    Vector,
    axiom_suite,
    dual_norm,
)
from .frames import FrameFamily, LinearOperator
from .certify import CertificationReport, certify_k_frame
from .atomic import (
    FactorizationError,
    InfeasibleError,
    atomic_constant,
    construct_dual_family,
    min_norm_coeffs,
)
from .perturb import (
    PerturbationInstance,
    pseudo_inverse,
    smallness_condition,
    verify_conclusion,
    verify_premise,
)
from .rkbs import (
    DiscreteRkbs,
    SamplingPattern,
    eval_functional,
    reconstruct_from_samples,
    sampled_frame_certify,
    sampling_operator,
)

__all__ = ["SpecError", "load_spec", "run", "emit", "main"]

SCHEMA_VERSION = 1
TASKS = ("axioms", "certify", "reconstruct", "perturb", "sample")

SIP_CONVENTION_NOTE = (
    "semi-inner product convention: [g, h] = ||h||^(2-p) * sum_j w_j g_j "
    "conj(h_j) |h_j|^(p-2) (normalization on the second argument; the "
    "alternative first-argument normalization breaks conjugate homogeneity "
    "and is not used)"
)


class SpecError(ValueError):
    """A problem spec failed validation; message names the offending field."""


def _require(spec: dict, field: str, where: str = "spec"):
    if field not in spec:
        raise SpecError(f"{where}: missing required field '{field}'")
    return spec[field]


def _parse_exponent(value, where: str) -> float:
    if not isinstance(value, str):
        raise SpecError(f"{where}: exponents must be decimal strings, got {value!r}")
    try:
        p = float(value)
    except ValueError:
        raise SpecError(f"{where}: cannot parse exponent {value!r}") from None
    if not (p > 1.0) or math.isinf(p):
        raise SpecError(f"{where}: exponent must satisfy 1 < p < inf, got {value!r}")
    return p


def _parse_complex(pair, where: str) -> complex:
    if (
        not isinstance(pair, (list, tuple))
        or len(pair) != 2
        or not all(isinstance(x, (int, float)) for x in pair)
    ):
        raise SpecError(f"{where}: complex values are [re, im] pairs, got {pair!r}")
    return complex(pair[0], pair[1])


def _parse_cvector(entries, where: str) -> np.ndarray:
    if not isinstance(entries, list) or not entries:
        raise SpecError(f"{where}: expected a nonempty list of [re, im] pairs")
    return np.array([_parse_complex(e, f"{where}[{i}]") for i, e in enumerate(entries)])


def _parse_cmatrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise SpecError(f"{where}: expected a nonempty list of rows")
    mat = [_parse_cvector(r, f"{where}[{i}]") for i, r in enumerate(rows)]
    widths = {len(r) for r in mat}
    if len(widths) != 1:
        raise SpecError(f"{where}: ragged rows {sorted(widths)}")
    return np.array(mat)


def _parse_space(spec: dict) -> SipSpace:
    block = _require(spec, "space")
    dim = _require(block, "dim", "space")
    if not isinstance(dim, int) or dim < 1:
        raise SpecError(f"space.dim must be a positive integer, got {dim!r}")
    p = _parse_exponent(_require(block, "p", "space"), "space.p")
    weights = block.get("weights")
    if weights is not None:
        if not isinstance(weights, list) or len(weights) != dim:
            raise SpecError(f"space.weights must be a list of {dim} positive numbers")
        if not all(isinstance(w, (int, float)) and w > 0 for w in weights):
            raise SpecError("space.weights must all be strictly positive")
        weights = np.array(weights, dtype=float)
    try:
        return SipSpace(dim, p, weights)
    except ValueError as exc:
        raise SpecError(f"space: {exc}") from None


def _parse_family(spec: dict, space: SipSpace, key: str = "family") -> FrameFamily:
    block = _require(spec, key)
    p_d = _parse_exponent(_require(block, "p_d", key), f"{key}.p_d")
    members = _require(block, "members", key)
    if not isinstance(members, list) or not members:
        raise SpecError(f"{key}.members must be a nonempty list")
    rows = []
    for i, m in enumerate(members):
        v = _parse_cvector(m, f"{key}.members[{i}]")
        if v.shape != (space.dim,):
            raise SpecError(
                f"{key}.members[{i}] has {v.size} coordinates, expected {space.dim}"
            )
        rows.append(v)
    return FrameFamily(space, tuple(Vector(r, space) for r in rows), p_d)


def _parse_operator(spec: dict, space: SipSpace, key: str = "operator") -> LinearOperator:
    block = spec.get(key)
    if block is None:
        return LinearOperator.identity(space)
    if not isinstance(block, dict) or ("entries" in block) == ("adjoint" in block):
        raise SpecError(f"{key}: give exactly one of 'entries' or 'adjoint'")
    source = "entries" if "entries" in block else "adjoint"
    mat = _parse_cmatrix(block[source], f"{key}.{source}")
    if mat.shape != (space.dim, space.dim):
        raise SpecError(
            f"{key}.{source} must be {space.dim} x {space.dim}, got {mat.shape}"
        )
    try:
        if source == "adjoint":
            return LinearOperator.from_adjoint_entries(mat, space)
        return LinearOperator(mat, space)
    except ValueError as exc:  # pragma: no cover
        raise SpecError(f"{key}: {exc}") from None


def load_spec(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from None
    if not isinstance(spec, dict):
        raise SpecError("spec: top level must be a JSON object")
    if spec.get("schema") != SCHEMA_VERSION:
        raise SpecError(f"spec.schema must be {SCHEMA_VERSION}")
    task = _require(spec, "task")
    if task not in TASKS:
        raise SpecError(f"spec.task must be one of {TASKS}, got {task!r}")
    if not isinstance(_require(spec, "seed"), int):
        raise SpecError("spec.seed must be an integer (mandatory for reproducibility)")
    return spec


# ---------------------------------------------------------------------------
# serialization helpers


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.complexfloating,)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _jsonable(obj.item())
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def _dual_vector_out(d: Optional[DualVector]) -> Optional[List]:
    return None if d is None else _jsonable(np.asarray(d.action))


def _cert_out(report: CertificationReport) -> dict:
    return {
        "A_est": _jsonable(report.A_est),
        "B_est": _jsonable(report.B_est),
        "verdict": report.verdict,
        "witness_lower": _dual_vector_out(report.witness_lower),
        "witness_upper": _dual_vector_out(report.witness_upper),
        "oracle_A": _jsonable(report.oracle_A),
        "oracle_B": _jsonable(report.oracle_B),
        "restarts_used": report.restarts_used,
        "converged": report.converged,
        "notes": list(report.notes),
    }


# ---------------------------------------------------------------------------
# task runners


def _run_axioms(spec, seed, restarts, use_oracle):
    space = _parse_space(spec)
    params = spec.get("task_params", {})
    draws = params.get("draws", 200)
    worst = axiom_suite(space, seed=seed, draws=draws)
    tols = DEFAULT_TOLS
    gates = {
        "norm_compatibility": tols.sip_rel,
        "cauchy_schwarz": tols.sip_rel,
        "first_slot_linearity": tols.sip_rel,
        "second_slot_conj_homogeneity": tols.sip_rel,
        "duality_roundtrip": tols.roundtrip_rel,
        "duality_isometry": tols.roundtrip_rel,
    }
    verdicts = {k: bool(worst[k] <= gates[k]) for k in worst}
    return {
        "verdicts": verdicts,
        "worst_residuals": _jsonable(worst),
        "draws": draws,
        "all_passed": all(verdicts.values()),
    }


def _ratio_samples(fam: FrameFamily, seed: int, count: int = 100) -> List[float]:
    """Seeded random-direction Bessel-ratio samples, for the CSV flattening."""
    rng = np.random.default_rng(seed)
    F = fam.analysis_matrix
    q_d = fam.coeff_dual_exponent
    out = []
    for _ in range(count):
        d = rng.standard_normal(fam.space.dim) + 1j * rng.standard_normal(fam.space.dim)
        num = float(np.sum(np.abs(F @ d) ** q_d) ** (1 / q_d))
        out.append(num / dual_norm(fam.space, d))
    return out


def _run_certify(spec, seed, restarts, use_oracle):
    space = _parse_space(spec)
    fam = _parse_family(spec, space)
    K = _parse_operator(spec, space)
    oracle_res = None
    if use_oracle:
        if 2 * space.dim > 6:
            raise SpecError("--oracle requires dimension <= 3")
        oracle_res = spec.get("task_params", {}).get("oracle_resolution", 60)
    k_report = certify_k_frame(
        fam, K, seed=seed, restarts=restarts, oracle_resolution=oracle_res
    )
    out = {"k_frame": _cert_out(k_report)}
    is_identity = np.array_equal(K.entries, np.eye(space.dim, dtype=complex))
    if is_identity:
        out["frame"] = out["k_frame"]
    else:
        frame_report = certify_k_frame(
            fam,
            LinearOperator.identity(space),
            seed=seed,
            restarts=restarts,
            oracle_resolution=oracle_res,
        )
        out["frame"] = _cert_out(frame_report)
    out["verdicts"] = {
        "frame": out["frame"]["verdict"],
        "k_frame": out["k_frame"]["verdict"],
    }
    out["direction_ratios"] = _jsonable(_ratio_samples(fam, seed + 999))
    return out


def _run_reconstruct(spec, seed, restarts, use_oracle):
    space = _parse_space(spec)
    fam = _parse_family(spec, space)
    K = _parse_operator(spec, space)
    params = spec.get("task_params", {})
    target = _parse_cvector(_require(params, "vector", "task_params"), "task_params.vector")
    if target.shape != (space.dim,):
        raise SpecError("task_params.vector has the wrong dimension")
    f = Vector(target, space)
    coeffs = min_norm_coeffs(fam, K, f)
    C = atomic_constant(
        fam, K, sample_count=params.get("sample_count", 100), seed=seed
    )
    dual_fam = construct_dual_family(fam, K)
    resid = float(
        np.linalg.norm(
            fam.synthesis_matrix @ coeffs.values - K.apply(f).coords
        )
    )
    return {
        "coefficients": _jsonable(coeffs.values),
        "coefficient_norm": coeffs.norm(),
        "atomic_constant": C,
        "dual_family": [_dual_vector_out(g) for g in dual_fam.gstars],
        "synthesis_residual": resid,
        "verdicts": {"feasible": True},
    }


def _run_perturb(spec, seed, restarts, use_oracle):
    space = _parse_space(spec)
    fam_f = _parse_family(spec, space, "family")
    fam_g = _parse_family(spec, space, "family_g")
    K = _parse_operator(spec, space)
    params = spec.get("task_params", {})
    alpha = float(params.get("alpha", 0.0))
    beta = float(params.get("beta", 0.0))
    gamma = float(params.get("gamma", 0.0))
    inst = PerturbationInstance(fam_f, fam_g, K, alpha, beta, gamma)
    base = certify_k_frame(fam_f, K, seed=seed, restarts=restarts)
    premise = verify_premise(inst, seed=seed + 1, restarts=restarts)
    dag = pseudo_inverse(K, seed=seed + 2, restarts=restarts)
    out = {
        "base_certification": _cert_out(base),
        "premise": {
            "margin": _jsonable(premise.margin),
            "holds": premise.holds,
            "certification": premise.certification,
            "worst_c": _jsonable(premise.worst_c),
        },
        "pseudo_inverse_norm": dag.norm_est,
    }
    small = None
    if base.A_est > 0:
        small = smallness_condition(inst, base.A_est, dag)
    out["smallness"] = small
    conclusion = None
    if premise.holds and small and beta < 1.0:
        rep = verify_conclusion(inst, base, dag, seed=seed + 3, restarts=restarts)
        conclusion = {
            "bessel_ok": rep.bessel_ok,
            "B_g_est": _jsonable(rep.B_g_est),
            "bessel_formula": _jsonable(rep.bessel_formula),
            "sandwich_ok": rep.sandwich_ok,
            "pk_checked": rep.pk_checked,
            "pk_ok": rep.pk_ok,
            "pk_A_est": _jsonable(rep.pk_A_est),
            "lower_formula_derivation_reading": _jsonable(rep.lower_formula),
            "lower_formula_as_printed_reading": _jsonable(rep.lower_formula_alt),
            "passed": rep.passed,
            "notes": list(rep.notes),
        }
    out["conclusion"] = conclusion
    out["verdicts"] = {
        "premise": premise.holds,
        "smallness": small,
        "conclusion": None if conclusion is None else conclusion["passed"],
    }
    return out


def _run_sample(spec, seed, restarts, use_oracle):
    space = _parse_space(spec)  # this is the coefficient space of the RKBS
    params = spec.get("task_params", {})
    features = _parse_cmatrix(_require(params, "features", "task_params"),
                              "task_params.features")
    points = params.get("points", list(range(features.shape[0])))
    try:
        rk = DiscreteRkbs(tuple(points), features, space)
    except ValueError as exc:
        raise SpecError(f"task_params.features: {exc}") from None
    pattern_idx = params.get("pattern", list(range(len(rk.points))))
    if not isinstance(pattern_idx, list) or not pattern_idx:
        raise SpecError("task_params.pattern must be a nonempty index list")
    try:
        Z = SamplingPattern(tuple(pattern_idx))
    except (ValueError, TypeError) as exc:
        raise SpecError(f"task_params.pattern: {exc}") from None
    K = _parse_operator(spec, space)
    fstar = DualVector(
        _parse_cvector(_require(params, "functional", "task_params"),
                       "task_params.functional"),
        space,
    )
    oracle_res = None
    if use_oracle:
        if 2 * space.dim > 6:
            raise SpecError("--oracle requires dimension <= 3")
        oracle_res = params.get("oracle_resolution", 60)
    cert = sampled_frame_certify(
        rk, Z, K, seed=seed, restarts=restarts, oracle_resolution=oracle_res
    )
    out = {"certification": _cert_out(cert), "verdicts": {"sampling": cert.verdict}}
    samples = sampling_operator(rk, Z, fstar)
    out["samples"] = _jsonable(samples.values)
    table = None
    if cert.verdict == "K-frame":
        recon = reconstruct_from_samples(rk, Z, K, samples)
        target = K.apply_adjoint(fstar)
        table = []
        for j, i in enumerate(Z.indices):
            t = rk.points[i]
            true_v = eval_functional(rk, target, t)
            rec_v = eval_functional(rk, recon, t)
            table.append(
                {
                    "point": str(t),
                    "true_value": _jsonable(true_v),
                    "reconstructed": _jsonable(rec_v),
                    "abs_error": abs(true_v - rec_v),
                }
            )
        out["reconstruction"] = _jsonable(np.asarray(recon.action))
        out["reconstruction_residual"] = dual_norm(space, recon.action - target.action)
    out["sample_table"] = table
    return out


_RUNNERS = {
    "axioms": _run_axioms,
    "certify": _run_certify,
    "reconstruct": _run_reconstruct,
    "perturb": _run_perturb,
    "sample": _run_sample,
}


def run(spec: dict, restarts: Optional[int] = None, use_oracle: bool = False) -> dict:
    """Dispatch a validated problem spec; deterministic given (spec, seed)."""
    task = spec["task"]
    seed = spec["seed"]
    r = restarts if restarts is not None else spec.get("restarts", 64)
    if not isinstance(r, int) or r < 1:
        raise SpecError("restarts must be a positive integer")
    body = _RUNNERS[task](spec, seed, r, use_oracle)
    report = {
        "schema": SCHEMA_VERSION,
        "tool": "sipframes",
        "version": __version__,
        "task": task,
        "seed": seed,
        "restarts": r,
        "convention_notes": [SIP_CONVENTION_NOTE] if task != "axioms" else [],
        "spec_echo": _jsonable(spec),
    }
    report.update(body)
    return _jsonable(report)


def emit(report: dict, fmt: str = "json") -> bytes:
    """Serialize a report; json is canonical and lossless, csv is flat."""
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    if fmt != "csv":
        raise SpecError(f"unknown format {fmt!r}")
    lines: List[str] = []
    task = report.get("task")
    if task == "certify" and "direction_ratios" in report:
        lines.append("direction_index,ratio")
        for i, ratio in enumerate(report["direction_ratios"]):
            lines.append(f"{i},{ratio!r}")
    elif task == "sample" and report.get("sample_table"):
        lines.append("point,true_value,reconstructed,abs_error")
        for row in report["sample_table"]:
            tv = complex(row["true_value"][0], row["true_value"][1])
            rv = complex(row["reconstructed"][0], row["reconstructed"][1])
            lines.append(f"{row['point']},{tv},{rv},{row['abs_error']!r}")
    elif task == "axioms":
        lines.append("property,worst_residual,passed")
        for k in sorted(report["worst_residuals"]):
            lines.append(
                f"{k},{report['worst_residuals'][k]!r},{report['verdicts'][k]}"
            )
    else:
        lines.append("key,value")
        for k, v in sorted(report.get("verdicts", {}).items()):
            lines.append(f"{k},{v}")
    return ("\n".join(lines) + "\n").encode()


@click.command(name="sipframes")
@click.argument("task", type=click.Choice(TASKS))
@click.option("--spec", "spec_path", required=True, type=click.Path(), help="problem spec JSON")
@click.option("--seed", type=int, default=None, help="override the spec's RNG seed")
@click.option("--restarts", type=int, default=None, help="optimizer restarts")
@click.option("--oracle", is_flag=True, help="force the low-dimensional grid oracle")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", "out_path", type=click.Path(), default=None, help="output file (default stdout)")
def main(task, spec_path, seed, restarts, oracle, fmt, out_path):
    """Frame-theory workbench for lp semi-inner-product spaces."""
    t0 = time.perf_counter()
    try:
        spec = load_spec(spec_path)
        if spec["task"] != task:
            raise SpecError(
                f"spec file declares task {spec['task']!r}, command line says {task!r}"
            )
        if seed is not None:
            spec = dict(spec, seed=seed)
        report = run(spec, restarts=restarts, use_oracle=oracle)
        payload = emit(report, fmt)
    except SpecError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (InfeasibleError, FactorizationError, ArithmeticError, ValueError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(2)
    if out_path:
        with open(out_path, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)
    click.echo(f"elapsed: {time.perf_counter() - t0:.3f}s", err=True)
    sys.exit(0)


if __name__ == "__main__":  # pragma: no cover
    main()
