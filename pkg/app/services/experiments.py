"""Experiment presets: each wires a few services into a pipeline and asserts its inequalities."""

import math
import time
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ValidationError

from ..core.config import settings
from ..core.errors import InvalidParamsError, UnknownPresetError
from ..core.logging import get_logger
from ..models.fpn import DensityFunction, FpnSpace
from ..models.graph import Graph, Pattern
from ..models.schemas import (
    ArithExpansionParams,
    ArithRoundtripParams,
    CpTableParams,
    DeletionScheduleParams,
    ExperimentReport,
    InequalityCheck,
    RsPipelineParams,
    TflIngredientsParams,
)
from .approx_hom import enumerate_hom_free_targets
from .arith_constructions import (
    asymptotic_cp_limit,
    cp_constant,
    expand_construction,
    expansion_radius,
    good_block_floor,
    missed_mass_audit,
    optimal_targets,
    primes_up_to,
    random_linear_map,
    tricolor_search,
    verify_tricolor,
)
from .arith_core import (
    counting_lemma_gap,
    dft,
    random_density,
    random_indicator,
    set_triangle_count,
    spectral_triangle_density,
    triangle_density,
    triangle_free_approximation,
    weak_regularity_subspace,
    weighted_removal_roundtrip,
)
from .entropy_toolkit import (
    chain_bound_audit,
    claim_dagger_audit,
    enumerate_cell_constant_maps,
    random_vertex_map,
)
from .graph_constructions import (
    build_ap_free_set,
    complete_graph,
    full_blowup,
    lift_counts,
    named_graph,
    no_approx_hom_bound,
    partial_binary_blowup,
    rs_graph,
    verify_blowup_hom_free,
)
from .graph_core import count_triangles, is_hom_free, triangle_index
from .removal_engine import (
    g_schedule,
    good_triangle_expectation_bound,
    greedy_bounded_codegree,
    replay_trace,
    sample_diamond_subgraph,
    schedule_partial_sum,
    schedule_tail_bound,
)

logger = get_logger("experiments")

Outcome = Tuple[Dict[str, Any], List[InequalityCheck]]

check = InequalityCheck.compare


def _unique_triangle_failures(g: Graph) -> int:
    """Edges of ``g`` lying in a number of triangles other than one."""
    return sum(1 for c in triangle_index(g).edge_counts.values() if c != 1)


def tfl_ingredients(params: TflIngredientsParams, seed: int) -> Outcome:
    base = named_graph(params.graph)
    triangle = Pattern(complete_graph(3))
    blowup = partial_binary_blowup(base, triangle)
    m = blowup.m
    lifts = lift_counts(blowup)
    per_edge = 2 ** (2 * m - 2)
    checks = [
        check("blow-up vertex count", "partial blow-up: n 2^m vertices", blowup.graph.n, "==", base.n * 2**m),
        check("blow-up edge count", "partial blow-up: 2^(2m-2) lifts per edge",
              blowup.graph.edge_count, "==", base.edge_count * per_edge),
        check("smallest lift count", "partial blow-up: 2^(2m-2) lifts per edge", min(lifts.values()), "==", per_edge),
        check("largest lift count", "partial blow-up: 2^(2m-2) lifts per edge", max(lifts.values()), "==", per_edge),
        check("blow-up is triangle-free", "partial blow-up is H-homomorphism-free",
              int(verify_blowup_hom_free(blowup.graph, triangle)), "==", 1),
    ]
    if count_triangles(base):
        checks.append(
            check("full 2-blow-up keeps a triangle", "unrestricted blow-up is not H-free",
                  int(is_hom_free(triangle, full_blowup(base, 2))), "==", 0)
        )

    targets = [f for size in range(1, params.max_target + 1) for f in enumerate_hom_free_targets(triangle, size)]
    bound = no_approx_hom_bound(base.n, m, triangle.graph.edge_count)
    eta = 1.0 / (16 * triangle.graph.edge_count)
    rng = np.random.default_rng(seed)
    chain_failures = averaging_failures = failing_indices = hypothesis_indices = 0
    ceiling = 8 * bound.epsilon_ceiling * base.n**2
    for _ in range(params.random_maps):
        target = targets[int(rng.integers(len(targets)))]
        phi = random_vertex_map(rng, blowup.labeling.size, target.n)
        audit = chain_bound_audit(blowup.labeling, phi, target.n, eta=eta, eps=bound.epsilon_ceiling)
        chain_failures += sum(1 for row in audit.rows if not row.holds)
        averaging_failures += not audit.averaging_holds
        failing_indices += len(audit.failing_indices)
        hypothesis_indices += len(audit.hypothesis_indices)
    checks.append(
        check("chain bound failures", "sum_i I(i,v) <= H(Y) <= log |V(F)|", chain_failures, "==", 0)
    )
    checks.append(
        check("averaging failures", "at most sum_v sum_i I(i,v) / eta indices carry I(i,v) > eta",
              averaging_failures, "==", 0)
    )

    dagger_maps = dagger_hypotheses = dagger_failures = 0
    dagger_targets = [f for f in targets if f.n <= params.dagger_target]
    if m <= 2:
        for i in range(m):
            for target in dagger_targets:
                for phi in enumerate_cell_constant_maps(blowup.labeling, i, target.n):
                    audit = claim_dagger_audit(blowup, i, phi, target)
                    dagger_maps += 1
                    dagger_hypotheses += audit.hypothesis
                    dagger_failures += not audit.consistent
        checks.append(
            check("low-information maps with few violations", "low mutual information forces 2^(2m-3) violations",
                  dagger_failures, "==", 0)
        )

    measurements = {
        "base_vertices": base.n,
        "base_edges": base.edge_count,
        "copies": m,
        "blowup_vertices": blowup.graph.n,
        "blowup_edges": blowup.graph.edge_count,
        "targets": len(targets),
        "chain_audited_maps": params.random_maps,
        "averaging_eta": eta,
        "averaging_failing_indices": failing_indices,
        "averaging_hypothesis_indices": hypothesis_indices,
        "averaging_ceiling": ceiling,
        "dagger_maps": dagger_maps,
        "dagger_hypotheses": dagger_hypotheses,
        "epsilon_ceiling": bound.epsilon_ceiling,
        "target_size_floor": bound.target_size_floor,
    }
    return measurements, checks


def rs_pipeline(params: RsPipelineParams, seed: int) -> Outcome:
    S = build_ap_free_set(params.n, params.method)
    g = rs_graph(params.n, S)
    k = len(S.elements)
    triangles = count_triangles(g)
    checks = [
        check("edge count", "Ruzsa-Szemeredi graph has 3n|S| edges", g.edge_count, "==", 3 * params.n * k),
        check("triangle count", "Ruzsa-Szemeredi graph has n|S| triangles", triangles, "==", params.n * k),
        check("edges outside exactly one triangle", "every edge lies in one triangle",
              _unique_triangle_failures(g), "==", 0),
    ]
    if params.n >= 3:
        broken = rs_graph(params.n, set(S.elements) | {1, 2, 3}, require_ap_free=False)
        checks.append(
            check("planted progression breaks uniqueness", "a 3-term progression adds a triangle",
                  triangle_index(broken).max_count(), ">", 1)
        )

    t = 1
    sample_failures = 0
    good_counts = []
    measured = 0
    if g.n // (9 * t) > 0:
        for run in range(params.runs):
            sample = sample_diamond_subgraph(g, t, seed=seed + run)
            sample_failures += _unique_triangle_failures(sample.graph)
            good_counts.append(len(sample.good_triangles))
            measured += 1
        checks.append(
            check("sampled edges outside exactly one triangle", "sampled good triangles are edge-unique",
                  sample_failures, "==", 0)
        )
    measurements = {
        "set_size": k,
        "set": list(S.elements),
        "vertices": g.n,
        "edges": g.edge_count,
        "triangles": triangles,
        "sample_runs": measured,
        "mean_good_triangles": float(np.mean(good_counts)) if good_counts else 0.0,
        "good_triangle_expectation_bound": good_triangle_expectation_bound(t, triangles),
    }
    return measurements, checks


def deletion_schedule(params: DeletionScheduleParams, seed: int) -> Outcome:
    terms = params.schedule_terms
    partial = schedule_partial_sum(terms)
    tail = schedule_tail_bound(terms)
    values = [g_schedule(2.0**-i) for i in range(1, terms + 2)]
    monotone_failures = sum(1 for a, b in zip(values, values[1:]) if not b > a)

    g = named_graph(params.graph)
    n = g.n
    result = greedy_bounded_codegree(g, eps=params.eps)
    checks = [
        check("schedule partial sum", "sum_i 1/g(2^-i) < 1/2", partial, "<", 0.5),
        check("schedule sum with tail", "sum_i 1/g(2^-i) < 1/2", partial + tail, "<", 0.5),
        check("g increases along the dyadic grid", "g(2^-(i+1)) > g(2^-i)", monotone_failures, "==", 0),
        check("deletions", "greedy deletion removes at most eps n^2 edges", result.deletions, "<=", params.eps * n * n),
        check("final co-degree", "no edge exceeds g(alpha/delta) alpha n / eps",
              result.max_edge_triangles, "<=", result.threshold),
        check("trace replays", "independent replay recomputes every deletion",
              int(replay_trace(g, result.trace, eps=params.eps)), "==", 1),
    ]
    measurements = {
        "schedule_partial_sum": partial,
        "schedule_tail_bound": tail,
        "vertices": n,
        "initial_triangles": count_triangles(g),
        "final_triangles": count_triangles(result.graph),
        "deletions": result.deletions,
        "final_alpha": result.alpha,
        "threshold": result.threshold,
        "trace": [step.model_dump() for step in result.trace],
    }
    return measurements, checks


def arith_roundtrip(params: ArithRoundtripParams, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    space = FpnSpace(p=params.p, n=params.n)
    eps = params.eps
    codim_cap = math.ceil(3 * eps**-2)

    parseval_gap = density_gap = 0.0
    codim_failures = counting_failures = 0
    worst_codim = 0
    worst_counting = 0.0
    for _ in range(params.instances):
        X, Y, Z = (random_indicator(space, params.density, rng) for _ in range(3))
        parseval_gap = max(parseval_gap, abs(dft(X).l2_squared() - float(np.mean(X.values**2))))
        density_gap = max(density_gap, abs(triangle_density(X, Y, Z) - spectral_triangle_density(X, Y, Z)))
        H = weak_regularity_subspace([X, Y, Z], eps)
        gap = counting_lemma_gap(X, Y, Z, H)
        worst_codim = max(worst_codim, H.codimension)
        worst_counting = max(worst_counting, gap)
        codim_failures += H.codimension > codim_cap
        counting_failures += gap > 3 * eps + 1e-12

    checks = [
        check("Parseval", "sum_y |f^(y)|^2 = E f^2", parseval_gap, "<=", 1e-9),
        check("direct vs spectral density", "Lambda equals sum_y f^ g^ h^", density_gap, "<=", 1e-9),
        check("codimension above cap", "weak regularity codimension <= ceil(3 eps^-2)", codim_failures, "==", 0),
        check("counting gap above 3 eps", "|Lambda(f,g,h) - Lambda(f_H,g_H,h_H)| <= 3 eps", counting_failures, "==", 0),
    ]

    small = FpnSpace(p=params.roundtrip_p, n=params.roundtrip_n)
    successes = zero_failures = ledger_failures = 0
    for run in range(params.runs):
        f, g, h = (random_density(small, rng) for _ in range(3))
        result = weighted_removal_roundtrip(f, g, h, eps, params.lift, seed=seed + run)
        ledger_failures += any(d > b + 1e-12 for d, b in zip(result.l1_distances, result.l1_ledger))
        if result.success:
            successes += 1
            zero_failures += triangle_density(*result.functions) != 0.0
    failure_rate = 1.0 - successes / params.runs
    if successes < params.runs:
        logger.warning("weighted round trip failed in %d of %d runs", params.runs - successes, params.runs)
    checks.extend([
        check("successful runs with triangles left", "rounded functions have Lambda = 0", zero_failures, "==", 0),
        check("l1 distance above ledger", "||f - f'||_1 <= 4 deletions / p^(n+m)", ledger_failures, "==", 0),
    ])

    X, Y, Z = (random_indicator(space, params.density, rng) for _ in range(3))
    approximation = triangle_free_approximation(X, Y, Z, eps, lift=1, seed=seed)
    measurements = {
        "codimension_cap": codim_cap,
        "worst_codimension": worst_codim,
        "worst_counting_gap": worst_counting,
        "parseval_gap": parseval_gap,
        "density_gap": density_gap,
        "roundtrip_runs": params.runs,
        "roundtrip_failure_rate": failure_rate,
        "approximation_codimension": approximation.codimension,
        "approximation_quotient_density": approximation.quotient_density,
        "approximation_missed": list(approximation.missed),
        "approximation_succeeded": approximation.roundtrip.success,
    }
    return measurements, checks


def arith_expansion(params: ArithExpansionParams, seed: int) -> Outcome:
    rng = np.random.default_rng(seed)
    space = FpnSpace(p=params.p, n=params.n)
    mode = "exhaustive" if space.size <= settings.TRICOLOR_EXHAUSTIVE_LIMIT else "greedy"
    found = tricolor_search(space, mode=mode)
    triple = found.triple
    es = expand_construction(triple)
    p, l = space.p, triple.length
    block = (expansion_radius(p) + 1) * p ** (l - 1)
    sizes = [len(b) for blocks in (es.x_blocks, es.y_blocks, es.z_blocks) for b in blocks]

    checks = [
        check("tricolor triple verified", "x_i + y_j + z_k = 0 iff i = j = k", int(verify_tricolor(triple)), "==", 1),
        check("block size mismatches", "|X'_i| = (floor((p-2)/3)+1) p^(l-1)",
              sum(1 for s in sizes if s != block), "==", 0),
        check("primes failing the block floor", "p^(l-1) (floor((p-2)/3)+1) >= p^l / 4",
              sum(1 for q in primes_up_to(199) if 4 * (expansion_radius(q) + 1) < q), "==", 0),
    ]
    if es.space.size <= 1 << 12:
        indicators = [DensityFunction.indicator(es.space, es.union(w)) for w in ("x", "y", "z")]
        checks.append(
            check("expanded sets triangle-free", "X' x Y' x Z' has no solution of x+y+z=0",
                  set_triangle_count(*indicators), "==", 0)
        )

    audits = mass_failures = block_failures = 0
    min_slack = math.inf
    for _ in range(params.random_maps):
        phi = random_linear_map(es.space, params.m, rng)
        audit = missed_mass_audit(es, phi, *optimal_targets(es, phi))
        audits += 1
        mass_failures += not audit.holds
        block_failures += sum(1 for b in audit.blocks if b.good and b.missed < b.floor)
        min_slack = min(min_slack, audit.missed - audit.bound)
    checks.extend([
        check("maps missing too little", "missed >= (l - m) p^l / 4", mass_failures, "==", 0),
        check("good blocks under the floor", "good block misses >= p^(l-1)(floor((p-2)/3)+1)",
              block_failures, "==", 0),
    ])
    measurements = {
        "search_mode": mode,
        "tricolor_length": l,
        "exhaustive_optimum": found.exhaustive_optimum,
        "lifted_size": es.space.size,
        "block_size": block,
        "good_block_floor": good_block_floor(p, l) if l else 0,
        "missed_mass_bound": (l - params.m) * p**l / 4,
        "audited_maps": audits,
        "min_slack": min_slack if audits else None,
    }
    return measurements, checks


def cp_table(params: CpTableParams, seed: int) -> Outcome:
    rows = []
    checks = []
    for p in params.primes:
        result = cp_constant(p)
        rows.append({"p": p, "c_p": result.c_p, "c_p_log_p": result.c_p * math.log(p),
                     "minimiser": result.minimiser, "agreement": result.agreement})
        checks.append(check(f"c_{p} positive", "0 < c_p < 1", result.c_p, ">", 0.0))
        checks.append(check(f"c_{p} below one", "0 < c_p < 1", result.c_p, "<", 1.0))
        checks.append(check(f"c_{p} golden vs grid", "two minimisers agree", result.agreement, "<=", 1e-6))
        if p >= 11:
            checks.append(check(f"c_{p} log p band", "c_p log p in [0.13, 0.25]",
                                result.c_p * math.log(p), "<=", 0.25))
            checks.append(check(f"c_{p} log p floor", "c_p log p in [0.13, 0.25]",
                                result.c_p * math.log(p), ">=", 0.13))
    limit = asymptotic_cp_limit()
    checks.append(check("large-p limit floor", "-log inf e^(x/3)(1-e^-x)/x near 0.172", limit, ">=", 0.171))
    checks.append(check("large-p limit ceiling", "-log inf e^(x/3)(1-e^-x)/x near 0.172", limit, "<=", 0.174))
    return {"rows": rows, "asymptotic_limit": limit}, checks


PRESETS: Dict[str, Tuple[Type[BaseModel], Callable[[Any, int], Outcome]]] = {
    "tfl-ingredients": (TflIngredientsParams, tfl_ingredients),
    "rs-pipeline": (RsPipelineParams, rs_pipeline),
    "deletion-schedule": (DeletionScheduleParams, deletion_schedule),
    "arith-roundtrip": (ArithRoundtripParams, arith_roundtrip),
    "arith-expansion": (ArithExpansionParams, arith_expansion),
    "cp-table": (CpTableParams, cp_table),
}


def run_experiment(
    preset: str,
    params: Optional[Dict[str, Any]] = None,
    seed: Optional[int] = None,
    digests: Optional[Dict[str, str]] = None,
) -> ExperimentReport:
    """Validate ``params`` against the preset's model, run it and assemble the report."""
    if preset not in PRESETS:
        raise UnknownPresetError(f"unknown preset {preset!r}; known: {', '.join(sorted(PRESETS))}")
    model, runner = PRESETS[preset]
    try:
        parsed = model(**(params or {}))
    except ValidationError as e:
        raise InvalidParamsError(f"invalid parameters for {preset}: {e}") from e
    seed = settings.DEFAULT_SEED if seed is None else seed

    logger.info("experiment %s started (seed %d)", preset, seed)
    started = time.perf_counter()
    measurements, checks = runner(parsed, seed)
    elapsed = time.perf_counter() - started
    failed = [c.name for c in checks if not c.passed]
    logger.info("experiment %s finished in %.2fs: %d checks, %d failed", preset, elapsed, len(checks), len(failed))
    return ExperimentReport(
        experiment=preset,
        schema_version=settings.REPORT_SCHEMA_VERSION,
        seed=seed,
        inputs={"params": parsed.model_dump(), "digests": dict(digests or {})},
        measurements=measurements,
        checks=checks,
        timing={"wall_seconds": elapsed},
    )
