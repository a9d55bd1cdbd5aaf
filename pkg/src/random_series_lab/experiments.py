"""The experiment families, their catalog, and the tables each one emits."""

import cmath
import logging
import math
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np

from .boundary_functionals import (
    DEFAULT_MAX_DEGREE,
    PROFILE_TOLERANCE,
    PowerPsi,
    log_arc_integral,
    log_fluctuation_tail,
    radius_for_rho,
    rho_partial,
    snb_growth_profile,
)
from .coeff_laws import (
    AlphaLaw,
    CoeffLaw,
    Deterministic,
    Gaussian,
    JumpLaw,
    LawSequence,
    Rademacher,
    alpha_optimal,
    exact_concentration,
    sample,
)
from .concentration import empirical_concentration
from .errors import ConfigError
from .inequality_lab import (
    BoundReport,
    Verdict,
    berry_esseen_verify,
    levy_weakL2_equiv_check,
    log_plus_triangle_report,
    mixture_lemma_suite,
    paley_zygmund_fact,
    rogozin_verify,
    subgaussian_check,
    variance_chain_check,
    variance_reversal_check,
    weak_symmetrization_check,
)
from .roots_and_potentials import (
    RULES,
    RootSet,
    annulus_statistics,
    blaschke_profile,
    jensen_residual,
    log_integral_convergence,
    polynomial_roots,
    rotation_translation_gap,
)
from .series_engine import ArcSpec, sample_series
from .utils import make_stream, wilson_half_width

if TYPE_CHECKING:
    from .analyzer import ExperimentConfig

logger = logging.getLogger(__name__)

DEFAULT_ARC = (1.0, 2.0)
CALIBRATION_TOLERANCE = 0.015
JENSEN_TOLERANCE = 1e-8
FACTORED_TOLERANCE = 1e-6
ROTATION_TOLERANCE = 1e-9


@dataclass
class Table:
    """One long-format data family written as a CSV file."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple[Any, ...]] = field(default_factory=list)


@dataclass
class ExperimentResult:
    """Everything an experiment produced, ready for persistence."""

    kind: str
    tables: list[Table] = field(default_factory=list)
    reports: list[BoundReport] = field(default_factory=list)
    summaries: dict[str, float] = field(default_factory=dict)
    plot: Table | None = None

    @property
    def violated(self) -> list[BoundReport]:
        return [r for r in self.reports if r.verdict is Verdict.VIOLATED]


def _arc(config: "ExperimentConfig") -> ArcSpec:
    return config.arc or ArcSpec(*DEFAULT_ARC)


def _sequence(config: "ExperimentConfig", default: LawSequence | None = None) -> LawSequence:
    if config.sequence is not None:
        return config.sequence
    if default is None:
        raise ConfigError(f"{config.kind} needs a [law] table")
    return default


def run_snb_profile(config: "ExperimentConfig") -> ExperimentResult:
    """Growth profile of Y_{I,r_k} along the radius schedule."""
    seq = _sequence(config)
    psi = config.psi or PowerPsi(1.0)
    params = config.params
    radii = params.get("radii")
    profile = snb_growth_profile(
        seq,
        _arc(config),
        psi,
        config.K,
        config.replicates,
        seed=config.seed,
        radii=radii,
        threads=config.threads,
        max_degree=int(params.get("max_degree", DEFAULT_MAX_DEGREE)),
        tol=float(params.get("tol", PROFILE_TOLERANCE)),
    )
    ks = profile.ks
    values = Table("values", ("replicate", "k", "value"))
    for replicate, row in enumerate(profile.values):
        values.rows.extend((replicate, k, float(v)) for k, v in zip(ks, row, strict=True))
    summary = Table(
        "summary",
        ("k", "log_radius", "degree", "clamped", "threshold", "median", "q1", "q3",
         "frequency", "ci_low", "ci_high", "ratio"),
    )
    for i, k in enumerate(ks):
        low, high = profile.frequency_bounds[i]
        summary.rows.append((
            k, profile.schedule.log_radii[i], profile.degrees[i], int(profile.clamped[i]),
            float(profile.thresholds[i]), float(profile.medians[i]),
            float(profile.lower_quartiles[i]), float(profile.upper_quartiles[i]),
            float(profile.frequencies[i]), low, high, float(profile.ratios[i]),
        ))
    constant = profile.fitted_constant
    report = BoundReport(
        "small-ball-constant", constant, 1.0, Verdict.FITTED, config.replicates,
        details={"K": config.K},
    )
    plot = Table("profile", ("k", "median", "q1", "q3", "frequency"))
    plot.rows = [(row[0], row[5], row[6], row[7], row[8]) for row in summary.rows]
    return ExperimentResult(
        config.kind,
        [values, summary],
        [report],
        {
            "fitted_constant": constant,
            "median_steps_down": profile.median_steps_down,
            "small_ball_constant": profile.small_ball_constant,
            "flagged_integrals": profile.flagged,
            "clamped_radii": sum(profile.clamped),
        },
        plot,
    )


def run_log_snb_profile(config: "ExperimentConfig") -> ExperimentResult:
    """∫_I log|F_N| against (|I|/2)·log ρ_N(r), plus the fluctuation tail of log|F_N(z)|²."""
    seq = _sequence(config, LawSequence(Gaussian(1.0), name="gaussian"))
    params = config.params
    arc = _arc(config)
    degree = int(params.get("degree", 200))
    target = float(params.get("rho", math.exp(4.0)))
    r = float(params["radius"]) if "radius" in params else radius_for_rho(seq, degree, target)
    rho = rho_partial(seq, degree, r)
    half = 0.5 * arc.length * math.log(rho)

    def one(replicate: int) -> tuple[float, bool]:
        result = log_arc_integral(sample_series(seq, degree, config.seed, replicate), r, arc)
        return result.value, result.flagged

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        integrals = list(pool.map(one, range(config.replicates)))
    values = Table("values", ("replicate", "integral", "deviation", "flagged"))
    values.rows = [(i, v, v - half, int(f)) for i, (v, f) in enumerate(integrals)]
    deviations = np.array([row[2] for row in values.rows])

    t_grid = [float(t) for t in params.get("t_grid", range(1, 9))]
    z = r * cmath.exp(1j * (arc.a + 0.5 * arc.length))
    tail = log_fluctuation_tail(
        seq, z, degree, int(params.get("tail_replicates", 10_000)), t_grid,
        seed=config.seed, threads=config.threads,
    )
    tail_table = Table("tail", ("t", "frequency"))
    tail_table.rows = [(float(t), float(f)) for t, f in zip(tail.t_grid, tail.tail, strict=True)]
    median_deviation = float(np.median(deviations))
    band = float(params.get("band", 8.0))
    band_report = BoundReport(
        "log-integral-band",
        abs(median_deviation),
        band,
        Verdict.HOLDS if abs(median_deviation) <= band else Verdict.VIOLATED,
        config.replicates,
        details={"radius": r, "rho": rho},
    )
    level = float(params.get("tail_level", 0.05))
    tail_at_max = float(tail.tail[-1])
    ci = wilson_half_width(round(tail_at_max * tail.replicates), tail.replicates)
    # a fitted rate exists only with two nonzero tail values; it must be a decay
    decaying = not (math.isfinite(tail.decay_rate) and tail.decay_rate <= 0)
    tail_report = BoundReport(
        "fluctuation-tail",
        tail_at_max,
        level,
        Verdict.HOLDS if tail_at_max <= level + ci and decaying else Verdict.VIOLATED,
        tail.replicates,
        ci,
        {"t": float(tail.t_grid[-1]), "decay_rate": tail.decay_rate},
    )
    return ExperimentResult(
        config.kind,
        [values, tail_table],
        [band_report, tail_report],
        {
            "radius": r,
            "rho": rho,
            "median_deviation": median_deviation,
            "tail_at_max_t": tail_at_max,
            "decay_rate": tail.decay_rate,
            "expected_w": tail.expected_w,
        },
        tail_table,
    )


def _alpha_laws() -> list[CoeffLaw]:
    return [AlphaLaw(float(alpha_optimal(k))) for k in (4, 16, 64, 256)]


def _checks(config: "ExperimentConfig") -> dict[str, Callable[[], list[BoundReport]]]:
    params = config.params
    seed = config.seed
    rademacher = LawSequence(Rademacher(), name="rademacher")
    return {
        "rogozin": lambda: rogozin_verify(rademacher, 1.0, 1.0, [1, 10, 100, 1000], seed=seed),
        "berry-esseen": lambda: [
            berry_esseen_verify(np.full(n, 1.0 / math.sqrt(n)), Rademacher(), seed=seed)
            for n in (1, 100, 400)
        ],
        "mixture-lemma": lambda: mixture_lemma_suite(int(params.get("mixture_cases", 1000)), seed),
        "paley-zygmund": lambda: [paley_zygmund_fact(Rademacher()), paley_zygmund_fact(Gaussian(1.0))],
        "variance-reversal": lambda: [
            variance_reversal_check(law) for law in [Rademacher(), *_alpha_laws()]
        ],
        "weak-symmetrization": lambda: [
            weak_symmetrization_check(law, 1.0, seed)
            for law in (Rademacher(), Gaussian(1.0), Deterministic(0.0))
        ],
        "levy-weakL2": lambda: [
            levy_weakL2_equiv_check(law)
            for law in (Rademacher(), AlphaLaw(0.125), Deterministic(0.0))
        ],
        "variance-chain": lambda: [
            variance_chain_check(Rademacher(), 0.5),
            variance_chain_check(Gaussian(1.0), 1.0),
            variance_chain_check(AlphaLaw(0.125), 0.25),
        ],
        "subgaussian": lambda: [subgaussian_check(Rademacher()), subgaussian_check(AlphaLaw(0.125))],
        "log-plus-triangle": lambda: [
            log_plus_triangle_report(int(params.get("triangle_tuples", 10_000)), seed)
        ],
    }


def run_inequality_suite(config: "ExperimentConfig") -> ExperimentResult:
    """Every standalone inequality verifier, in parallel across verifiers."""
    checks = _checks(config)
    selected = list(config.params.get("checks", list(checks)))
    unknown = [name for name in selected if name not in checks]
    if unknown:
        raise ConfigError(f"unknown checks {unknown}; known: {sorted(checks)}")
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        batches = list(pool.map(lambda name: checks[name](), selected))
    reports = [report for batch in batches for report in batch]
    table = Table(
        "reports", ("index", "name", "lhs", "rhs", "ratio", "n_samples", "wilson_ci", "verdict")
    )
    table.rows = [
        (i, r.name, r.lhs, r.rhs, r.ratio, r.n_samples, r.wilson_ci, r.verdict.value)
        for i, r in enumerate(reports)
    ]
    summaries: dict[str, float] = {f"verdict.{v.value}": 0 for v in Verdict}
    for report in reports:
        summaries[f"verdict.{report.verdict.value}"] += 1
    return ExperimentResult(config.kind, [table], reports, summaries)


def run_roots_annulus(config: "ExperimentConfig") -> ExperimentResult:
    """Root-free annuli 1 - R_s against log(s)/s, Jensen residuals and Blaschke sums."""
    seq = _sequence(config, LawSequence(Gaussian(1.0), name="gaussian"))
    params = config.params
    degree = int(params.get("degree", 4096))
    s_grid: Sequence[int] = params.get("s_grid", [8, 16, 32, 64, 128, 256])

    def roots(replicate: int) -> RootSet:
        return polynomial_roots(sample_series(seq, degree, config.seed, replicate))

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        root_sets = list(pool.map(roots, range(config.replicates)))
    stats = annulus_statistics(root_sets, s_grid)
    radii = Table("radii", ("replicate", "s", "radius"))
    for replicate, row in enumerate(stats.radii):
        radii.rows.extend((replicate, s, float(v)) for s, v in zip(stats.s_grid, row, strict=True))
    summary = Table("summary", ("s", "median_gap", "scaled_gap"))
    summary.rows = [
        (s, float(g), float(c))
        for s, g, c in zip(stats.s_grid, stats.median_gap, stats.scaled_gap, strict=True)
    ]

    jensen_degree = int(params.get("jensen_degree", 64))
    jensen_radius = float(params.get("jensen_radius", 0.5))
    residual = jensen_residual(
        sample_series(seq, jensen_degree, config.seed, 0), jensen_radius
    )
    reports = [
        BoundReport(
            "jensen", residual, JENSEN_TOLERANCE,
            Verdict.HOLDS if residual <= JENSEN_TOLERANCE else Verdict.VIOLATED,
            details={"degree": jensen_degree, "radius": jensen_radius},
        )
    ]
    tables = [radii, summary]
    blaschke_degrees = params.get("blaschke_degrees")
    if blaschke_degrees:
        medians = blaschke_profile(
            seq, blaschke_degrees, config.seed, config.replicates, threads=config.threads
        )
        blaschke = Table("blaschke", ("degree", "median_sum"))
        blaschke.rows = [(int(n), float(v)) for n, v in zip(blaschke_degrees, medians, strict=True)]
        tables.append(blaschke)
    return ExperimentResult(
        config.kind,
        tables,
        reports,
        {
            "slope": stats.slope,
            "intercept": stats.intercept,
            "max_root_residual": max(r.residual for r in root_sets),
            "jensen_residual": residual,
        },
        summary,
    )


def run_potential_convergence(config: "ExperimentConfig") -> ExperimentResult:
    """|U(z_n) - U(z_0)| along each approach rule, with the factored and rotation checks."""
    params = config.params
    arc = _arc(config)
    r = float(params.get("r", 0.9))
    if "z0" in params:
        re, im = params["z0"]
        z0 = complex(float(re), float(im))
    else:
        z0 = r * cmath.exp(1j * (arc.a + 0.5 * arc.length))
    ns = [int(n) for n in params.get("ns", [2**j for j in range(11)])]
    rules = list(params.get("rules", RULES))
    trace = Table("trace", ("rule", "n", "re", "im", "deviation"))
    summaries: dict[str, float] = {}
    reports = []
    for rule in rules:
        result = log_integral_convergence(z0, r, arc, rule, ns, seed=config.seed)
        trace.rows.extend(
            (rule, n, float(z.real), float(z.imag), float(d))
            for n, z, d in zip(result.ns, result.points, result.deviations, strict=True)
        )
        summaries[f"final_deviation.{rule}"] = float(result.deviations[-1])
        reports.append(
            BoundReport(
                f"factored-case[{rule}]", result.factored_discrepancy, FACTORED_TOLERANCE,
                Verdict.HOLDS if result.factored_discrepancy <= FACTORED_TOLERANCE
                else Verdict.VIOLATED,
            )
        )
    angles = make_stream(config.seed, 41).uniform(
        0.0, 2.0 * math.pi, (int(params.get("rotation_cases", 20)), 2)
    )
    gap = max(
        (rotation_translation_gap(r, arc.a, arc.b, float(t0), float(tn)) for t0, tn in angles),
        default=0.0,
    )
    summaries["rotation_gap"] = gap
    reports.append(
        BoundReport(
            "rotation-translation", gap, ROTATION_TOLERANCE,
            Verdict.HOLDS if gap <= ROTATION_TOLERANCE else Verdict.VIOLATED,
        )
    )
    return ExperimentResult(config.kind, [trace], reports, summaries, trace)


def _calibration_laws(config: "ExperimentConfig") -> list[CoeffLaw]:
    if config.sequence is not None:
        return [config.sequence.law(0)]
    return [
        Rademacher(),
        JumpLaw(1),
        JumpLaw(3),
        JumpLaw(10),
        AlphaLaw(0.05),
        AlphaLaw(0.125),
        AlphaLaw(0.25),
        Gaussian(1.0),
    ]


def run_law_calibration(config: "ExperimentConfig") -> ExperimentResult:
    """Exact Q(X, λ) against Q̂ from samples on a 30-point λ grid per law."""
    samples = int(config.params.get("samples", 100_000))
    table = Table("calibration", ("law", "lambda", "exact", "empirical"))
    reports = []
    for index, law in enumerate(_calibration_laws(config)):
        data = sample(law, make_stream(config.seed, 43, index), samples)
        top = law.diameter if math.isfinite(law.diameter) else 8.0 * math.sqrt(law.moments().variance)
        grid = np.linspace(0.0, 1.1 * top, 31)[1:]
        worst = 0.0
        for lam in grid:
            exact = exact_concentration(law, float(lam))
            empirical = empirical_concentration(data, float(lam))
            worst = max(worst, abs(exact - empirical))
            table.rows.append((law.label, float(lam), exact, empirical))
        reports.append(
            BoundReport(
                f"calibration[{law.label}]", worst, CALIBRATION_TOLERANCE,
                Verdict.HOLDS if worst <= CALIBRATION_TOLERANCE else Verdict.VIOLATED,
                n_samples=samples,
            )
        )
    return ExperimentResult(
        config.kind, [table], reports, {"max_deviation": max(r.lhs for r in reports)}
    )


@dataclass(frozen=True)
class ExperimentSpec:
    """Catalog entry: what an experiment exercises and the CSV columns it writes."""

    kind: str
    reference: str
    statement: str
    runner: Callable[["ExperimentConfig"], ExperimentResult]
    columns: Mapping[str, tuple[str, ...]]

    def describe(self) -> list[str]:
        lines = [f"{self.kind} → {self.reference}", f"    {self.statement}"]
        for name, cols in self.columns.items():
            lines.append(f"    {self.kind}_{name}.csv: {', '.join(cols)}")
        return lines


CATALOG: dict[str, ExperimentSpec] = {
    spec.kind: spec
    for spec in (
        ExperimentSpec(
            "snb-profile",
            "Theorem 3.3 / Claim 3.4",
            "strong natural boundary from divergent weighted anti-concentration / small-ball claim",
            run_snb_profile,
            {
                "values": ("replicate", "k", "value"),
                "summary": ("k", "log_radius", "degree", "clamped", "threshold", "median", "q1",
                            "q3", "frequency", "ci_low", "ci_high", "ratio"),
            },
        ),
        ExperimentSpec(
            "log-snb-profile",
            "Theorem 3.20 / Lemma 3.21",
            "local log-integral divergence / sector concentration and fluctuation tail",
            run_log_snb_profile,
            {
                "values": ("replicate", "integral", "deviation", "flagged"),
                "tail": ("t", "frequency"),
            },
        ),
        ExperimentSpec(
            "inequality-suite",
            "Lemmas 2.2-2.4, Facts 3.2, 3.10, A.1, A.2, Lemma A.3",
            "Rogozin, Berry-Esseen, mixture small-ball, Paley-Zygmund, Levy and symmetrization bounds",
            run_inequality_suite,
            {"reports": ("index", "name", "lhs", "rhs", "ratio", "n_samples", "wilson_ci", "verdict")},
        ),
        ExperimentSpec(
            "roots-annulus",
            "Section 4",
            "root-free annuli of random polynomials / Jensen formula",
            run_roots_annulus,
            {
                "radii": ("replicate", "s", "radius"),
                "summary": ("s", "median_gap", "scaled_gap"),
                "blaschke": ("degree", "median_sum"),
            },
        ),
        ExperimentSpec(
            "potential-convergence",
            "Appendix B",
            "convergence of arc log-potentials as zeros approach the circle",
            run_potential_convergence,
            {"trace": ("rule", "n", "re", "im", "deviation")},
        ),
        ExperimentSpec(
            "law-calibration",
            "Definition 2.1",
            "exact versus empirical concentration functions",
            run_law_calibration,
            {"calibration": ("law", "lambda", "exact", "empirical")},
        ),
    )
}

KINDS_WITH_LAW = frozenset({"snb-profile"})
KINDS_WITH_PSI = frozenset({"snb-profile"})


def list_experiments() -> list[str]:
    """Catalog lines, one block per experiment kind, with CSV column documentation."""
    lines: list[str] = []
    for spec in CATALOG.values():
        lines.extend(spec.describe())
    return lines


def run_experiment(config: "ExperimentConfig") -> ExperimentResult:
    """Dispatch a validated config to its experiment family."""
    spec = CATALOG[config.kind]
    logger.info("running %s (seed=%d, threads=%d)", config.kind, config.seed, config.threads)
    return spec.runner(config)
