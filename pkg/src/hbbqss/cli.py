"""Command-line front end tying the modules into reproducible experiments.

Commands:

* ``verify``   — run the built-in correctness checks; nonzero exit on failure.
* ``simulate`` — run a protocol session and export the transcript.

  Transcript JSON schema: an object with keys ``n_rounds``,
  ``check_fraction``, ``seed``, ``attacker``, ``check_error_rate``,
  ``key_alice``, ``key_reconstructed``, ``attacker_key_guess`` and
  ``rounds``; each round holds ``round_id``, ``basis_a/b/c``, ``sifted``,
  ``role``, ``outcome_a/b``, ``announced_c`` and ``consistent``.
* ``analyze``  — full attack analysis of a spec file, exported as JSON.
* ``sweep``    — CSV sweep of the detection-passing family over c.
* ``optimize`` — numeric information maximisation, exported as JSON.

Attack spec JSON schema: ``{"ancilla_dim": d, "a": [[re, im] x4 row-major],
"eps": [[[re, im] x (2 d)] x4]}``. The bundled specs ``honest``,
``hbb_section4`` and ``kki`` may be named in place of a path.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import attack, exploit, hbb, optimizer, qstate

BUNDLED_SPECS = ("honest", "hbb_section4", "kki")

_DEFAULT_ROUNDS = 10000
_DEFAULT_CHECK_FRACTION = 0.5
_DEFAULT_SEED = 42


@dataclass
class RunConfig:
    command: str
    rounds: int = _DEFAULT_ROUNDS
    check_fraction: float = _DEFAULT_CHECK_FRACTION
    seed: int = _DEFAULT_SEED
    attacker: str = "none"
    spec_path: str | None = None
    out_format: str = "json"
    out_path: str | None = None
    grid: int = 41
    restarts: int = 4
    iters: int = optimizer.MAX_ITERS
    tol: float = 1e-6

    def __post_init__(self):
        if (self.attacker == "spec") != (self.spec_path is not None) and self.command == "simulate":
            raise ValueError("--spec is required exactly when --attacker spec is chosen")


def _num(x: float | None):
    return None if x is None else float(f"{x:.12g}")


def resolve_spec(name_or_path: str) -> attack.AttackSpec:
    """Load a spec from a path, or from the bundled set by bare name."""
    p = Path(name_or_path)
    if p.exists():
        return attack.load_spec(p)
    stem = name_or_path.removesuffix(".json")
    if stem in BUNDLED_SPECS:
        ref = resources.files("hbbqss").joinpath(f"specs/{stem}.json")
        return attack.spec_from_dict(json.loads(ref.read_text()))
    raise attack.SpecError(
        f"no spec file at {name_or_path!r} and no bundled spec of that name "
        f"(bundled: {', '.join(BUNDLED_SPECS)})"
    )


# ---------------------------------------------------------------------------
# verify

# Known-good post-decoder states for the x,x case, used by the circuit
# equivalence check: detection decoding maps the four conditionals onto
# these Bell-type forms, information decoding onto the second set.
_R = 1.0 / math.sqrt(2.0)
_DETECTION_TARGETS_XX = {
    ("+", "+"): np.array([0, _R, _R, 0], dtype=complex),
    ("+", "-"): np.array([_R, 0, 0, -_R], dtype=complex),
    ("-", "+"): np.array([_R, 0, 0, _R], dtype=complex),
    ("-", "-"): np.array([0, -_R, _R, 0], dtype=complex),
}
_INFO_TARGETS_XX = {
    ("+", "+"): np.array([_R, 0, 0, _R], dtype=complex),
    ("+", "-"): np.array([_R, 0, 0, -_R], dtype=complex),
    ("-", "+"): np.array([0, _R, _R, 0], dtype=complex),
    ("-", "-"): np.array([0, -_R, _R, 0], dtype=complex),
}

_SIGNS = (qstate.Sign.PLUS, qstate.Sign.MINUS)


def _check_correlation_reproduction() -> tuple[float, str]:
    t = hbb.run_session(10000, check_fraction=1.0, seed=20240517)
    mismatches = sum(1 for r in t.rounds if r.role is hbb.Role.CHECK and not r.consistent)
    return float(mismatches), f"{mismatches} correlation-table mismatches over {t.n_rounds} rounds"


def _check_closed_form_agreement() -> tuple[float, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(40):
        spec = optimizer.random_family_point(rng).to_spec()
        pe = attack.pe_closed_form(spec)
        report = attack.analyze(spec)
        worst = max(worst, max(abs(report.pe_numeric[c] - pe) for c in attack.CASES))
    if worst > 1e-9:
        raise AssertionError(f"closed form deviates from Helstrom by {worst:.3e}")
    return worst, f"max closed-form vs Helstrom deviation {worst:.3e}"


def _check_circuit_state_preparation() -> tuple[float, str]:
    psi0 = qstate.tensor_with_ancilla(qstate.ghz_state(), "E", 2)
    produced = exploit.entangle_circuit(psi0)
    expected = attack.global_state(exploit.example_spec())
    dev = qstate.phase_aligned_distance(produced.vec, expected.vec)
    if dev > 1e-12:
        raise AssertionError(f"circuit output deviates from the spec state by {dev:.3e}")
    return dev, f"state preparation deviation {dev:.3e}"


def _check_decoder_transforms() -> tuple[float, str]:
    table = attack.conditional_states(exploit.example_spec(), attack.Case.XX)
    worst = 0.0
    for (m, n), (det_target, info_target) in zip(
        [(a, b) for a in "+-" for b in "+-"],
        zip(_DETECTION_TARGETS_XX.values(), _INFO_TARGETS_XX.values()),
    ):
        phi = table.phi(qstate.Sign(m), qstate.Sign(n))
        det = exploit._detection_transform(attack.Case.XX) @ phi
        inf = exploit._info_transform(attack.Case.XX) @ phi
        worst = max(worst, qstate.phase_aligned_distance(det, det_target))
        worst = max(worst, qstate.phase_aligned_distance(inf, info_target))
    if worst > 1e-12:
        raise AssertionError(f"decoder transforms deviate by {worst:.3e}")
    return worst, f"max transform deviation {worst:.3e}"


def _check_decoder_soundness() -> tuple[float, str]:
    spec = exploit.example_spec()
    bad = 0
    worst_mass = 0.0
    for case in attack.CASES:
        table = attack.conditional_states(spec, case)
        for m in _SIGNS:
            for n in _SIGNS:
                phi = table.phi(m, n)
                alice = qstate.Outcome(m, case.alice_basis)
                bob = qstate.Outcome(n, case.bob_basis)
                required = hbb.required_announcement(alice, bob).bit
                if exploit.detection_decode(phi, case) != required:
                    bad += 1
                if exploit.info_decode(phi, case) != alice.bit:
                    bad += 1
                # The announcement must also be deterministic, not a lucky argmax.
                out = exploit._detection_transform(case) @ phi
                probs = np.abs(out) ** 2
                mass = sum(probs[int(l, 2)] for l in exploit.ANNOUNCEMENT_MAP[case][required])
                worst_mass = max(worst_mass, abs(1.0 - mass))
    if bad or worst_mass > 1e-12:
        raise AssertionError(
            f"{bad} decoder mismatches, worst announcement mass defect {worst_mass:.3e}"
        )
    return float(bad) + worst_mass, f"decoders exact, mass defect {worst_mass:.3e}"


def _check_nas_sufficiency() -> tuple[float, str]:
    rng = np.random.default_rng(11)
    specs = [exploit.example_spec(), attack.kki_spec()]
    specs += [optimizer.random_family_point(rng, c=0.5).to_spec() for _ in range(10)]
    worst = 0.0
    for spec in specs:
        ok, _ = attack.nas_check(spec)
        report = attack.analyze(spec)
        if not (ok and report.escape_ok):
            raise AssertionError("a perfect-attack spec failed the escape check")
        worst = max(worst, 1.0 - report.info)
    if worst > 1e-9:
        raise AssertionError(f"perfect-attack information deficit {worst:.3e}")
    return worst, f"max information deficit {worst:.3e} over {len(specs)} specs"


def _check_nas_necessity() -> tuple[float, str]:
    rng = np.random.default_rng(13)
    violations = 0
    count = 0
    for delta in (0.01, 0.05, 0.1):
        for kind in ("magnitude", "rotation"):
            for _ in range(2):
                spec = perturbed_spec(rng, delta, kind)
                report = attack.analyze(spec)
                count += 1
                if report.escape_ok and report.info > 1.0 - 1e-4:
                    violations += 1
    if violations:
        raise AssertionError(f"{violations} perturbed specs still attack perfectly")
    return float(violations), f"all {count} perturbed specs degraded"


def _check_optimizer_maximum() -> tuple[float, str]:
    result = optimizer.maximize(restarts=2, rng=np.random.default_rng(5))
    dev = abs(result.best_info - 1.0)
    if not result.converged or dev > 1e-6 or abs(result.best_point.c - 0.5) > 1e-3:
        raise AssertionError(
            f"optimizer reached info {result.best_info} at c {result.best_point.c}"
        )
    return dev, f"max info {result.best_info:.9f} at c {result.best_point.c:.6f}"


def perturbed_spec(rng: np.random.Generator, delta: float, kind: str) -> attack.AttackSpec:
    """A perfect-attack spec nudged off the optimum by ``delta``."""
    point = optimizer.random_family_point(rng, c=0.5)
    eps = np.array(point.eps)
    a = point.to_spec().a.copy()
    if kind == "magnitude":
        a[0, 0] = (0.5 + delta) * a[0, 0] / abs(a[0, 0])
        rest = math.sqrt((1.0 - abs(a[0, 0]) ** 2) / 3.0)
        for (i, j) in ((0, 1), (1, 0), (1, 1)):
            a[i, j] = rest * a[i, j] / abs(a[i, j])
    elif kind == "rotation":
        eps[0] = math.cos(delta) * eps[0] + math.sin(delta) * eps[1]
    else:
        raise ValueError(f"unknown perturbation {kind!r}")
    return attack.AttackSpec(2, a, eps)


VERIFY_CHECKS = (
    ("hbb/correlation-reproduction", _check_correlation_reproduction),
    ("attack/closed-form-agreement", _check_closed_form_agreement),
    ("exploit/circuit-state-preparation", _check_circuit_state_preparation),
    ("exploit/decoder-transforms", _check_decoder_transforms),
    ("exploit/decoder-soundness", _check_decoder_soundness),
    ("attack/nas-sufficiency", _check_nas_sufficiency),
    ("attack/nas-necessity", _check_nas_necessity),
    ("optimizer/maximum", _check_optimizer_maximum),
)


def cmd_verify(cfg: RunConfig) -> int:
    failures = 0
    for name, check in VERIFY_CHECKS:
        try:
            deviation, detail = check()
        except Exception as exc:  # noqa: BLE001 - each failure is itemised
            failures += 1
            print(f"[FAIL] {name}: {exc}")
            continue
        print(f"[PASS] {name}: {detail}")
    if failures:
        print(f"verify: {failures} of {len(VERIFY_CHECKS)} checks failed")
        return 1
    print(f"verify: all {len(VERIFY_CHECKS)} checks passed")
    return 0


# ---------------------------------------------------------------------------
# simulate / analyze / sweep / optimize


def _build_strategy(cfg: RunConfig):
    if cfg.attacker == "none":
        return None
    if cfg.attacker == "hbb-circuit":
        return exploit.full_attack_strategy()
    if cfg.attacker == "intercept-resend":
        return exploit.intercept_resend_strategy()
    if cfg.attacker == "spec":
        spec = resolve_spec(cfg.spec_path)
        ok, diag = attack.is_realizable(spec)
        if not ok:
            raise attack.SpecError(
                f"spec is not realizable by any unitary interaction: "
                f"branch norms {diag['branch_norms']}, overlap {diag['branch_overlap']:.3e}"
            )
        return exploit.spec_attack_strategy(spec)
    raise ValueError(f"unknown attacker {cfg.attacker!r}")


def cmd_simulate(cfg: RunConfig) -> int:
    strategy = _build_strategy(cfg)
    transcript = hbb.run_session(
        cfg.rounds, cfg.check_fraction, strategy=strategy, seed=cfg.seed
    )
    out = Path(cfg.out_path or f"transcript.{cfg.out_format}")
    if cfg.out_format == "json":
        out.write_text(hbb.transcript_to_json(transcript))
    else:
        out.write_text(hbb.transcript_to_csv(transcript))
    err = transcript.check_error_rate
    err_s = "n/a" if err is None else f"{err:.4f}"
    if transcript.attacker_key_guess:
        info_s = f"{hbb.info_rate(transcript):.4f}"
    else:
        info_s = "n/a"
    print(f"error={err_s} info={info_s} rounds={cfg.rounds} out={out}")
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    spec = resolve_spec(cfg.spec_path)
    report = attack.analyze(spec)
    out = Path(cfg.out_path or "report.json")
    out.write_text(attack.report_to_json(report))
    print(
        f"escape_ok={report.escape_ok} nas_ok={report.nas_ok} "
        f"realizable={report.realizable} info={report.info:.6f} out={out}"
    )
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.grid < 2:
        raise ValueError("--grid must be at least 2")
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=",", lineterminator="\n")
    writer.writerow(["c", "s", "pe_closed", "pe_numeric", "info", "max_residual"])
    # a uniform grid can never contain the irrational-fraction optimum, so
    # the perfect-attack point is added explicitly
    grid = np.unique(np.append(np.linspace(0.0, optimizer.INV_SQRT2, cfg.grid), 0.5))
    for c in grid:
        point = optimizer.AttackFamilyPoint(float(c))
        spec = point.to_spec()
        pe_closed = attack.pe_closed_form(spec)
        report = attack.analyze(spec)
        pe_numeric = max(report.pe_numeric.values())
        residuals = attack.detection_residuals(spec)
        writer.writerow(
            [
                f"{point.c:.12g}",
                f"{point.s:.12g}",
                f"{pe_closed:.12g}",
                f"{pe_numeric:.12g}",
                f"{report.info:.12g}",
                f"{max(residuals.all_values):.12g}",
            ]
        )
    out = Path(cfg.out_path or "sweep.csv")
    out.write_text(buf.getvalue())
    print(f"rows={len(grid)} out={out}")
    return 0


def cmd_optimize(cfg: RunConfig) -> int:
    result = optimizer.maximize(
        restarts=cfg.restarts,
        iters=cfg.iters,
        tol=cfg.tol,
        rng=np.random.default_rng(cfg.seed),
    )
    out = Path(cfg.out_path or "optimize.json")
    optimizer.save_result(result, out)
    print(
        f"best_info={result.best_info:.9f} c={result.best_point.c:.6f} "
        f"converged={result.converged} out={out}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbbqss",
        description="Simulate and cryptanalyse the HBB GHZ-state secret-sharing protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("verify", help="run the built-in correctness checks")

    sim = sub.add_parser("simulate", help="run a protocol session")
    sim.add_argument("--rounds", type=int, default=_DEFAULT_ROUNDS)
    sim.add_argument("--check-fraction", type=float, default=_DEFAULT_CHECK_FRACTION)
    sim.add_argument("--seed", type=int, default=_DEFAULT_SEED)
    sim.add_argument(
        "--attacker",
        choices=("none", "hbb-circuit", "intercept-resend", "spec"),
        default="none",
    )
    sim.add_argument("--spec", dest="spec_path", default=None, help="spec file or bundled name")
    sim.add_argument("--out", dest="out_path", default=None)
    sim.add_argument("--format", dest="out_format", choices=("json", "csv"), default="json")

    ana = sub.add_parser("analyze", help="analyse an attack spec")
    ana.add_argument("--spec", dest="spec_path", required=True)
    ana.add_argument("--out", dest="out_path", default=None)

    swp = sub.add_parser("sweep", help="sweep the detection-passing family")
    swp.add_argument("--grid", type=int, default=41)
    swp.add_argument("--out", dest="out_path", default=None)

    opt = sub.add_parser("optimize", help="maximise the attacker information")
    opt.add_argument("--restarts", type=int, default=4)
    opt.add_argument("--iters", type=int, default=optimizer.MAX_ITERS)
    opt.add_argument("--tol", type=float, default=1e-6)
    opt.add_argument("--seed", type=int, default=_DEFAULT_SEED)
    opt.add_argument("--out", dest="out_path", default=None)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(args).items() if v is not None}
    return RunConfig(**fields)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        handler = {
            "verify": cmd_verify,
            "simulate": cmd_simulate,
            "analyze": cmd_analyze,
            "sweep": cmd_sweep,
            "optimize": cmd_optimize,
        }[cfg.command]
        return handler(cfg)
    except (attack.SpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except hbb.SessionAbort as exc:
        print(f"session aborted: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
