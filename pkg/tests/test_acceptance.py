"""Exit criteria. Each test prints one "PASS/FAIL criterion N: ..." line.

Run just these with ``pytest -m acceptance -s tests/test_acceptance.py`` or
``python tests/test_acceptance.py``.
"""

import dataclasses
import itertools
import json
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from coevolve.canonical import format_canonical
from coevolve.cli import main as cli_main
from coevolve.difficulty import SelectionPolicy, estimate_error_rates, select_training_set
from coevolve.gateway import SkillProfile, SolverConfig, SolverGateway
from coevolve.geometry import apply_auxiliary, build_diagram, emit_formal_description, measure
from coevolve.geometry.constraints import residual
from coevolve.geometry.constructions import AuxiliaryCommand
from coevolve.geometry.corpus import FAMILIES, seed_corpus, seed_spec
from coevolve.geometry.diagram import ConstraintTag, DegenerateGeometryError
from coevolve.geometry.measure import MeasurementQuery
from coevolve.grpo import (
    ANSWER_VOCAB,
    GrpoHyperparams,
    RolloutGroup,
    ToyPolicy,
    compute_group_advantages,
    grpo_loss,
    random_grpo_instance,
    random_sft_instance,
    sft_loss,
    verify_gradients,
)
from coevolve.orchestrator import LoopConfig, SynthesisConfig, run_loop
from coevolve.orchestrator.evolve import seed_record
from coevolve.orchestrator.loop import COMPLETE, Workdir
from coevolve.orchestrator.schedule import INITIAL, PREVIOUS_RL, RL_ONLY, SFT_RL
from coevolve.records import read_jsonl
from coevolve.rewards import RewardBreakdown, score
from coevolve.synthesis import (
    CompositionError,
    TooSimpleError,
    alignment_filter,
    compose_problem,
    generate_subproblems,
)
from test_geometry import RIGHT, spec
from test_rewards import REWARD_TABLE

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    """Yields a recorder; prints PASS/FAIL for the criterion whatever the outcome."""
    state = {}

    def record(n, text):
        state["n"], state["text"] = n, text

    outcome = {"ok": False}
    yield record, outcome
    line = f"{'PASS' if outcome['ok'] else 'FAIL'} criterion {state.get('n', '?')}: {state.get('text', '')}"
    with capsys.disabled():
        print("\n" + line)


def _finish(outcome):
    outcome["ok"] = True


# 1 ---------------------------------------------------------------------------------


def test_criterion_1_grpo_gradient_check(report):
    record, outcome = report
    record(1, "GRPO analytic vs central-difference gradients (beta 0 and 0.1)")
    start = time.perf_counter()
    worst = 0.0
    n = 0
    for seed in range(20):
        for beta in (0.0, 0.1):
            r = verify_gradients("grpo", random_grpo_instance(seed, beta))
            assert not r.non_smooth
            worst = max(worst, r.max_rel_discrepancy)
            n += 1
    elapsed = time.perf_counter() - start
    record(1, f"GRPO gradients on {n} instances, max rel discrepancy {worst:.2e} < 1e-5, {elapsed:.2f}s < 10s")
    assert worst < 1e-5 and elapsed < 10
    _finish(outcome)


# 2 ---------------------------------------------------------------------------------


def test_criterion_2_sft_gradient_check(report):
    record, outcome = report
    record(2, "SFT gradients and uniform-policy loss")
    start = time.perf_counter()
    worst = max(verify_gradients("sft", random_sft_instance(seed)).max_rel_discrepancy for seed in range(20))
    elapsed = time.perf_counter() - start
    dev = 0.0
    uniform = ToyPolicy.initial(8)
    rng = random.Random(0)
    for length in range(1, 12):
        tokens = tuple(rng.choice(ANSWER_VOCAB) for _ in range(length))
        dev = max(dev, abs(sft_loss(uniform, f"q{length}", tokens) - math.log(len(ANSWER_VOCAB))))
    record(2, f"SFT gradients on 20 instances, max rel discrepancy {worst:.2e} < 1e-5 ({elapsed:.2f}s); "
              f"uniform loss - ln V = {dev:.1e} <= 1e-12")
    assert worst < 1e-5 and elapsed < 10 and dev <= 1e-12
    _finish(outcome)


# 3 ---------------------------------------------------------------------------------


def test_criterion_3_advantage_laws(report):
    record, outcome = report
    record(3, "advantage laws on 1000 groups")
    rng = np.random.default_rng(2024)
    mean_dev = std_dev = affine_dev = 0.0
    for i in range(1000):
        size = int(rng.integers(1, 65))
        kind = i % 4
        if kind == 0:
            r = rng.integers(0, 3, size).astype(float)  # reward-like values with ties
        elif kind == 1:
            r = rng.normal(0, 1, size) * 10 ** rng.uniform(-1, 3)  # spread >= 0.1, see conditioning test
        elif kind == 2:
            r = np.full(size, rng.normal())  # degenerate group
        else:
            r = rng.uniform(-5, 5, size)
        a = compute_group_advantages(r)
        mean_dev = max(mean_dev, abs(float(a.mean())))
        if r.std() > 1e-8:
            std_dev = max(std_dev, abs(float(a.std()) - 1))
        scale, shift = float(rng.uniform(0.1, 10)), float(rng.uniform(-10, 10))
        b = compute_group_advantages(scale * r + shift)
        affine_dev = max(affine_dev, float(np.max(np.abs(a - b))))
    record(3, f"1000 groups: |mean A| <= {mean_dev:.1e} (1e-9), |std A - 1| <= {std_dev:.1e} (1e-6), "
              f"affine change <= {affine_dev:.1e} (1e-12)")
    assert mean_dev <= 1e-9 and std_dev <= 1e-6 and affine_dev <= 1e-12
    _finish(outcome)


# 4 ---------------------------------------------------------------------------------


def test_criterion_4_clip_examples(report):
    record, outcome = report
    record(4, "clip examples")
    hp = GrpoHyperparams(epsilon=0.2, beta=0.0)

    def single(ratio, adv):
        return grpo_loss(RolloutGroup("q", (("1",),), [0.0], [math.log(ratio)], [0.0]), np.array([adv]), hp)

    flat = RolloutGroup("q", (("1",), ("2",), ("3",)), [0, 1, 2], [-1.0, -2.0, -3.0], [-1.0, -2.0, -3.0])
    got = [single(1.5, 1.0), single(0.5, -1.0), grpo_loss(flat, compute_group_advantages([0, 1, 2]), hp)]
    want = [-1.2, 0.8, 0.0]
    dev = max(abs(g - w) for g, w in zip(got, want))
    record(4, f"grpo_loss examples {[round(g, 12) for g in got]} vs {want}, max dev {dev:.1e} <= 1e-12")
    assert dev <= 1e-12
    _finish(outcome)


# 5 ---------------------------------------------------------------------------------


def test_criterion_5_filter_calibration(report):
    record, outcome = report
    record(5, "filter calibration")
    first = seed_record("s0", build_diagram(RIGHT), seed=0)
    samples = [dataclasses.replace(first, id=f"cal{i:03d}") for i in range(500)]
    policy = SelectionPolicy(threshold=0.3, inclusive=True, k=32)
    gw = SolverGateway(SolverConfig(backend="simulated", seed=5, skill=SkillProfile(p0=0.5)))
    estimates = estimate_error_rates(samples, gw, policy, workers=4)
    mean = float(np.mean([e.error_rate for e in estimates]))
    half = 2.5758 * math.sqrt(0.25 / (500 * 32))  # 99% normal band for the pooled proportion
    # independent recount of wrong answers from the same seeded solver
    truth = first.ground_truth_value
    recount = {}
    for s in samples:
        wrong = 0
        for attempt in range(32):
            ans = gw.answer(s, attempt).extracted
            if ans is None or abs(float(ans) - truth) > max(1e-6, 1e-3 * abs(truth)):
                wrong += 1
        recount[s.id] = wrong
    retained, _ = select_training_set(estimates, policy)
    expected = [sid for sid, w in recount.items() if w >= 10]
    oracle = estimate_error_rates(samples[:50], SolverGateway(SolverConfig(backend="oracle")), policy)
    oracle_retained, _ = select_training_set(oracle, policy)
    record(5, f"mean error {mean:.4f} in 0.5 +/- {half:.4f}; retained {len(retained)} == #(wrong >= 10) "
              f"{len(expected)}; oracle retains {len(oracle_retained)}")
    assert abs(mean - 0.5) <= half
    assert retained == expected
    assert [e.wrong for e in estimates] == [recount[s.id] for s in samples]
    assert oracle_retained == []
    _finish(outcome)


# 6 ---------------------------------------------------------------------------------


def _queries(d):
    labels = d.labels
    qs = [MeasurementQuery("distance", p) for p in itertools.combinations(labels, 2)]
    for a, b, c in itertools.combinations(labels, 3):
        qs += [MeasurementQuery("angle", (a, b, c)), MeasurementQuery("polygon-area", (a, b, c)),
               MeasurementQuery("perimeter", (a, b, c))]
    for circle in (p for p in d.primitives if p.kind == "circle"):
        centre = circle.args[0]
        on = [p for p in labels if p != centre
              and abs(math.dist(d.xy(p), d.xy(centre)) - circle.radius) < 1e-9]
        qs += [MeasurementQuery("circle-arc-length", (centre, a, b)) for a, b in itertools.combinations(on, 2)]
    return qs


def _values(d, qs):
    out = []
    for q in qs:
        try:
            out.append(measure(d, q))
        except DegenerateGeometryError:
            out.append(None)
    return out


def _moved(d, theta, tx, ty):
    c, s = math.cos(theta), math.sin(theta)
    raw = d.to_spec()
    for p in raw["points"]:
        x, y = p["x"], p["y"]
        p["x"], p["y"] = c * x - s * y + tx, s * x + c * y + ty
    return build_diagram(raw)


def test_criterion_6_geometry_oracle(report):
    record, outcome = report
    record(6, "geometry oracle suite")
    start = time.perf_counter()
    right = build_diagram(RIGHT)
    d345 = [measure(right, MeasurementQuery("distance", pair)) for pair in (("A", "B"), ("A", "C"), ("B", "C"))]
    assert d345 == [4.0, 3.0, 5.0]
    rect = build_diagram(spec({"A": (1, 1), "B": (7, 1), "C": (7, 5), "D": (1, 5)},
                              [("A", "B"), ("B", "C"), ("C", "D"), ("D", "A")]))
    assert measure(rect, MeasurementQuery("polygon-area", ("A", "B", "C", "D"))) == 24.0
    assert measure(right, MeasurementQuery("polygon-area", ("A", "B", "C"))) == 6.0
    rng = random.Random(6)
    worst_perp = worst_motion = 0.0
    n = feet = 0
    while n < 120:
        d = build_diagram(seed_spec(FAMILIES[n % len(FAMILIES)], rng))
        p, a, b = rng.sample(d.labels, 3)
        try:
            d = apply_auxiliary(d, AuxiliaryCommand("perpendicular-foot", (p, a, b)))
            foot = d.points[-1].label
            worst_perp = max(worst_perp, residual(d, ConstraintTag("perpendicular", (p, foot, a, b))))
            feet += 1
        except DegenerateGeometryError:
            pass
        qs = _queries(d)
        before = _values(d, qs)
        moved = _moved(d, rng.uniform(0, 2 * math.pi), rng.uniform(-50, 50), rng.uniform(-50, 50))
        after = _values(moved, qs)
        for x, y in zip(before, after):
            assert (x is None) == (y is None)
            if x is not None:
                worst_motion = max(worst_motion, abs(x - y))
        n += 1
    elapsed = time.perf_counter() - start
    record(6, f"3-4-5 and areas exact; {feet} perpendicular feet, residual {worst_perp:.1e} < 1e-9; "
              f"rigid-motion drift {worst_motion:.1e} <= 1e-9 over {n} diagrams; {elapsed:.2f}s < 5s")
    assert worst_perp < 1e-9 and worst_motion <= 1e-9 and n >= 100 and elapsed < 5
    _finish(outcome)


# 7 ---------------------------------------------------------------------------------


def test_criterion_7_synthesis_soundness(report):
    record, outcome = report
    record(7, "synthesis soundness")
    composed = too_simple = dropped = 0
    worst = 0.0
    counts = set()
    for i, (_, d) in enumerate(seed_corpus(50, 7)):
        try:
            subs = generate_subproblems(emit_formal_description(d), d, seed=i)
        except TooSimpleError:
            too_simple += 1
            continue
        counts.add(len(subs))
        assert 4 <= len(subs) <= 10
        try:
            p = compose_problem(subs, seed=i)
        except CompositionError:
            dropped += 1
            continue
        composed += 1
        direct = measure(d, p.target)
        worst = max(worst, abs(p.ground_truth_value - direct))
        assert p.ground_truth == format_canonical(direct)
        assert alignment_filter(p, d).keep
    record(7, f"50 diagrams: {composed} composed, {too_simple} too simple, {dropped} without a chain; "
              f"max |G - measured| {worst:.1e} <= 1e-6; sub-problem counts {sorted(counts)} within [4, 10]")
    assert worst <= 1e-6 and composed > 0
    _finish(outcome)


# 8 ---------------------------------------------------------------------------------


def _datasets(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted((root / "datasets").rglob("*"))
            if p.is_file()}


def test_criterion_8_closed_loop(report, tmp_path, capsys):
    record, outcome = report
    record(8, "closed-loop smoke test")
    solver = LoopConfig().solver
    assert (solver.evolution_backend, solver.filter_backend) == ("oracle", "simulated")
    assert (solver.p0, solver.delta, solver.slope) == (0.4, 0.2, 0.05)
    a, b = tmp_path / "a", tmp_path / "b"
    start = time.perf_counter()
    assert cli_main(["loop", "--iterations", "3", "--workdir", str(a)]) == 0
    elapsed = time.perf_counter() - start
    capsys.readouterr()
    ms = Workdir(a).manifests()
    assert [m.iteration for m in ms] == [1, 2, 3] and all(m.status == COMPLETE for m in ms)
    stages = [ms[0].stats["input"]] + [m.stats["evolved"] for m in ms]
    lens = [s["mean_reasoning_length"] for s in stages]
    aux = [s["mean_aux_count"] for s in stages]
    bad = []
    retained = 0
    for m in ms:
        for r in read_jsonl(a / m.train_dataset):
            retained += 1
            if not (r.error_rate >= 0.3 and r.model_tag == m.solver_tag == f"simulated@t{m.iteration}"):
                bad.append(r.id)
    assert cli_main(["loop", "--iterations", "3", "--workdir", str(b)]) == 0
    capsys.readouterr()
    same = _datasets(a) == _datasets(b)
    record(8, f"3 iterations in {elapsed:.1f}s < 120s; mean reasoning length {[round(x, 2) for x in lens]}, "
              f"mean aux {[round(x, 2) for x in aux]} non-decreasing; {retained} retained records all >= 0.3 "
              f"under their tag; rerun identical: {same}")
    assert elapsed < 120
    assert lens == sorted(lens) and aux == sorted(aux)
    assert not bad and retained > 0 and same
    _finish(outcome)


# 9 ---------------------------------------------------------------------------------


def test_criterion_9_reward_table(report):
    record, outcome = report
    record(9, "reward verifier table")
    mismatches = []
    for raw, truth, acc, fmt, pen, total in REWARD_TABLE:
        want = RewardBreakdown(acc, fmt, pen, total, truth, max(1e-6, 1e-3 * abs(float(truth))))
        if score(raw, truth) != want:
            mismatches.append(raw)
    record(9, f"{len(REWARD_TABLE)} fixture responses (>= 15), {len(mismatches)} mismatches")
    assert len(REWARD_TABLE) >= 15 and not mismatches
    _finish(outcome)


# 10 --------------------------------------------------------------------------------

# preset -> (mode, warm start) for iterations 2.., iteration 1 is SFT+RL from the initial model
SCHEDULES = {
    "sft-rl-warm": (SFT_RL, PREVIOUS_RL),
    "rl-only-warm": (RL_ONLY, PREVIOUS_RL),
    "sft-rl-initial": (SFT_RL, INITIAL),
}


def test_criterion_10_schedule_fidelity(report, tmp_path):
    record, outcome = report
    record(10, "schedule fidelity")
    seen = {}
    for preset, (mode, warm) in SCHEDULES.items():
        cfg = LoopConfig(iterations=3, preset=preset, synthesis=SynthesisConfig(seed_size=4), workers=2)
        run_loop(cfg, tmp_path / preset)
        ms = [json.loads((tmp_path / preset / Workdir.manifest(t)).read_text()) for t in (1, 2, 3)]
        assert ms[0]["schedule"]["phases"] == ["SFT", "RL"]
        assert ms[0]["checkpoints"]["warm_start"].startswith("initial-")
        for prev, m in zip(ms, ms[1:]):
            assert m["schedule"]["mode"] == mode and m["schedule"]["warm_start"] == warm
            assert m["schedule"]["phases"] == (["SFT", "RL"] if mode == SFT_RL else ["RL"])
            source = m["checkpoints"]["warm_start"]
            assert source == (prev["checkpoints"]["RL"] if warm == PREVIOUS_RL else ms[0]["checkpoints"]["warm_start"])
            assert (m["checkpoints"]["SFT"] is None) == (mode == RL_ONLY)
        seen[preset] = ["+".join(m["schedule"]["phases"]) + "<-" + m["checkpoints"]["warm_start"].rsplit("-", 1)[0]
                        for m in ms]
    record(10, "manifests match: " + "; ".join(f"{k}: {' | '.join(v)}" for k, v in seen.items()))
    _finish(outcome)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-m", "acceptance", "-p", "no:cacheprovider"]))
