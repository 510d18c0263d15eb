"""Acceptance gate: one test (or a few sub-tests) per numbered criterion.

The summary at the end of the pytest run prints one PASS/FAIL line per
criterion. The localization sweep runs at tau=500 by default; set
ACTIN_ACCEPT_LOC_TAU=1000 for the full-length check.
"""

import math
import os
import time
from fractions import Fraction as Fr

import numpy as np
import pytest

from actin_automata.analysis import (
    FrequencyVector,
    fit,
    group_frequency_vectors,
    group_statistics,
    localization_groups,
    threshold_simplify,
)
from actin_automata.core import (
    AutomatonState,
    Rule,
    SpaceTimeRecord,
    all_rules,
    decode_rule,
    encode_rule,
    reflect_swap,
    run,
    step,
    step_reference,
)
from actin_automata.metrics import (
    FOOTPRINTS,
    N_PATTERNS,
    WindowHistogram,
    compute_all,
    shannon_entropy,
    simpson_diversity,
    window_histogram,
)
from actin_automata.render import render_record
from actin_automata.sweep import (
    InitSpec,
    SweepConfig,
    load_localization,
    load_metrics,
    rule_rng,
    run_localization_sweep,
    run_metrics_sweep,
)

LOC_TAU = int(os.environ.get("ACTIN_ACCEPT_LOC_TAU", "500"))
WORKERS = min(8, os.cpu_count() or 1)

TOP_TRAVELLING = [(7, 20), (5, 26), (4, 26), (5, 25), (6, 20), (8, 0), (7, 21), (8, 1),
                  (8, 24), (7, 4), (8, 16), (7, 5), (6, 21), (9, 0)]
TOP_TRAVELLING_ROWS = [
    ("00111", "10100"), ("00101", "11010"), ("00100", "11010"), ("00101", "11001"),
    ("00110", "10100"), ("01000", "00000"), ("00111", "10101"), ("01000", "00001"),
    ("01000", "11000"), ("00111", "01110"), ("01000", "10000"), ("00111", "00101"),
    ("00110", "10101"), ("01001", "00000"),
]
BOTH_KINDS_ROWS = [
    ("00100", "11010"), ("00101", "11001"), ("00111", "00100"), ("00101", "11010"),
    ("00110", "10101"), ("00111", "00101"), ("00111", "10101"),
]
IMAGE_RULES = [(7, 20), (28, 17), (10, 10), (7, 4)]


def detail(request, text):
    request.node.user_properties.append(("detail", text))


def _sweep_once(root, workers):
    cfg = SweepConfig(loc_tau=LOC_TAU, rng_seed=1, workers=workers, out_dir=str(root))
    t0 = time.perf_counter()
    run_metrics_sweep(cfg)
    t1 = time.perf_counter()
    run_localization_sweep(cfg)
    t2 = time.perf_counter()
    for c0, c1 in IMAGE_RULES:
        rule = decode_rule(c0, c1)
        state = cfg.init.build(cfg.n, rule_rng(cfg.rng_seed, rule.index))
        render_record(run(rule, state, cfg.tau), root / "images")
    return cfg, t1 - t0, t2 - t1


@pytest.fixture(scope="session")
def sweep(tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep_a")
    cfg, t_metrics, t_loc = _sweep_once(root, WORKERS)
    return {
        "dir": root,
        "config": cfg,
        "metrics": load_metrics(root),
        "loc": load_localization(root),
        "t_metrics": t_metrics,
        "t_loc": t_loc,
    }


# 1 --------------------------------------------------------------------------

@pytest.mark.criterion("1")
def test_rule_codec(request):
    t0 = time.perf_counter()
    rules = all_rules()
    ok = all(decode_rule(*encode_rule(r)) == r and r.index == k for k, r in enumerate(rules))
    distinct = len({r.f for r in rules})
    worked = decode_rule(10, 4).rows()
    elapsed = time.perf_counter() - t0
    detail(request, f"1024 roundtrips ok={ok}, distinct={distinct}, (10,4)->{worked}, {elapsed:.3f}s")
    assert ok and distinct == 1024
    assert worked == ("01010", "00100")
    assert elapsed < 1.0


# 2 --------------------------------------------------------------------------

@pytest.mark.criterion("2")
def test_stepper_oracle(request):
    g = np.random.default_rng(2024)
    mismatches = 0
    for _ in range(200):
        rule = Rule.from_index(int(g.integers(1024)))
        n = int(g.integers(1, 65))
        fast = slow = AutomatonState(g.integers(0, 2, n), g.integers(0, 2, n))
        for _ in range(50):
            fast = step(fast, rule)
            slow = step_reference(slow, rule)
            if fast != slow:
                mismatches += 1
                break
    detail(request, f"200 cases x 50 steps, mismatches={mismatches}")
    assert mismatches == 0


# 3 --------------------------------------------------------------------------

@pytest.mark.criterion("3")
def test_reflect_swap_symmetry(request):
    g = np.random.default_rng(3)
    bad = 0
    for _ in range(100):
        rule = Rule.from_index(int(g.integers(1024)))
        n = int(g.integers(1, 300))
        s = AutomatonState(g.integers(0, 2, n), g.integers(0, 2, n))
        bad += not step(reflect_swap(s), rule).same_cells(reflect_swap(step(s, rule)))
    detail(request, f"100 cases, violations={bad}")
    assert bad == 0


# 4 --------------------------------------------------------------------------

def _brute_next(x, y, f):
    n = len(x)
    g = lambda a, i: int(a[i]) if 0 <= i < n else 0  # noqa: E731
    return ([f[g(x, i)][g(x, i - 1) + g(x, i + 1) + g(y, i) + g(y, i - 1)] for i in range(n)],
            [f[g(y, i)][g(y, i - 1) + g(y, i + 1) + g(x, i) + g(x, i + 1)] for i in range(n)])


@pytest.mark.criterion("4")
def test_rule_8_0_single_cell(request):
    rule, n, i = decode_rule(8, 0), 300, 150
    x = np.zeros(n, np.uint8)
    x[i] = 1
    y = np.zeros(n, np.uint8)
    ox, oy = _brute_next(x, y, rule.f)
    expected = ({i - 1, i + 1}, {i - 1, i})
    assert (set(np.flatnonzero(ox)), set(np.flatnonzero(oy))) == expected  # oracle sanity
    s = step(AutomatonState(x, y), rule)
    got = ({int(v) for v in np.flatnonzero(s.x)}, {int(v) for v in np.flatnonzero(s.y)})
    detail(request, f"x->{sorted(got[0])}, y->{sorted(got[1])}")
    assert got == expected


# 5 --------------------------------------------------------------------------

def _brute_counts(m, mask):
    counts = np.zeros(N_PATTERNS, np.int64)
    for t in range(m.shape[0] - 2):
        for i in range(m.shape[1] - 2):
            key = int("".join(str(int(v)) for v in m[t:t + 3, i:i + 3].ravel()), 2) & mask
            if key:
                counts[key] += 1
    return counts


@pytest.mark.criterion("5")
def test_metric_oracles(request):
    c = np.zeros(N_PATTERNS, np.int64)
    c[[3, 200]] = 17
    h = WindowHistogram(c)
    dh = abs(shannon_entropy(h) - math.log(2))
    dd = abs(simpson_diversity(h) - 0.5)
    # a record whose windows are two equiprobable types: vertical stripes
    m = np.zeros((5, 4), np.uint8)
    m[:, 1] = 1
    stripes = window_histogram(SpaceTimeRecord(m, m, decode_rule(0, 0)), footprint="full")
    dh2 = abs(shannon_entropy(stripes) - math.log(2))
    g = np.random.default_rng(5)
    checked = mismatched = 0
    for n in range(3, 9):
        for tau in range(2, 9):
            for _ in range(6):
                rec = SpaceTimeRecord(g.integers(0, 2, (tau + 1, n)), g.integers(0, 2, (tau + 1, n)),
                                      decode_rule(0, 0))
                for fp, mask in FOOTPRINTS.items():
                    for chain in ("x", "y"):
                        checked += 1
                        mismatched += not np.array_equal(window_histogram(rec, chain, fp).counts,
                                                         _brute_counts(rec.chain(chain), mask))
    detail(request, f"|H-ln2|={dh:.1e}, |D-0.5|={dd:.1e}, stripes |H-ln2|={dh2:.1e}, "
                    f"recount {checked - mismatched}/{checked}")
    assert dh <= 1e-12 and dd <= 1e-12 and dh2 <= 1e-12
    assert mismatched == 0


# 6 --------------------------------------------------------------------------

@pytest.mark.criterion("6")
def test_paper_values(request):
    t0 = time.perf_counter()
    init = InitSpec()

    def averaged(code):
        rule = decode_rule(*code)
        ms = [compute_all(run(rule, init.build(300, rule_rng(s, rule.index)), 1000)) for s in range(1, 6)]
        return {k: float(np.mean([getattr(m, k) for m in ms])) for k in ("H", "D", "R")}

    a = averaged((10, 10))
    b = averaged((7, 20))
    elapsed = time.perf_counter() - t0
    detail(request, f"H(10,10)={a['H']:.3f}; (7,20) H={b['H']:.3f} D={b['D']:.4f} R={b['R']:.4f}; "
                    f"{elapsed:.1f}s")
    assert abs(a["H"] - 4.8) <= 0.3
    assert abs(b["H"] - 4.31) <= 0.3
    assert abs(b["D"] - 0.98) <= 0.03
    assert abs(b["R"] - 0.22) <= 0.05
    assert elapsed < 60


# 7 --------------------------------------------------------------------------

@pytest.mark.criterion("7a")
def test_no_localization_fraction(request, sweep):
    loc = sweep["loc"]
    frac = sum(v == (0, 0) for v in loc.values()) / len(loc)
    detail(request, f"T=S=0 fraction {frac:.3f} (target 0.69 +- 0.10, tau={LOC_TAU})")
    assert len(loc) == 1024
    assert abs(frac - 0.69) <= 0.10


@pytest.mark.criterion("7b")
def test_top_travelling_overlap(request, sweep):
    loc = sweep["loc"]
    ranked = sorted((r for r in loc if loc[r][0] > 0), key=lambda r: (-loc[r][0], r.index))
    top = {r.codes for r in ranked[:20]}
    overlap = top & set(TOP_TRAVELLING)
    detail(request, f"{len(overlap)}/14 in top 20 ({len(ranked)} rules with T>0): "
                    + " ".join(f"({a},{b})" for a, b in sorted(overlap)))
    assert len(overlap) >= 8


@pytest.mark.criterion("7c")
def test_rule_7_20_travelling_count(request, sweep):
    T = sweep["loc"][decode_rule(7, 20)][0]
    detail(request, f"T(7,20)={T} (target 271 +- 30%)")
    assert abs(T - 271) <= 0.3 * 271


@pytest.mark.criterion("7d")
def test_localization_runtime(request, sweep):
    limit = 600 if LOC_TAU <= 500 else 1800
    detail(request, f"{sweep['t_loc']:.0f}s at tau={LOC_TAU} on {WORKERS} worker(s), limit {limit}s")
    assert sweep["t_loc"] < limit


# 8 --------------------------------------------------------------------------

@pytest.mark.criterion("8")
def test_v_vectors(request):
    f = lambda *xs: tuple(Fr(x) for x in xs)  # noqa: E731
    t0, t1 = group_frequency_vectors([Rule.from_rows(*r) for r in TOP_TRAVELLING_ROWS])
    b0, b1 = group_frequency_vectors([Rule.from_rows(*r) for r in BOTH_KINDS_ROWS])
    s0 = FrequencyVector(f(0, 0, "15/39", "20/39", "19/39"), 0, 39)
    s1 = FrequencyVector(f("27/39", "27/39", "30/39", "21/39", "19/39"), 1, 39)
    simplified = [threshold_simplify(v, 0.5) for v in (t0, t1, s0, s1, b0, b1)]
    detail(request, "travelling V0=" + ",".join(map(str, t0.values))
           + " V1=" + ",".join(map(str, t1.values)) + "; both V0=" + ",".join(map(str, b0.values))
           + " V1=" + ",".join(map(str, b1.values)) + "; *V=" + " ".join("".join(map(str, s)) for s in simplified))
    assert t0.values == f(0, "5/14", "9/14", "6/14", "7/14")
    assert t1.values == f("9/14", "5/14", "6/14", "3/14", "5/14")
    assert b0.values == f(0, 0, 1, "4/7", "5/7")
    assert b1.values == f("5/7", "3/7", "4/7", "2/7", "4/7")
    assert simplified == [(0, 0, 1, 0, 1), (1, 0, 0, 0, 0), (0, 0, 0, 1, 0), (1, 1, 1, 1, 0),
                          (0, 0, 1, 1, 1), (1, 0, 1, 0, 1)]


# 9 --------------------------------------------------------------------------

@pytest.mark.criterion("9")
def test_group_statistics(request, sweep):
    groups = localization_groups(sweep["loc"])
    stats = {s.label: s for s in group_statistics(
        {"all": groups["all"], "travelling": groups["travelling"]}, sweep["metrics"])}
    h_all, h_trav = stats["all"].mean["H"], stats["travelling"].mean["H"]
    detail(request, f"mean H all={h_all:.3f} (2.8 +- 0.4), travelling={h_trav:.3f} "
                    f"(3.6 +- 0.4, {stats['travelling'].size} rules)")
    assert abs(h_all - 2.8) <= 0.4
    assert abs(h_trav - 3.6) <= 0.4


# 10 -------------------------------------------------------------------------

@pytest.mark.criterion("10")
def test_log_fit(request, sweep):
    pairs = np.array([(m["H"], m["D"]) for m in sweep["metrics"].values() if m["H"] > 0])
    f = fit(pairs[:, 0], pairs[:, 1], "log")
    X, r = f.design, f.residuals
    ortho = np.abs(X.T @ r) / (np.linalg.norm(X, axis=0) * np.linalg.norm(pairs[:, 1]))
    detail(request, f"D = {f.coefficients[1]:.3f} ln H + {f.coefficients[0]:.3f}, "
                    f"R^2={f.r_squared:.4f} over {len(pairs)} rules, orthogonality {ortho.max():.1e}")
    assert f.r_squared >= 0.85
    assert ortho.max() <= 1e-9


# 11 -------------------------------------------------------------------------

@pytest.mark.criterion("11")
def test_determinism(request, sweep, tmp_path_factory):
    root = tmp_path_factory.mktemp("sweep_b")
    _sweep_once(root, max(2, WORKERS))
    a, b = sweep["dir"], root
    names = ["metrics.csv", "localization.csv"] + [
        f"images/{p.name}" for p in sorted((a / "images").iterdir())]
    differ = [name for name in names if (a / name).read_bytes() != (b / name).read_bytes()]
    detail(request, f"{len(names)} files compared, {len(differ)} differ")
    assert len(names) == 2 + 3 * len(IMAGE_RULES)
    assert not differ
