"""Acceptance criteria: each test records one PASS/FAIL line, then asserts.

Run under pytest (the lines are repeated in the terminal summary) or directly:
    python3 tests/test_acceptance.py            # print every line
    python3 tests/test_acceptance.py --regen    # rewrite tests/golden/*.csv
"""
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_metric, random_probability, record_criterion  # noqa: E402
from qmetric.algebra import (PAULI_X, PAULI_Z, AlgebraShape, Element, Morphism,  # noqa: E402
                             State)
from qmetric.bridge import (Bridge, bi_lipschitz_bound, bridge_length_bounds,  # noqa: E402
                            perturbation_bound)
from qmetric.convex import transport_lp  # noqa: E402
from qmetric.lipnorm import (DistToSubspace, NotLipschitzError,  # noqa: E402
                             check_quasi_leibniz, from_commutator, from_filtration,
                             from_group_action, from_metric, from_stddev, seminorm_eval)
from qmetric.metric import bl_distance, diameter_bounds, mk_distance  # noqa: E402
from qmetric.models import (Berezin, FiniteAbelianGroup, collapse_experiment,  # noqa: E402
                            commutator_bound_check, fejer_data, fuzzy_torus_action,
                            fuzzy_torus_convergence_experiment, fuzzy_torus_lipnorm,
                            lattice_window, uhf_filtration)
from qmetric.tunnel import (compose_tunnels, identity_tunnel, quotient_seminorm,  # noqa: E402
                            tunnel_from_bridge, tunnel_quantities)

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"
M2 = AlgebraShape([2])
X = Element(M2, [PAULI_X])
Z = Element(M2, [PAULI_Z])

GOLDEN_RUNS = {
    "commutator": ["experiment", "commutator"],
    "commutator-torus": ["experiment", "commutator", "--d", "2", "--N", "2", "--M", "2",
                         "--m", "1,-2", "--k", "11,11"],
    "collapse": ["experiment", "collapse", "--samples", "20"],
    "fejer": ["experiment", "fejer"],
    "fejer-2d": ["experiment", "fejer", "--orders", "7,9", "--radii", "0,1,2,3"],
    "fuzzy-torus": ["experiment", "fuzzy-torus"],
    "fuzzy-torus-theta": ["experiment", "fuzzy-torus", "--ns", "4,8,16,32",
                          "--theta", "0.333333333333"],
    "berezin": ["experiment", "berezin"],
}


def metric_suite(count=200, seed=11):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(3, 7))
        out.append((random_metric(rng, k), random_probability(rng, k), random_probability(rng, k)))
    return out


# ---------------------------------------------------------------------------


def test_criterion_01_kantorovich_duality():
    t0 = time.perf_counter()
    worst = 0.0
    for d, p, q in metric_suite():
        s = AlgebraShape([1] * len(p))
        got = mk_distance(from_metric(d), State.from_probabilities(s, p),
                          State.from_probabilities(s, q))
        worst = max(worst, abs(got - transport_lp(d, p, q)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt < 60
    record_criterion(1, ok, f"mk vs transport LP on 200 spaces: worst gap {worst:.2e}, "
                            f"{dt:.1f} s")
    assert ok


def test_criterion_02_dirac_isometry():
    worst = 0.0
    for d, _, _ in metric_suite():
        L = from_metric(d)
        s = L.shape
        k = d.shape[0]
        for i in range(k):
            for j in range(i + 1, k):
                got = mk_distance(L, State.dirac(s, i), State.dirac(s, j))
                worst = max(worst, abs(got - d[i, j]))
    ok = worst <= 1e-6
    record_criterion(2, ok, f"Dirac states isometric on all pairs: worst gap {worst:.2e}")
    assert ok


def test_criterion_03_bounded_lipschitz_coincidence():
    worst = 0.0
    above = 0
    for d, p, q in metric_suite():
        L = from_metric(d)
        s = L.shape
        phi, psi = State.from_probabilities(s, p), State.from_probabilities(s, q)
        r = diameter_bounds(L).upper
        mk = mk_distance(L, phi, psi)
        bl = bl_distance(L, r, phi, psi)
        worst = max(worst, abs(bl - mk))
        small = bl_distance(L, 0.25 * r, phi, psi)
        above += int(small > mk + 1e-9 or bl > mk + 1e-9)
    ok = worst <= 2e-7 and above == 0
    record_criterion(3, ok, f"bl at r = diameter equals mk: worst gap {worst:.2e}; "
                            f"bl > mk in {above} cases")
    assert ok


def test_criterion_04_leibniz_suites():
    s3 = AlgebraShape([3])
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    stages, beta = uhf_filtration(3)
    mu = State(s3, [np.diag([0.5, 0.3, 0.2])])
    suites = {
        "group action (fuzzy torus n=3)": fuzzy_torus_lipnorm(3),
        "commutator (path graph on 3 points)": from_commutator(path, Morphism.diagonal(3)),
        "filtration (UHF, k=3)": from_filtration(stages, beta),
        "standard deviation (M_3)": from_stddev(mu),
        "distance to diagonals (M_2)": DistToSubspace(M2, [M2.diag([1, 0]), M2.diag([0, 1])]),
    }
    parts = []
    ok = True
    for name, L in suites.items():
        rep = check_quasi_leibniz(L, samples=1000, seed=5)
        ok &= rep.passed and rep.samples >= 1000
        parts.append(f"{name} {rep.worst_margin:.1e}")
    record_criterion(4, ok, "F_{1,0} Leibniz, 1000 pairs each, worst margins: " + "; ".join(parts))
    assert ok


def test_criterion_05_ergodicity_gate():
    dims = {}
    for n, ps in ((2, (1,)), (3, (1, 2)), (5, (1, 2)), (7, (1, 3))):
        for p in ps:
            dims[(n, p)] = fuzzy_torus_lipnorm(n, p).kernel_dim()
    rejected = 0
    cases = [dict(n=4, p=2), dict(n=6, p=3), dict(n=5, generators="clock"),
             dict(n=5, generators="shift")]
    for kw in cases:
        try:
            fuzzy_torus_lipnorm(**kw)
        except NotLipschitzError:
            rejected += 1
    ok = all(v == 1 for v in dims.values()) and rejected == len(cases)
    record_criterion(5, ok, f"kernel dimension 1 for {len(dims)} primitive cases; "
                            f"{rejected}/{len(cases)} non-ergodic setups rejected")
    assert ok


def test_criterion_06_commutator_bound():
    count = 0
    failed = 0
    for d in (1, 2):
        ms = lattice_window(6, d)
        for N in range(1, 6):
            for M in range(1, 6):
                for m in ms:
                    count += 1
                    failed += int(not commutator_bound_check(N, M, d, m).passed)
    tight = commutator_bound_check(2, 3, 1, (1,))
    gap = max(abs(tight.computed - 1 / 3), abs(tight.bound - 1 / 3))
    ok = failed == 0 and gap <= 1e-12
    record_criterion(6, ok, f"commutator norm <= |m|/M on {count} cases ({failed} failures); "
                            f"tight case gap {gap:.1e}")
    assert ok


def sampled_bridges(count=10, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        if i % 2 == 0:
            A = from_metric(random_metric(rng, 3))
            B = from_metric(random_metric(rng, 3))
            s = A.shape
            pivot = s.diag([1.0, *rng.uniform(-1, 1, 2)])
        else:
            A = from_group_action([X, Z], list(rng.uniform(0.5, 2, 2)))
            B = from_group_action([X, Z], list(rng.uniform(0.5, 2, 2)))
            s = M2
            pivot = M2.diag([1.0, rng.uniform(-1, 1)])
        idm = Morphism.identity(s)
        out.append((Bridge(pivot, idm, idm), A, B))
    return out


def test_criterion_07_tunnel_isometry():
    worst = 0.0
    floor = -np.inf
    passed = 0
    rng = np.random.default_rng(3)
    bridges = sampled_bridges()
    for i, (g, A, B) in enumerate(bridges):
        est = bridge_length_bounds(g, A, B, directions=4, net_size=4, seed=i)["length"]
        t = tunnel_from_bridge(g, A, B, 10 * est.upper, check_samples=20, seed=i)
        worst = max(worst, t.isometry.margin_A, t.isometry.margin_B)
        passed += int(t.isometry.passed)
        for _ in range(5):
            a = A.shape.random_hermitian(rng)
            floor = max(floor, seminorm_eval(A, a) - quotient_seminorm(t, "A", a))
        floor = max(floor, t.isometry.floor_margin)
    ok = passed == len(bridges) and worst <= 1e-5 and floor <= 1e-9
    record_criterion(7, ok, f"{passed}/{len(bridges)} tunnels isometric at lambda = 10x length "
                            f"(worst margin {worst:.1e}); floor excess {floor:.1e}")
    assert ok


def sampled_tunnels():
    bridge_tunnels = []
    for i, (g, A, B) in enumerate(sampled_bridges(6, seed=9)):
        est = bridge_length_bounds(g, A, B, directions=3, net_size=3, seed=i)["length"]
        bridge_tunnels.append(tunnel_from_bridge(g, A, B, 10 * est.upper, check_samples=0))
    rng = np.random.default_rng(21)
    spaces = [from_metric(random_metric(rng, 3)) for _ in range(4)]
    unit = spaces[0].shape.unit()
    idm = Morphism.identity(spaces[0].shape)
    chain = [tunnel_from_bridge(Bridge(unit, idm, idm), spaces[k], spaces[k + 1], 1.0,
                                check_samples=0) for k in range(3)]
    composites = [compose_tunnels(chain[0], chain[1], 0.01),
                  compose_tunnels(chain[1], chain[2], 0.01),
                  compose_tunnels(compose_tunnels(chain[0], chain[1], 0.01), chain[2], 0.01),
                  compose_tunnels(identity_tunnel(spaces[0]), chain[0], 0.01)]
    return bridge_tunnels, composites


def test_criterion_08_direct_sum_depth():
    bridge_tunnels, _ = sampled_tunnels()
    depths = [tunnel_quantities(t, net_size=3)["depth"] for t in bridge_tunnels]
    ok = all(d.certified and d.lower == 0.0 and d.upper == 0.0 for d in depths)
    record_criterion(8, ok, f"depth certified 0 on {len(depths)} bridge-built tunnels")
    assert ok


def test_criterion_09_length_extent_sandwich():
    bridge_tunnels, composites = sampled_tunnels()
    tunnels = bridge_tunnels[:6] + composites
    worst_low = worst_high = -np.inf
    for t in tunnels:
        q = tunnel_quantities(t, net_size=3)
        worst_low = max(worst_low, q["length"].lower - q["extent"].lower)
        worst_high = max(worst_high, q["extent"].lower - 2 * q["length"].lower)
    ok = worst_low <= 1e-6 and worst_high <= 1e-6
    record_criterion(9, ok, f"length <= extent <= 2 length on {len(tunnels)} tunnels "
                            f"({len(composites)} composed): excesses {worst_low:.1e}, "
                            f"{worst_high:.1e}")
    assert ok


def test_criterion_10_perturbation_and_collapse():
    arith = (perturbation_bound(0.0, 3.0, 1.0, 0.4) == 0.4
             and perturbation_bound(0.1, 2.0, 2.0, 0.05) == 0.1 * 2.0
             and bi_lipschitz_bound(1.0, 3.0, 1.0) == 0.0
             and bi_lipschitz_bound(1.5, 2.0, 2.0) == 0.5 * 2.5)
    js = (1, 2, 4, 8, 16, 64, 256, 1024, 4096)
    rows = collapse_experiment(5, js=js, samples=10)
    spots = all(r.passed for r in rows)
    b = [r.bound for r in rows]
    mono = all(y <= x for x, y in zip(b, b[1:]))
    ok = arith and spots and mono and b[-1] <= 0.01
    record_criterion(10, ok, f"closed forms exact: {arith}; collapse spot checks: {spots}; "
                             f"bound {b[0]:.3g} -> {b[-1]:.2e} nonincreasing: {mono}")
    assert ok


def fourier_route_defect(G, K):
    """Defect from the inverse transform of prod(1 - |p|/(K+1)) on the box."""
    phi = np.ones(1)
    for m in G.orders:
        x = np.arange(m)
        p = np.arange(-K, K + 1)
        w = ((1 - np.abs(p) / (K + 1))[None, :] * np.exp(-2j * np.pi * np.outer(x, p) / m)).sum(1) / m
        phi = np.outer(phi, w.real).ravel()
    return float(phi @ G.length_table("torus"))


def test_criterion_11_fejer_contract():
    rng = np.random.default_rng(13)
    worst = -np.inf
    dgap = 0.0
    for n, K in ((3, 1), (5, 1), (7, 2)):
        G = FiniteAbelianGroup([n, n])
        f = fejer_data(G, [K, K])
        dgap = max(dgap, abs(f.defect() - fourier_route_defect(G, K)))
        L = fuzzy_torus_lipnorm(n)
        act = fuzzy_torus_action(n)
        for _ in range(200):
            a = AlgebraShape([n]).random_hermitian(rng)
            lhs = np.linalg.norm((a - f.apply(a, act)).to_matrix(), 2)
            worst = max(worst, lhs - f.defect() * seminorm_eval(L, a))
    rows = fuzzy_torus_convergence_experiment([3, 4, 5, 6, 7, 8], theta=0.0)
    ogap = max(abs(r[10] - r[3]) for r in rows)
    ok = worst <= 1e-8 and dgap <= 1e-12 and ogap <= 1e-8
    record_criterion(11, ok, f"contract excess {worst:.1e} over 600 elements; defect vs "
                             f"Fourier route {dgap:.1e}; commutative run vs transport LP {ogap:.1e}")
    assert ok


def test_criterion_12_berezin():
    worst = {"symbol_one": 0.0, "quantize_one": 0.0, "equivariance": 0.0}
    pos = np.inf
    for j in (0.5, 1.0, 1.5, 2.0):
        c = Berezin(j).checks(samples=5, seed=2)
        for k in worst:
            worst[k] = max(worst[k], c[k])
        pos = min(pos, c["symbol_min"], c["quantize_min"])
    ok = (worst["symbol_one"] <= 1e-12 and worst["quantize_one"] <= 1e-10
          and worst["equivariance"] <= 1e-9 and pos >= 0)
    record_criterion(12, ok, f"j in 1/2..2: symbol of 1 off by {worst['symbol_one']:.1e}, "
                             f"quantized 1 off by {worst['quantize_one']:.1e}, min positive "
                             f"value {pos:.2g}, equivariance {worst['equivariance']:.1e}")
    assert ok


def run_cli(args, threads):
    cmd = [sys.executable, "-m", "qmetric.cli", *args, "--threads", str(threads)]
    res = subprocess.run(cmd, capture_output=True, text=True, cwd=ROOT, check=False)
    return res.returncode, res.stdout


def test_criterion_13_determinism():
    mismatches = []
    for name, args in GOLDEN_RUNS.items():
        want = (GOLDEN / f"{name}.csv").read_text()
        for threads in (1, 2, 1):
            code, out = run_cli(args, threads)
            if code != 0 or out != want:
                mismatches.append(f"{name}@{threads}")
    ok = not mismatches
    record_criterion(13, ok, f"{len(GOLDEN_RUNS)} golden CSVs reproduced across runs and "
                             f"thread counts 1, 2" + (f"; mismatches: {mismatches}" if mismatches else ""))
    assert ok


def regenerate_goldens():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    for name, args in GOLDEN_RUNS.items():
        code, out = run_cli(args, 1)
        if code != 0:
            raise SystemExit(f"{name} exited with {code}")
        (GOLDEN / f"{name}.csv").write_text(out)
        print(f"wrote {name}.csv")


if __name__ == "__main__":
    if "--regen" in sys.argv:
        regenerate_goldens()
        sys.exit(0)
    failed = 0
    for key, fn in sorted(globals().items()):
        if key.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
