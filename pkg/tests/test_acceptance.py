"""Acceptance suite: one test per criterion, each reporting a pass/fail line."""

import itertools
import random
import time
from contextlib import contextmanager

import pytest
from conftest import closed_corpus

from prsmc.altl import LassoRun, Not, desugar, eval_formula, negate_to_dnf, show
from prsmc.construct import build_parallel_mbrs, reachable_rules, saturation_gaps
from prsmc.decide import Decider, model_check_infinite, problem1, problem2
from prsmc.gen import random_formula, random_mbrs
from prsmc.oracle import explore, bf_finite_accepting, bf_infinite_accepting, bf_model_check, bf_reachable
from prsmc.par_engine import km_reachable, par_finite_accepting, par_reach_empty, par_reach_var
from prsmc.system import Lasso, check_derivation, inf_maximal, interleavings, maximal, subsets
from prsmc.terms import ZF, var
from prsmc.witness import check_lasso, check_witness, witness_maxima

CORPUS_SEED = 2024
CORPUS_SIZE = 200
NODE_BUDGET = 5000
DEPTH_BUDGET = 12
FORMULAS_PER_SYSTEM = 2


@contextmanager
def criterion(report, number, title, limit=None):
    """Time a criterion and record one PASS/FAIL line for it."""
    info = {}
    t0 = time.perf_counter()
    try:
        yield info
        elapsed = time.perf_counter() - t0 + info.get("extra_time", 0.0)
        if limit is not None:
            assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
    except Exception as exc:
        elapsed = time.perf_counter() - t0 + info.get("extra_time", 0.0)
        first = (str(exc).splitlines() or [type(exc).__name__])[0]
        report.append(f"criterion {number}: FAIL  {title} ({elapsed:.1f}s) {first}")
        raise
    report.append(f"criterion {number}: PASS  {title} ({elapsed:.1f}s) {info.get('detail', '')}".rstrip())


# ----------------------------------------------------------- 1: rule-set algebra


def test_1_component_set_algebra(acceptance_report):
    rng = random.Random(1)
    with criterion(acceptance_report, 1, "maximal / infinite-maximal algebra", limit=10) as info:
        failures, cases = [], 0
        while cases < 1000:
            m = random_mbrs(rng, max_components=4)
            ids = [r.id for r in m.rules]
            for _ in range(10):
                cases += 1
                sigma = tuple(rng.choice(ids) for _ in range(rng.randint(0, 6)))
                cycle = tuple(rng.choice(ids) for _ in range(rng.randint(1, 4)))
                whole = maximal(m, sigma)
                # a finite sequence touches nothing infinitely often
                if inf_maximal(m, Lasso(sigma, ())) != frozenset():
                    failures.append(("finite", sigma))
                # subsequences touch less
                mask = [rng.random() < 0.5 for _ in sigma]
                sub = tuple(r for r, keep in zip(sigma, mask) if keep)
                if not maximal(m, sub) <= whole:
                    failures.append(("subsequence", sigma, sub))
                csub = tuple(r for r in cycle if rng.random() < 0.5) or cycle[:1]
                if not inf_maximal(m, Lasso(sigma, csub)) <= inf_maximal(m, Lasso(sigma, cycle)):
                    failures.append(("cycle subsequence", cycle, csub))
                # every interleaving touches the union
                a, b = sigma[:4], cycle[:4]
                for lam in interleavings(a, b):
                    if maximal(m, lam) != maximal(m, a) | maximal(m, b):
                        failures.append(("interleaving", a, b, lam))
                    if inf_maximal(m, Lasso((), lam)) != maximal(m, a) | maximal(m, b):
                        failures.append(("cycle interleaving", a, b, lam))
                # order does not matter
                perm = list(sigma)
                rng.shuffle(perm)
                if maximal(m, perm) != whole:
                    failures.append(("reorder", sigma, perm))
                rot = rng.randrange(len(cycle))
                if inf_maximal(m, Lasso(sigma, cycle[rot:] + cycle[:rot])) != inf_maximal(m, Lasso(sigma, cycle)):
                    failures.append(("rotation", cycle))
        info["detail"] = f"{cases} sequences and lassos, {len(failures)} failures"
        assert not failures, failures[:3]


# ------------------------------------------------------- 2: negation normal form


def test_2_negation_normal_form(acceptance_report):
    rng = random.Random(2)
    with criterion(acceptance_report, 2, "negation splits into fragment disjuncts") as info:
        failures = []
        for i in range(600):
            phi = random_formula(rng, "abc", rng.randint(2, 4))
            run = LassoRun(tuple(rng.choice("abcd") for _ in range(rng.randint(0, 5))),
                           tuple(rng.choice("abcd") for _ in range(rng.randint(1, 5))))
            direct = eval_formula(desugar(Not(phi)), run)
            split = any(eval_formula(d.as_formula(), run) for d in negate_to_dnf(phi))
            if direct != split:
                failures.append((show(phi), run))
        info["detail"] = f"600 formula/run pairs, {len(failures)} failures"
        assert not failures, failures[:3]


# --------------------------------------------------- 3-6: engine vs. oracle


@pytest.fixture(scope="module")
def differential():
    """Run every engine-vs-oracle comparison once over the shared corpus."""
    t0 = time.perf_counter()
    corpus = closed_corpus(CORPUS_SEED, CORPUS_SIZE, NODE_BUDGET)
    filtering = time.perf_counter() - t0
    rng = random.Random(CORPUS_SEED + 1)
    out = {c: {"checked": 0, "bad": [], "time": 0.0} for c in (3, 4, 5)}
    witnesses = []
    for idx, m in enumerate(corpus):
        d = Decider(reachable_rules(m, "X"), NODE_BUDGET)
        for k in subsets(range(1, m.n + 1)):
            t0 = time.perf_counter()
            ref = bf_finite_accepting(m, "X", k, DEPTH_BUDGET, NODE_BUDGET)
            if not ref.unknown:
                v = d.problem1("X", k)
                out[3]["checked"] += 1
                if v.kind != ref.kind:
                    out[3]["bad"].append((idx, "problem1", sorted(k), v.kind, ref.kind))
                if v.yes:
                    witnesses.append((m, "finite", k, None, v))
            out[3]["time"] += time.perf_counter() - t0
            for kw in subsets(k):
                t0 = time.perf_counter()
                ref = bf_infinite_accepting(m, "X", k, kw, NODE_BUDGET)
                v = d.problem2("X", k, kw)
                out[4]["checked"] += 1
                if v.kind != ref.kind:
                    out[4]["bad"].append((idx, "problem2", sorted(k), sorted(kw), v.kind, ref.kind))
                if v.yes:
                    witnesses.append((m, "infinite", k, kw, v))
                out[4]["time"] += time.perf_counter() - t0
        actions = sorted(a.name for a in m.alphabet)
        for _ in range(FORMULAS_PER_SYSTEM):
            phi = random_formula(rng, actions, 4)
            t0 = time.perf_counter()
            ref = bf_model_check(m, "X", phi, NODE_BUDGET)
            v = model_check_infinite(m, "X", phi, NODE_BUDGET)
            out[5]["checked"] += 1
            if v.kind != ref.kind:
                out[5]["bad"].append((idx, show(phi), v.kind, ref.kind))
            if v.no:
                witnesses.append((m, "counterexample", phi, None, v))
            out[5]["time"] += time.perf_counter() - t0
    # criteria 3 and 4 both rest on the closed-graph filter
    out[3]["time"] += filtering
    out[4]["time"] += filtering
    out["systems"] = len(corpus)
    out["witnesses"] = witnesses
    return out


def _engine_criterion(report, differential, number, title, limit, minimum):
    r = differential[number]
    with criterion(report, number, title, limit) as info:
        info["extra_time"] = r["time"]
        info["detail"] = f"{differential['systems']} systems, {r['checked']} comparisons, {len(r['bad'])} disagreements"
        assert differential["systems"] >= minimum
        assert not r["bad"], r["bad"][:3]


def test_3_finite_acceptance(acceptance_report, differential):
    _engine_criterion(acceptance_report, differential, 3, "finite acceptance agrees with the oracle", 60, 200)


def test_4_infinite_acceptance(acceptance_report, differential):
    _engine_criterion(acceptance_report, differential, 4, "infinite acceptance agrees with the oracle", 120, 100)


def test_5_model_checking(acceptance_report, differential):
    _engine_criterion(acceptance_report, differential, 5, "model checking agrees with the oracle", None, 1)
    assert differential[5]["checked"] >= 300


def _unbounded_witnesses(count):
    """Infinite-acceptance witnesses on systems whose state space is unbounded."""
    rng = random.Random(6)
    out, systems = [], 0
    while systems < count:
        m = random_mbrs(rng, p_push=0.1, p_pop=0.05)
        if explore(m, var("X"), 2000).closed:
            continue
        systems += 1
        d = Decider(reachable_rules(m, "X"), NODE_BUDGET)
        for k in subsets(range(1, m.n + 1)):
            for kw in subsets(k):
                v = d.problem2("X", k, kw)
                if v.yes:
                    out.append((m, "infinite", k, kw, v))
    return out


def test_6_witnesses_replay(acceptance_report, differential):
    with criterion(acceptance_report, 6, "every Yes witness replays") as info:
        failures, pumped = [], 0
        witnesses = differential["witnesses"] + _unbounded_witnesses(25)
        for m, kind, a, b, v in witnesses:
            try:
                w = v.witness
                if w is None:
                    raise ValueError("no witness")
                check_witness(m, w)
                match kind:
                    case "finite":
                        check_derivation(m, w)
                        assert maximal(m, w.rules) == a
                    case "infinite":
                        check_lasso(m, w, pumps=3)
                        pumped += not w.exact
                        assert witness_maxima(m, w) == (a, b)
                    case "counterexample":
                        check_lasso(m, w, pumps=3)
                        run = LassoRun(tuple(m.rule(r).label.name for r in w.stem.rules),
                                       tuple(m.rule(r).label.name for r in w.cycle.rules))
                        assert not eval_formula(desugar(a), run)
            except (ValueError, AssertionError) as exc:
                failures.append((kind, str(exc)))
        info["detail"] = f"{len(witnesses)} witnesses ({pumped} pumped 3 times), {len(failures)} failures"
        assert not failures, failures[:3]


# ----------------------------------------------------- 7: construction closure


def _closure_failures(m, k):
    cm = build_parallel_mbrs(m, k, NODE_BUDGET)
    if cm.undersaturated:
        return cm, ["under-saturated"]
    out = []
    mp, base = cm.mbrs, m
    # every parallel rule of the input is kept with its components
    for r in base.rules:
        if r.is_par and (r.id not in mp.by_id or mp.cmp[r.id] != base.cmp[r.id]):
            out.append(f"parallel rule {r.id} lost")
    # closure, re-queried through the per-query procedures
    keys = {(r.lhs, r.label.k, r.rhs) for r in cm.added}
    for r in base.rules:
        if r.shape != "push" or not base.cmp[r.id] <= k:
            continue
        x, head, z = r.lhs[0].head, r.rhs[0].head, r.rhs[0].tail[0].head
        for k2 in subsets(k):
            kk = base.cmp[r.id] | k2
            if par_finite_accepting(mp, z, k2, NODE_BUDGET).yes and (var(x), kk, var(ZF)) not in keys:
                out.append(f"missing residue rule {x} {sorted(kk)}")
            if par_reach_empty(mp, z, k2, NODE_BUDGET).yes and (var(x), kk, var(head)) not in keys:
                out.append(f"missing empty rule {x} {sorted(kk)} {head}")
        for p in base.rules:
            if p.shape != "pop" or p.lhs[0].head != head or not base.cmp[p.id] <= k:
                continue
            w, u = p.lhs[0].tail[0].head, p.rhs[0].head
            for k3 in subsets(k):
                kk = base.cmp[r.id] | base.cmp[p.id] | k3
                if par_reach_var(mp, z, w, k3, NODE_BUDGET).yes and (var(x), kk, var(u)) not in keys:
                    out.append(f"missing pop rule {x} {sorted(kk)} {u}")
    # fixpoint under re-saturation
    if saturation_gaps(cm, NODE_BUDGET):
        out.append("not a fixpoint")
    # every added rule stands for a nonempty run of the input with that label
    for r in cm.added:
        d, _ = cm.expansion(r.id)
        try:
            check_derivation(base, d)
        except ValueError as exc:
            out.append(f"{r.id} expansion: {exc}")
            continue
        if not d.rules or d.start != r.lhs or maximal(base, d.rules) != mp.cmp[r.id] or mp.cmp[r.id] != r.label.k:
            out.append(f"{r.id} expansion mismatch")
        if r.rhs != var(ZF) and d.end != r.rhs:
            out.append(f"{r.id} expansion ends in {d.end}")
    return cm, out


def test_7_construction_closure(acceptance_report):
    rng = random.Random(7)
    with criterion(acceptance_report, 7, "parallel summary is closed and sound") as info:
        failures, systems, added = [], 0, 0
        while systems < 200:
            m = random_mbrs(rng, p_push=0.3, p_pop=0.2)
            systems += 1
            for k in subsets(range(1, m.n + 1)):
                cm, fails = _closure_failures(m, k)
                failures += [(systems, sorted(k), f) for f in fails]
                added += len(cm.added)
        info["detail"] = f"{systems} systems, {added} added rules, {len(failures)} failures"
        assert not failures, failures[:3]


# ------------------------------------------------------ 8: Karp-Miller soundness


def test_8_karp_miller_nodes_reachable(acceptance_report):
    rng = random.Random(8)
    with criterion(acceptance_report, 8, "omega-free Karp-Miller nodes are reachable") as info:
        failures, systems, nodes, tried = [], 0, 0, 0
        while systems < 100 and tried < 1000:
            tried += 1
            m = random_mbrs(rng, p_push=0.0, p_pop=0.0)
            km = km_reachable(m, "X", 2000)
            if not km.complete:
                continue
            systems += 1
            for i, (vec, _) in enumerate(km.nodes):
                if any(x == float("inf") for x in vec):
                    continue
                depth, j = 0, i
                while km.parent[j] is not None:
                    j, depth = km.parent[j], depth + 1
                nodes += 1
                v = bf_reachable(m, "X", km.net.term(vec), depth, 200000)
                if not v.yes:
                    failures.append((systems, km.net.term(vec), v.kind))
        info["detail"] = f"{systems} systems, {nodes} omega-free nodes, {len(failures)} failures"
        assert systems >= 100
        assert not failures, failures[:3]


# --------------------------------------------------------------- 9: fixtures


FIXTURE_FINITE = {
    "s1": {(): "Yes", (1,): "Yes", (2,): "No", (1, 2): "Yes"},
    "s1p": {(): "Yes", (1,): "Yes", (2,): "No", (1, 2): "Yes"},
    "s2": {(): "Yes", (1,): "Yes"},
}
FIXTURE_INFINITE = {
    "s1": {((1, 2), (1, 2))},
    "s1p": {((1,), ()), ((1, 2), ()), ((1, 2), (1, 2))},
    "s2": {((), ()), ((1,), ()), ((1,), (1,))},
}
S1_PARALLEL = {
    "r1 : X -a-> Y", "r3 : Z -c-> eps", "r5 : W -d-> X",
    "_k1 : Y -{1}-> _ZF", "_k2 : Y -{1,2}-> _ZF", "_k3 : Y -{1,2}-> W",
}
S1_SEQUENTIAL = {
    "r2 : Y -b-> W.(Z)",
    "_s1 : W -{1,2}-> W", "_s2 : W -{}-> X", "_s3 : W -{1,2}-> X", "_s4 : W -{}-> Y",
    "_s5 : W -{1,2}-> Y", "_s6 : X -{1,2}-> W", "_s7 : X -{1,2}-> X", "_s8 : X -{}-> Y",
    "_s9 : X -{1,2}-> Y", "_s10 : Y -{1,2}-> W", "_s11 : Y -{1,2}-> X", "_s12 : Y -{1,2}-> Y",
}


def test_9_fixtures(acceptance_report, request):
    from prsmc.altl import parse_formula

    with criterion(acceptance_report, 9, "named examples reproduce", limit=5) as info:
        checked = 0
        for name in FIXTURE_FINITE:
            m = request.getfixturevalue(name)
            for k, want in FIXTURE_FINITE[name].items():
                assert problem1(m, "X", k).kind == want, (name, k)
                checked += 1
            got = {(k, kw) for k in map(tuple, map(sorted, subsets(range(1, m.n + 1))))
                   for kw in map(tuple, map(sorted, subsets(k)))
                   if problem2(m, "X", k, kw).yes}
            assert got == FIXTURE_INFINITE[name], name
            checked += len(list(itertools.chain.from_iterable(subsets(k) for k in subsets(range(1, m.n + 1)))))
        s1, s1p = request.getfixturevalue("s1"), request.getfixturevalue("s1p")
        d = Decider(s1)
        assert {str(r) for r in d.mk({1, 2}).mbrs.rules} == S1_PARALLEL
        assert {str(r) for r in d.seq_system({1, 2}).mbrs.rules} == S1_SEQUENTIAL
        gf_b = parse_formula("GF <b>")
        assert model_check_infinite(s1, "X", gf_b).yes
        v = model_check_infinite(s1p, "X", gf_b)
        assert v.no and v.witness.cycle.rules == ("r6",)
        info["detail"] = f"{checked + 4} pinned values"
