"""Acceptance gate: eleven exact criteria, one pass/fail line each.

Every criterion prints `criterion NN <label>: PASS` (or FAIL) and
enforces its wall-clock budget.  All comparisons are exact rational
equalities; there are no tolerances.
"""

import random
import time
from fractions import Fraction
from math import comb

import pytest

from planarprop.algebras import GradedTarget, dual_numbers, kxk, m2
from planarprop.families import (
    from_derivations,
    lift_derivation,
    pullback,
    r_map,
    surjectivity_probe,
    units_inserted,
    validate_aut,
)
from planarprop.graphs import Corolla, NotPlanar, PlanarGraph, hcomp_graph, vcomp_graph
from planarprop.linalg import Matrix
from planarprop.operators import (
    DiffOperator,
    bullet_v,
    check_leibniz,
    check_mP,
    compose_D,
    degeneracy,
    h_compose,
    is_totally_positive,
    mult_operator,
    one_operator,
    solve_Dn,
    symbol_exactness,
    unit_operator,
    v_compose,
)
from planarprop.ordinals import MonotoneMap, all_epis, all_monotone_maps, compose, star_dual
from planarprop.partitions import OrderedPartition, count_partitions, enumerate_partitions, lift_output_type
from planarprop.props import EndProp, Gen, HComp, PropExpr, Unit, VComp, arity, braid_check, eval_expr, eval_nf, normalize


class Budget:
    def __init__(self, number: int, label: str, seconds: float):
        self.number = number
        self.label = label
        self.seconds = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        status = "PASS" if exc_type is None and elapsed < self.seconds else "FAIL"
        print(f"criterion {self.number:02d} {self.label}: {status} ({elapsed:.2f}s)")
        if exc_type is None:
            assert elapsed < self.seconds, f"budget {self.seconds}s exceeded: {elapsed:.2f}s"
        return False


def test_criterion_01_counting_oracles():
    with Budget(1, "partition and surjection counts", 1.0):
        for n in range(8):
            for d in range(1, 8):
                assert count_partitions(n, d) == comb(n + d - 1, d - 1)
                assert len(enumerate_partitions(n, d)) == comb(n + d - 1, d - 1)
                if n >= 1:
                    assert len(enumerate_partitions(n, d, nondegenerate_only=True)) == comb(n - 1, d - 1)
        for p in range(1, 7):
            for q in range(1, 8 - p + 1):
                for mu in all_monotone_maps(p - 1, q):
                    assert star_dual(star_dual(mu)) == mu
        for m in range(1, 8):
            for n in range(1, m + 1):
                assert len(list(all_epis(m, n))) == comb(m - 1, n - 1)


def test_criterion_02_output_type_lift():
    with Budget(2, "output type lift", 1.0):
        pi = OrderedPartition((3,))
        rho = OrderedPartition((1, 3, 2)).to_map()
        assert lift_output_type(pi, rho) == OrderedPartition((2, 1, 2, 1))
        for q in range(1, 6):
            unit_type = OrderedPartition((1,) * q)
            for qp in range(q, 7):
                for rho in all_epis(qp, q):
                    assert lift_output_type(unit_type, rho) == OrderedPartition((1,) * qp)


def _random_typed_expr(rng, atoms) -> PropExpr:
    def build(depth):
        if depth == 0:
            return rng.choice(atoms) if rng.random() < 0.8 else Unit()
        a = build(depth - 1)
        b = build(depth - 1)
        am, an = arity(a)
        bm, bn = arity(b)
        if an == bm and rng.random() < 0.5:
            return VComp(a, b)
        if am + bm <= 3 and an + bn <= 3:
            return HComp(a, b)
        return a

    return build(rng.randint(1, 3))


def test_criterion_03_normal_form_soundness():
    with Budget(3, "normal form soundness", 30.0):
        rng = random.Random(2024)
        P = EndProp(2)
        atoms = [Gen(f"g{i}", rng.randint(1, 2), rng.randint(1, 2)) for i in range(4)]
        labels = {
            g.name: P.element(
                g.n_out,
                g.n_in,
                Matrix(
                    [
                        [Fraction(rng.randint(-3, 3)) for _ in range(2**g.n_in)]
                        for _ in range(2**g.n_out)
                    ]
                ),
            )
            for g in atoms
        }
        for _ in range(220):
            e = _random_typed_expr(rng, atoms)
            nf = normalize(e)
            assert P.equal(eval_expr(e, P, labels), eval_nf(nf, P, labels))


def _random_composite(rng, max_vertices=6) -> PlanarGraph:
    G = PlanarGraph.corolla(rng.randint(1, 3), rng.randint(1, 3))
    while len(G.vertices) < max_vertices:
        v = rng.randrange(len(G.vertices))
        cor = G.vertices[v]
        if rng.random() < 0.5:
            k = rng.randint(1, 3)
            inner = vcomp_graph(Corolla(k, cor.n_out), Corolla(cor.n_in, k))
        else:
            if cor.n_in < 2 or cor.n_out < 2:
                continue
            i1 = rng.randint(1, cor.n_in - 1)
            o1 = rng.randint(1, cor.n_out - 1)
            inner = hcomp_graph(Corolla(i1, o1), Corolla(cor.n_in - i1, cor.n_out - o1))
        G = G.substitute(v, inner)
    return G


def test_criterion_04_level_embedding():
    with Budget(4, "level embedding and genus", 10.0):
        rng = random.Random(77)
        for _ in range(60):
            G = _random_composite(rng)
            order, layers, _ = G.level_embed()
            assert sorted(order) == list(range(len(G.vertices)))
            pos = {v: k for k, v in enumerate(order)}
            for (src, _, _), (dst, _, _) in G.edges:
                assert pos[src] > pos[dst]
        crossing = PlanarGraph(
            vertices=[Corolla(1, 1)] * 4,
            edges=[((2, "out", 1), (1, "in", 1)), ((3, "out", 1), (0, "in", 1))],
            graph_inputs=[(2, "in", 1), (3, "in", 1)],
            graph_outputs=[(0, "out", 1), (1, "out", 1)],
        )
        with pytest.raises(NotPlanar):
            crossing.level_embed(backtrack=True)
        assert hcomp_graph(Corolla(1, 1), Corolla(1, 1)).genus() == -1
        for p in range(1, 5):
            assert vcomp_graph(Corolla(p, 1), Corolla(1, p)).genus() == p - 1


def _derivation_dim_oracle(A) -> int:
    a = A.dim
    rows = []
    for i in range(a):
        for j in range(a):
            prod = A.mul_vec(A.basis_vec(i), A.basis_vec(j))
            lm = A.left_mult(A.basis_vec(i))
            rm = A.right_mult(A.basis_vec(j))
            for k in range(a):
                row = [Fraction(0)] * (a * a)
                for l in range(a):
                    row[k * a + l] += prod[l]
                for r in range(a):
                    row[r * a + j] -= lm.rows[k][r]
                    row[r * a + i] -= rm.rows[k][r]
                rows.append(row)
    return a * a - Matrix(rows).rank()


def test_criterion_05_operator_spaces():
    with Budget(5, "first and second order operator spaces", 60.0):
        expected = {dual_numbers: 1, kxk: 0, m2: 3}
        for maker, dim in expected.items():
            A = maker()
            B = GradedTarget(A)
            basis = solve_Dn(B, 1, 0)
            assert len(basis) == dim == _derivation_dim_oracle(A)
            a = A.dim
            mm = A.mult_matrix()
            for P in solve_Dn(B, 2, 0):
                P2 = P.block((2,), (0,)) or Matrix.zeros(a, a)
                P11 = P.block((1, 1), (0, 0)) or Matrix.zeros(a * a, a * a)
                for i in range(a):
                    for j in range(a):
                        x, y = A.basis_vec(i), A.basis_vec(j)
                        lhs = P2.apply(A.mul_vec(x, y))
                        t1 = A.right_mult(y).apply(P2.apply(list(x)))
                        t2 = A.left_mult(x).apply(P2.apply(list(y)))
                        t3 = mm.apply(P11.apply([xi * yj for xi in x for yj in y]))
                        assert lhs == [u + v + w for u, v, w in zip(t1, t2, t3)]


def test_criterion_06_collapse_and_composition():
    with Budget(6, "collapse identities and composition algebra", 120.0):
        for maker in (dual_numbers, kxk):
            B = GradedTarget(maker())
            for n in range(1, 4):
                for P in solve_Dn(B, n, 0):
                    for d in range(1, n + 2):
                        assert check_mP(P, d)
        B = GradedTarget(m2())
        for n in range(1, 3):
            for P in solve_Dn(B, n, 0):
                for d in range(1, n + 2):
                    assert check_mP(P, d)
        rng = random.Random(6)
        B = GradedTarget(dual_numbers())
        pool = solve_Dn(B, 1, 0) + solve_Dn(B, 2, 0)
        for _ in range(55):
            a, b, c = (rng.choice(pool) for _ in range(3))
            ab = compose_D(a, b)
            assert check_leibniz(ab)
            assert compose_D(ab, c) == compose_D(a, compose_D(b, c))


def test_criterion_07_prop_axioms():
    with Budget(7, "planar prop axioms", 120.0):
        rng = random.Random(7)
        for maker in (dual_numbers, kxk):
            B = GradedTarget(maker())
            pool = solve_Dn(B, 1, 0) + solve_Dn(B, 2, 0) + [unit_operator(B), unit_operator(B, 2)]
            for P in pool:
                q = len(P.shape)
                assert v_compose(P, unit_operator(B, q)) == P
                assert v_compose(unit_operator(B, q), P) == P
                assert h_compose(P, one_operator(B)) == P
                assert h_compose(one_operator(B), P) == P
            for _ in range(30):
                a = rng.choice(pool)
                b = rng.choice(pool)
                qa, qb = len(a.shape), len(b.shape)
                lhs = v_compose(
                    h_compose(a, unit_operator(B, qb)),
                    h_compose(unit_operator(B, qa), b),
                )
                assert lhs == h_compose(a, b)


def test_criterion_08_modular_structure():
    with Budget(8, "genus additivity and positive subprop", 30.0):
        B = GradedTarget(dual_numbers())
        pool = solve_Dn(B, 1, 0) + solve_Dn(B, 2, 0)
        for a in pool:
            for b in pool:
                assert h_compose(a, b).genus() == a.genus() + b.genus() - 1
        m = mult_operator(B)
        for Q in pool:
            for (_, _), t in bullet_v(Q, m).terms.items():
                assert t.genus() == Q.genus() + m.genus() + (m.out_label - 1)
        positive = [P for P in pool if is_totally_positive(P)]
        assert positive
        for a in positive:
            for b in positive:
                assert is_totally_positive(h_compose(a, b))
                if len(a.shape) == len(b.shape):
                    assert is_totally_positive(v_compose(a, b))


def test_criterion_09_degeneracies_and_exactness():
    with Budget(9, "degeneracy calculus and symbol exactness", 600.0):
        B = GradedTarget(m2())
        for n in (1, 2):
            for P in solve_Dn(B, n, 0):
                for mm in range(n, 5):
                    for sigma in all_epis(mm, n):
                        for k in range(mm, 5):
                            for tau in all_epis(k, mm):
                                assert degeneracy(tau, degeneracy(sigma, P)) == degeneracy(
                                    compose(sigma, tau), P
                                )
        res = symbol_exactness(B, 2, 0)
        assert res["dim_finest"] == 9
        assert res["symbol_rank"] == 9
        assert res["surjective"]
        assert res["kernel_dim"] == 3
        assert res["degeneracy_rank"] == 3
        assert res["kernel_equals_degeneracy_image"]


def test_criterion_10_automorphism_families():
    with Budget(10, "automorphism families", 600.0):
        Bd = GradedTarget(dual_numbers())
        d = Matrix.zeros(4, 2)
        d.rows[3][1] = Fraction(1)
        phi = from_derivations(Bd, [d], N=3)
        assert validate_aut(phi)[0]
        Bm = GradedTarget(m2())
        dd_basis = [P.block((1,), (1,)) for P in solve_Dn(Bm, 1, 1)]
        lifts = [
            lift_derivation(Bm, P.block((1,), (0,)), dd_basis) for P in solve_Dn(Bm, 1, 0)
        ]
        assert all(l is not None for l in lifts)
        phi_m = from_derivations(Bm, lifts, N=3)
        assert validate_aut(phi_m)[0]
        for w in [(0,), (0, 0), (0, 0, 0)]:
            P = r_map(phi, w)
            assert check_leibniz(P)
            assert is_totally_positive(P)
        for w in [(0,), (1, 2)]:
            P = r_map(phi_m, w)
            assert check_leibniz(P)
            assert is_totally_positive(P)
        # pullback/degeneracy square for all epis with |G| <= 3
        for mtop in range(1, 4):
            for ntop in range(1, mtop + 1):
                for sigma in all_epis(mtop, ntop):
                    phiH = from_derivations(Bd, [d] * ntop, N=mtop)
                    phiG = pullback(sigma, phiH)
                    w = tuple(range(ntop))
                    fibers = [len(sigma.fiber(h + 1)) for h in w]
                    v = tuple(g - 1 for h in w for g in sigma.fiber(h + 1))
                    left = r_map(phiG, v)
                    Q = r_map(phiH, w)
                    sig_vals = []
                    for t, k in enumerate(fibers, start=1):
                        sig_vals.extend([t] * k)
                    degQ = degeneracy(MonotoneMap(len(v), len(w), tuple(sig_vals)), Q)
                    comps = {}
                    for lamp, blocks in degQ.components.items():
                        lam = []
                        i = 0
                        for part in lamp:
                            acc = 0
                            cnt = 0
                            while acc < part:
                                acc += fibers[i]
                                i += 1
                                cnt += 1
                            lam.append(cnt)
                        fl = []
                        j = 0
                        for cnt in lam:
                            fl.append(fibers[j : j + cnt])
                            j += cnt
                        pos = 0
                        mats = []
                        grades = []
                        for idx, cnt in enumerate(lam):
                            sub = w[pos : pos + cnt]
                            pos += cnt
                            mats.append(units_inserted(Bd, phiH.word_map(sub), fl[idx]))
                            grades.append(sum(fl[idx]))
                        blk = mats[0]
                        for mmat in mats[1:]:
                            blk = blk.kron(mmat)
                        comps.setdefault(lamp, {})[tuple(grades)] = blk
                    assert left == DiffOperator(Bd, (len(v),), len(v), comps)
        for n in (1, 2):
            report = surjectivity_probe(m2(), n)
            assert report["spanned"]


def test_criterion_11_braid_check():
    with Budget(11, "braid relation check", 1.0):
        swap = Matrix.zeros(4, 4)
        swap.rows[0][0] = swap.rows[3][3] = Fraction(1)
        swap.rows[1][2] = swap.rows[2][1] = Fraction(1)
        assert braid_check(swap, 2)
        q = Fraction(2)
        hecke = Matrix(
            [
                [q, 0, 0, 0],
                [0, q - 1 / q, 1, 0],
                [0, 1, 0, 0],
                [0, 0, 0, q],
            ]
        )
        assert braid_check(hecke, 2)
        rng = random.Random(11)
        non_yb = Matrix([[Fraction(rng.randint(-3, 3)) for _ in range(4)] for _ in range(4)])
        assert not braid_check(non_yb, 2)
