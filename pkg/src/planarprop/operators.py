"""Multi-differential operators as exact kernels, with all compositions.

An operator of shape lambda (a tuple of non-negative slot orders) over a
graded target B is a family of multilinear maps indexed by slotwise
refinements of the shape.  A refinement's component takes one algebra
element per slot and lands in a tensor of graded pieces of B, recorded by
a grade vector.  Storage convention: only the positive parts of an index
are stored (its "positive core"); slots of order zero always act by
inserting f of the input as an extra tensor factor, and are reconstructed
on demand by `extend_degenerate`.  Operators are grade-homogeneous.

The defining linear system ("Leibniz system"): for every stored
refinement kappa, every slot i and every grade vector, feeding a product
ab into slot i equals the sum over all two-part splits of that slot,
where the split (0, kappa_i) inserts f(a) on the left of the slot's
output, (kappa_i, 0) inserts f(b) on the right, and a positive split
(x, y) applies the junction product of B to the correspondingly refined
component.  Slots of size one are constrained too (both splits
degenerate), making order-one operators exactly the derivations.

The output type tag pi is an ordered partition of the slot count used
purely for bookkeeping in the typed compositions; no multiplication is
ever applied to the stored matrices when retagging.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .algebras import GradedTarget
from .linalg import Matrix, Q0, Q1, SparseEchelon, in_span, span_rank
from .ordinals import MonotoneMap, all_epis, compose, merge
from .partitions import (
    OrderedPartition,
    compositions,
    enumerate_partitions,
    lift_output_type,
    refinement_witness,
    refinements_of,
)


class OperatorError(ValueError):
    pass


def _positive(t) -> tuple[int, ...]:
    return tuple(x for x in t if x > 0)


def _core_refinements(core: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Positive refinements of a positive partition, deterministic order;
    [()] for the empty core."""
    if core == ():
        return [()]
    return [r.fine.parts for r in refinements_of(OrderedPartition(core))]


def _gradevecs(d: int, total: int) -> list[tuple[int, ...]]:
    return list(compositions(total, d))


@dataclass
class DiffOperator:
    """shape: slot orders (zeros allowed, e.g. units); grade: total output
    grade; components: positive core refinement -> grade vector -> matrix
    (rows: output tensor coordinates, cols: one algebra input per stored
    slot); pi: output type, an ordered partition of len(shape)."""

    B: GradedTarget
    shape: tuple[int, ...]
    grade: int
    components: dict[tuple[int, ...], dict[tuple[int, ...], Matrix]]
    pi: tuple[int, ...] = None

    def __post_init__(self):
        if self.pi is None:
            self.pi = (1,) * len(self.shape)
        if sum(self.pi) != len(self.shape):
            raise OperatorError(f"type {self.pi} is not a partition of {len(self.shape)} slots")
        self.prune()

    # -- basic structure ----------------------------------------------

    @property
    def order(self) -> int:
        return sum(self.shape)

    @property
    def core(self) -> tuple[int, ...]:
        return _positive(self.shape)

    @property
    def out_label(self) -> int:
        """Number of output tensor factors after applying the type tag."""
        return len(self.pi) + self.grade

    @property
    def in_label(self) -> int:
        return len(self.shape)

    def genus(self) -> int:
        return self.order - self.out_label + 1

    def prune(self) -> "DiffOperator":
        for kappa in list(self.components):
            blocks = self.components[kappa]
            for g in list(blocks):
                if blocks[g].is_zero():
                    del blocks[g]
            if not blocks:
                del self.components[kappa]
        return self

    def is_zero(self) -> bool:
        return not self.components

    def block(self, kappa: tuple[int, ...], g: tuple[int, ...]) -> Matrix | None:
        return self.components.get(tuple(kappa), {}).get(tuple(g))

    def top_gradevec(self) -> tuple[int, ...]:
        """Grade vector over the shape's slots: the push of every block's
        grade vector to the coarsest index must agree (zero slots carry
        grade zero)."""
        core = self.core
        mu_core = None
        for kappa, blocks in self.components.items():
            rho = refinement_witness(OrderedPartition(kappa), OrderedPartition(core))
            if rho is None:
                raise OperatorError(f"component {kappa} does not refine the shape core {core}")
            for g in blocks:
                push = tuple(
                    sum(g[j - 1] for j in rho.fiber(t)) for t in range(1, len(core) + 1)
                )
                if mu_core is None:
                    mu_core = push
                elif mu_core != push:
                    raise OperatorError(
                        f"mixed output grade vectors {mu_core} vs {push}; split the operator first"
                    )
        if mu_core is None:
            mu_core = (0,) * len(core)
        out = []
        it = iter(mu_core)
        for x in self.shape:
            out.append(next(it) if x > 0 else 0)
        return tuple(out)

    # -- linear structure ---------------------------------------------

    def copy(self) -> "DiffOperator":
        return DiffOperator(
            self.B,
            self.shape,
            self.grade,
            {k: dict(v) for k, v in self.components.items()},
            self.pi,
        )

    def scale(self, c) -> "DiffOperator":
        return DiffOperator(
            self.B,
            self.shape,
            self.grade,
            {k: {g: m.scale(c) for g, m in v.items()} for k, v in self.components.items()},
            self.pi,
        )

    def add(self, other: "DiffOperator") -> "DiffOperator":
        if (self.shape, self.grade, self.pi) != (other.shape, other.grade, other.pi):
            raise OperatorError("cannot add operators of different shape, grade, or type")
        out = self.copy()
        for kappa, blocks in other.components.items():
            dst = out.components.setdefault(kappa, {})
            for g, m in blocks.items():
                dst[g] = dst[g] + m if g in dst else m
        return out.prune()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        if (self.shape, self.grade, self.pi) != (other.shape, other.grade, other.pi):
            return False
        keys = set(self.components) | set(other.components)
        for kappa in keys:
            b1 = self.components.get(kappa, {})
            b2 = other.components.get(kappa, {})
            for g in set(b1) | set(b2):
                m1, m2 = b1.get(g), b2.get(g)
                if m1 is None:
                    if not m2.is_zero():
                        return False
                elif m2 is None:
                    if not m1.is_zero():
                        return False
                elif m1 != m2:
                    return False
        return True

    # -- serialization ------------------------------------------------

    def to_json(self) -> dict:
        def show(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)

        comps = []
        for kappa in sorted(self.components, key=lambda k: (len(k), k)):
            for g in sorted(self.components[kappa]):
                m = self.components[kappa][g]
                comps.append(
                    {
                        "refinement": list(kappa),
                        "grades": list(g),
                        "matrix": [[show(x) for x in row] for row in m.rows],
                    }
                )
        return {
            "shape": list(self.shape),
            "type": list(self.pi),
            "grade": self.grade,
            "components": comps,
        }

    @classmethod
    def from_json(cls, B: GradedTarget, obj: dict) -> "DiffOperator":
        comps: dict = {}
        for c in obj["components"]:
            kappa = tuple(c["refinement"])
            g = tuple(c["grades"])
            comps.setdefault(kappa, {})[g] = Matrix([[Fraction(x) for x in row] for row in c["matrix"]])
        return cls(B, tuple(obj["shape"]), obj["grade"], comps, tuple(obj["type"]))


# -- constructors ------------------------------------------------------


def one_operator(B: GradedTarget) -> DiffOperator:
    """The horizontal unit: the scalar 1 with no slots."""
    return DiffOperator(B, (), 0, {(): {(): Matrix([[1]])}}, ())


def unit_operator(B: GradedTarget, q: int = 1) -> DiffOperator:
    """u^q: q slots of order zero, each acting by f."""
    return DiffOperator(B, (0,) * q, 0, {(): {(): Matrix([[1]])}}, (1,) * q)


def mult_operator(B: GradedTarget) -> DiffOperator:
    """The multiplication tag (u o_h u)[(2)]: two order-zero slots whose
    outputs are merged by the type (2); the stored data is that of u^2."""
    return DiffOperator(B, (0, 0), 0, {(): {(): Matrix([[1]])}}, (2,))


# -- degenerate extension ----------------------------------------------


def extend_degenerate(P: DiffOperator, lam_prime: tuple[int, ...]) -> dict[tuple[int, ...], Matrix]:
    """Component blocks at a zero-extended index: the stored block whose
    positive parts match, with f of the input inserted as a grade-zero
    tensor factor at each zero slot.  Keys are the extended grade vectors;
    empty dict if the positive core is absent."""
    lam_prime = tuple(lam_prime)
    kappa = _positive(lam_prime)
    stored = P.components.get(kappa)
    if stored is None:
        return {}
    if not any(x == 0 for x in lam_prime):
        return dict(stored)
    a = P.B.A.dim
    fm = P.B.f.matrix
    f_cols = [fm.col(t) for t in range(a)]
    d_ext = len(lam_prime)
    out: dict[tuple[int, ...], Matrix] = {}
    pos_slots = [j for j, x in enumerate(lam_prime) if x > 0]
    zero_slots = [j for j, x in enumerate(lam_prime) if x == 0]
    for g, M in stored.items():
        g_ext = []
        it = iter(g)
        for x in lam_prime:
            g_ext.append(next(it) if x > 0 else 0)
        g_ext = tuple(g_ext)
        slot_sizes = [a ** (gj + 1) for gj in g_ext]
        nrows = 1
        for s in slot_sizes:
            nrows *= s
        core_sizes = [slot_sizes[j] for j in pos_slots]
        ext = Matrix.zeros(nrows, a**d_ext)
        for col in range(a**d_ext):
            digits = []
            c = col
            for _ in range(d_ext):
                digits.append(c % a)
                c //= a
            digits.reverse()
            core_col = 0
            for j in pos_slots:
                core_col = core_col * a + digits[j]
            vec = M.col(core_col)
            for core_row, val in enumerate(vec):
                if not val:
                    continue
                # decompose the core row into per-positive-slot chunks
                chunks = []
                cr = core_row
                for s in reversed(core_sizes):
                    chunks.append(cr % s)
                    cr //= s
                chunks.reverse()
                # interleave with the f-column entries at zero slots
                zvecs = [f_cols[digits[j]] for j in zero_slots]
                for zdigits in itertools.product(range(a), repeat=len(zero_slots)):
                    coeff = val
                    for zd, zv in zip(zdigits, zvecs):
                        coeff *= zv[zd]
                    if not coeff:
                        continue
                    row = 0
                    ci = iter(chunks)
                    zi = iter(zdigits)
                    for j, x in enumerate(lam_prime):
                        row = row * slot_sizes[j] + (next(ci) if x > 0 else next(zi))
                    ext.rows[row][col] += coeff
        out[g_ext] = ext
    return out


# -- the Leibniz system ------------------------------------------------


def _slot_insert(B: GradedTarget, g_ext: tuple[int, ...], i: int, mat: Matrix) -> Matrix:
    """I (x) mat (x) I landing in the slot-i factor of the output layout
    g_ext; mat's input width may differ from its output width (junction
    products consume a refined pair of slots)."""
    a = B.A.dim
    pre = 1
    for gj in g_ext[:i]:
        pre *= a ** (gj + 1)
    post = 1
    for gj in g_ext[i + 1 :]:
        post *= a ** (gj + 1)
    return Matrix.identity(pre).kron(mat).kron(Matrix.identity(post))


def _constraint_terms(B: GradedTarget, kappa, i, g):
    """Symbolic terms of the slot-i Leibniz constraint for block (kappa, g):
    a list of (block_key, grade_key, coeff_matrix, split_tag) where the
    constraint reads, for inputs with a product pair (r, s) in slot i:

        sum_k c[r][s][k] P[kappa][g](.., k, ..)
      - Lf(r) P[kappa][g](.., s, ..) - Rf(s) P[kappa][g](.., r, ..)
      - sum_{x+y=kappa_i} mB P[kappa'][g'](.., r, s, ..) = 0.

    Returned as structural data; callers substitute concrete inputs."""
    terms = []
    gi = g[i]
    terms.append(("left", kappa, g, None))
    terms.append(("right", kappa, g, None))
    for x in range(1, kappa[i]):
        y = kappa[i] - x
        kp = kappa[:i] + (x, y) + kappa[i + 1 :]
        for h1 in range(gi + 1):
            h2 = gi - h1
            gp = g[:i] + (h1, h2) + g[i + 1 :]
            terms.append(("mB", kp, gp, (h1, h2)))
    return terms


def _iter_constraints(B: GradedTarget, core: tuple[int, ...], grade: int):
    """Yield the full constraint family for a shape core at a fixed total
    grade: tuples (kappa, i, g, terms)."""
    for kappa in _core_refinements(core):
        if not kappa:
            continue
        for g in _gradevecs(len(kappa), grade):
            for i in range(len(kappa)):
                yield kappa, i, g, _constraint_terms(B, kappa, i, g)


def solve_D(B: GradedTarget, shape: tuple[int, ...], grade: int = 0) -> list[DiffOperator]:
    """Deterministic basis of the space of operators of the given shape
    and total grade: assemble the Leibniz system over all refinements and
    slots and return its exact nullspace, unpacked into operators.
    Refinements are ordered by (size, parts), grade vectors
    lexicographically, matrix entries row-major."""
    shape = tuple(shape)
    core = _positive(shape)
    a = B.A.dim
    if core == ():
        return [unit_operator(B, len(shape))] if grade == 0 and shape else (
            [one_operator(B)] if grade == 0 else []
        )

    refts = _core_refinements(core)
    offsets: dict[tuple[tuple[int, ...], tuple[int, ...]], int] = {}
    sizes: dict[tuple[tuple[int, ...], tuple[int, ...]], tuple[int, int]] = {}
    pos = 0
    for kappa in refts:
        d = len(kappa)
        for g in _gradevecs(d, grade):
            nr = a ** (sum(g) + d)
            nc = a**d
            offsets[(kappa, g)] = pos
            sizes[(kappa, g)] = (nr, nc)
            pos += nr * nc
    n_unknowns = pos

    ech = SparseEchelon(n_unknowns)
    mult = B.A.mult

    for kappa, i, g, terms in _iter_constraints(B, core, grade):
        d = len(kappa)
        base = offsets[(kappa, g)]
        nr, nc = sizes[(kappa, g)]
        # precompute action matrices for this (kappa, i, g)
        lmats = [_slot_insert(B, g, i, B.left_insert(B.A.basis_vec(r), g[i])) for r in range(a)]
        rmats = [_slot_insert(B, g, i, B.right_insert(B.A.basis_vec(s), g[i])) for s in range(a)]
        mb_terms = []
        for kind, kp, gp, hs in terms:
            if kind == "mB":
                mb_terms.append((kp, gp, _slot_insert(B, g, i, B.mB_matrix(*hs))))
        for rest in itertools.product(range(a), repeat=d - 1):
            for r in range(a):
                for s in range(a):
                    col_of = lambda t: _tuple_col(rest, i, t, a)
                    prod = mult[r][s]
                    for row in range(nr):
                        eq: dict[int, Fraction] = {}
                        for k in range(a):
                            if prod[k]:
                                idx = base + row * nc + col_of(k)
                                eq[idx] = eq.get(idx, Q0) + prod[k]
                        for rp, v in enumerate(lmats[r].rows[row]):
                            if v:
                                idx = base + rp * nc + col_of(s)
                                eq[idx] = eq.get(idx, Q0) - v
                        for rp, v in enumerate(rmats[s].rows[row]):
                            if v:
                                idx = base + rp * nc + col_of(r)
                                eq[idx] = eq.get(idx, Q0) - v
                        for kp, gp, mb in mb_terms:
                            if (kp, gp) not in offsets:
                                continue
                            b2 = offsets[(kp, gp)]
                            nc2 = sizes[(kp, gp)][1]
                            col2 = _tuple_col_pair(rest, i, r, s, a)
                            for rp, v in enumerate(mb.rows[row]):
                                if v:
                                    idx = b2 + rp * nc2 + col2
                                    eq[idx] = eq.get(idx, Q0) - v
                        eq = {k2: v2 for k2, v2 in eq.items() if v2}
                        if eq:
                            ech.add_row(eq)

    basis = []
    for vec in ech.nullspace():
        comps: dict = {}
        for (kappa, g), off in offsets.items():
            nr, nc = sizes[(kappa, g)]
            m = Matrix([[vec[off + r * nc + c] for c in range(nc)] for r in range(nr)])
            if not m.is_zero():
                comps.setdefault(kappa, {})[g] = m
        basis.append(DiffOperator(B, shape, grade, comps))
    return basis


def _tuple_col(rest, i, t, a):
    col = 0
    it = iter(rest)
    d = len(rest) + 1
    for j in range(d):
        col = col * a + (t if j == i else next(it))
    return col


def _tuple_col_pair(rest, i, r, s, a):
    col = 0
    it = iter(rest)
    d = len(rest) + 2
    for j in range(d):
        if j == i:
            col = col * a + r
        elif j == i + 1:
            col = col * a + s
        else:
            col = col * a + next(it)
    return col


def solve_Dn(B: GradedTarget, n: int, grade: int = 0) -> list[DiffOperator]:
    if n == 0:
        return [one_operator(B)] if grade == 0 else []
    return solve_D(B, (n,), grade)


def check_leibniz(P: DiffOperator) -> bool:
    """The defining invariant, evaluated on the stored matrices."""
    B = P.B
    a = B.A.dim
    core = P.core
    for kappa, i, g, terms in _iter_constraints(B, core, P.grade):
        M = P.block(kappa, g)
        d = len(kappa)
        nc = a**d
        nr = a ** (sum(g) + d)
        lmats = [_slot_insert(B, g, i, B.left_insert(B.A.basis_vec(r), g[i])) for r in range(a)]
        rmats = [_slot_insert(B, g, i, B.right_insert(B.A.basis_vec(s), g[i])) for s in range(a)]
        mb = []
        for kind, kp, gp, hs in terms:
            if kind == "mB":
                M2 = P.block(kp, gp)
                if M2 is not None:
                    mb.append((_slot_insert(B, g, i, B.mB_matrix(*hs)), M2))
        for rest in itertools.product(range(a), repeat=d - 1):
            for r in range(a):
                for s in range(a):
                    total = [Q0] * nr
                    prod = B.A.mult[r][s]
                    if M is not None:
                        for k in range(a):
                            if prod[k]:
                                colv = M.col(_tuple_col(rest, i, k, a))
                                total = [t0 + prod[k] * v for t0, v in zip(total, colv)]
                        lv = lmats[r].apply(M.col(_tuple_col(rest, i, s, a)))
                        rv = rmats[s].apply(M.col(_tuple_col(rest, i, r, a)))
                        total = [t0 - x - y for t0, x, y in zip(total, lv, rv)]
                    col2 = _tuple_col_pair(rest, i, r, s, a)
                    for ins, M2 in mb:
                        mv = ins.apply(M2.col(col2))
                        total = [t0 - v for t0, v in zip(total, mv)]
                    if any(total):
                        return False
    return True


def check_mP(P: DiffOperator, d: int) -> bool:
    """The collapsed identity: the top component applied to a d-fold
    product equals the sum over all size-d indices (including degenerate
    ones) of the fully multiplied finer components."""
    B = P.B
    a = B.A.dim
    n = P.order
    if len(P.core) != 1 and n > 0:
        raise OperatorError("check_mP applies to single-slot shapes")
    top = P.block((n,), (P.grade,)) if n > 0 else P.block((), ())
    for tup in itertools.product(range(a), repeat=d):
        prod = B.A.basis_vec(tup[0])
        for t in tup[1:]:
            prod = B.A.mul_vec(prod, B.A.basis_vec(t))
        if n > 0:
            lhs = [Q0] * (a ** (P.grade + 1))
            if top is not None:
                for k, c in enumerate(prod):
                    if c:
                        lhs = [x + c * v for x, v in zip(lhs, top.col(k))]
        else:
            lhs = B.f_vec(prod) if top is not None else [Q0] * a
        rhs = [Q0] * len(lhs)
        col = 0
        for t in tup:
            col = col * a + t
        for lam in enumerate_partitions(n, d):
            for g_ext, M in extend_degenerate(P, lam.parts).items():
                vec = M.col(col)
                # collapse all slots with the iterated product of B
                gg = list(g_ext)
                while len(gg) > 1:
                    ins = _slot_insert(B, tuple([gg[0] + gg[1]] + gg[2:]), 0, B.mB_matrix(gg[0], gg[1]))
                    vec = ins.apply(vec)
                    gg = [gg[0] + gg[1]] + gg[2:]
                rhs = [x + v for x, v in zip(rhs, vec)]
        if lhs != rhs:
            return False
    return True


def sub_operator(P: DiffOperator, lam: tuple[int, ...], i: int, fixed: list[tuple[int, ...]]):
    """Partial application: fix algebra basis inputs in all slots except
    slot i (0-based) of the index lam; returns the family mu -> matrix
    over refinements mu of (lam_i), each with the fixed inputs substituted
    (tensor factors of the other slots retained in the output)."""
    lam = tuple(lam)
    if len(fixed) != len(lam) - 1:
        raise OperatorError("need one fixed input per slot other than slot i")
    a = P.B.A.dim
    out = {}
    for mu in enumerate_partitions(lam[i], 1, nondegenerate_only=True) + [
        m for k in range(2, lam[i] + 1) for m in enumerate_partitions(lam[i], k, nondegenerate_only=True)
    ]:
        spliced = lam[:i] + mu.parts + lam[i + 1 :]
        for g_ext, M in extend_degenerate(P, spliced).items():
            k = len(mu.parts)
            cols = []
            for free in itertools.product(range(a), repeat=k):
                col = 0
                fi = iter(fixed)
                free_i = iter(free)
                for j in range(len(spliced)):
                    if i <= j < i + k:
                        col = col * a + next(free_i)
                    else:
                        col = col * a + next(fi)
                cols.append(M.col(col))
            out.setdefault(mu.parts, {})[g_ext] = Matrix.from_cols(cols, nrows=M.nrows)
    return out


# -- compositions ------------------------------------------------------


def compose_D(Q: DiffOperator, P: DiffOperator) -> DiffOperator:
    """Composition in the order algebra: grade-zero operators with a
    single-slot shape; the composite index splits as a termwise sum over
    the two factors, using degenerate extensions."""
    if Q.grade or P.grade:
        raise OperatorError("order-algebra composition is defined at grade zero")
    B = Q.B
    m, n = Q.order, P.order
    if m + n == 0:
        return one_operator(B).scale(Q.block((), ()).rows[0][0] * P.block((), ()).rows[0][0])
    comps: dict = {}
    for d in range(1, m + n + 1):
        for lam in enumerate_partitions(m + n, d, nondegenerate_only=True):
            total = None
            for lam_q in compositions(m, d):
                lam_p = tuple(l - lq for l, lq in zip(lam.parts, lam_q))
                if any(x < 0 for x in lam_p):
                    continue
                Qb = extend_degenerate(Q, lam_q).get((0,) * d)
                Pb = extend_degenerate(P, lam_p).get((0,) * d)
                if Qb is None or Pb is None:
                    continue
                term = Qb @ Pb
                total = term if total is None else total + term
            if total is not None and not total.is_zero():
                comps[lam.parts] = {(0,) * d: total}
    return DiffOperator(B, (m + n,), 0, comps)


def h_compose(P: DiffOperator, Q: DiffOperator) -> DiffOperator:
    """Side-by-side composition: components are slotwise tensor products
    of components of the factors; type tags concatenate."""
    if P.B is not Q.B:
        raise OperatorError("operators over different targets")
    comps: dict = {}
    for k1, b1 in P.components.items():
        for k2, b2 in Q.components.items():
            dst = comps.setdefault(k1 + k2, {})
            for g1, m1 in b1.items():
                for g2, m2 in b2.items():
                    key = g1 + g2
                    m = m1.kron(m2)
                    dst[key] = dst[key] + m if key in dst else m
    return DiffOperator(P.B, P.shape + Q.shape, P.grade + Q.grade, comps, P.pi + Q.pi)


bullet_h = h_compose


def _epis_with_fiber_sums(values: tuple[int, ...], target: tuple[int, ...]):
    """All epis [len(values)] ->> [len(target)] whose fiberwise sums of
    `values` equal `target`."""
    out = []
    for rho in all_epis(len(values), len(target)):
        ok = True
        for t in range(1, len(target) + 1):
            if sum(values[j - 1] for j in rho.fiber(t)) != target[t - 1]:
                ok = False
                break
        if ok:
            out.append(rho)
    return out


def v_compose(Q: DiffOperator, P: DiffOperator) -> DiffOperator:
    """Untyped vertical composition: Q consumes the output tensor factors
    of P.  Requires len(Q.shape) == len(P.shape) + P.grade and a
    homogeneous output grade vector on P.  The composite's components are
    assembled by enumerating zero-extended indices of P, the induced
    factor maps, and the matching slotwise splits of Q's shape, composing
    matrices and flattening grades."""
    B = P.B
    q = len(P.shape)
    p_c = P.grade + 1
    nu = Q.shape
    if len(nu) != q + p_c - 1:
        raise OperatorError(
            f"vertical arity mismatch: {len(nu)} input slots vs {q + p_c - 1} output factors"
        )
    mu = P.top_gradevec()
    m_ord, n_ord = Q.order, P.order

    # composite shape: regroup Q's slots under the coarse factor layout
    beta0_sizes = [mu_t + 1 for mu_t in mu]
    sigma_c = []
    j = 0
    for t in range(q):
        sigma_c.append(P.shape[t] + sum(nu[j : j + beta0_sizes[t]]))
        j += beta0_sizes[t]
    sigma_c = tuple(sigma_c)
    comps: dict = {}
    seen: set = set()

    # a zero slot of the extended index survives in the composite only if
    # it picks up input from Q or sits over a zero of the composite shape
    max_zeros = m_ord + sum(1 for x in sigma_c if x == 0)
    for kappa in list(P.components):
        d = len(kappa)
        for z in range(max_zeros + 1):
            qp = d + z
            if qp < q:
                continue
            for pos_slots in itertools.combinations(range(qp), d):
                lam_p = [0] * qp
                for idx, j2 in enumerate(pos_slots):
                    lam_p[j2] = kappa[idx]
                lam_p = tuple(lam_p)
                ext_P = extend_degenerate(P, lam_p)
                if not ext_P:
                    continue
                for rho in _epis_with_fiber_sums(lam_p, P.shape):
                    for g_ext, Pmat in ext_P.items():
                        push = tuple(
                            sum(g_ext[j2 - 1] for j2 in rho.fiber(t)) for t in range(1, q + 1)
                        )
                        if push != mu:
                            continue
                        alpha, beta = _factor_maps(rho, g_ext, mu, p_c)
                        # fibers of alpha over Q's slots
                        fiber_sizes = [0] * len(nu)
                        for x in alpha:
                            fiber_sizes[x] += 1
                        split_choices = [
                            list(compositions(nu[x], fiber_sizes[x])) for x in range(len(nu))
                        ]
                        for parts in itertools.product(*split_choices):
                            lam_q = tuple(itertools.chain.from_iterable(parts))
                            key = (lam_p, g_ext, lam_q)
                            if key in seen:
                                continue
                            seen.add(key)
                            tau = list(lam_p)
                            for j2, t in enumerate(beta):
                                tau[t] += lam_q[j2]
                            tau = tuple(tau)
                            if refinement_witness(
                                OrderedPartition(tau), OrderedPartition(sigma_c)
                            ) is None:
                                continue
                            _accumulate_v(
                                comps, B, Q, P, Pmat, lam_p, g_ext, lam_q, beta, tau
                            )
    return DiffOperator(B, sigma_c, P.grade + Q.grade, comps)


def _factor_maps(rho: MonotoneMap, g_ext, mu, p_c):
    """(alpha, beta): for the fine output factors of a zero-extended index
    with grade vector g_ext, alpha assigns each to a coarse factor (two
    fine factors merge at each junction inside a rho-fiber), beta assigns
    each to its fine slot.  Both 0-based lists."""
    alpha = []
    beta = []
    coarse = -1
    qp = rho.dom
    for s in range(1, rho.cod + 1):
        first = True
        for t in rho.fiber(s):
            for k in range(g_ext[t - 1] + 1):
                if k == 0 and not first:
                    alpha.append(coarse)
                else:
                    coarse += 1
                    alpha.append(coarse)
                beta.append(t - 1)
            first = False
    return alpha, beta


def _accumulate_v(comps, B, Q, P, Pmat, lam_p, g_ext, lam_q, beta, tau):
    # drop slots where the composite index is zero: those slots are a pure
    # f passthrough at both levels and are re-inserted on extension
    zset = {t for t, x in enumerate(tau) if x == 0}
    if zset:
        keep_slots = [t for t in range(len(tau)) if t not in zset]
        keep_factors = [j for j, t in enumerate(beta) if t not in zset]
        lam_p = tuple(lam_p[t] for t in keep_slots)
        g_r = tuple(g_ext[t] for t in keep_slots)
        lam_q = tuple(lam_q[j] for j in keep_factors)
        beta = [keep_slots.index(beta[j]) for j in keep_factors]
        tau = tuple(tau[t] for t in keep_slots)
        Pmat = extend_degenerate(P, lam_p).get(g_r)
        if Pmat is None:
            return
        g_ext = g_r
    for gq_ext, Qmat in extend_degenerate(Q, lam_q).items():
        h = list(g_ext)
        for j, t in enumerate(beta):
            h[t] += gq_ext[j]
        prod = Qmat @ Pmat
        if prod.is_zero():
            continue
        key = _positive(tau)
        gkey = tuple(h[t] for t in range(len(tau)) if tau[t] > 0)
        dst = comps.setdefault(key, {})
        dst[gkey] = dst[gkey] + prod if gkey in dst else prod


# -- typed vertical composition ---------------------------------------


class OperatorSum:
    """Formal sum of operators of different shapes (a single element of
    the graded direct sum).  Terms are keyed by (shape, type)."""

    def __init__(self, terms=()):
        self.terms: dict = {}
        for t in terms:
            self.add(t)

    def add(self, op: DiffOperator):
        if op.is_zero():
            return self
        key = (op.shape, op.pi)
        if key in self.terms:
            self.terms[key] = self.terms[key].add(op)
            if self.terms[key].is_zero():
                del self.terms[key]
        else:
            self.terms[key] = op
        return self

    def single(self) -> DiffOperator:
        if len(self.terms) != 1:
            raise OperatorError(f"expected a single shape, found {len(self.terms)}")
        return next(iter(self.terms.values()))

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffOperator):
            other = OperatorSum([other])
        if not isinstance(other, OperatorSum):
            return NotImplemented
        if set(self.terms) != set(other.terms):
            return False
        return all(self.terms[k] == other.terms[k] for k in self.terms)

    def __iter__(self):
        return iter(self.terms.values())


def restrict_to(Q: DiffOperator, nu_prime: tuple[int, ...]) -> DiffOperator:
    """The operator of shape nu_prime whose components are Q's components
    at refinements of nu_prime (a refinement of Q's shape)."""
    core = _positive(nu_prime)
    comps = {}
    for kappa in _core_refinements(core):
        if kappa in Q.components:
            comps[kappa] = dict(Q.components[kappa])
    return DiffOperator(Q.B, tuple(nu_prime), Q.grade, comps)


def bullet_v(Q: DiffOperator, P: DiffOperator) -> OperatorSum:
    """Typed vertical composition: P's type tag merges its output slots,
    so Q's input slots are unmerged along the lifted type before the
    untyped composition, and the result is retagged by the pushout of Q's
    tag along the merged-grade layout."""
    q = len(P.shape)
    s = len(P.pi)
    p_c = P.grade + 1
    if len(Q.shape) != s + p_c - 1:
        raise OperatorError(
            f"typed arity mismatch: {len(Q.shape)} input slots vs {s + p_c - 1} output factors"
        )
    mu = P.top_gradevec()
    rho0 = _epi_with_fiber_sizes([m + 1 for m in mu])
    pi_part = OrderedPartition(P.pi)
    pi_tilde = lift_output_type(pi_part, rho0) if q else OrderedPartition(())

    # retag data
    pi_map = pi_part.to_map()
    h_groups = [sum(mu[t - 1] for t in pi_map.fiber(i)) for i in range(1, s + 1)]
    mu_tilde = _epi_with_fiber_sizes([h + 1 for h in h_groups])
    sigma_map = OrderedPartition(Q.pi).to_map()
    _, push_mu, _ = merge(mu_tilde, sigma_map)
    tag_map = compose(push_mu, pi_map)
    tag = tag_map.fiber_sizes()

    out = OperatorSum()
    fiber_sizes = list(pi_tilde.parts)
    split_choices = [list(compositions(Q.shape[x], fiber_sizes[x])) for x in range(len(Q.shape))]
    for parts in itertools.product(*split_choices):
        nu_prime = tuple(itertools.chain.from_iterable(parts))
        Qr = restrict_to(Q, nu_prime)
        if Qr.is_zero() and Q.order > 0:
            continue
        comp = v_compose(Qr, P)
        comp.pi = tag
        if sum(tag) != len(comp.shape):
            raise OperatorError("type retag does not match the composite shape")
        out.add(comp)
    return out


def _epi_with_fiber_sizes(sizes) -> MonotoneMap:
    vals = []
    for t, k in enumerate(sizes, start=1):
        vals.extend([t] * k)
    return MonotoneMap(len(vals), len(sizes), tuple(vals))


# -- genus, positivity, degeneracies, symbol ---------------------------


def genus(P: DiffOperator) -> int:
    return P.genus()


def is_totally_positive(P: DiffOperator) -> bool:
    """Every nonzero block's index dominates its grade vector termwise."""
    for kappa, blocks in P.components.items():
        for g in blocks:
            if any(k < gj for k, gj in zip(kappa, g)):
                return False
    return True


def degeneracy(sigma: MonotoneMap, P: DiffOperator) -> DiffOperator:
    """s(sigma) for sigma: [m] ->> [n] and P of single-slot shape (n):
    the operator of shape (m) whose component at an index is P's block
    when the index is the sigma-pushforward of one of P's, zero
    otherwise."""
    n = P.order
    m = sigma.dom
    if sigma.cod != n:
        raise OperatorError(f"degeneracy epi must target [{n}]")
    fibers = list(sigma.fiber_sizes())
    comps: dict = {}
    for lam_prime in (r.fine.parts for r in refinements_of(OrderedPartition((m,)))):
        lam = _degeneracy_parse(lam_prime, fibers)
        if lam is None:
            continue
        blocks = P.components.get(lam)
        if blocks:
            comps[lam_prime] = dict(blocks)
    return DiffOperator(P.B, (m,), P.grade, comps)


def _degeneracy_parse(lam_prime, fibers):
    """lam with lam_prime = lam o sigma, i.e. each part of lam_prime is a
    sum of consecutive sigma-fiber sizes; None if no such grouping."""
    lam = []
    i = 0
    for part in lam_prime:
        acc = 0
        cnt = 0
        while acc < part:
            if i >= len(fibers):
                return None
            acc += fibers[i]
            i += 1
            cnt += 1
        if acc != part:
            return None
        lam.append(cnt)
    if i != len(fibers):
        return None
    return tuple(lam)


def symbol(P: DiffOperator) -> DiffOperator:
    """Projection to the finest index (1, ..., 1)."""
    n = P.order
    fin = (1,) * n
    blocks = P.components.get(fin, {})
    return DiffOperator(P.B, fin, P.grade, {fin: dict(blocks)} if blocks else {})


def op_vector(P: DiffOperator, layout) -> list[Fraction]:
    """Flatten an operator to coordinates in a fixed layout (as produced
    by `vector_layout`)."""
    total = layout["total"]
    vec = [Q0] * total
    for (kappa, g), (off, nr, nc) in layout["blocks"].items():
        M = P.block(kappa, g)
        if M is not None:
            for r in range(nr):
                for c in range(nc):
                    vec[off + r * nc + c] = M.rows[r][c]
    return vec


def vector_layout(B: GradedTarget, shape, grade) -> dict:
    a = B.A.dim
    core = _positive(tuple(shape))
    blocks = {}
    pos = 0
    for kappa in _core_refinements(core):
        d = len(kappa)
        for g in _gradevecs(d, grade):
            nr, nc = a ** (sum(g) + d), a**d
            blocks[(kappa, g)] = (pos, nr, nc)
            pos += nr * nc
    return {"blocks": blocks, "total": pos}


def filtration_membership(P: DiffOperator, n: int, lower_basis: list[DiffOperator]) -> bool:
    """Whether P lies in the span of all degeneracy images of the given
    basis of the order-n space."""
    m = P.order
    layout = vector_layout(P.B, P.shape, P.grade)
    spanning = []
    for sigma in all_epis(m, n):
        for Q in lower_basis:
            spanning.append(op_vector(degeneracy(sigma, Q), layout))
    return in_span(spanning, op_vector(P, layout))


def symbol_exactness(B: GradedTarget, n: int, grade: int = 0) -> dict:
    """The short-exact-sequence check at a single-slot shape: computes the
    order-n space, the finest-shape space, the symbol ranks, and whether
    the symbol's kernel is exactly the span of degeneracy images of the
    order n-1 space."""
    basis_n = solve_Dn(B, n, grade)
    basis_fine = solve_D(B, (1,) * n, grade)
    fine_layout = vector_layout(B, (1,) * n, grade)
    sym_vecs = [op_vector(symbol(P), fine_layout) for P in basis_n]
    sym_rank = span_rank(sym_vecs)
    fine_dim = len(basis_fine)
    surjective = sym_rank == fine_dim

    full_layout = vector_layout(B, (n,), grade)
    basis_lower = solve_Dn(B, n - 1, grade) if n >= 1 else []
    deg_vecs = []
    for sigma in all_epis(n, n - 1):
        for Q in basis_lower:
            deg_vecs.append(op_vector(degeneracy(sigma, Q), full_layout))
    deg_rank = span_rank(deg_vecs)
    kernel_dim = len(basis_n) - sym_rank
    # membership: every kernel element lies in the degeneracy span
    ker_ok = True
    ech = SparseEchelon(fine_layout["total"])
    kernel_members = []
    for P in basis_n:
        v = op_vector(symbol(P), fine_layout)
        if not ech.add_row({j: x for j, x in enumerate(v) if x}):
            kernel_members.append(P)
    # the kernel of the symbol on the span: find exact combinations
    # solve: which combinations of basis_n have zero symbol
    sym_matrix = Matrix.from_cols(sym_vecs, nrows=fine_layout["total"]) if basis_n else Matrix.zeros(0, 0)
    ker_coeffs = sym_matrix.nullspace() if basis_n else []
    for coeffs in ker_coeffs:
        vec = [Q0] * full_layout["total"]
        for c, P in zip(coeffs, basis_n):
            if c:
                pv = op_vector(P, full_layout)
                vec = [x + c * y for x, y in zip(vec, pv)]
        if not in_span(deg_vecs, vec):
            ker_ok = False
            break
    return {
        "dim_Dn": len(basis_n),
        "dim_finest": fine_dim,
        "symbol_rank": sym_rank,
        "surjective": surjective,
        "degeneracy_rank": deg_rank,
        "kernel_dim": kernel_dim,
        "kernel_equals_degeneracy_image": ker_ok and deg_rank == kernel_dim,
    }
