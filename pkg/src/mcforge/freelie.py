"""Weight-truncated free graded Lie algebras on named generators.

Basis: standard bracketings of Lyndon words, together with the squares
[b(l), b(l)] for Lyndon words l of odd total degree. Elements are stored as
coefficient dicts over this basis; brackets are computed in the tensor
algebra (graded commutators of word expansions) and solved back into the
basis per weight. The solve-back doubles as a Lie-element membership test.

Dimensions are cross-checked against the generating-function oracle
`witt_dims` (PBW: symmetric factors for even-degree basis elements,
exterior factors for odd-degree ones).
"""

from __future__ import annotations

from fractions import Fraction

from .dgla import DgLieAlgebra, koszul_sign
from .linalg import Mat, SpanSolver, vec_add, vec_clean, vec_scale


def lyndon_words(m: int, maxlen: int) -> list:
    """All Lyndon words over alphabet 0..m-1 with length <= maxlen.

    Duval's generation: output, extend periodically, trim trailing maximal
    letters, increment. Returned sorted by (length, word).
    """
    out = []
    w = [0]
    while w:
        out.append(tuple(w))
        base = len(w)
        while len(w) < maxlen:
            w.append(w[len(w) - base])
        while w and w[-1] == m - 1:
            w.pop()
        if w:
            w[-1] += 1
        else:
            break
    out.sort(key=lambda t: (len(t), t))
    return out


def standard_factorization(w: tuple) -> tuple:
    """w = u v with v the lexicographically smallest proper suffix."""
    v = min(w[i:] for i in range(1, len(w)))
    return w[: len(w) - len(v)], v


class FreeLieTruncation:
    """Free graded Lie algebra on generators, truncated above max_weight.

    gens: list of (name, degree). Differentials of the generators may be
    installed afterwards with set_d (elements of the truncation itself);
    d extends as a degree +1 derivation.
    """

    def __init__(self, field, gens: list, max_weight: int):
        self.field = field
        self.gens = list(gens)
        self.max_weight = max_weight
        self.letter_degrees = [d for _, d in gens]
        m = len(gens)
        lyndon = lyndon_words(m, max_weight)
        self.basis = []  # (kind, word): kind "l" bracketed Lyndon, "s" square
        for w in lyndon:
            self.basis.append(("l", w))
        for w in lyndon:
            deg = sum(self.letter_degrees[c] for c in w)
            if deg % 2 == 1 and 2 * len(w) <= max_weight:
                self.basis.append(("s", w))
        self.basis.sort(key=lambda b: (self._weight_of(b), b[1], b[0]))
        self.names = [self._name_of(b) for b in self.basis]
        self.degrees = [self._degree_of(b) for b in self.basis]
        self.weights = [self._weight_of(b) for b in self.basis]
        self.index = {b: i for i, b in enumerate(self.basis)}
        self.n = len(self.basis)
        self._expansion_cache: dict = {}
        self._solvers: dict = {}
        self._weight_members: dict = {}
        for i, b in enumerate(self.basis):
            self._weight_members.setdefault(self.weights[i], []).append(i)
        self._bracket_cache: dict = {}
        self._d_gens: dict = {}
        self._d_cache: dict = {}

    # -- basis bookkeeping ---------------------------------------------------

    def _weight_of(self, b) -> int:
        kind, w = b
        return len(w) * (2 if kind == "s" else 1)

    def _degree_of(self, b) -> int:
        kind, w = b
        d = sum(self.letter_degrees[c] for c in w)
        return d * (2 if kind == "s" else 1)

    def _name_of(self, b) -> str:
        kind, w = b
        s = self._bracket_string(w)
        return f"[{s},{s}]" if kind == "s" else s

    def _bracket_string(self, w: tuple) -> str:
        if len(w) == 1:
            return self.gens[w[0]][0]
        u, v = standard_factorization(w)
        return f"[{self._bracket_string(u)},{self._bracket_string(v)}]"

    def el(self, coeffs: dict) -> dict:
        out = {}
        name_to_idx = {nm: i for i, nm in enumerate(self.names)}
        for key, c in coeffs.items():
            i = name_to_idx[key] if isinstance(key, str) else key
            out[i] = self.field.coerce(c)
        return vec_clean(self.field, out)

    def gen(self, name: str) -> dict:
        return self.el({name: 1})

    def degree_of(self, v: dict):
        degs = {self.degrees[i] for i in v}
        if not degs:
            return None
        if len(degs) > 1:
            raise ValueError(f"element is not homogeneous: degrees {sorted(degs)}")
        return degs.pop()

    def homogeneous(self, v: dict, expected: int, what: str = "element"):
        deg = self.degree_of(v)
        if deg is not None and deg != expected:
            raise ValueError(f"{what} must have degree {expected}, got {deg}")
        return v

    def series_bound(self) -> int:
        return self.max_weight + 1

    # -- tensor expansions ----------------------------------------------------

    def word_degree(self, word: tuple) -> int:
        return sum(self.letter_degrees[c] for c in word)

    def _tensor_commutator(self, x: dict, y: dict) -> dict:
        """Graded commutator of word expansions, truncated above max_weight."""
        F = self.field
        out: dict = {}
        for wx, cx in x.items():
            dx = self.word_degree(wx)
            for wy, cy in y.items():
                if len(wx) + len(wy) > self.max_weight:
                    continue
                prod = F.mul(cx, cy)
                w1 = wx + wy
                s = F.add(out.get(w1, F.zero()), prod)
                if F.is_zero(s):
                    out.pop(w1, None)
                else:
                    out[w1] = s
                w2 = wy + wx
                sgn = koszul_sign(dx, self.word_degree(wy))
                val = F.mul(F.coerce(-sgn), prod)
                s = F.add(out.get(w2, F.zero()), val)
                if F.is_zero(s):
                    out.pop(w2, None)
                else:
                    out[w2] = s
        return out

    def expansion(self, i: int) -> dict:
        """Word expansion of basis element i in the tensor algebra."""
        if i in self._expansion_cache:
            return self._expansion_cache[i]
        kind, w = self.basis[i]
        if kind == "l":
            out = self._lyndon_expansion(w)
        else:
            e = self._lyndon_expansion(w)
            out = self._tensor_commutator(e, e)
        self._expansion_cache[i] = out
        return out

    def _lyndon_expansion(self, w: tuple) -> dict:
        if len(w) == 1:
            return {w: self.field.one()}
        u, v = standard_factorization(w)
        return self._tensor_commutator(self._lyndon_expansion(u),
                                       self._lyndon_expansion(v))

    def _solver_at(self, weight: int):
        """(word index, SpanSolver, member list) for the given weight."""
        if weight not in self._solvers:
            members = self._weight_members.get(weight, [])
            words = {}
            vecs = []
            for i in members:
                exp = self.expansion(i)
                for w in exp:
                    words.setdefault(w, len(words))
            for i in members:
                exp = self.expansion(i)
                vecs.append({words[w]: c for w, c in exp.items()})
            self._solvers[weight] = (words, SpanSolver(self.field, vecs, len(words)), members)
        return self._solvers[weight]

    def solve_back(self, expansion: dict) -> dict:
        """Express a tensor-algebra element in the Lie basis; raises if the
        element is not a Lie element of the truncation."""
        F = self.field
        by_weight: dict = {}
        for w, c in expansion.items():
            if len(w) <= self.max_weight:
                by_weight.setdefault(len(w), {})[w] = c
        out: dict = {}
        for weight, part in by_weight.items():
            words, solver, members = self._solver_at(weight)
            vec = {}
            for w, c in part.items():
                if w not in words:
                    raise ValueError(f"not a Lie element: stray word {w}")
                vec[words[w]] = c
            sol = solver.solve(vec)
            if sol is None:
                raise ValueError("not a Lie element at weight %d" % weight)
            for loc, c in sol.items():
                out[members[loc]] = c
        return vec_clean(F, out)

    # -- Lie operations ---------------------------------------------------------

    def bracket_basis(self, i: int, j: int) -> dict:
        if self.weights[i] + self.weights[j] > self.max_weight:
            return {}
        key = (i, j)
        if key not in self._bracket_cache:
            comm = self._tensor_commutator(self.expansion(i), self.expansion(j))
            self._bracket_cache[key] = self.solve_back(comm)
        return self._bracket_cache[key]

    def bracket_vec(self, u: dict, v: dict) -> dict:
        F = self.field
        out: dict = {}
        for i, a in u.items():
            for j, b in v.items():
                tbl = self.bracket_basis(i, j)
                if not tbl:
                    continue
                ab = F.mul(a, b)
                for k, c in tbl.items():
                    s = F.add(out.get(k, F.zero()), F.mul(ab, c))
                    if F.is_zero(s):
                        out.pop(k, None)
                    else:
                        out[k] = s
        return out

    # -- differential -------------------------------------------------------------

    def set_d(self, d_gens: dict):
        """Install d on generators: {gen name: element}. Extended as a
        degree +1 derivation by Leibniz. d^2 = 0 is the caller's promise and
        is validated by as_dgla()/check via the axioms checker."""
        self._d_gens = {}
        self._d_cache = {}
        for nm, val in d_gens.items():
            letter = next(i for i, (gn, _) in enumerate(self.gens) if gn == nm)
            val = self.el(val)
            if val:
                want = self.letter_degrees[letter] + 1
                self.homogeneous(val, want, f"d({nm})")
            self._d_gens[letter] = val

    def d_basis(self, i: int) -> dict:
        if i in self._d_cache:
            return self._d_cache[i]
        kind, w = self.basis[i]
        F = self.field
        if kind == "l" and len(w) == 1:
            out = dict(self._d_gens.get(w[0], {}))
        elif kind == "l":
            u, v = standard_factorization(w)
            iu = self.index[("l", u)]
            iv = self.index[("l", v)]
            sign = F.coerce((-1) ** (self.degrees[iu] % 2))
            out = vec_add(F, self.bracket_vec(self.d_basis(iu), {iv: F.one()}),
                          vec_scale(F, sign,
                                    self.bracket_vec({iu: F.one()}, self.d_basis(iv))))
        else:
            il = self.index[("l", w)]
            sign = F.coerce((-1) ** (self.degrees[il] % 2))
            out = vec_add(F, self.bracket_vec(self.d_basis(il), {il: F.one()}),
                          vec_scale(F, sign,
                                    self.bracket_vec({il: F.one()}, self.d_basis(il))))
        self._d_cache[i] = out
        return out

    def d_vec(self, u: dict) -> dict:
        F = self.field
        out: dict = {}
        for i, a in u.items():
            di = self.d_basis(i)
            if di:
                out = vec_add(F, out, vec_scale(F, a, di))
        return out

    # -- export ---------------------------------------------------------------------

    def dims_by_weight_degree(self) -> dict:
        out: dict = {}
        for i in range(self.n):
            key = (self.weights[i], self.degrees[i])
            out[key] = out.get(key, 0) + 1
        return out

    def as_dgla(self) -> DgLieAlgebra:
        """Materialize as a finite-dimensional dg Lie algebra (the truncation
        is nilpotent: brackets of more than max_weight generators vanish)."""
        F = self.field
        d = Mat(F, self.n, self.n)
        for j in range(self.n):
            for i, c in self.d_basis(j).items():
                d.rows[i][j] = c
        brk = {}
        for i in range(self.n):
            for j in range(self.n):
                tbl = self.bracket_basis(i, j)
                if tbl:
                    brk[(i, j)] = tbl
        return DgLieAlgebra(F, self.names, self.degrees, d, brk,
                            symmetrize=False)


def witt_dims(gen_degrees: list, max_weight: int) -> dict:
    """Bigraded dimensions {(weight, degree): dim} of the free graded Lie
    algebra, from the Poincare-Birkhoff-Witt factorization of the tensor
    algebra Hilbert series: even-degree contributions are symmetric-algebra
    factors, odd ones exterior. Exact integer arithmetic."""
    W = max_weight

    def trunc(poly):
        return {k: c for k, c in poly.items() if k[0] <= W and c}

    def pmul(a, b):
        out: dict = {}
        for (w1, d1), c1 in a.items():
            for (w2, d2), c2 in b.items():
                if w1 + w2 > W:
                    continue
                k = (w1 + w2, d1 + d2)
                out[k] = out.get(k, 0) + c1 * c2
        return trunc(out)

    # tensor algebra series: sum over k of (sum_g t q^{deg g})^k
    gen_poly = {}
    for dg in gen_degrees:
        gen_poly[(1, dg)] = gen_poly.get((1, dg), 0) + 1
    H = {(0, 0): 1}
    power = {(0, 0): 1}
    for _ in range(W):
        power = pmul(power, gen_poly)
        if not power:
            break
        for k, c in power.items():
            H[k] = H.get(k, 0) + c

    dims: dict = {}
    P = {(0, 0): 1}
    for w in range(1, W + 1):
        for (ww, dd), c in sorted(H.items()):
            if ww != w:
                continue
            have = P.get((w, dd), 0)
            ell = c - have
            if ell < 0:
                raise AssertionError("PBW inversion produced negative dimension")
            if ell:
                dims[(w, dd)] = ell
        # multiply P by the exact factors for weight w
        for (ww, dd), ell in sorted(dims.items()):
            if ww != w or not ell:
                continue
            if dd % 2 == 0:
                # (1 - t^w q^d)^(-ell): geometric series per basis element
                factor = {(0, 0): 1}
                term = {(0, 0): 1}
                while True:
                    term = pmul(term, {(w, dd): 1})
                    if not term:
                        break
                    factor = {k: factor.get(k, 0) + term.get(k, 0)
                              for k in set(factor) | set(term)}
                base = dict(factor)
                for _ in range(ell - 1):
                    factor = pmul(factor, base)
                P = pmul(P, factor)
            else:
                base = {(0, 0): 1, (w, dd): 1}
                for _ in range(ell):
                    P = pmul(P, base)
    return dims


def classical_witt(n_letters: int, w: int) -> int:
    """Number of Lyndon words of length w over n letters (Moebius formula)."""
    def mobius(m):
        if m == 1:
            return 1
        out, mm, p = 1, m, 2
        while p * p <= mm:
            if mm % p == 0:
                mm //= p
                if mm % p == 0:
                    return 0
                out = -out
            p += 1
        if mm > 1:
            out = -out
        return out

    total = 0
    for e in range(1, w + 1):
        if w % e == 0:
            total += mobius(e) * n_letters ** (w // e)
    return total // w


def free_nilpotent_dgla(field, gens: list, max_weight: int,
                        with_differentials: bool = True):
    """Free dg Lie truncation on the given (name, degree) generators.

    With with_differentials=True each generator g gets a fresh generator dg
    one degree up, with d(g) = dg and d(dg) = 0: the free dg Lie algebra on
    the original generators, weight-truncated.
    """
    all_gens = list(gens)
    d_map = {}
    if with_differentials:
        for nm, dg in gens:
            all_gens.append(("d" + nm, dg + 1))
            d_map[nm] = {"d" + nm: 1}
            d_map["d" + nm] = {}
    L = FreeLieTruncation(field, all_gens, max_weight)
    if with_differentials:
        L.set_d(d_map)
    return L
