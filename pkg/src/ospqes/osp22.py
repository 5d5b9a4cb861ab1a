"""The osp(2,2) representation on pairs of polynomials and the T_Q operator.

All checks are exact operator identities over the rationals, with the
parameters ``n, beta, x0, b, c`` either symbolic or substituted.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .symkernel import (
    B,
    BETA,
    C,
    N,
    X,
    X0,
    DiffOp,
    MatOp,
    MultiPoly,
    as_rational,
    mat_bracket,
)

D = DiffOp.d()

# [[Qbar1,T-],T+] = [Qbar1,[T-,T+]] + [[Qbar1,T+],T-] = [Qbar1, 2T0] = -Qbar1,
# so the other relations force the minus sign; no representation can satisfy +Qbar1.
QBAR2_TPLUS_NOTE = "inconsistent with [Qbar1,T-]=Qbar2, [T+,T-]=-2T0, [Qbar1,T0]=-Qbar1/2 via Jacobi; holds as -Qbar1"
GENERATOR_NAMES = ("Tplus", "Tzero", "Tminus", "Jgen", "Q1", "Q2", "Qbar1", "Qbar2")


@dataclass(frozen=True)
class GeneratorSet:
    Tplus: MatOp
    Tzero: MatOp
    Tminus: MatOp
    Jgen: MatOp
    Q1: MatOp
    Q2: MatOp
    Qbar1: MatOp
    Qbar2: MatOp
    nparam: MultiPoly

    def items(self):
        return [(name, getattr(self, name)) for name in GENERATOR_NAMES]

    @property
    def symbolic(self) -> bool:
        return bool(self.nparam.free_vars())


@dataclass(frozen=True)
class RelationEntry:
    name: str
    passed: bool
    lhs: str
    residual: str = ""
    supplementary: bool = False
    info: bool = False
    documented: str = ""

    def to_dict(self) -> dict:
        out = {"name": self.name, "pass": self.passed, "lhs": self.lhs}
        if not self.passed or self.info:
            out["residual"] = self.residual or "0"
        if self.supplementary:
            out["supplementary"] = True
        if self.info:
            out["info"] = True
        if self.documented:
            out["documented"] = self.documented
        return out


@dataclass
class RelationReport:
    title: str
    entries: list[RelationEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """Every checked entry holds, documented discrepancies included."""
        return all(e.passed for e in self.entries if not e.info)

    @property
    def passed_expected(self) -> bool:
        """Every entry holds except failures listed as known discrepancies."""
        return all(e.passed for e in self.entries if not (e.info or e.documented))

    @property
    def failures(self) -> list[RelationEntry]:
        return [e for e in self.entries if not e.info and not e.passed]

    def add(self, name: str, lhs: MatOp, rhs: MatOp, **flags) -> RelationEntry:
        """Record whether ``lhs == rhs`` exactly."""
        diff = lhs - rhs
        entry = RelationEntry(name, diff.is_zero(), str(lhs), "" if diff.is_zero() else str(diff), **flags)
        self.entries.append(entry)
        return entry

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "pass": self.passed,
            "relations": [e.to_dict() for e in self.entries],
        }

    def render(self) -> str:
        lines = [f"== {self.title} =="]
        for e in self.entries:
            tag = "INFO" if e.info else ("PASS" if e.passed else "FAIL")
            extra = " (supplementary)" if e.supplementary else ""
            lines.append(f"  [{tag}] {e.name}{extra}")
            if e.info or not e.passed:
                lines.append(f"         residual: {e.residual or '0'}")
            if e.documented and not e.passed:
                lines.append(f"         known: {e.documented}")
        if self.passed:
            verdict = "PASS"
        elif self.passed_expected:
            verdict = "PASS except documented discrepancies"
        else:
            verdict = "FAIL"
        lines.append(f"  overall: {verdict}")
        return "\n".join(lines)


def _nparam(nparam) -> MultiPoly:
    if nparam is None or nparam == "n":
        return N
    if isinstance(nparam, MultiPoly):
        return nparam
    return MultiPoly.const(as_rational(nparam))


def make_generators(nparam=None) -> GeneratorSet:
    """Generators at ``nparam`` (``None`` or ``"n"`` keeps n symbolic)."""
    n = _nparam(nparam)
    half = Fraction(1, 2)
    return GeneratorSet(
        Tplus=MatOp.diag(X * X * D - DiffOp.mul(n * X), X * X * D - DiffOp.mul((n + 1) * X)),
        Tzero=MatOp.diag(X * D - DiffOp.mul(n * half), X * D - DiffOp.mul((n + 1) * half)),
        Tminus=MatOp.diag(D, D),
        Jgen=MatOp.diag(DiffOp.mul(-(n + 2) * half), DiffOp.mul(-(n + 1) * half)),
        Q1=MatOp.lower(1),
        Q2=MatOp.lower(X),
        Qbar1=MatOp.upper(X * D - DiffOp.mul(n + 1)),
        Qbar2=MatOp.upper(-D),
        nparam=n,
    )


def _comm(a, b):
    return mat_bracket(a, b, "commutator")


def _anti(a, b):
    return mat_bracket(a, b, "anticommutator")


def verify_osp_relations(g: GeneratorSet, supplementary: bool = True) -> RelationReport:
    """Check the 26 defining (anti)commutators, in the order they are usually printed."""
    Tp, T0, Tm, J = g.Tplus, g.Tzero, g.Tminus, g.Jgen
    Q1, Q2, Qb1, Qb2 = g.Q1, g.Q2, g.Qbar1, g.Qbar2
    zero = MatOp.zero()
    half = Fraction(1, 2)
    rep = RelationReport(f"osp(2,2) relations, n = {g.nparam}")

    rep.add("[T0,T+] = T+", _comm(T0, Tp), Tp)
    rep.add("[T0,T-] = -T-", _comm(T0, Tm), -Tm)
    rep.add("[T+,T-] = -2 T0", _comm(Tp, Tm), (-2) * T0)
    rep.add("[J,T0] = 0", _comm(J, T0), zero)
    rep.add("[J,T+] = 0", _comm(J, Tp), zero)
    rep.add("[J,T-] = 0", _comm(J, Tm), zero)

    rep.add("{Q1,Qbar2} = -T-", _anti(Q1, Qb2), -Tm)
    rep.add("{Q2,Qbar1} = T+", _anti(Q2, Qb1), Tp)
    rep.add("({Qbar1,Q1} + {Qbar2,Q2})/2 = J", half * (_anti(Qb1, Q1) + _anti(Qb2, Q2)), J)
    rep.add("({Qbar1,Q1} - {Qbar2,Q2})/2 = T0", half * (_anti(Qb1, Q1) - _anti(Qb2, Q2)), T0)

    rep.add("[Q1,T+] = Q2", _comm(Q1, Tp), Q2)
    rep.add("[Q2,T+] = 0", _comm(Q2, Tp), zero)
    rep.add("[Q1,T-] = 0", _comm(Q1, Tm), zero)
    rep.add("[Q2,T-] = -Q1", _comm(Q2, Tm), -Q1)
    rep.add("[Qbar1,T+] = 0", _comm(Qb1, Tp), zero)
    rep.add("[Qbar2,T+] = Qbar1", _comm(Qb2, Tp), Qb1, documented=QBAR2_TPLUS_NOTE)
    rep.add("[Qbar1,T-] = Qbar2", _comm(Qb1, Tm), Qb2)
    rep.add("[Qbar2,T-] = 0", _comm(Qb2, Tm), zero)

    rep.add("[Q1,T0] = Q1/2", _comm(Q1, T0), half * Q1)
    rep.add("[Q2,T0] = -Q2/2", _comm(Q2, T0), (-half) * Q2)
    rep.add("[Qbar1,T0] = -Qbar1/2", _comm(Qb1, T0), (-half) * Qb1)
    rep.add("[Qbar2,T0] = Qbar2/2", _comm(Qb2, T0), half * Qb2)

    rep.add("[Q1,J] = -Q1/2", _comm(Q1, J), (-half) * Q1)
    rep.add("[Q2,J] = -Q2/2", _comm(Q2, J), (-half) * Q2)
    rep.add("[Qbar1,J] = Qbar1/2", _comm(Qb1, J), half * Qb1)
    rep.add("[Qbar2,J] = Qbar2/2", _comm(Qb2, J), half * Qb2)

    if supplementary:
        rep.add("[Qbar2,T+] = -Qbar1 (sign forced by Jacobi)", _comm(Qb2, Tp), -Qb1, supplementary=True)
        for name, a, b in (
            ("{Q1,Q1} = 0", Q1, Q1),
            ("{Q2,Q2} = 0", Q2, Q2),
            ("{Q1,Q2} = 0", Q1, Q2),
            ("{Qbar1,Qbar1} = 0", Qb1, Qb1),
            ("{Qbar2,Qbar2} = 0", Qb2, Qb2),
            ("{Qbar1,Qbar2} = 0", Qb1, Qb2),
        ):
            rep.add(name, _anti(a, b), zero, supplementary=True)
    return rep


def structure_products(g: GeneratorSet) -> dict[str, MatOp]:
    """The generator words that make up T_Q."""
    Tp, T0, Tm = g.Tplus, g.Tzero, g.Tminus
    Q1, Q2 = g.Q1, g.Q2
    return {
        "2Q2T0T- - Q1T+T-": 2 * (Q2 * T0 * Tm) - Q1 * Tp * Tm,
        "Q2T-T-": Q2 * Tm * Tm,
        "Q2T+": Q2 * Tp,
        "2Q2T0 - Q1T+": 2 * (Q2 * T0) - Q1 * Tp,
        "2(Q2T0 - Q1T+)": 2 * (Q2 * T0 - Q1 * Tp),
        "Q2T-": Q2 * Tm,
        "Q1T-": Q1 * Tm,
        "Q2": Q2,
        "Q1": Q1,
    }


def verify_structure_identities(g: GeneratorSet) -> RelationReport:
    n = g.nparam
    words = structure_products(g)
    expected = {
        "2Q2T0T- - Q1T+T-": MatOp.lower(X * X * D * D),
        "Q2T-T-": MatOp.lower(X * D * D),
        "Q2T+": MatOp.lower(X**3 * D - DiffOp.mul(n * X * X)),
        "2Q2T0 - Q1T+": MatOp.lower(X * X * D),
        "2(Q2T0 - Q1T+)": MatOp.lower(DiffOp.mul(n * X)),
        "Q2T-": MatOp.lower(X * D),
        "Q1T-": MatOp.lower(D),
    }
    rep = RelationReport(f"T_Q building blocks, n = {n}")
    for name, rhs in expected.items():
        rep.add(f"{name} = {rhs}", words[name], rhs)
    return rep


def tq_printed_scalar(n: MultiPoly = N) -> DiffOp:
    return (
        (X * X + X0 * X) * D * D
        + (-(X**3) - X0 * X * X + 2 * BETA * X + 2 * BETA * X0) * D
        + DiffOp.mul(n * X * X + (n * X0 + B - C) * X + B * X0)
    )


def build_TQ_printed(n=None) -> MatOp:
    """T_Q exactly as printed (first-order coefficient carries 2*beta*x)."""
    return MatOp.lower(tq_printed_scalar(_nparam(n)))


@lru_cache(maxsize=None)
def _master_multiplied(n: MultiPoly, x0: MultiPoly, b: MultiPoly, c: MultiPoly) -> DiffOp:
    # coefficients of the master ODE as sums of numerator/denominator pairs
    xp = X + x0
    one = MultiPoly.const(1)
    coeffs = {
        2: [(one, one)],
        1: [(2 * BETA, X), (-X, one), (-one, xp)],
        0: [(n, one), (b, X), (-c, xp)],
    }
    mult = X * xp
    out = {}
    for k, pieces in coeffs.items():
        total = MultiPoly()
        for num, den in pieces:
            quo, rem = (num * mult).divmod_x(den)
            if rem:
                raise ArithmeticError(f"{den} does not divide {num * mult}")
            total = total + quo
        out[k] = total
    return DiffOp(out)


def master_multiplied_scalar(n=None, x0=X0, b=B, c=C) -> DiffOp:
    """Master ODE operator times x(x + x0), with the denominators cleared by division."""
    return _master_multiplied(_nparam(n), MultiPoly.lift(x0), MultiPoly.lift(b), MultiPoly.lift(c))


def build_TQ_from_master(n=None) -> MatOp:
    return MatOp.lower(master_multiplied_scalar(n))


def build_TQ_algebraic(g: GeneratorSet, mode: str = "faithful") -> MatOp:
    """T_Q assembled from generator words.

    ``faithful`` uses 2*beta on Q2T-; ``corrected`` uses 2*beta - 1, which is
    what clearing denominators in the master ODE produces.
    """
    if mode not in ("faithful", "corrected"):
        raise ValueError(f"unknown mode {mode!r}")
    w = structure_products(g)
    beta2 = 2 * BETA
    q2tm = beta2 if mode == "faithful" else beta2 - 1
    return (
        w["2Q2T0T- - Q1T+T-"]
        + X0 * w["Q2T-T-"]
        - w["Q2T+"]
        - X0 * w["2Q2T0 - Q1T+"]
        + q2tm * w["Q2T-"]
        + (beta2 * X0) * w["Q1T-"]
        + X0 * w["2(Q2T0 - Q1T+)"]
        + (B - C) * w["Q2"]
        + (B * X0) * w["Q1"]
    )


def verify_decomposition(n=None, mode: str = "both") -> RelationReport:
    g = make_generators(n)
    printed = build_TQ_printed(g.nparam)
    derived = build_TQ_from_master(g.nparam)
    rep = RelationReport(f"T_Q decompositions, n = {g.nparam}")
    if mode in ("faithful", "both"):
        rep.add("faithful combination = printed T_Q", build_TQ_algebraic(g, "faithful"), printed)
    if mode in ("corrected", "both"):
        rep.add("corrected combination = master-ODE T_Q", build_TQ_algebraic(g, "corrected"), derived)
    if mode == "both":
        rep.add(
            "faithful - corrected = Q2T-",
            build_TQ_algebraic(g, "faithful") - build_TQ_algebraic(g, "corrected"),
            MatOp.lower(X * D),
        )
        rep.add("master-ODE T_Q - printed T_Q = -Q2T-", derived - printed, MatOp.lower(-(X * D)))
    # the printed/derived mismatch itself, reported but never a failure
    diff = derived - printed
    rep.entries.append(
        RelationEntry(
            "printed T_Q vs master-ODE T_Q",
            diff.is_zero(),
            str(printed),
            str(diff),
            info=True,
        )
    )
    return rep


def _image_in_subspace(vec: tuple[MultiPoly, MultiPoly], nval: int) -> bool:
    top, bot = vec
    return top.degree("x") <= nval and bot.degree("x") <= nval + 1


def subspace_basis(nval: int) -> list[tuple[MultiPoly, MultiPoly]]:
    zero = MultiPoly()
    basis = [(X**k, zero) for k in range(nval + 1)]
    basis += [(zero, X**k) for k in range(nval + 2)]
    return basis


def subspace_image_check(nval: int) -> RelationReport:
    """Every generator at integer n maps the (2n+3)-dimensional polynomial space into itself."""
    if nval < 0 or int(nval) != nval:
        raise ValueError("nval must be a non-negative integer")
    nval = int(nval)
    g = make_generators(nval)
    basis = subspace_basis(nval)
    rep = RelationReport(f"invariant subspace, n = {nval} (dim {len(basis)})")
    for name, op in g.items():
        bad = [
            (vec, img)
            for vec in basis
            if not _image_in_subspace(img := op.apply(vec), nval)
        ]
        residual = "; ".join(f"{v} -> ({i[0]}, {i[1]})" for v, i in bad)
        rep.entries.append(RelationEntry(f"{name} preserves subspace", not bad, name, residual))
    return rep
