"""Communication and computation accounting for completed runs."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction

from .errors import CopmmError

# asymptotic descriptors per (problem, family)
_BIG_O = {
    ("SMM", "poly"): {
        "C_A": "O(lambda*omega*N*log(N)^2*loglog(N)/(m*p))",
        "C_w": "O(lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n))",
    },
    ("SMM", "lagrange"): {
        "C_A": "O(R*lambda*omega + lambda*omega*N*log(N)^2*loglog(N)/(m*p))",
        "C_w": "O(lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n) + R*lambda*gamma)",
    },
    ("PSMM", "poly"): {
        "C_A": "O(lambda*omega*N*log(N)^2*loglog(N)/(m*p))",
        "C_w": "O(V*omega*gamma + lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n))",
    },
    ("PSMM", "lagrange"): {
        "C_A": "O(R*lambda*omega + lambda*omega*N*log(N)^2*loglog(N)/(m*p))",
        "C_w": "O(V*R*omega*gamma + lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n) + R*lambda*gamma)",
    },
    ("FPMM", "poly"): {
        "C_A": "O(1) (queries only)",
        "C_w": "O(U*lambda*omega + V*omega*gamma + lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n))",
    },
    ("FPMM", "lagrange"): {
        "C_A": "O(1) (queries only)",
        "C_w": "O(U*R*lambda*omega + V*R*omega*gamma + lambda*omega*gamma/(m*p*n))",
        "C_d": "O(lambda*gamma*K*log(K)^2*loglog(K)/(m*n) + R*lambda*gamma)",
    },
}


@dataclass
class RunMetrics:
    """Measured symbol and operation counts of one run."""

    uploaded_symbols: int = 0
    query_scalars: int = 0
    downloaded_symbols: int = 0
    worker_ops: dict = field(default_factory=dict)
    encode_ops: int = 0
    decode_ops: int = 0
    responses_used: list = field(default_factory=list)
    seconds: dict = field(default_factory=dict)

    def to_json(self, timing: bool = False) -> dict:
        """Counters as a dict; wall-clock seconds only when ``timing`` is set."""
        out = asdict(self)
        if not timing:
            del out["seconds"]
        out["worker_ops"] = {str(k): v for k, v in self.worker_ops.items()}
        return out


@dataclass(frozen=True)
class CostContext:
    problem: str
    family: str
    m: int
    p: int
    n: int
    N: int
    K: int
    lam: int
    omega: int
    gamma: int


@dataclass
class CostReport:
    P_u: Fraction | None
    P_d: Fraction
    upload_symbols: int
    query_scalars: int
    download_symbols: int
    upload_neglected: bool
    complexity: dict

    def to_json(self) -> dict:
        return {
            "P_u": None if self.P_u is None else str(self.P_u),
            "P_d": str(self.P_d),
            "upload_symbols": self.upload_symbols,
            "query_scalars": self.query_scalars,
            "download_symbols": self.download_symbols,
            "upload_neglected": self.upload_neglected,
            "complexity": self.complexity,
        }


def closed_form_costs(problem: str, N: int, K: int, m: int, p: int, n: int):
    P_u = None if problem == "FPMM" else Fraction(N, m * p)
    return P_u, Fraction(K, m * n)


def cost_report(metrics: RunMetrics, ctx: CostContext) -> CostReport:
    """Normalized costs of a completed run, checked against the closed forms.

    FPMM uploads no share of A; its upload is the query scalars alone, which
    is reported with ``upload_neglected`` set and ``P_u = None``.
    """
    fpmm = ctx.problem == "FPMM"
    P_u = None if fpmm else Fraction(metrics.uploaded_symbols, ctx.lam * ctx.omega)
    P_d = Fraction(metrics.downloaded_symbols, ctx.lam * ctx.gamma)
    want_u, want_d = closed_form_costs(ctx.problem, ctx.N, ctx.K, ctx.m, ctx.p, ctx.n)
    if P_u != want_u or P_d != want_d:
        raise CopmmError(
            f"measured costs (P_u={P_u}, P_d={P_d}) disagree with closed forms "
            f"(P_u={want_u}, P_d={want_d})"
        )
    names = _BIG_O.get((ctx.problem, ctx.family), {})
    worker = max(metrics.worker_ops.values(), default=0)
    complexity = {
        "C_A": {"big_o": names.get("C_A"), "ops": metrics.encode_ops},
        "C_w": {"big_o": names.get("C_w"), "ops": worker},
        "C_d": {"big_o": names.get("C_d"), "ops": metrics.decode_ops},
    }
    return CostReport(
        P_u,
        P_d,
        metrics.uploaded_symbols,
        metrics.query_scalars,
        metrics.downloaded_symbols,
        fpmm,
        complexity,
    )
