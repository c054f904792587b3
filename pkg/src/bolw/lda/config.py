from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import UserError


@dataclass(frozen=True)
class VbSettings:
    """Online variational Bayes schedule.

    ``kappa = 0`` switches the decaying step size off (every step is 1), which
    together with ``batch_size >= N`` gives plain batch variational Bayes.
    """

    batch_size: int = 256
    kappa: float = 0.7
    tau0: float = 1.0
    passes: int = 5
    doc_update_iters: int = 100
    doc_convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.batch_size < 1:
            raise UserError("batch_size must be >= 1")
        if not (self.kappa == 0 or 0.5 < self.kappa <= 1):
            raise UserError("kappa must lie in (0.5, 1], or be 0 to disable decay")
        if self.tau0 < 0:
            raise UserError("tau0 must be >= 0")
        if self.passes < 1 or self.doc_update_iters < 1:
            raise UserError("passes and doc_update_iters must be >= 1")
        if self.doc_convergence_tol < 0:
            raise UserError("doc_convergence_tol must be >= 0")

    def step_size(self, t: int) -> float:
        """Learning rate for the ``t``-th global update, ``t`` counting from 1."""
        if self.kappa == 0:
            return 1.0
        return (self.tau0 + t) ** -self.kappa


@dataclass(frozen=True)
class GibbsSettings:
    """``iterations`` full sweeps, the first ``burn_in`` of which are discarded."""

    iterations: int = 500
    burn_in: int = 100

    def __post_init__(self):
        if self.burn_in < 0 or self.iterations <= self.burn_in:
            raise UserError("need 0 <= burn_in < iterations")


@dataclass(frozen=True)
class LdaConfig:
    """Topic count, symmetric Dirichlet priors and estimator settings.

    ``alpha`` defaults to ``50 / k``.
    """

    k: int = 10
    alpha: float | None = None
    beta: float = 0.1
    seed: int = 0
    vb: VbSettings = field(default_factory=VbSettings)
    gibbs: GibbsSettings = field(default_factory=GibbsSettings)

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 2:
            raise UserError(f"k must be an integer >= 2, got {self.k!r}")
        if self.alpha is None:
            object.__setattr__(self, "alpha", 50.0 / self.k)
        if not self.alpha > 0 or not self.beta > 0:
            raise UserError("alpha and beta must be > 0")
        if not 0 <= self.seed < 2**64:
            raise UserError("seed must be a 64-bit unsigned integer")
        if isinstance(self.vb, dict):
            object.__setattr__(self, "vb", VbSettings(**self.vb))
        if isinstance(self.gibbs, dict):
            object.__setattr__(self, "gibbs", GibbsSettings(**self.gibbs))

    @property
    def default_alpha(self) -> bool:
        return self.alpha == 50.0 / self.k

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> LdaConfig:
        return cls(**data)
