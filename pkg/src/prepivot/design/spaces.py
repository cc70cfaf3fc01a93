"""
Assignment spaces.

Every space can be enumerated in lexicographic order of its assignment
vectors (subject to a cap) and sampled uniformly with one counter-based
substream per draw, so concurrent sampling reproduces the sequential draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..errors import (
    DimensionMismatchError,
    EnumerationTooLargeError,
    InfeasibleBalanceError,
    InvalidDesignError,
)
from ..utils import Purpose, get_logger, ordered_map, substream
from .balance import BalanceCriterion, accepts


logger = get_logger(__name__)

DESIGNS = ("cre", "rerandomized", "paired", "multiarm")

_CHUNK = 65_536
_ATTEMPT_BATCH = 32


def pair_members(pairs: Optional[Sequence], n_units: int) -> Tuple[Tuple[int, int], ...]:
    """Group units into pairs by label; ``None`` pairs consecutive units.

    Pairs are ordered by the first appearance of their label.
    """
    if pairs is None:
        if n_units % 2:
            raise InvalidDesignError(f"Consecutive pairing needs an even number of units, got {n_units}")
        return tuple((i, i + 1) for i in range(0, n_units, 2))
    labels = list(pairs)
    if len(labels) != n_units:
        raise InvalidDesignError(f"Expected {n_units} pair labels, got {len(labels)}")
    members: dict = {}
    for unit, label in enumerate(labels):
        members.setdefault(label, []).append(unit)
    bad = {label: units for label, units in members.items() if len(units) != 2}
    if bad:
        raise InvalidDesignError(f"Every pair needs exactly two units; malformed pairs: {bad}")
    return tuple((units[0], units[1]) for units in members.values())


def _lex_permutations(labels: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Distinct permutations of a multiset in ascending lexicographic order."""
    a = sorted(labels)
    n = len(a)
    while True:
        yield tuple(a)
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = reversed(a[i + 1 :])


def _lex_sorted(rows: np.ndarray) -> np.ndarray:
    return rows[np.lexsort(rows.T[::-1])]


@dataclass(frozen=True, eq=False)
class AssignmentSpace:
    """The set of assignments a design can produce, each equally likely.

    Two-arm spaces use label 1 for treatment and 0 for control; multi-arm
    spaces use labels ``0..A-1``.
    """

    kind: str
    n_units: int
    arm_sizes: Tuple[int, ...]
    covariates: Optional[np.ndarray] = None
    criterion: BalanceCriterion = field(default_factory=BalanceCriterion.none)
    pairs: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self) -> None:
        if self.kind not in DESIGNS:
            raise InvalidDesignError(f"Unknown design {self.kind!r}; expected one of {DESIGNS}")
        if sum(self.arm_sizes) != self.n_units:
            raise InvalidDesignError(f"Arm sizes {self.arm_sizes} do not sum to N={self.n_units}")
        if len(self.arm_sizes) < 2 or min(self.arm_sizes) < 1:
            raise InvalidDesignError(f"Every arm needs at least one unit, got {self.arm_sizes}")

    # construction -----------------------------------------------------------------

    @classmethod
    def cre(cls, n_units: int, n1: int) -> "AssignmentSpace":
        if not 1 <= n1 <= n_units - 1:
            raise InvalidDesignError(f"n1 must lie in [1, {n_units - 1}], got {n1}")
        return cls(kind="cre", n_units=n_units, arm_sizes=(n_units - n1, n1))

    @classmethod
    def rerandomized(
        cls, covariates: np.ndarray, n1: int, criterion: BalanceCriterion
    ) -> "AssignmentSpace":
        """Completely randomized assignments accepted by ``criterion`` at ``sqrt(N) delta_hat``."""
        x = np.asarray(covariates, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[1] == 0 and not criterion.is_trivial:
            raise DimensionMismatchError("Rerandomized designs need at least one covariate")
        n_units = x.shape[0]
        if not 1 <= n1 <= n_units - 1:
            raise InvalidDesignError(f"n1 must lie in [1, {n_units - 1}], got {n1}")
        x = x.copy()
        x.flags.writeable = False
        return cls(
            kind="rerandomized",
            n_units=n_units,
            arm_sizes=(n_units - n1, n1),
            covariates=x,
            criterion=criterion.resolve(x, n1),
        )

    @classmethod
    def paired(cls, pairs: Optional[Sequence] = None, n_pairs: Optional[int] = None) -> "AssignmentSpace":
        """Matched pairs with exactly one treated unit per pair."""
        if pairs is None and n_pairs is None:
            raise InvalidDesignError("Paired designs need pair labels or a pair count")
        n_units = len(pairs) if pairs is not None else 2 * n_pairs
        members = pair_members(pairs, n_units)
        if len(members) < 2:
            raise InvalidDesignError(f"Paired designs need at least two pairs, got {len(members)}")
        return cls(
            kind="paired",
            n_units=n_units,
            arm_sizes=(len(members), len(members)),
            pairs=members,
        )

    @classmethod
    def multiarm(cls, arm_sizes: Sequence[int]) -> "AssignmentSpace":
        sizes = tuple(int(n) for n in arm_sizes)
        return cls(kind="multiarm", n_units=sum(sizes), arm_sizes=sizes)

    @classmethod
    def for_study(
        cls, study, design: str, criterion: Optional[BalanceCriterion] = None
    ) -> "AssignmentSpace":
        """Build the design space an observed study was drawn from."""
        if design in ("cre", "rerandomized") and study.n_arms != 2:
            raise InvalidDesignError(f"Design {design!r} needs a two-arm study, got {study.n_arms} arms")
        n1 = study.arm_sizes[1] if study.n_arms == 2 else None
        if design == "cre":
            space = cls.cre(study.n_units, n1)
        elif design == "rerandomized":
            space = cls.rerandomized(study.covariates, n1, criterion or BalanceCriterion.none())
        elif design == "paired":
            space = cls.paired(pairs=study.pairs, n_pairs=None if study.pairs is not None else study.n_units // 2)
            if study.pairs is None and study.n_units % 2:
                raise InvalidDesignError("Paired designs need an even number of units")
        elif design == "multiarm":
            space = cls.multiarm(study.arm_sizes)
        else:
            raise InvalidDesignError(f"Unknown design {design!r}; expected one of {DESIGNS}")
        if not space.contains(study.assignment):
            raise InvalidDesignError(f"The observed assignment is not an element of the {design} design")
        logger.info("Built %s design: N=%d, arm sizes %s", design, space.n_units, space.arm_sizes)
        return space

    # properties -------------------------------------------------------------------

    @property
    def n_arms(self) -> int:
        return len(self.arm_sizes)

    @property
    def n1(self) -> int:
        if self.n_arms != 2:
            raise InvalidDesignError("n1 is defined for two-arm designs only")
        return self.arm_sizes[1]

    @property
    def scale(self) -> int:
        """Multiplier whose square root scales the estimators: pair count for paired designs, N otherwise."""
        return len(self.pairs) if self.kind == "paired" else self.n_units

    def super_cardinality(self) -> int:
        """Size of the unconstrained space this design filters (exact integer)."""
        if self.kind == "paired":
            return 2 ** len(self.pairs)
        count = math.factorial(self.n_units)
        for size in self.arm_sizes:
            count //= math.factorial(size)
        return count

    def cardinality(self) -> Optional[int]:
        """Exact ``|Omega|``; ``None`` for rerandomized spaces, which are only known by enumeration."""
        if self.kind == "rerandomized" and not self.criterion.is_trivial:
            return None
        return self.super_cardinality()

    def scaled_deltas(self, assignments: np.ndarray) -> np.ndarray:
        """``sqrt(N) * delta_hat(x, w)`` for each row of ``assignments``."""
        w = np.atleast_2d(assignments).astype(float)
        n0, n1 = self.arm_sizes
        x = self.covariates
        return np.sqrt(self.n_units) * (w @ x / n1 - (1.0 - w) @ x / n0)

    def contains(self, assignment) -> bool:
        w = np.asarray(assignment)
        if w.shape != (self.n_units,):
            return False
        counts = np.bincount(w.astype(int), minlength=self.n_arms) if (w >= 0).all() else None
        if counts is None or counts.size != self.n_arms or tuple(counts) != self.arm_sizes:
            return False
        if self.kind == "paired":
            return all(w[i] + w[j] == 1 for i, j in self.pairs)
        if self.kind == "rerandomized" and not self.criterion.is_trivial:
            return bool(accepts(self.criterion, self.scaled_deltas(w))[0])
        return True

    # enumeration ------------------------------------------------------------------

    def _iter_super(self) -> Iterator[np.ndarray]:
        """Chunks of the unconstrained space in lexicographic order."""
        if self.kind == "paired":
            n_pairs = len(self.pairs)
            codes = np.arange(2**n_pairs)[:, None]
            bits = (codes >> np.arange(n_pairs)[::-1]) & 1
            rows = np.zeros((codes.shape[0], self.n_units), dtype=np.int8)
            for p, (i, j) in enumerate(self.pairs):
                rows[:, i] = bits[:, p]
                rows[:, j] = 1 - bits[:, p]
            yield _lex_sorted(rows)
            return
        labels = np.repeat(np.arange(self.n_arms), self.arm_sizes)
        perms = _lex_permutations(labels.tolist())
        while True:
            chunk = list(islice(perms, _CHUNK))
            if not chunk:
                return
            yield np.array(chunk, dtype=np.int8)

    def enumerate(self, cap: Optional[int] = None) -> np.ndarray:
        """Every element of the space once, as rows in lexicographic order."""
        cap = settings.enumeration_cap if cap is None else cap
        size = self.super_cardinality()
        if size > cap:
            raise EnumerationTooLargeError(
                f"The {self.kind} design has {size} candidate assignments, above the cap of {cap}; "
                "use sampled mode instead"
            )
        chunks = []
        for chunk in self._iter_super():
            if self.kind == "rerandomized" and not self.criterion.is_trivial:
                chunk = chunk[accepts(self.criterion, self.scaled_deltas(chunk))]
            chunks.append(chunk)
        rows = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, self.n_units), dtype=np.int8)
        if rows.shape[0] == 0:
            raise InfeasibleBalanceError(
                f"No assignment satisfies the balance criterion ({size} candidates checked)",
                accepted=0,
                attempts=size,
            )
        logger.debug("Enumerated %d of %d candidate assignments", rows.shape[0], size)
        return rows

    # sampling ---------------------------------------------------------------------

    def _draw_unconstrained(self, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "paired":
            first = rng.integers(0, 2, size=len(self.pairs))
            w = np.zeros(self.n_units, dtype=np.int8)
            for p, (i, j) in enumerate(self.pairs):
                w[i] = first[p]
                w[j] = 1 - first[p]
            return w
        labels = np.repeat(np.arange(self.n_arms, dtype=np.int8), self.arm_sizes)
        return rng.permutation(labels)

    def _draw_balanced(self, rng: np.random.Generator, max_attempts: int) -> np.ndarray:
        n1 = self.n1
        attempts = 0
        accepted = 0
        while attempts < max_attempts:
            batch = min(_ATTEMPT_BATCH, max_attempts - attempts)
            candidates = (rng.random((batch, self.n_units)).argsort(axis=1) < n1).astype(np.int8)
            ok = accepts(self.criterion, self.scaled_deltas(candidates))
            if ok.any():
                return candidates[np.argmax(ok)]
            attempts += batch
            accepted += int(ok.sum())
        raise InfeasibleBalanceError(
            f"No balanced assignment found in {attempts} attempts "
            f"(empirical acceptance rate {accepted / attempts:.1e})",
            accepted=accepted,
            attempts=attempts,
        )

    def draw(self, seed: int, index: int, max_attempts: Optional[int] = None) -> np.ndarray:
        """The ``index``-th uniform draw of the stream keyed by ``seed``."""
        rng = substream(seed, Purpose.ASSIGNMENTS, index)
        if self.kind == "rerandomized" and not self.criterion.is_trivial:
            return self._draw_balanced(rng, max_attempts or settings.max_attempts)
        return self._draw_unconstrained(rng)

    def sample_uniform(
        self,
        count: int,
        seed: int,
        threads: int = 1,
        max_attempts: Optional[int] = None,
        start: int = 0,
    ) -> np.ndarray:
        """``count`` independent uniform draws (rows), draw ``i`` keyed by index ``start + i``."""
        if count < 1:
            raise InvalidDesignError(f"Need at least one draw, got {count}")
        rows = ordered_map(
            lambda i: self.draw(seed, i, max_attempts),
            range(start, start + count),
            threads=threads,
        )
        return np.vstack(rows)

    def acceptance_rate(self, attempts: int, seed: int) -> float:
        """Fraction of completely randomized draws the balance criterion accepts."""
        if self.criterion.is_trivial:
            return 1.0
        rng = substream(seed, Purpose.ASSIGNMENTS, 0)
        accepted = 0
        remaining = attempts
        while remaining > 0:
            batch = min(_CHUNK // 8, remaining)
            candidates = (rng.random((batch, self.n_units)).argsort(axis=1) < self.n1).astype(np.int8)
            accepted += int(accepts(self.criterion, self.scaled_deltas(candidates)).sum())
            remaining -= batch
        rate = accepted / attempts
        logger.info("Balance acceptance rate %.4f over %d attempts", rate, attempts)
        return rate
