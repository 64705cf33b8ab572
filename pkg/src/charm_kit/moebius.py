"""Semicircle reflection groups and shell-by-shell orbit enumeration.

A configuration is a finite family of disjoint closed half-disks with real
centers; the 0-th one is the unit half-disk.  The group is generated by the
maps ``tau_0 o tau_k`` (``tau_k`` the reflection in the k-th semicircle), which
generate a free group.  Elements are enumerated breadth first by reduced word
length ("shells"), and all orbit sums in the package are accumulated shell by
shell so that the size of the last shell can serve as a truncation estimate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import ConfigError, InvalidGeneratorError, PoleError, TruncationError

DET_TOL = 1e-12


@dataclass(frozen=True)
class Semicircle:
    index: int
    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"semicircle {self.index}: radius must be positive")
        if self.index == 0 and (self.center != 0.0 or self.radius != 1.0):
            raise ConfigError("semicircle 0 must be the unit semicircle (center 0, radius 1)")

    @property
    def interval(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def point(self, angle):
        """Point of the arc at polar angle ``angle`` (0 < angle < pi)."""
        return self.center + self.radius * np.exp(1j * np.asarray(angle))


@dataclass(frozen=True)
class SemicircleConfig:
    semicircles: tuple[Semicircle, ...]

    def __post_init__(self):
        object.__setattr__(self, "semicircles", tuple(self.semicircles))
        idx = [s.index for s in self.semicircles]
        if len(set(idx)) != len(idx):
            raise ConfigError("duplicate semicircle index")
        if 0 not in idx:
            raise ConfigError("configuration must contain semicircle 0")
        ordered = sorted(self.semicircles, key=lambda s: s.center)
        for left, right in zip(ordered, ordered[1:]):
            # touching closures would create parabolic elements
            if not left.center + left.radius < right.center - right.radius:
                raise ConfigError(
                    f"semicircles {left.index} and {right.index} are not strictly disjoint"
                )

    @classmethod
    def from_triples(cls, triples: Sequence[tuple[int, float, float]]) -> "SemicircleConfig":
        return cls(tuple(Semicircle(int(i), float(c), float(r)) for i, c, r in triples))

    def __getitem__(self, index: int) -> Semicircle:
        for s in self.semicircles:
            if s.index == index:
                return s
        raise KeyError(index)

    def __contains__(self, index) -> bool:
        return any(s.index == index for s in self.semicircles)

    @property
    def generator_indices(self) -> tuple[int, ...]:
        return tuple(sorted(s.index for s in self.semicircles if s.index != 0))

    @property
    def rank(self) -> int:
        return len(self.semicircles) - 1

    def restrict(self, indices) -> "SemicircleConfig":
        """Sub-configuration keeping only ``indices`` (the others flattened to diameters)."""
        keep = set(indices)
        return SemicircleConfig(tuple(s for s in self.semicircles if s.index in keep))

    def to_dict(self) -> dict:
        return {
            "semicircles": [
                {"index": s.index, "center": s.center, "radius": s.radius}
                for s in self.semicircles
            ]
        }

    def on_real_boundary(self, x: float, margin: float = 0.0) -> bool:
        """True if real ``x`` lies on the real part of the boundary of the region
        outside all half-disks (at least ``margin`` away from every interval)."""
        return all(abs(x - s.center) > s.radius + margin for s in self.semicircles)


@dataclass(frozen=True)
class TruncationPolicy:
    max_word_length: int = 8
    target_tail: float = 1e-10
    element_cap: int = 2_000_000
    safety_factor: float = 3.0

    def __post_init__(self):
        if self.max_word_length < 0:
            raise ConfigError("max_word_length must be >= 0")
        if not self.target_tail > 0:
            raise ConfigError("target_tail must be > 0")
        if self.element_cap < 1:
            raise ConfigError("element_cap must be >= 1")


_CONFIG_KEYS = {"semicircles", "truncation"}
_SEMICIRCLE_KEYS = {"index", "center", "radius"}
_TRUNCATION_KEYS = {"max_word_length", "target_tail", "element_cap"}


def parse_config(doc: dict) -> tuple[SemicircleConfig, TruncationPolicy]:
    """Parse the JSON configuration document; unknown fields are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    extra = set(doc) - _CONFIG_KEYS
    if extra:
        raise ConfigError(f"unknown configuration fields: {sorted(extra)}")
    if "semicircles" not in doc:
        raise ConfigError("missing 'semicircles'")
    sems = []
    for item in doc["semicircles"]:
        extra = set(item) - _SEMICIRCLE_KEYS
        missing = _SEMICIRCLE_KEYS - set(item)
        if extra or missing:
            raise ConfigError(f"bad semicircle entry {item!r}")
        sems.append(Semicircle(int(item["index"]), float(item["center"]), float(item["radius"])))
    trunc = doc.get("truncation", {})
    extra = set(trunc) - _TRUNCATION_KEYS
    if extra:
        raise ConfigError(f"unknown truncation fields: {sorted(extra)}")
    policy = TruncationPolicy(
        max_word_length=int(trunc.get("max_word_length", TruncationPolicy.max_word_length)),
        target_tail=float(trunc.get("target_tail", TruncationPolicy.target_tail)),
        element_cap=int(trunc.get("element_cap", TruncationPolicy.element_cap)),
    )
    return SemicircleConfig(tuple(sems)), policy


def load_config(path) -> tuple[SemicircleConfig, TruncationPolicy]:
    return parse_config(json.loads(Path(path).read_text()))


def reflect(s: Semicircle, z: complex) -> complex:
    """Reflection (inversion) in the circle of ``s``: c + r^2 / conj(z - c)."""
    w = complex(z) - s.center
    if w == 0:
        raise PoleError(f"reflection in semicircle {s.index} at its center")
    return s.center + s.radius**2 / w.conjugate()


def reduce_word(word: Sequence[int]) -> tuple[int, ...]:
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


@dataclass(frozen=True)
class MoebiusMap:
    """z -> (a z + b) / (c z + d) with ad - bc = 1, tagged by its reduced word."""

    a: float
    b: float
    c: float
    d: float
    word: tuple[int, ...] = ()

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0, ())

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def is_identity(self) -> bool:
        return not self.word

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a, tuple(-x for x in reversed(self.word)))

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        s = math.sqrt(a * d - b * c)
        return MoebiusMap(a / s, b / s, c / s, d / s, reduce_word(self.word + other.word))

    def __call__(self, z):
        return apply(self, z)


def apply(g: MoebiusMap, z):
    z = np.asarray(z, dtype=complex)
    den = g.c * z + g.d
    if np.any(den == 0):
        raise PoleError(f"{g.word}: pole at {-g.d / g.c}")
    out = (g.a * z + g.b) / den
    return complex(out) if out.ndim == 0 else out


def derivative(g: MoebiusMap, z):
    """gamma'(z) = 1 / (c z + d)^2."""
    z = np.asarray(z, dtype=complex)
    den = g.c * z + g.d
    if np.any(den == 0):
        raise PoleError(f"{g.word}: pole at {-g.d / g.c}")
    out = 1.0 / den**2
    return complex(out) if out.ndim == 0 else out


def generator(config: SemicircleConfig, k: int) -> MoebiusMap:
    """The generator tau_0 o tau_k (word ``(k,)``); its inverse is tau_k o tau_0."""
    if k == 0 or k not in config:
        raise InvalidGeneratorError(f"no generator for semicircle index {k}")
    s = config[k]
    c, r = s.center, s.radius
    # tau_0(tau_k(z)) = (z - c) / (c z - c^2 + r^2), determinant r^2
    return MoebiusMap(1.0 / r, -c / r, c / r, (r * r - c * c) / r, (k,))


def conjugate_by_inversion(g: MoebiusMap) -> MoebiusMap:
    """gamma -> tau gamma tau with tau(z) = 1/conj(z).

    On generators this is tau_0 tau_0 tau_k tau_0 = g_k^{-1}, so the word is
    obtained by inverting every letter in place.
    """
    return MoebiusMap(g.d, g.c, g.b, g.a, tuple(-x for x in g.word))


def _alphabet(config: SemicircleConfig) -> list[int]:
    letters = []
    for k in config.generator_indices:
        letters += [k, -k]
    return letters


def _letter_matrix(config: SemicircleConfig, letter: int) -> np.ndarray:
    g = generator(config, abs(letter))
    if letter < 0:
        g = g.inverse()
    return np.array([g.a, g.b, g.c, g.d])


def _right_multiply(m: np.ndarray, g: np.ndarray) -> np.ndarray:
    a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    out = np.empty_like(m)
    out[:, 0] = a * g[0] + b * g[2]
    out[:, 1] = a * g[1] + b * g[3]
    out[:, 2] = c * g[0] + d * g[2]
    out[:, 3] = c * g[1] + d * g[3]
    return out


_SPLIT = 134217729.0  # 2**27 + 1


def _two_product(x: np.ndarray, y: np.ndarray):
    """Dekker's error-free product: x*y == p + e exactly."""
    p = x * y
    cx = _SPLIT * x
    xh = cx - (cx - x)
    xl = x - xh
    cy = _SPLIT * y
    yh = cy - (cy - y)
    yl = y - yh
    e = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl
    return p, e


def accurate_det(m: np.ndarray) -> np.ndarray:
    """ad - bc for rows (a, b, c, d) without cancellation loss."""
    p1, e1 = _two_product(m[:, 0], m[:, 3])
    p2, e2 = _two_product(m[:, 1], m[:, 2])
    return (p1 - p2) + (e1 - e2)


def det_scale(m: np.ndarray) -> np.ndarray:
    """|ad| + |bc|: rounding in the entries perturbs the determinant by eps times this."""
    return np.abs(m[:, 0] * m[:, 3]) + np.abs(m[:, 1] * m[:, 2])


def _renormalize(m: np.ndarray) -> None:
    """Divide rows by sqrt(det) where the determinant is resolvable to DET_TOL.

    Rows with eps * (|ad| + |bc|) > DET_TOL are left alone: their entries are
    still accurate to a few ulps, but ad - bc of the rounded entries is
    dominated by rounding and dividing by it would corrupt them.
    """
    ok = np.finfo(float).eps * det_scale(m) <= DET_TOL
    if np.any(ok):
        m[ok] /= np.sqrt(accurate_det(m[ok]))[:, None]


def act(m: np.ndarray, z):
    """gamma(z) for every row of ``m`` (unit determinant assumed).

    The imaginary part is taken from Im z / |cz + d|^2, which stays accurate
    when the entries are large and the direct quotient cancels.
    """
    a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
    den = c * z + d
    w = (a * z + b) / den
    return w.real + 1j * (np.imag(z) / np.abs(den) ** 2)


def shell_size(rank: int, length: int) -> int:
    if length == 0:
        return 1
    if rank == 0:
        return 0
    return 2 * rank * (2 * rank - 1) ** (length - 1)


def blaschke_mass(m: np.ndarray, z: complex) -> float:
    """sum Im w / |z - conj w|^2 over w = gamma(z) for the rows of ``m``."""
    w = act(m, z)
    return float(np.sum(w.imag / np.abs(z - np.conj(w)) ** 2))


@dataclass(frozen=True, eq=False)
class OrbitAccumulator:
    """All reduced words up to ``max_word_length``, stored shell by shell.

    ``mats`` holds the rows (a, b, c, d) of every element in shell order;
    ``offsets[L]:offsets[L+1]`` is shell L.
    """

    config: SemicircleConfig
    policy: TruncationPolicy
    mats: np.ndarray
    words: tuple[np.ndarray, ...]
    offsets: np.ndarray
    shell_mass: np.ndarray
    tail_bound: float
    reference_point: complex = 1j
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def max_word_length(self) -> int:
        return len(self.offsets) - 2

    @property
    def n_shells(self) -> int:
        return len(self.offsets) - 1

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    @property
    def shell_sizes(self) -> list[int]:
        return np.diff(self.offsets).tolist()

    @property
    def degraded(self) -> bool:
        return self.tail_bound > self.policy.target_tail

    @property
    def a(self):
        return self.mats[:, 0]

    @property
    def b(self):
        return self.mats[:, 1]

    @property
    def c(self):
        return self.mats[:, 2]

    @property
    def d(self):
        return self.mats[:, 3]

    def shell(self, length: int) -> slice:
        return slice(int(self.offsets[length]), int(self.offsets[length + 1]))

    def shell_sums(self, values: np.ndarray) -> np.ndarray:
        """Per-shell sums of a per-element array (pairwise summation within a shell)."""
        return np.array([np.sum(values[self.shell(L)]) for L in range(self.n_shells)])

    def total(self, values: np.ndarray):
        """Compensated total of a per-element array plus its truncation estimate."""
        sums = self.shell_sums(values)
        if np.iscomplexobj(sums):
            tot = complex(math.fsum(sums.real), math.fsum(sums.imag))
        else:
            tot = math.fsum(sums)
        return tot, self.tail_of(sums)

    def tail_of(self, shell_sums: np.ndarray) -> float:
        if len(shell_sums) < 2:
            return 0.0
        return float(self.policy.safety_factor * abs(shell_sums[-1]))

    def elements(self, max_length: int | None = None) -> Iterator[MoebiusMap]:
        top = self.max_word_length if max_length is None else min(max_length, self.max_word_length)
        for L in range(top + 1):
            sl = self.shell(L)
            for row, word in zip(self.mats[sl], self.words[L]):
                yield MoebiusMap(*map(float, row), tuple(int(x) for x in word))

    def orbit(self, z: complex) -> np.ndarray:
        key = ("orbit", complex(z))
        if key not in self._cache:
            self._cache[key] = act(self.mats, z)
        return self._cache[key]


def enumerate_shells(
    config: SemicircleConfig,
    policy: TruncationPolicy | None = None,
    reference_point: complex = 1j,
) -> OrbitAccumulator:
    """Breadth-first enumeration of reduced words.

    Stops at ``max_word_length`` or as soon as the tail estimate (safety factor
    times the Blaschke mass of the last shell at ``reference_point``) drops
    below ``target_tail``.
    """
    policy = policy or TruncationPolicy()
    alphabet = _alphabet(config)
    gens = {x: _letter_matrix(config, x) for x in alphabet}

    mats = [np.array([[1.0, 0.0, 0.0, 1.0]])]
    words = [np.zeros((1, 0), dtype=np.int16)]
    last = np.zeros(1, dtype=np.int16)
    masses = [blaschke_mass(mats[0], reference_point)]
    tail = 0.0

    def build(tail_value):
        allm = np.concatenate(mats)
        allm.setflags(write=False)
        offsets = np.concatenate([[0], np.cumsum([len(m) for m in mats])])
        return OrbitAccumulator(
            config, policy, allm, tuple(words), offsets, np.array(masses), tail_value,
            reference_point,
        )

    total = 1
    for L in range(1, policy.max_word_length + 1):
        if not alphabet:
            break
        expected = shell_size(config.rank, L)
        if total + expected > policy.element_cap:
            raise TruncationError(
                f"element cap {policy.element_cap} exceeded at word length {L}", partial=build(tail)
            )
        prev_m, prev_w = mats[-1], words[-1]
        new_m, new_w, new_last = [], [], []
        for x in alphabet:
            mask = last != -x
            new_m.append(_right_multiply(prev_m[mask], gens[x]))
            w = prev_w[mask]
            new_w.append(np.hstack([w, np.full((len(w), 1), x, dtype=np.int16)]))
            new_last.append(np.full(len(w), x, dtype=np.int16))
        m = np.concatenate(new_m)
        _renormalize(m)
        mats.append(m)
        words.append(np.concatenate(new_w))
        last = np.concatenate(new_last)
        total += len(m)
        masses.append(blaschke_mass(m, reference_point))
        tail = policy.safety_factor * masses[-1]
        if tail <= policy.target_tail:
            break
    return build(tail)


def collision_spot_check(acc: OrbitAccumulator, z: complex = 2j, tol: float = 1e-12) -> bool:
    """Debug check of freeness: orbit points of ``z`` are pairwise distinct."""
    w = acc.orbit(z)
    key = np.round(w.real / tol) + 1j * np.round(w.imag / tol)
    return len(np.unique(key)) == len(w)
