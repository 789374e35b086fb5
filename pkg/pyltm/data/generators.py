# -*- coding: utf-8 -*-
"""Synthetic domains that stand in for recorded RAM traces, and their
composition into one unlabeled stream.

Each domain kind writes its pattern into a span of bit channels; the
remaining bit channels stay at zero. The default domains use disjoint
spans of a 32-bit frame so that every domain is recognisable from raw
frames.
"""
# License: BSD 2 clause

import logging
import numpy as np
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pyltm.utils.tools import make_rng

logger = logging.getLogger(__name__)

KINDS = ("counter", "shift_register", "periodic", "markov_bits")


@dataclass
class DomainSpec(object):
    """One synthetic domain.

    Parameters
    ----------
    name : str
    kind : str
        One of "counter", "shift_register", "periodic", "markov_bits".
    n_bits : int, optional (default=32)
    n_actions : int, optional (default=0)
        When positive, every frame ends with a random one-hot action.
    params : dict, optional
        Kind parameters. All kinds take ``offset`` (first bit channel of the
        span, default 0) and ``span`` (default 8). ``counter`` also takes
        ``start``; ``periodic`` takes ``period`` (default 5);
        ``markov_bits`` takes ``flip_low``/``flip_high`` (range of the
        per-bit flip probabilities) and ``transition_seed``.
    """

    name: str
    kind: str
    n_bits: int = 32
    n_actions: int = 0
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}, expected one of {KINDS}")
        offset, span = self.span
        if offset < 0 or span < 1 or offset + span > self.n_bits:
            raise ValueError(f"domain {self.name!r}: bit span [{offset}, {offset + span}) "
                             f"does not fit {self.n_bits} bit channels")

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions

    @property
    def span(self) -> Tuple[int, int]:
        return int(self.params.get("offset", 0)), int(self.params.get("span", 8))


def _counter(spec: DomainSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    _, span = spec.span
    start = int(spec.params.get("start", 0))
    values = (start + np.arange(count)) % (2 ** span)
    # little-endian: channel j holds bit j of the value
    return ((values[:, None] >> np.arange(span)[None, :]) & 1).astype(np.float64)


def _shift_register(spec: DomainSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    _, span = spec.span
    pattern = rng.integers(0, 2, size=span)
    if not pattern.any():
        pattern[0] = 1
    return np.stack([np.roll(pattern, t) for t in range(count)]).astype(np.float64)


def _periodic(spec: DomainSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    _, span = spec.span
    period = int(spec.params.get("period", 5))
    if period < 1:
        raise ValueError(f"period must be at least 1, got {period}")
    cycle = rng.integers(0, 2, size=(period, span)).astype(np.float64)
    return cycle[np.arange(count) % period]


def _markov_bits(spec: DomainSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    _, span = spec.span
    low = float(spec.params.get("flip_low", 0.05))
    high = float(spec.params.get("flip_high", 0.3))
    if not 0.0 <= low <= high <= 1.0:
        raise ValueError(f"flip probabilities must satisfy 0 <= low <= high <= 1, got {low}, {high}")
    transition_seed = spec.params.get("transition_seed")
    probs_rng = rng if transition_seed is None else make_rng(int(transition_seed), "transition", spec.name)
    flip = probs_rng.uniform(low, high, size=span)
    state = rng.integers(0, 2, size=span)
    out = np.empty((count, span))
    for t in range(count):
        out[t] = state
        state = np.where(rng.random(span) < flip, 1 - state, state)
    return out


_GENERATORS = {
    "counter": _counter,
    "shift_register": _shift_register,
    "periodic": _periodic,
    "markov_bits": _markov_bits,
}


def generate(spec: DomainSpec, count: int, seed: int = 0) -> np.ndarray:
    """Frames of one domain.

    Parameters
    ----------
    spec : DomainSpec
    count : int
        Number of frames, at least 1.
    seed : int, optional (default=0)

    Returns
    -------
    frames : ndarray of shape (count, spec.width)

    Examples
    --------
    >>> frames = generate(DomainSpec("c", "counter", n_bits=8), 3)
    >>> frames[:, :2].tolist()
    [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    rng = make_rng(seed, "domain", spec.name)
    offset, span = spec.span
    frames = np.zeros((count, spec.width))
    frames[:, offset:offset + span] = _GENERATORS[spec.kind](spec, count, rng)
    if spec.n_actions > 0:
        actions = make_rng(seed, "actions", spec.name).integers(0, spec.n_actions, size=count)
        frames[np.arange(count), spec.n_bits + actions] = 1.0
    return frames


@dataclass(frozen=True)
class Episode(object):
    domain: str
    count: int
    seed: int = 0


@dataclass
class StreamScript(object):
    """Ordered episodes over a set of domains sharing one frame width."""

    domains: Dict[str, DomainSpec]
    episodes: List[Episode]

    def validate(self) -> "StreamScript":
        if not self.episodes:
            raise ValueError("a stream script needs at least one episode")
        widths = {spec.width for spec in self.domains.values()}
        if len(widths) != 1:
            raise ValueError(f"all domains must share one frame width, got {sorted(widths)}")
        for episode in self.episodes:
            if episode.domain not in self.domains:
                raise ValueError(f"episode refers to unknown domain {episode.domain!r}")
            if episode.count < 1:
                raise ValueError(f"episode counts must be at least 1, got {episode.count}")
        return self


@dataclass
class LabeledStream(object):
    """A composed stream and its hidden label track.

    ``labels[t]`` indexes ``names``; only evaluation code reads it.
    """

    frames: np.ndarray
    labels: np.ndarray
    names: Tuple[str, ...]

    def __len__(self) -> int:
        return len(self.frames)

    def label_names(self) -> List[str]:
        return [self.names[i] for i in self.labels]


def compose(script: StreamScript) -> LabeledStream:
    """Concatenate the episodes of a script with no marker between them."""
    script.validate()
    names = tuple(sorted(script.domains))
    frames, labels = [], []
    for episode in script.episodes:
        frames.append(generate(script.domains[episode.domain], episode.count, episode.seed))
        labels.append(np.full(episode.count, names.index(episode.domain), dtype=np.int64))
    stream = LabeledStream(np.concatenate(frames), np.concatenate(labels), names)
    logger.info("composed %d frames from %d episodes", len(stream), len(script.episodes))
    return stream


def default_domains(n_bits: int = 32, n_actions: int = 0) -> Dict[str, DomainSpec]:
    """Four domains on disjoint spans of the bit channels.

    Each domain gets a quarter of the bit channels (8 at most).
    """
    span = min(8, n_bits // 4)
    if span < 1:
        raise ValueError(f"default domains need at least 4 bit channels, got {n_bits}")
    kinds: Sequence[Tuple[str, Dict[str, Any]]] = (
        ("counter", {}),
        ("shift_register", {}),
        ("periodic", {"period": 5}),
        ("markov_bits", {"transition_seed": 0}),
    )
    return {kind: DomainSpec(kind, kind, n_bits, n_actions, dict(params, offset=i * span, span=span))
            for i, (kind, params) in enumerate(kinds)}


def default_script(domains: Optional[Mapping[str, DomainSpec]] = None,
                   names: Iterable[str] = ("counter", "shift_register", "periodic"),
                   episode_length: int = 700, repeats: int = 3, seed: int = 0) -> StreamScript:
    """Episodes cycling through `names`, `repeats` times.

    The defaults give 9 episodes of 700 frames over three domains.
    """
    domains = dict(default_domains() if domains is None else domains)
    names = list(names)
    unknown = [name for name in names if name not in domains]
    if unknown:
        raise ValueError(f"unknown domains {unknown}, expected some of {sorted(domains)}")
    seeds = make_rng(seed, "script").integers(0, 2 ** 31, size=len(names) * repeats)
    episodes = [Episode(name, episode_length, int(seeds[r * len(names) + i]))
                for r in range(repeats) for i, name in enumerate(names)]
    return StreamScript({name: domains[name] for name in names}, episodes).validate()
