"""Pass registry: the universe of known passes and their hierarchy levels.

Every other component resolves pass levels through a registry, so level
checks are consistent everywhere. Registries are immutable after load and
safe for concurrent reads.
"""

import enum
import hashlib
import re
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

from .errors import DuplicatePass, ParseError, UnknownPass


class PassLevel(enum.IntEnum):
    """IR granularity a pass operates on, ordered by nesting depth."""

    MODULE = 0
    CGSCC = 1
    FUNCTION = 2
    LOOP = 3

    @property
    def token(self) -> str:
        """Lowercase spelling used in pipeline strings and registry files."""
        return self.name.lower()

    @classmethod
    def from_token(cls, token: str) -> "PassLevel":
        try:
            return cls[token.upper()]
        except KeyError:
            raise ParseError(f"unknown level {token!r}") from None


# Pass names: lowercase letters, digits, '-', '<', '>'. No parentheses,
# commas, or whitespace, so pipeline strings stay unambiguous.
_NAME_RE = re.compile(r"[a-z0-9<>-]+\Z")

# Spelling for context-dependent passes in registry files (see PassInfo).
POLYMORPHIC_TOKEN = "any"


@dataclass(frozen=True)
class PassInfo:
    """A pass name bound to its hierarchy level.

    ``level`` is None for polymorphic passes (e.g. ``invalidate<all>``)
    whose effective level is decided by the enclosing manager at parse
    time rather than by the registry.
    """

    name: str
    level: Optional[PassLevel]

    @property
    def polymorphic(self) -> bool:
        return self.level is None


class PassRegistry:
    """Immutable name -> PassInfo map with deterministic lookups."""

    def __init__(self, entries: Iterable[PassInfo]):
        self._entries: Dict[str, PassInfo] = {}
        for info in entries:
            if not _NAME_RE.match(info.name):
                raise ParseError(f"invalid pass name {info.name!r}")
            if info.name in self._entries:
                raise DuplicatePass(f"pass {info.name!r} registered twice")
            self._entries[info.name] = info

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __iter__(self):
        return iter(self._entries.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PassRegistry):
            return NotImplemented
        return self._entries == other._entries

    def names(self) -> Tuple[str, ...]:
        return tuple(self._entries)

    def lookup(self, name: str) -> PassInfo:
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownPass(f"unknown pass {name!r}") from None

    def level_of(self, name: str) -> Optional[PassLevel]:
        """Registered level of ``name``; None when it is polymorphic."""
        return self.lookup(name).level

    def passes_at(self, level: PassLevel) -> Tuple[PassInfo, ...]:
        return tuple(p for p in self if p.level == level)

    def concrete_passes(self) -> Tuple[PassInfo, ...]:
        """All passes with a definite level (polymorphic ones excluded)."""
        return tuple(p for p in self if not p.polymorphic)

    def serialize(self) -> str:
        lines = []
        for info in self._entries.values():
            token = POLYMORPHIC_TOKEN if info.polymorphic else info.level.token
            lines.append(f"{info.name}={token}")
        return "\n".join(lines) + "\n"

    def content_hash(self) -> str:
        """Stable hash over entries, used to tag mined-graph files."""
        canonical = "\n".join(sorted(self.serialize().splitlines()))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def load_registry(source: str) -> PassRegistry:
    """Parse registry-file contents: one ``name=level`` per line.

    ``#`` starts a comment; blank lines are ignored. Levels are spelled
    ``module|cgscc|function|loop``, plus ``any`` for polymorphic passes.
    """
    entries = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, token = line.partition("=")
        name = name.strip()
        token = token.strip()
        if not sep or not name or not token:
            raise ParseError(f"line {lineno}: expected name=level, got {raw!r}")
        if not _NAME_RE.match(name):
            raise ParseError(f"line {lineno}: invalid pass name {name!r}")
        if token == POLYMORPHIC_TOKEN:
            level: Optional[PassLevel] = None
        else:
            try:
                level = PassLevel.from_token(token)
            except ParseError:
                raise ParseError(f"line {lineno}: unknown level {token!r}") from None
        if any(e.name == name for e in entries):
            raise DuplicatePass(f"line {lineno}: pass {name!r} repeated")
        entries.append(PassInfo(name, level))
    return PassRegistry(entries)


# Built-in registry so the toolkit runs without an LLVM install. Levels
# follow LLVM 18 pass typing; invalidate<all> takes the level of whatever
# manager encloses it.
DEFAULT_REGISTRY_TEXT = """\
# name=level  (module|cgscc|function|loop|any)
globalopt=module
strip=module
scc-oz-module-inliner=module
inline=cgscc
gvn=function
instcombine=function
adce=function
jump-threading=function
correlated-propagation=function
reassociate=function
slp-vectorizer=function
vector-combine=function
tsan=function
gvn-hoist=function
bounds-checking=function
instsimplify=function
memcpyopt=function
scalarize-masked-mem-intrin=function
licm=loop
loop-deletion=loop
invalidate<all>=any
"""


def default_registry() -> PassRegistry:
    return load_registry(DEFAULT_REGISTRY_TEXT)
