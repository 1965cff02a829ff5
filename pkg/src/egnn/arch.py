"""Architecture notation: parsing, canonical printing, and shape-flow checks.

Grammar (tokens joined by dashes, optional "k" + times-sign repetition
prefix, "x" accepted as the times sign):

    nF                    graph filter with n output vertex features
    nEF                   edge convolution with n output edge channels
    Pn[:method[:variant]] pooling to n vertices; method GEP (default) or GLP;
                          variant Original (default), Sym, Asym, AsymSymInit;
                          "Pool" is accepted as an alias of "P"
    EFCn                  edge-aware fully connected layer; n must equal the
                          implied input width N*F + N^2*L and is also the
                          output feature count
    FCn                   fully connected layer with n output features,
                          reading the flattened vertex matrix when the input
                          is still graph-shaped

Example: "2F-7EF-4F-6EF-P32-3F-4EF-P8-EFC280".
"""

import re
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import ArchitectureError

_REP_RE = re.compile(r"^(\d+)[×x](.+)$")
_VF_RE = re.compile(r"^(\d+)F$", re.IGNORECASE)
_EF_RE = re.compile(r"^(\d+)EF$", re.IGNORECASE)
_POOL_RE = re.compile(r"^(?:P|POOL)(\d+)((?::[A-Za-z]+){0,2})$", re.IGNORECASE)
_EFC_RE = re.compile(r"^EFC(\d+)$", re.IGNORECASE)
_FC_RE = re.compile(r"^FC(\d+)$", re.IGNORECASE)

_METHODS = {"gep": "gep", "glp": "glp"}
_VARIANTS = {
    "original": "original",
    "sym": "sym",
    "asym": "asym",
    "asymsyminit": "asym_sym_init",
}
_VARIANT_PRINT = {"original": "", "sym": "Sym", "asym": "Asym",
                  "asym_sym_init": "AsymSymInit"}


@dataclass(frozen=True)
class LayerSpec:
    """One parsed token: kind plus its size and, for pooling, its flavor."""

    kind: str                 # vertex_filter | edge_conv | pool | efc | fc
    n: int
    method: str = ""          # pool only: gep | glp
    variant: str = ""         # pool only: original | sym | asym | asym_sym_init

    def token(self) -> str:
        if self.kind == "vertex_filter":
            return f"{self.n}F"
        if self.kind == "edge_conv":
            return f"{self.n}EF"
        if self.kind == "efc":
            return f"EFC{self.n}"
        if self.kind == "fc":
            return f"FC{self.n}"
        out = f"P{self.n}"
        show_method = self.method == "glp" or self.variant != "original"
        if show_method:
            out += f":{self.method.upper()}"
        if self.variant != "original":
            out += f":{_VARIANT_PRINT[self.variant]}"
        return out


@dataclass(frozen=True)
class Stage:
    """Shape of the data stream entering or leaving a layer."""

    n: Optional[int] = None       # fixed vertex count, None while variable
    f: Optional[int] = None       # vertex features (graph-shaped stages)
    l: Optional[int] = None       # edge channels (graph-shaped stages)
    width: Optional[int] = None   # flat feature width once fully connected

    @property
    def is_flat(self) -> bool:
        return self.width is not None


@dataclass(frozen=True)
class Architecture:
    """Repetition-expanded sequence of layer specs."""

    layers: tuple
    source: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def canonical(self) -> str:
        return "-".join(spec.token() for spec in self.layers)

    def shape_flow(self, f0: int, l0: int, n0: Optional[int] = None) -> list:
        """Walk the layer sequence and return the per-stage shapes.

        ``f0``/``l0`` are the dataset's vertex feature and edge channel
        counts; ``n0`` may fix the input vertex count when every graph in
        the dataset has the same size. Raises ArchitectureError on any shape
        violation, including an EFC token whose declared width differs from
        the implied N*F + N^2*L.
        """
        if f0 < 1 or l0 < 1:
            raise ArchitectureError(f"need F >= 1 and L >= 1, got F={f0} L={l0}")
        stages = [Stage(n=n0, f=f0, l=l0)]
        cur = stages[0]
        for pos, spec in enumerate(self.layers):
            if spec.kind in ("vertex_filter", "edge_conv", "pool", "efc"):
                if cur.is_flat:
                    raise ArchitectureError(
                        f"token {spec.token()} at position {pos} follows a fully "
                        f"connected layer; the graph structure is already gone"
                    )
            if spec.kind == "vertex_filter":
                cur = Stage(n=cur.n, f=spec.n, l=cur.l)
            elif spec.kind == "edge_conv":
                cur = Stage(n=cur.n, f=cur.f, l=spec.n)
            elif spec.kind == "pool":
                if spec.method == "glp" and cur.n is None:
                    raise ArchitectureError(
                        f"GLP pooling at position {pos} requires a fixed input "
                        f"size; add a GEP pooling layer first"
                    )
                cur = Stage(n=spec.n, f=cur.f, l=cur.l)
            elif spec.kind == "efc":
                if cur.n is None:
                    raise ArchitectureError(
                        f"EFC at position {pos} requires a fixed graph size; "
                        f"add a pooling layer first"
                    )
                implied = cur.n * cur.f + cur.n * cur.n * cur.l
                if spec.n != implied:
                    raise ArchitectureError(
                        f"EFC width mismatch at position {pos}: token declares "
                        f"{spec.n}, upstream implies {implied} "
                        f"(N={cur.n}, F={cur.f}, L={cur.l})"
                    )
                cur = Stage(width=spec.n)
            elif spec.kind == "fc":
                if not cur.is_flat and cur.n is None:
                    raise ArchitectureError(
                        f"FC at position {pos} reads the flattened vertex matrix "
                        f"and requires a fixed graph size; add a pooling layer "
                        f"first or use a fixed-size dataset"
                    )
                cur = Stage(width=spec.n)
            else:  # pragma: no cover - parse produces only the kinds above
                raise ArchitectureError(f"unknown layer kind {spec.kind!r}")
            stages.append(cur)
        return stages

    def implied_efc_width(self, f0: int, l0: int, n0: Optional[int] = None):
        """Width the first EFC layer would see, or None without one."""
        stages = self.shape_flow(f0, l0, n0)
        for spec, stage in zip(self.layers, stages[:-1]):
            if spec.kind == "efc":
                return stage.n * stage.f + stage.n * stage.n * stage.l
        return None


def _parse_pool_suffix(suffix: str, token: str, pos: int):
    method, variant = "gep", "original"
    parts = [p for p in suffix.split(":") if p]
    if parts and parts[0].lower() in _METHODS:
        method = _METHODS[parts[0].lower()]
        parts = parts[1:]
    if parts:
        key = parts[0].lower()
        if key not in _VARIANTS:
            raise ArchitectureError(
                f"unknown pooling qualifier {parts[0]!r} in token {token!r} "
                f"at position {pos}"
            )
        variant = _VARIANTS[key]
        parts = parts[1:]
    if parts:
        raise ArchitectureError(
            f"too many qualifiers in token {token!r} at position {pos}"
        )
    return method, variant


def _parse_token(token: str, pos: int) -> LayerSpec:
    m = _EF_RE.match(token)
    if m:
        return LayerSpec(kind="edge_conv", n=int(m.group(1)))
    m = _EFC_RE.match(token)
    if m:
        return LayerSpec(kind="efc", n=int(m.group(1)))
    m = _FC_RE.match(token)
    if m:
        return LayerSpec(kind="fc", n=int(m.group(1)))
    m = _VF_RE.match(token)
    if m:
        return LayerSpec(kind="vertex_filter", n=int(m.group(1)))
    m = _POOL_RE.match(token)
    if m:
        method, variant = _parse_pool_suffix(m.group(2), token, pos)
        return LayerSpec(kind="pool", n=int(m.group(1)), method=method,
                         variant=variant)
    raise ArchitectureError(f"unknown token {token!r} at position {pos}")


def parse_architecture(s: str) -> Architecture:
    """Parse a dash-separated architecture string.

    Expands "k x" repetition prefixes, applies pooling defaults (bare Pn is
    GEP/Original), and performs the structural checks that need no dataset
    dimensions: every size positive, GLP and EFC preceded by a pooling
    layer, no graph layer after a fully connected one. Width checks happen
    in :meth:`Architecture.shape_flow` once F and L are known.
    """
    if not isinstance(s, str) or not s.strip():
        raise ArchitectureError("architecture string is empty")
    specs = []
    for pos, raw in enumerate(s.strip().split("-")):
        token = raw.strip()
        if not token:
            raise ArchitectureError(f"empty token at position {pos} in {s!r}")
        repeat = 1
        m = _REP_RE.match(token)
        if m:
            repeat, token = int(m.group(1)), m.group(2)
            if repeat < 1:
                raise ArchitectureError(
                    f"repetition count must be >= 1 in token {raw!r} at position {pos}"
                )
        spec = _parse_token(token, pos)
        if spec.n < 1:
            raise ArchitectureError(
                f"layer size must be >= 1 in token {raw!r} at position {pos}"
            )
        specs.extend([spec] * repeat)

    fixed_size = False
    flat = False
    for pos, spec in enumerate(specs):
        if flat and spec.kind in ("vertex_filter", "edge_conv", "pool", "efc"):
            raise ArchitectureError(
                f"token {spec.token()} at position {pos} follows a fully "
                f"connected layer"
            )
        if spec.kind == "pool":
            if spec.method == "glp" and not fixed_size:
                raise ArchitectureError(
                    f"GLP pooling at position {pos} needs a preceding "
                    f"fixed-size pooling layer"
                )
            fixed_size = True
        elif spec.kind == "efc":
            if not fixed_size:
                raise ArchitectureError(
                    f"EFC at position {pos} needs a preceding fixed-size "
                    f"pooling layer"
                )
            flat = True
        elif spec.kind == "fc":
            flat = True
    return Architecture(layers=tuple(specs), source=s)
