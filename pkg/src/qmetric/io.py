"""JSON reading and writing for shapes, elements, states, seminorms, maps, bridges and treks.

Field names are listed in docs/formats.md. Complex arrays are stored as flat
lists with interleaved real and imaginary parts, row-major within each block.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .algebra import AlgebraShape, Element, Morphism, State, Subalgebra, as_shape
from .bridge import Bridge
from .lipnorm import (DistToSubspace, MaxOfAtoms, Seminorm, from_commutator, from_filtration,
                      from_group_action, from_metric, from_stddev)
from .metric import Bounds

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed or unsupported JSON input."""


def _need(d: dict, key: str):
    if key not in d:
        raise FormatError(f"missing field {key!r}")
    return d[key]


def pack_complex(a: np.ndarray) -> list[float]:
    a = np.asarray(a, dtype=complex).ravel()
    out = np.empty(2 * a.size)
    out[0::2] = a.real
    out[1::2] = a.imag
    return out.tolist()


def unpack_complex(data, size: int | None = None) -> np.ndarray:
    v = np.asarray(data, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise FormatError("complex data must be a flat list of even length")
    out = v[0::2] + 1j * v[1::2]
    if size is not None and out.size != size:
        raise FormatError(f"expected {size} complex entries, got {out.size}")
    return out


# ---------------------------------------------------------------------------
# shapes, elements, states


def shape_to_json(shape) -> dict:
    return {"blocks": list(as_shape(shape).block_dims)}


def shape_from_json(d) -> AlgebraShape:
    if isinstance(d, list):
        return AlgebraShape(d)
    return AlgebraShape(_need(d, "blocks"))


def element_to_json(a: Element) -> dict:
    return {"shape": shape_to_json(a.shape), "data": pack_complex(a.vec())}


def element_from_json(d: dict, shape=None) -> Element:
    shape = shape_from_json(d["shape"]) if "shape" in d else as_shape(shape)
    if shape is None:
        raise FormatError("element needs a shape")
    return shape.from_vec(unpack_complex(_need(d, "data"), shape.real_dim))


def state_to_json(phi: State) -> dict:
    return {"shape": shape_to_json(phi.shape),
            "density": pack_complex(np.concatenate([b.ravel() for b in phi.densities]))}


def state_from_json(d, shape) -> State:
    """A state given by name ("dirac<i>", "trace") or by a JSON object."""
    shape = as_shape(shape)
    if isinstance(d, str):
        if d == "trace":
            return State.trace_state(shape)
        if d.startswith("dirac"):
            try:
                i = int(d[5:])
            except ValueError:
                raise FormatError(f"bad state name {d!r}") from None
            return State.dirac(shape, i)
        raise FormatError(f"unknown state name {d!r}")
    if "density" in d:
        v = unpack_complex(d["density"], shape.real_dim)
        return State(shape, shape.from_vec(v).blocks)
    if "probabilities" in d:
        return State.from_probabilities(shape, d["probabilities"])
    if "vector" in d:
        block = int(d.get("block", 0))
        return State.from_vector(shape, block, unpack_complex(d["vector"], shape.block_dims[block]))
    if "dirac" in d:
        return State.dirac(shape, int(d["dirac"]))
    raise FormatError("state needs density, probabilities, vector or dirac")


# ---------------------------------------------------------------------------
# morphisms


def morphism_from_json(d: dict) -> Morphism:
    kind = _need(d, "type")
    if kind == "identity":
        return Morphism.identity(shape_from_json(_need(d, "shape")))
    if kind == "conjugation":
        return Morphism.conjugation(element_from_json(_need(d, "unitary")))
    if kind == "diagonal":
        return Morphism.diagonal(int(_need(d, "k")))
    if kind == "point-map":
        return Morphism.point_map(_need(d, "points"), int(_need(d, "source_points")))
    if kind == "block-projection":
        return Morphism.block_projection(shape_from_json(_need(d, "total")), int(_need(d, "start")),
                                         int(_need(d, "count")))
    if kind == "matrix":
        src, tgt = shape_from_json(_need(d, "source")), shape_from_json(_need(d, "target"))
        mat = unpack_complex(_need(d, "data"), src.real_dim * tgt.real_dim)
        return Morphism(src, tgt, mat.reshape(tgt.real_dim, src.real_dim))
    raise FormatError(f"unknown map type {kind!r}")


def morphism_to_json(f: Morphism) -> dict:
    return {"type": "matrix", "source": shape_to_json(f.source), "target": shape_to_json(f.target),
            "data": pack_complex(f.matrix)}


# ---------------------------------------------------------------------------
# seminorms


def lipnorm_from_json(d: dict) -> Seminorm:
    kind = _need(d, "type")
    if kind == "metric":
        return from_metric(np.asarray(_need(d, "dist"), dtype=float))
    if kind == "fuzzy-torus":
        from .models import fuzzy_torus_lipnorm
        return fuzzy_torus_lipnorm(int(_need(d, "n")), int(d.get("p", 1)), d.get("length", "torus"),
                                   d.get("generators", "both"))
    if kind == "twisted":
        from .models import Cocycle, FiniteAbelianGroup, twisted_group_algebra
        G = FiniteAbelianGroup(_need(d, "orders"))
        theta = d.get("theta")
        sigma = Cocycle.trivial(G) if theta is None else Cocycle.bicharacter(G, theta)
        return twisted_group_algebra(G, sigma).lipnorm(d.get("length", "torus"))
    if kind == "group-action":
        shape = shape_from_json(_need(d, "shape"))
        us = [element_from_json(u, shape) for u in _need(d, "unitaries")]
        return from_group_action(us, _need(d, "lengths"), mean_length=d.get("mean_length"))
    if kind == "commutator":
        rep = morphism_from_json(_need(d, "rep"))
        n = rep.target.matrix_dim
        D = unpack_complex(_need(d, "D"), n * n).reshape(n, n)
        return from_commutator(D, rep)
    if kind == "filtration":
        if "uhf" in d:
            from .models import uhf_filtration
            stages, beta = uhf_filtration(int(d["uhf"]))
            return from_filtration(stages, beta)
        shape = shape_from_json(_need(d, "shape"))
        stages = [Subalgebra(shape, [element_from_json(e, shape) for e in st])
                  for st in _need(d, "stages")]
        return from_filtration(stages, _need(d, "beta"))
    if kind == "stddev":
        shape = shape_from_json(_need(d, "shape"))
        return from_stddev(state_from_json(_need(d, "state"), shape))
    if kind == "dist-to-subspace":
        shape = shape_from_json(_need(d, "shape"))
        return DistToSubspace(shape, [element_from_json(e, shape) for e in _need(d, "span")])
    raise FormatError(f"unknown seminorm type {kind!r}")


# ---------------------------------------------------------------------------
# files


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON ({e.msg})") from None
    if not isinstance(d, dict):
        raise FormatError(f"{path}: top level must be an object")
    v = d.get("version", FORMAT_VERSION)
    if v != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {v}")
    return d


class Space:
    """A seminorm plus named states, as read from a space file."""

    def __init__(self, L: Seminorm, states: dict | None = None):
        self.L = L
        self.shape = L.shape
        self._states = dict(states or {})

    def state(self, name) -> State:
        if isinstance(name, str) and name in self._states:
            return state_from_json(self._states[name], self.shape)
        return state_from_json(name, self.shape)


def load_space(path) -> Space:
    d = read_json(path)
    return Space(lipnorm_from_json(_need(d, "lipnorm")), d.get("states"))


def load_lipnorm(path) -> Seminorm:
    d = read_json(path)
    return lipnorm_from_json(d["lipnorm"] if "lipnorm" in d else d)


def _side(d):
    return lipnorm_from_json(d["lipnorm"] if "lipnorm" in d else d)


def bridge_from_json(d: dict):
    """Returns (bridge, L_A, L_B, certified length bounds or None)."""
    L_A = _side(_need(d, "A"))
    L_B = _side(_need(d, "B"))
    pivot = element_from_json(_need(d, "pivot"))
    g = Bridge(pivot, morphism_from_json(_need(d, "pi_A")), morphism_from_json(_need(d, "pi_B")))
    known = None
    if "length_upper" in d:
        known = Bounds(float(d.get("length_lower", 0.0)), float(d["length_upper"]), True)
    return g, L_A, L_B, known


def load_bridge(path):
    return bridge_from_json(read_json(path))


def load_treks(path) -> list[list]:
    """A trek file holds "treks": a list of bridge lists (one trek is also accepted)."""
    d = read_json(path)
    if "treks" in d:
        return [[bridge_from_json(b) for b in t] for t in d["treks"]]
    return [[bridge_from_json(b) for b in _need(d, "bridges")]]
