"""Model files and diffusion schedules.

A model file is YAML (JSON is accepted as a subset)::

    name: three sites
    sites: [1, 2, 3]
    measure: {1: 1.0, 2: 0.5, 3: 1.0}
    rates:
      - [1, 2, 1.0]
      - [2, 1, 2.0]
      - [2, 3, 2.0]
      - [3, 2, 1.0]

``rates`` may also be a nested mapping ``{from: {to: value}}``.  ``measure``
may be a list aligned with ``sites``.  Parse errors name the offending key
and, when known, the line.
"""

import math
import re
import warnings
from dataclasses import dataclass

import yaml

from .errors import DiffusionScheduleWarning, ModelParseError
from .model import SiteGraph

__all__ = ["ModelFile", "load_model", "parse_model", "DiffusionSchedule", "parse_schedule"]


@dataclass
class ModelFile:
    graph: SiteGraph
    name: str
    path: str = None


def _line(node):
    return node.start_mark.line + 1 if node is not None else None


def _child(node, key):
    """Value node of ``key`` in a mapping node (or None)."""
    if not isinstance(node, yaml.MappingNode):
        return None
    for k, v in node.value:
        if str(k.value) == key:
            return v
    return None


def _item(node, i):
    if isinstance(node, yaml.SequenceNode) and i < len(node.value):
        return node.value[i]
    return None


def _number(value, key, node):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelParseError(f"expected a number, got {value!r}", key, _line(node))
    if not math.isfinite(value):
        raise ModelParseError(f"expected a finite number, got {value!r}", key, _line(node))
    return float(value)


def parse_model(text, path=None):
    """Parse model text into a :class:`ModelFile` (validation is separate).

    Raises
    ------
    ModelParseError
    """
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ModelParseError(f"malformed model file: {getattr(exc, 'problem', exc)}",
                              line=mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ModelParseError("model file must be a mapping", line=1)
    for key in ("sites", "rates", "measure"):
        if key not in data:
            raise ModelParseError("missing required key", key)
    unknown = set(data) - {"sites", "rates", "measure", "name", "description"}
    if unknown:
        k = sorted(map(str, unknown))[0]
        raise ModelParseError("unknown key", k, _line(_child(root, k)))

    sites_node = _child(root, "sites")
    sites = data["sites"]
    if not isinstance(sites, list) or not sites:
        raise ModelParseError("sites must be a nonempty list", "sites", _line(sites_node))
    names = [str(s) for s in sites]
    if len(set(names)) != len(names):
        raise ModelParseError("duplicate site identifier", "sites", _line(sites_node))
    known = set(names)

    def site(value, key, node):
        if str(value) not in known:
            raise ModelParseError(f"unknown site {value!r}", key, _line(node))
        return str(value)

    m_node = _child(root, "measure")
    measure = data["measure"]
    if isinstance(measure, list):
        if len(measure) != len(names):
            raise ModelParseError("measure list must match the sites", "measure", _line(m_node))
        weights = {s: _number(v, "measure", _item(m_node, i)) for i, (s, v) in
                   enumerate(zip(names, measure))}
    elif isinstance(measure, dict):
        weights = {}
        for k, v in measure.items():
            weights[site(k, "measure", _child(m_node, str(k)))] = _number(
                v, "measure", _child(m_node, str(k)))
        missing = [s for s in names if s not in weights]
        if missing:
            raise ModelParseError(f"no weight for site {missing[0]!r}", "measure", _line(m_node))
    else:
        raise ModelParseError("measure must be a list or a mapping", "measure", _line(m_node))
    for s, w in weights.items():
        if not w > 0:
            raise ModelParseError(f"weight of site {s!r} must be positive", "measure",
                                  _line(m_node))

    r_node = _child(root, "rates")
    raw = data["rates"]
    triples = []
    if isinstance(raw, list):
        for i, entry in enumerate(raw):
            node = _item(r_node, i)
            if not isinstance(entry, list) or len(entry) != 3:
                raise ModelParseError("rate entry must be [from, to, value]", "rates", _line(node))
            triples.append((site(entry[0], "rates", node), site(entry[1], "rates", node),
                            _number(entry[2], "rates", node), node))
    elif isinstance(raw, dict):
        for a, row in raw.items():
            row_node = _child(r_node, str(a))
            if not isinstance(row, dict):
                raise ModelParseError("rate row must be a mapping", "rates", _line(row_node))
            for b, v in row.items():
                node = _child(row_node, str(b))
                triples.append((site(a, "rates", row_node), site(b, "rates", node),
                                _number(v, "rates", node), node))
    else:
        raise ModelParseError("rates must be a list or a mapping", "rates", _line(r_node))
    seen = set()
    for a, b, v, node in triples:
        if (a, b) in seen:
            raise ModelParseError(f"rate {a}->{b} given twice", "rates", _line(node))
        if v < 0:
            raise ModelParseError(f"rate {a}->{b} is negative", "rates", _line(node))
        seen.add((a, b))
    graph = SiteGraph.from_edges(names, [(a, b, v) for a, b, v, _ in triples], weights)
    return ModelFile(graph=graph, name=str(data.get("name", path or "model")), path=path)


def load_model(path):
    """Read and parse a model file.

    Raises
    ------
    ModelParseError
        For unreadable or malformed files.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelParseError(f"cannot read model file: {exc.strerror}", line=None) from None
    return parse_model(text, path=str(path))


@dataclass(frozen=True)
class DiffusionSchedule:
    """``d(N) = c * N ** (-alpha)``; ``alpha = 0`` is a constant."""

    c: float
    alpha: float
    text: str

    def __call__(self, N):
        return self.c * float(N) ** (-self.alpha)

    def check(self, Ns):
        """Emit advisory warnings for schedules outside the asymptotic regime."""
        if self.alpha == 0:
            warnings.warn(f"d = {self.c:g} does not vanish as N grows", DiffusionScheduleWarning,
                          stacklevel=2)
        elif self.alpha <= 2:
            warnings.warn(
                f"d = {self.text} decays no faster than N^-2; d N^2 (log N)^2 does not vanish and "
                "the remainder terms of the test function need not be small",
                DiffusionScheduleWarning, stacklevel=2)


_NUM = r"[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?"
_RULE = re.compile(rf"^\s*(?:(?P<c>{_NUM})\s*\*\s*)?N\s*\^\s*(?P<a>-?\s*{_NUM})\s*$")


def parse_schedule(text):
    """Parse ``"0.05"``, ``"N^-2"`` or ``"0.5*N^-1.5"``.

    Raises
    ------
    ModelParseError
    """
    s = str(text).strip()
    try:
        c = float(s)
    except ValueError:
        m = _RULE.match(s)
        if not m:
            raise ModelParseError(f"cannot parse d_N rule {s!r}", key="--dN") from None
        c = float(m.group("c")) if m.group("c") else 1.0
        alpha = -float(m.group("a").replace(" ", ""))
    else:
        alpha = 0.0
    if not (c > 0 and math.isfinite(c)) or alpha < 0:
        raise ModelParseError(f"d_N rule {s!r} must be positive and non-increasing", key="--dN")
    return DiffusionSchedule(c, alpha, s)
