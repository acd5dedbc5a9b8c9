"""Model spec files (TOML), sample files and result tables.

A model spec names its ``kind`` and the parameters of that kind::

    kind = "renewal"
    [arrival]
    form = "table"          # table | geometric | table_geometric | uniform | power_law
    pmf = [0.5, 0.5]

    kind = "context_tree"
    alphabet = "01"
    [contexts]              # keys are words, most recent symbol last
    "1" = [0.5, 0.5]
    "10" = [0.0, 1.0]
    "00" = [0.0, 1.0]

    kind = "rcr"
    alphabet = "01"
    depth = 1
    [weights]
    "" = 0.5
    [kernels]
    "" = [0.0, 1.0]

Sample files are one line of symbols, optionally preceded by ``#`` header
lines of ``key: value`` pairs; the ``alphabet`` header fixes the symbol
order.
"""

from __future__ import annotations

import io
import json
import re
from pathlib import Path
from typing import Any, Iterable, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import Alphabet
from .counts import Sample
from .errors import ModelError, ParameterError, SpecParseError
from .models import ArrivalDistribution, ContextTreeModel, RCRModel, RenewalModel

ARRIVAL_FORMS = ("table", "geometric", "table_geometric", "uniform", "power_law")


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(r'^\s*"?' + re.escape(key) + r'"?\s*=')
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


class _Spec:
    """Typed access to a parsed spec that reports the offending field."""

    def __init__(self, data: dict, text: str, prefix: str = ""):
        self.data = data
        self.text = text
        self.prefix = prefix

    def fail(self, key: str, message: str):
        raise SpecParseError(message, field=self.prefix + key, line=_line_of(self.text, key))

    def get(self, key: str, kind: type | tuple, default: Any = ...):
        if key not in self.data:
            if default is ...:
                self.fail(key, "missing required field")
            return default
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
            self.fail(key, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
        return value

    def table(self, key: str) -> "_Spec":
        return _Spec(self.get(key, dict), self.text, self.prefix + key + ".")

    def floats(self, key: str, default: Any = ...) -> list[float]:
        value = self.get(key, list, default)
        if value is default and default is not ...:
            return value
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            self.fail(key, "expected a list of numbers")
        return [float(v) for v in value]


def _arrival(spec: _Spec) -> ArrivalDistribution:
    form = spec.get("form", str)
    try:
        if form == "table":
            return ArrivalDistribution(spec.floats("pmf"))
        if form == "geometric":
            return ArrivalDistribution.geometric(spec.get("success", float))
        if form == "table_geometric":
            return ArrivalDistribution(spec.floats("pmf"), spec.get("success", float))
        if form == "uniform":
            return ArrivalDistribution.uniform(spec.get("support", int))
        if form == "power_law":
            return ArrivalDistribution.power_law(spec.get("exponent", float), spec.get("support", int))
    except SpecParseError:
        raise
    except ParameterError as exc:
        key = {"geometric": "success", "uniform": "support", "power_law": "exponent"}.get(form, "pmf")
        spec.fail(key, str(exc))
    spec.fail("form", f"unknown arrival form {form!r}; expected one of {', '.join(ARRIVAL_FORMS)}")


def _word_table(spec: _Spec, alphabet: Alphabet, key: str, values: str):
    tab = spec.table(key)
    out = {}
    for word, value in tab.data.items():
        try:
            w = alphabet.encode(word)
        except ParameterError as exc:
            tab.fail(word, str(exc))
        out[w] = tab.floats(word) if values == "vector" else tab.get(word, float)
    return out


def model_from_dict(data: dict, text: str = ""):
    spec = _Spec(data, text)
    kind = spec.get("kind", str)
    if kind == "renewal":
        return RenewalModel(_arrival(spec.table("arrival")))
    alphabet = Alphabet.of(spec.get("alphabet", str, "01"))
    if kind == "context_tree":
        contexts = _word_table(spec, alphabet, "contexts", "vector")
        try:
            return ContextTreeModel(alphabet, contexts)
        except ParameterError as exc:
            spec.fail("contexts", str(exc))
    if kind == "rcr":
        depth = spec.get("depth", int)
        weights = _word_table(spec, alphabet, "weights", "scalar")
        kernels = _word_table(spec, alphabet, "kernels", "vector")
        try:
            return RCRModel(alphabet, depth, weights, kernels)
        except (ParameterError, ModelError) as exc:
            spec.fail("weights", str(exc))
    spec.fail("kind", f"unknown model kind {kind!r}; expected renewal, context_tree or rcr")


def parse_model_spec(text: str):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            if m:
                line, col = int(m.group(1)), int(m.group(2))
        msg = getattr(exc, "msg", str(exc))
        raise SpecParseError(f"invalid model spec: {msg}", line=line, column=col) from None
    try:
        return model_from_dict(data, text)
    except SpecParseError:
        raise
    except ParameterError as exc:
        raise SpecParseError(str(exc)) from None


def load_model_spec(path: str | Path):
    return parse_model_spec(Path(path).read_text())


# --------------------------------------------------------------------------
# samples
# --------------------------------------------------------------------------


def _infer_alphabet(line: str) -> Alphabet:
    if "," in line:
        return Alphabet(tuple(sorted(set(t.strip() for t in line.split(",")))))
    return Alphabet(tuple(sorted(set(line))))


def parse_sample(text: str, alphabet: Alphabet | None = None) -> tuple[Sample, dict[str, str]]:
    """Read a sample file; returns the sample and its header fields."""
    header: dict[str, str] = {}
    body: list[tuple[int, str]] = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        body.append((i, line))
    if len(body) != 1:
        raise SpecParseError(f"sample file needs exactly one data line, found {len(body)}",
                             line=body[1][0] if len(body) > 1 else None)
    lineno, line = body[0]
    if alphabet is None:
        alphabet = Alphabet.of(header["alphabet"]) if "alphabet" in header else _infer_alphabet(line)
    try:
        data = alphabet.encode(line)
    except ParameterError as exc:
        raise SpecParseError(str(exc), line=lineno) from None
    return Sample(alphabet, data), header


def load_sample(path: str | Path, alphabet: Alphabet | None = None) -> tuple[Sample, dict[str, str]]:
    return parse_sample(Path(path).read_text(), alphabet)


def format_sample(sample: Sample, header: dict[str, Any]) -> str:
    lines = [f"# {k}: {v}" for k, v in header.items()]
    lines.append(f"# alphabet: {','.join(sample.alphabet.symbols)}")
    lines.append(sample.text())
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# result tables
# --------------------------------------------------------------------------


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return " ".join(_cell(x) for x in v)
    return str(v)


def format_table(header: dict[str, Any], columns: Sequence[str], rows: Iterable[dict]) -> str:
    """CSV with a ``#`` config-echo header; missing cells are left empty."""
    import csv

    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {json.dumps(v, sort_keys=True) if not isinstance(v, str) else v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) if c in row else "" for c in columns])
    return buf.getvalue()


def read_table(text: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    import csv

    header = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
        else:
            body.append(line)
    return header, list(csv.DictReader(body))
