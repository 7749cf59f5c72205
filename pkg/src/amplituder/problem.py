"""Line-oriented problem files.

A problem file has ``[section]`` headers. ``[problem]``, ``[critical]`` and
the experiment sections hold ``key = value`` lines; ``[symbol]`` and
``[nonlinearity]`` hold whitespace-separated coefficient tables::

    [symbol]
    # d exponents, row, col, re, im  (rows/cols 1-based)
    4  1 1  -1 0

    [nonlinearity]
    # m exponents, component (1-based), coefficient
    3  1  -1

``#`` starts a comment. Profile lists use ``;`` between amplitudes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .solver.grid import Profile, parse_profile
from .symbols import MatrixPolynomial, PolynomialNonlinearity


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


class ValidationError(ValueError):
    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


def _float(s):
    return float(s)


def _int(s):
    return int(s)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(x) for x in s.replace(",", " ").split())


def _profiles(s):
    return tuple(parse_profile(p) for p in s.split(";") if p.strip())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and v and isinstance(v[0], Profile):
        return "; ".join(str(p) for p in v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


_POS = {"epsilon", "epsilons", "etas", "dt", "t0", "T0", "T_factor", "delta_max"}

SCHEMA: dict[str, dict[str, tuple]] = {
    "problem": {"name": (str, None), "d": (_int, None), "m": (_int, None), "D": (_int, 1)},
    "critical": {
        "omega": (_float, 0.0),
        "k": (_floats, None),
        "j_max": (_int, 16),
        "tol_crit": (_float, 1e-9),
        "margin": (_float, 1e-6),
        "cond_max": (_float, 1e8),
        "eig_sep_tol": (_float, 1e-8),
        "max_order": (_int, 8),
    },
    "error": {
        "epsilons": (_floats, (0.04, 0.01, 0.0025)),
        "points": (_ints, (1024,)),
        "n_periods": (_int, 2),
        "profiles": (_profiles, None),
        "t0": (_float, 1.0),
        "T0": (_float, 1.0),
        "dt_factor": (_float, 0.005),
        "r": (_int, 0),
        "dealias": (_bool, True),
        "error_stride": (_int, 1),
    },
    "semigroup": {
        "t_min": (_float, 1.0),
        "t_max": (_float, 100.0),
        "count": (_int, 9),
        "points": (_ints, None),
        "n_periods": (_int, 160),
        "profile": (parse_profile, None),
    },
    "scaled": {
        "etas": (_floats, (0.2, 0.1, 0.05)),
        "t0": (_float, 1.0),
        "points": (_ints, None),
        "n_periods": (_int, 40),
        "profile": (parse_profile, None),
    },
    "steady": {"guesses": (_floats, (0.5,))},
    "stability": {
        "guess": (_floats, (0.5,)),
        "delta": (_float, 0.05),
        "epsilon": (_float, 0.01),
        "points": (_ints, (1024,)),
        "n_periods": (_int, 2),
        "T_factor": (_float, 5.0),
        "dt_factor": (_float, 0.005),
        "perturbation": (parse_profile, None),
    },
    "simulate": {
        "epsilon": (_float, 0.01),
        "points": (_ints, (1024,)),
        "n_periods": (_int, 2),
        "profiles": (_profiles, None),
        "T0": (_float, 1.0),
        "dt_factor": (_float, 0.005),
        "snapshot_stride": (_int, 20),
        "dealias": (_bool, True),
    },
}

EXPERIMENTS = ("error", "semigroup", "scaled", "steady", "stability", "simulate")
TABLES = ("symbol", "nonlinearity")


@dataclass
class ProblemFile:
    name: str
    d: int
    m: int
    D: int
    symbol: MatrixPolynomial
    nonlinearity: PolynomialNonlinearity
    omega: float
    k: tuple
    scan: dict = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)

    def option(self, section: str, key: str):
        """Typed value from an experiment section, falling back to the schema default."""
        if section == "critical":
            return self.scan.get(key, SCHEMA["critical"][key][1])
        return self.experiments.get(section, {}).get(key, SCHEMA[section][key][1])

    @property
    def analysis_kwargs(self) -> dict:
        return {key: self.option("critical", key) for key in ("j_max", "tol_crit", "margin", "cond_max", "eig_sep_tol", "max_order")}


def _split_lines(text: str):
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield n, line


def _apply_overrides(sections: dict, overrides) -> None:
    for ov in overrides or ():
        if "=" not in ov or "." not in ov.split("=", 1)[0]:
            raise ParseError(f"override {ov!r} must look like section.key=value")
        lhs, value = ov.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        if sec in TABLES:
            raise ParseError(f"tables cannot be overridden ({ov!r})")
        if sec not in SCHEMA:
            raise ParseError(f"unknown section in override {ov!r}")
        sections.setdefault(sec, {"line": None, "kv": {}, "rows": []})["kv"][key.strip()] = (value.strip(), None)


def parse_text(text: str, overrides=None) -> ProblemFile:
    sections: dict[str, dict] = {}
    current = None
    for n, line in _split_lines(text):
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", n)
            current = line[1:-1].strip()
            if current not in SCHEMA and current not in TABLES:
                raise ParseError(f"unknown section [{current}]", n)
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", n)
            sections[current] = {"line": n, "kv": {}, "rows": []}
            continue
        if current is None:
            raise ParseError("content before the first section header", n)
        if current in TABLES:
            sections[current]["rows"].append((n, line.split()))
        else:
            if "=" not in line:
                raise ParseError(f"expected key = value, got {line!r}", n)
            key, value = (s.strip() for s in line.split("=", 1))
            if key in sections[current]["kv"]:
                raise ParseError(f"duplicate key {key!r}", n)
            sections[current]["kv"][key] = (value, n)
    if not sections:
        raise ParseError("empty problem file")
    _apply_overrides(sections, overrides)
    for req in ("problem", "symbol", "nonlinearity", "critical"):
        if req not in sections:
            raise ParseError(f"missing section [{req}]")

    typed: dict[str, dict] = {}
    for sec, body in sections.items():
        if sec in TABLES:
            continue
        schema = SCHEMA[sec]
        vals = {}
        for key, (raw, n) in body["kv"].items():
            if key not in schema:
                raise ParseError(f"unknown key {key!r} in [{sec}]", n)
            try:
                vals[key] = schema[key][0](raw)
            except ValueError as exc:
                raise ParseError(f"bad value for {sec}.{key}: {exc}", n) from None
            if key in _POS:
                seq = vals[key] if isinstance(vals[key], tuple) else (vals[key],)
                if any(x <= 0 for x in seq):
                    raise ValidationError(f"{sec}.{key} must be positive", n)
        for key, (_, default) in schema.items():
            if default is None and key not in vals and sec in ("problem", "critical") and key != "name":
                raise ValidationError(f"missing required key {sec}.{key}", body["line"])
        typed[sec] = vals

    prob = typed["problem"]
    d, m, D = prob["d"], prob["m"], prob.get("D", 1)
    hl = sections["problem"]["line"]
    if d < 1 or m < 1:
        raise ValidationError("d and m must be positive", hl)
    if not 1 <= D <= d:
        raise ValidationError(f"D must lie in 1..{d}", hl)

    entries = []
    for n, cols in sections["symbol"]["rows"]:
        if len(cols) != d + 4:
            raise ParseError(f"symbol row needs {d} exponents + row col re im ({d + 4} fields), got {len(cols)}", n)
        try:
            alpha = tuple(int(c) for c in cols[:d])
            row, col = int(cols[d]) - 1, int(cols[d + 1]) - 1
            re_, im_ = float(cols[d + 2]), float(cols[d + 3])
        except ValueError as exc:
            raise ParseError(f"bad symbol entry: {exc}", n) from None
        if any(a < 0 for a in alpha):
            raise ValidationError("negative exponent", n)
        if not (0 <= row < m and 0 <= col < m):
            raise ValidationError(f"entry ({row + 1}, {col + 1}) outside a {m}x{m} matrix", n)
        entries.append((alpha, row, col, re_, im_))
    if not entries:
        raise ValidationError("symbol table is empty", sections["symbol"]["line"])
    symbol = MatrixPolynomial.from_entries(d, m, entries)

    terms = []
    for n, cols in sections["nonlinearity"]["rows"]:
        if len(cols) != m + 2:
            raise ParseError(f"nonlinearity row needs {m} exponents + component coefficient, got {len(cols)} fields", n)
        try:
            e = tuple(int(c) for c in cols[:m])
            comp = int(cols[m]) - 1
            coef = float(cols[m + 1])
        except ValueError as exc:
            raise ParseError(f"bad nonlinearity entry: {exc}", n) from None
        if any(x < 0 for x in e):
            raise ValidationError("negative exponent", n)
        if not 0 <= comp < m:
            raise ValidationError(f"component {comp + 1} outside 1..{m}", n)
        terms.append((e, comp, coef))
    f = PolynomialNonlinearity.from_entries(m, terms)

    crit = typed["critical"]
    k = crit.pop("k")
    k_line = sections["critical"]["kv"]["k"][1] or sections["critical"]["line"]
    if len(k) != d:
        raise ValidationError(f"critical.k needs {d} components", k_line)
    omega = crit.pop("omega", 0.0)
    if omega == 0 and not any(k):
        raise ValidationError("(omega, k) must not both vanish", k_line)
    experiments = {sec: typed[sec] for sec in EXPERIMENTS if sec in typed}
    return ProblemFile(prob.get("name", "problem"), d, m, D, symbol, f, float(omega), tuple(k), crit, experiments)


def parse_problem(path, overrides=None) -> ProblemFile:
    """Parse a problem file path or the name of a bundled configuration."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("amplituder") / "configs" / f"{path}.prob"
        if bundled.is_file():
            return parse_text(bundled.read_text(), overrides)
        raise FileNotFoundError(f"no problem file {path!r} and no bundled config of that name")
    return parse_text(p.read_text(), overrides)


def bundled_configs() -> list[str]:
    base = resources.files("amplituder") / "configs"
    return sorted(p.name[: -len(".prob")] for p in base.iterdir() if p.name.endswith(".prob"))


def serialize(problem: ProblemFile) -> str:
    """Canonical text form; parsing it back yields an equal problem."""
    out = ["[problem]", f"name = {problem.name}", f"d = {problem.d}", f"m = {problem.m}", f"D = {problem.D}", ""]
    out.append("[symbol]")
    for alpha, i, j, re_, im_ in problem.symbol.entries():
        out.append(" ".join(str(a) for a in alpha) + f"  {i + 1} {j + 1}  {re_!r} {im_!r}")
    out += ["", "[nonlinearity]"]
    for e, comp, coef in problem.nonlinearity.entries():
        out.append(" ".join(str(x) for x in e) + f"  {comp + 1}  {coef!r}")
    out += ["", "[critical]", f"omega = {problem.omega!r}", f"k = {_fmt(problem.k)}"]
    for key, v in problem.scan.items():
        out.append(f"{key} = {_fmt(v)}")
    for sec in EXPERIMENTS:
        if sec in problem.experiments:
            out += ["", f"[{sec}]"]
            for key, v in problem.experiments[sec].items():
                out.append(f"{key} = {_fmt(v)}")
    return "\n".join(out) + "\n"

