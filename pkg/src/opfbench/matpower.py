"""Reader/writer for the Matpower case file format.

Parses the numeric tables of a ``.m`` case file into plain row records and
writes them back out. No unit conversion or semantic validation happens
here; that is the job of :mod:`opfbench.network`. Sections the parser does
not model (``mpc.areas``, ``mpc.bus_name``, ...) are retained verbatim so a
parsed case can be re-emitted without losing them.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

__all__ = [
    "BusRow",
    "GenRow",
    "BranchRow",
    "CostRow",
    "RawCase",
    "CaseFormatError",
    "parse_case",
    "parse_case_file",
    "write_case",
    "write_case_file",
]


class CaseFormatError(ValueError):
    """Raised when a case file violates the Matpower format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BusRow:
    id: int
    bus_type: int  # 1=PQ, 2=PV, 3=ref, 4=isolated
    pd: float  # MW
    qd: float  # MVAr
    gs: float  # MW consumed at V=1.0 p.u.
    bs: float  # MVAr injected at V=1.0 p.u.
    area: int
    vm: float
    va: float  # degrees
    base_kv: float
    zone: int
    v_max: float
    v_min: float


@dataclass(frozen=True)
class GenRow:
    bus: int
    pg: float  # MW
    qg: float  # MVAr
    q_max: float
    q_min: float
    vg: float
    mbase: float
    status: int
    p_max: float  # MW
    p_min: float  # MW
    extra: tuple[float, ...] = ()  # columns 11+ of the full Matpower format


@dataclass(frozen=True)
class BranchRow:
    from_bus: int
    to_bus: int
    r: float  # p.u.
    x: float  # p.u.
    b_charge: float  # p.u., total line charging susceptance
    rate_a: float  # MVA, 0 = unlimited
    rate_b: float
    rate_c: float
    tap: float  # 0 means nominal (1.0)
    shift: float  # degrees
    status: int
    angmin: float  # degrees
    angmax: float  # degrees
    extra: tuple[float, ...] = ()


@dataclass(frozen=True)
class CostRow:
    model: int  # 1=piecewise linear, 2=polynomial
    startup: float
    shutdown: float
    n: int
    coefficients: tuple[float, ...]  # descending degree for model 2


@dataclass(frozen=True)
class RawCase:
    name: str
    base_mva: float
    bus_rows: tuple[BusRow, ...]
    gen_rows: tuple[GenRow, ...]
    branch_rows: tuple[BranchRow, ...]
    gencost_rows: tuple[CostRow, ...] = ()
    unknown_sections: tuple[tuple[str, str], ...] = ()
    version: str = "2"

    def validate(self) -> None:
        if not self.base_mva > 0:
            raise CaseFormatError(f"baseMVA must be positive, got {self.base_mva}")
        ids = [b.id for b in self.bus_rows]
        if len(ids) != len(set(ids)):
            raise CaseFormatError("duplicate bus ids in bus table")
        if self.gencost_rows and len(self.gencost_rows) != len(self.gen_rows):
            raise CaseFormatError(
                f"gencost has {len(self.gencost_rows)} rows for "
                f"{len(self.gen_rows)} generators"
            )
        for b in self.bus_rows:
            if b.bus_type not in (1, 2, 3, 4):
                raise CaseFormatError(f"bus {b.id}: invalid type code {b.bus_type}")
        for g in self.gen_rows:
            if g.status not in (0, 1):
                raise CaseFormatError(f"gen at bus {g.bus}: status must be 0 or 1")
        for br in self.branch_rows:
            if br.status not in (0, 1):
                raise CaseFormatError(
                    f"branch {br.from_bus}-{br.to_bus}: status must be 0 or 1"
                )
        for c in self.gencost_rows:
            if c.model not in (1, 2):
                raise CaseFormatError(f"invalid cost model code {c.model}")


_MANDATORY_SECTIONS = ("bus", "gen", "branch")

# column counts of the modeled tables (minimum; extra gen/branch columns kept)
_BUS_COLS = 13
_GEN_COLS = 10
_BRANCH_COLS = 13
_COST_COLS = 4


def _num(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise CaseFormatError(f"not a number: {tok!r}", line) from None


def _int(tok: str, line: int) -> int:
    v = _num(tok, line)
    if v != int(v):
        raise CaseFormatError(f"expected integer, got {tok!r}", line)
    return int(v)


def _strip_comment(line: str) -> str:
    pos = line.find("%")
    return line if pos < 0 else line[:pos]


_MODELED_SECTIONS = ("bus", "gen", "branch", "gencost")


def _scan_sections(text: str):
    """Split a case file into scalar assignments and bracketed sections.

    Returns (name, version, base_mva, tables, unknown) where tables maps
    a modeled section name to a list of (line_number, token_list) rows and
    unknown is a list of (section_name, verbatim_body) pairs, body kept
    exactly as written (closing bracket excluded).
    """
    name = ""
    version = None
    base_mva = None
    tables: dict[str, list[tuple[int, list[str]]]] = {}
    unknown: list[tuple[str, str]] = []

    lines = text.splitlines()
    i = 0
    n = len(lines)
    while i < n:
        raw = lines[i]
        line = _strip_comment(raw).strip()
        i += 1
        if not line:
            continue
        m = re.match(r"function\s+\w+\s*=\s*(\w+)", line)
        if m:
            name = m.group(1)
            continue
        m = re.match(r"mpc\.version\s*=\s*'([^']*)'\s*;?", line)
        if m:
            version = m.group(1)
            continue
        m = re.match(r"mpc\.baseMVA\s*=\s*([-+0-9.eE]+)\s*;?", line)
        if m:
            base_mva = _num(m.group(1), i)
            continue
        m = re.match(r"mpc\.(\w+)\s*=\s*([\[{])(.*)", line)
        if m:
            sect, opener, first = m.group(1), m.group(2), m.group(3)
            closer = "]" if opener == "[" else "}"
            start = i
            first_raw = raw
            if sect in tables or any(s == sect for s, _ in unknown):
                raise CaseFormatError(f"duplicate section mpc.{sect}", i)
            body_lines: list[tuple[int, str]] = []
            raw_lines = [first_raw]
            cur = first
            cur_lineno = start
            while closer not in _strip_comment(cur):
                body_lines.append((cur_lineno, _strip_comment(cur)))
                if i >= n:
                    raise CaseFormatError(f"unterminated section mpc.{sect}", start)
                cur = lines[i]
                raw_lines.append(cur)
                i += 1
                cur_lineno = i
            last, _, _ = _strip_comment(cur).partition(closer)
            body_lines.append((cur_lineno, last))
            if sect in _MODELED_SECTIONS:
                if opener != "[":
                    raise CaseFormatError(f"section mpc.{sect} must be a matrix", start)
                rows: list[tuple[int, list[str]]] = []
                for lineno, chunk_line in body_lines:
                    for chunk in _strip_comment(chunk_line).split(";"):
                        toks = chunk.split()
                        if toks:
                            rows.append((lineno, toks))
                tables[sect] = rows
            else:
                unknown.append((sect, "\n".join(raw_lines)))
            continue
        # other mpc.* scalar or string assignments are tolerated and dropped
        if line.startswith("mpc."):
            continue
        raise CaseFormatError(f"unrecognized statement: {line!r}", i)

    return name, version, base_mva, tables, unknown


def _parse_table(rows, min_cols: int, what: str):
    for lineno, toks in rows:
        if len(toks) < min_cols:
            raise CaseFormatError(
                f"{what} row has {len(toks)} columns, expected at least {min_cols}",
                lineno,
            )
    return rows


def parse_case(text: str, name_hint: str = "") -> RawCase:
    """Parse the contents of a Matpower case file into a :class:`RawCase`.

    Every numeric field is preserved exactly as written; unknown sections
    are kept verbatim so :func:`write_case` can round-trip them.
    """
    name, version, base_mva, tables, unknown = _scan_sections(text)

    if base_mva is None:
        raise CaseFormatError("missing mandatory assignment mpc.baseMVA")
    for sect in _MANDATORY_SECTIONS:
        if sect not in tables:
            raise CaseFormatError(f"missing mandatory section mpc.{sect}")

    bus_rows = []
    for lineno, t in _parse_table(tables["bus"], _BUS_COLS, "bus"):
        bus_rows.append(
            BusRow(
                id=_int(t[0], lineno),
                bus_type=_int(t[1], lineno),
                pd=_num(t[2], lineno),
                qd=_num(t[3], lineno),
                gs=_num(t[4], lineno),
                bs=_num(t[5], lineno),
                area=_int(t[6], lineno),
                vm=_num(t[7], lineno),
                va=_num(t[8], lineno),
                base_kv=_num(t[9], lineno),
                zone=_int(t[10], lineno),
                v_max=_num(t[11], lineno),
                v_min=_num(t[12], lineno),
            )
        )

    gen_rows = []
    for lineno, t in _parse_table(tables["gen"], _GEN_COLS, "gen"):
        gen_rows.append(
            GenRow(
                bus=_int(t[0], lineno),
                pg=_num(t[1], lineno),
                qg=_num(t[2], lineno),
                q_max=_num(t[3], lineno),
                q_min=_num(t[4], lineno),
                vg=_num(t[5], lineno),
                mbase=_num(t[6], lineno),
                status=_int(t[7], lineno),
                p_max=_num(t[8], lineno),
                p_min=_num(t[9], lineno),
                extra=tuple(_num(x, lineno) for x in t[10:]),
            )
        )

    branch_rows = []
    for lineno, t in _parse_table(tables["branch"], _BRANCH_COLS, "branch"):
        branch_rows.append(
            BranchRow(
                from_bus=_int(t[0], lineno),
                to_bus=_int(t[1], lineno),
                r=_num(t[2], lineno),
                x=_num(t[3], lineno),
                b_charge=_num(t[4], lineno),
                rate_a=_num(t[5], lineno),
                rate_b=_num(t[6], lineno),
                rate_c=_num(t[7], lineno),
                tap=_num(t[8], lineno),
                shift=_num(t[9], lineno),
                status=_int(t[10], lineno),
                angmin=_num(t[11], lineno),
                angmax=_num(t[12], lineno),
                extra=tuple(_num(x, lineno) for x in t[13:]),
            )
        )

    gencost_rows = []
    if "gencost" in tables:
        for lineno, t in _parse_table(tables["gencost"], _COST_COLS, "gencost"):
            ncost = _int(t[3], lineno)
            coeffs = t[4:]
            if len(coeffs) != (ncost if _int(t[0], lineno) == 2 else 2 * ncost):
                raise CaseFormatError(
                    f"gencost row declares n={ncost} but carries "
                    f"{len(coeffs)} values",
                    lineno,
                )
            gencost_rows.append(
                CostRow(
                    model=_int(t[0], lineno),
                    startup=_num(t[1], lineno),
                    shutdown=_num(t[2], lineno),
                    n=ncost,
                    coefficients=tuple(_num(x, lineno) for x in coeffs),
                )
            )

    case = RawCase(
        name=name or name_hint,
        base_mva=base_mva,
        bus_rows=tuple(bus_rows),
        gen_rows=tuple(gen_rows),
        branch_rows=tuple(branch_rows),
        gencost_rows=tuple(gencost_rows),
        unknown_sections=tuple(unknown),
        version=version if version is not None else "2",
    )
    case.validate()
    return case


def parse_case_file(path: str | Path) -> RawCase:
    path = Path(path)
    return parse_case(path.read_text(), name_hint=path.stem)


def _fmt(v: float) -> str:
    # repr() renders the shortest digit string that round-trips the float;
    # negative zero must keep its sign bit, so it never takes the int path
    if v == int(v) and abs(v) < 1e16 and not (v == 0 and math.copysign(1, v) < 0):
        return str(int(v))
    return repr(v)


def write_case(case: RawCase) -> str:
    """Render a :class:`RawCase` back to Matpower case file text.

    The output re-parses to a RawCase equal to the input, field for field.
    Raw values are emitted untouched (a tap of 0 stays 0).
    """
    case.validate()
    out = [f"function mpc = {case.name or 'case'}"]
    out.append(f"mpc.version = '{case.version}';")
    out.append(f"mpc.baseMVA = {_fmt(case.base_mva)};")

    out.append("")
    out.append("%% bus data")
    out.append("%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin")
    out.append("mpc.bus = [")
    for b in case.bus_rows:
        vals = (b.id, b.bus_type, b.pd, b.qd, b.gs, b.bs, b.area, b.vm, b.va,
                b.base_kv, b.zone, b.v_max, b.v_min)
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out.append("];")

    out.append("")
    out.append("%% generator data")
    out.append("%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin")
    out.append("mpc.gen = [")
    for g in case.gen_rows:
        vals = (g.bus, g.pg, g.qg, g.q_max, g.q_min, g.vg, g.mbase, g.status,
                g.p_max, g.p_min) + g.extra
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out.append("];")

    if case.gencost_rows:
        out.append("")
        out.append("%% generator cost data")
        out.append("%\tmodel\tstartup\tshutdown\tn\tc(n-1)\t...\tc0")
        out.append("mpc.gencost = [")
        for c in case.gencost_rows:
            vals = (c.model, c.startup, c.shutdown, c.n) + c.coefficients
            out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
        out.append("];")

    out.append("")
    out.append("%% branch data")
    out.append("%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax")
    out.append("mpc.branch = [")
    for br in case.branch_rows:
        vals = (br.from_bus, br.to_bus, br.r, br.x, br.b_charge, br.rate_a,
                br.rate_b, br.rate_c, br.tap, br.shift, br.status,
                br.angmin, br.angmax) + br.extra
        out.append("\t" + "\t".join(_fmt(v) for v in vals) + ";")
    out.append("];")

    for _sect, block in case.unknown_sections:
        out.append("")
        out.append(block)

    out.append("")
    return "\n".join(out)


def write_case_file(case: RawCase, path: str | Path) -> None:
    Path(path).write_text(write_case(case))
