"""Result tables as tab-separated text, CSV or Markdown.

Text output follows the FMEA sheet layout: effects are prefixed with ``:``,
the no-effect marker with ``::``, and a fault with several effect rows is
introduced by a row with an empty effect cell.  CSV carries one row per
analysis row with verdict and consistency columns and reads back losslessly.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

from .analysis import NO_EFFECT, AnalysisRow, Scenario
from .errors import ModelError
from .impact import ImpactResult
from .relation import Verdict

FORMATS = ("text", "csv", "md")
HAZARD_HEADER = ["Scenario", "Part", "Failure Mode", "Hazard / Impact"]
IMPACT_HEADER = ["Name", "Driving Situation", "Road", "Spatial Configuration",
                 "Part", "Failure Mode", "Hazard / Impact"]
CSV_EXTRA = ["Verdict", "Inconsistent"]


def _groups(rows: Sequence[AnalysisRow]) -> list[list[AnalysisRow]]:
    out: list[list[AnalysisRow]] = []
    for r in rows:
        if out and (out[-1][0].scenario, out[-1][0].component, out[-1][0].fault_mode) == \
                (r.scenario, r.component, r.fault_mode):
            out[-1].append(r)
        else:
            out.append([r])
    return out


def _effect_cell(r: AnalysisRow, fmt: str) -> str:
    if fmt == "text":
        return "::" + NO_EFFECT if r.effect is None else ":" + r.effect
    return NO_EFFECT if r.effect is None else r.effect


def _sheet(rows: Sequence[AnalysisRow], fmt: str) -> list[tuple[AnalysisRow, list[str]]]:
    """(row, [part, mode, effect]) with group header rows inserted."""
    out = []
    for g in _groups(rows):
        if len(g) > 1:
            out.append((g[0], [g[0].component, g[0].fault_mode, ""]))
        for r in g:
            out.append((r, [r.component, r.fault_mode, _effect_cell(r, fmt)]))
    return out


def hazard_cells(rows: Sequence[AnalysisRow], scenarios: Sequence[Scenario] = (),
                 fmt: str = "text") -> list[list[str]]:
    shown = {sc.name: sc.display for sc in scenarios}
    return [[shown.get(r.scenario, r.scenario)] + cells for r, cells in _sheet(rows, fmt)]


def impact_cells(results: Sequence[ImpactResult], fmt: str = "text") -> list[list[str]]:
    out = []
    for res in results:
        c = res.condition
        lead = [c.name, c.driving, c.road, c.configuration]
        for i, (_, cells) in enumerate(_sheet(res.rows, fmt)):
            out.append((lead if i == 0 else [""] * 4) + cells)
    return out


def _tsv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    return "".join("\t".join(r) + "\n" for r in [header, *rows])


def _md(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    def line(cells):
        return "| " + " | ".join(c.replace("|", "\\|") for c in cells) + " |\n"
    return line(header) + line(["---"] * len(header)) + "".join(line(r) for r in rows)


def _csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _csv_tail(r: AnalysisRow) -> list[str]:
    return [_effect_cell(r, "csv"), r.verdict.value if r.verdict else "",
            "true" if r.inconsistent else "false"]


def render_hazards(rows: Sequence[AnalysisRow], scenarios: Sequence[Scenario] = (),
                   fmt: str = "text") -> str:
    if fmt == "csv":
        return _csv(HAZARD_HEADER + CSV_EXTRA,
                    ([r.scenario, r.component, r.fault_mode] + _csv_tail(r) for r in rows))
    cells = hazard_cells(rows, scenarios, fmt)
    return (_md if fmt == "md" else _tsv)(HAZARD_HEADER, cells)


def render_impacts(results: Sequence[ImpactResult], fmt: str = "text") -> str:
    if fmt == "csv":
        lines = []
        for res in results:
            c = res.condition
            lead = [c.name, c.driving, c.road, c.configuration]
            lines.extend(lead + [r.component, r.fault_mode] + _csv_tail(r) for r in res.rows)
        return _csv(IMPACT_HEADER + CSV_EXTRA, lines)
    return (_md if fmt == "md" else _tsv)(IMPACT_HEADER, impact_cells(results, fmt))


def rows_from_csv(text: str) -> list[AnalysisRow]:
    """Analysis rows back from :func:`render_hazards` or :func:`render_impacts` CSV."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header not in (HAZARD_HEADER + CSV_EXTRA, IMPACT_HEADER + CSV_EXTRA):
        raise ModelError(f"unexpected CSV header {header}")
    impact = header[0] == "Name"
    out = []
    for rec in reader:
        if len(rec) != len(header):
            raise ModelError(f"CSV row {rec} has {len(rec)} fields, expected {len(header)}")
        scen, part, mode, effect, verdict, inconsistent = (
            [rec[0]] + rec[4:] if impact else rec)
        out.append(AnalysisRow(scen, part, mode, None if effect == NO_EFFECT else effect,
                               Verdict(verdict) if verdict else None, inconsistent == "true"))
    return out
