"""
Report builder for campaign rows: CSV table, JSON summary and SVG heatmap
"""
import os
import logging
from typing import List, Dict, Any, Sequence
from xml.sax.saxutils import escape

import config
from analytics import (venn, venn_by, rate_matrix, taxonomy_breakdown, failing_followups,
                       cochran_sample_size, RateMatrix)
from campaign import CampaignRow
from errors import InvalidInputError
from export_import import DataExporter

logger = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")
CSV_FILE = "rows.csv"
SUMMARY_FILE = "summary.json"
HEATMAP_FILE = "heatmap.svg"


def build_summary(rows: Sequence[CampaignRow]) -> Dict[str, Any]:
    """Venn triple per strictness, rate matrices and the failure-taxonomy breakdown"""
    evaluated = [r for r in rows if r.is_ok]
    levels = [level for level in config.STRICTNESS_LEVELS if any(r.strictness == level for r in evaluated)]

    venn_section = {}
    venn_per_mr = {}
    for level in levels:
        at_level = [r for r in evaluated if r.strictness == level]
        venn_section[level] = venn(at_level).to_dict()
        venn_per_mr[level] = {key[0]: triple.to_dict() for key, triple in venn_by(at_level).items()}

    failing = len(failing_followups(rows)) if "Medium" in levels else 0
    return {
        'report_version': config.REPORT_VERSION,
        'rows': len(rows),
        'evaluated': len(evaluated),
        'skipped': len(rows) - len(evaluated),
        'followups': len({r.followup_id for r in evaluated}),
        'venn': venn_section,
        'venn_by_mr': venn_per_mr,
        'rate_matrix': rate_matrix(rows).to_list(),
        'rate_matrix_by_task': rate_matrix(rows, by_task=True).to_list(),
        'taxonomy': taxonomy_breakdown(rows) if "Medium" in levels else {},
        'failing_followups': failing,
        'annotation_sample_size': cochran_sample_size(failing) if failing else 0,
    }


def _shade(rate: float) -> str:
    ramp = config.COLOR_RAMP
    return ramp[min(len(ramp) - 1, int(rate * len(ramp)))]


def build_heatmap(matrix: RateMatrix) -> str:
    """Relations x strictness grid, cell shading proportional to the violation rate"""
    if not matrix.cells:
        raise InvalidInputError("No evaluated rows to draw a heatmap from")

    mrs = [mr for mr in config.MR_KINDS if any(k[0] == mr for k in matrix.cells)]
    levels = [lv for lv in config.STRICTNESS_LEVELS if any(k[1] == lv for k in matrix.cells)]

    width, height = config.SVG_WIDTH, config.SVG_HEIGHT
    left, top = 200, 80
    cell_w = (width - left - 40) // len(levels)
    cell_h = (height - top - 40) // len(mrs)

    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<style>
    text {{ font-family: 'DejaVu Sans', Arial, sans-serif; font-size: 14px; fill: #222; }}
    .title {{ font-size: 20px; font-weight: bold; }}
    .cell {{ stroke: #ffffff; stroke-width: 2; }}
</style>
<rect width="{width}" height="{height}" fill="#ffffff"/>
<text class="title" x="{width // 2}" y="36" text-anchor="middle">MR violation rate</text>
"""
    for j, level in enumerate(levels):
        x = left + j * cell_w + cell_w // 2
        svg += f'<text x="{x}" y="{top - 12}" text-anchor="middle">{escape(level)}</text>\n'

    for i, mr in enumerate(mrs):
        y = top + i * cell_h
        svg += f'<text x="{left - 12}" y="{y + cell_h // 2 + 5}" text-anchor="end">{escape(mr)}</text>\n'
        for j, level in enumerate(levels):
            x = left + j * cell_w
            cell = matrix.cells.get((mr, level))
            if cell is None:
                svg += f'<rect class="cell" x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="#eeeeee"/>\n'
                continue
            fill = _shade(cell.rate)
            ink = "#ffffff" if cell.rate >= 0.6 else "#222222"
            svg += f'<rect class="cell" x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}"/>\n'
            svg += (f'<text x="{x + cell_w // 2}" y="{y + cell_h // 2 + 5}" text-anchor="middle" '
                    f'style="fill: {ink}">{cell.rate:.2f} ({cell.violations}/{cell.evaluated})</text>\n')

    svg += "</svg>\n"
    return svg


class ReportBuilder:
    """Writes the campaign report files into one directory"""

    def __init__(self, output_dir: str = config.OUTPUT_DIR):
        self.output_dir = output_dir
        self.exporter = DataExporter()

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def build_csv(self, rows: Sequence[CampaignRow]) -> str:
        path = self._path(CSV_FILE)
        self.exporter.export_rows_to_csv(list(rows), path)
        return path

    def build_json(self, rows: Sequence[CampaignRow]) -> str:
        path = self._path(SUMMARY_FILE)
        self.exporter.export_to_json(build_summary(rows), path)
        return path

    def build_svg(self, rows: Sequence[CampaignRow]) -> str:
        if not rows:
            raise InvalidInputError("Cannot draw a heatmap of an empty campaign")
        svg = build_heatmap(rate_matrix(rows))
        path = self._path(HEATMAP_FILE)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(svg)
        return path

    def build(self, rows: Sequence[CampaignRow], formats: Sequence[str] = FORMATS) -> List[str]:
        unknown = [f for f in formats if f not in FORMATS]
        if unknown:
            raise InvalidInputError(f"Unknown report format: {', '.join(unknown)}")
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)

        builders = {"csv": self.build_csv, "json": self.build_json, "svg": self.build_svg}
        paths = [builders[fmt](rows) for fmt in FORMATS if fmt in formats]
        logger.info("Report written: %s", ", ".join(paths))
        return paths


def emit_report(rows: Sequence[CampaignRow], formats: Sequence[str] = FORMATS,
                output_dir: str = config.OUTPUT_DIR) -> List[str]:
    return ReportBuilder(output_dir).build(rows, formats)
