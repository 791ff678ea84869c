"""Text and tab-separated renderings of an alignment result."""

from __future__ import annotations

from .scoring import format_score
from .tree_align import AlignmentResult
from .tree_model import StructureForest

LINE_WIDTH = 60


def text_report(result: AlignmentResult, forest1: StructureForest, forest2: StructureForest,
                name1: str = "structure 1", name2: str = "structure 2") -> str:
    out = [
        f"# {name1} ({forest1.structure.length} nt, {len(forest1)} nodes) vs "
        f"{name2} ({forest2.structure.length} nt, {len(forest2)} nodes)",
        f"CPU time: {result.stats['cpu_time']:.4f} s",
        f"alignment score: {format_score(result.score)}",
    ]
    if result.best_cell is None:
        out.append("no positive-scoring alignment")
        return "\n".join(out) + "\n"
    i, j = result.best_cell
    out.append(f"best cell: ({i}, {j}) = {forest1.node(i).label()} / {forest2.node(j).label()}")
    out.append("")
    out.append("node alignment:")
    for st in result.trace:
        left = forest1.node(st.i).label() if st.i else "-"
        right = forest2.node(st.j).label() if st.j else "-"
        note = ""
        if st.kind == "junction" and st.op == "match":
            note = f"  stacking {forest1.node(st.i).chs.tokens()}"
        out.append(f"  {left:>6} {right:<6} {st.op:<5} case {st.case}  gamma {format_score(st.gamma)}{note}")
    out.append("")
    out.append("alignment details:")
    rows = result.flattened.rows
    labels = ("seq1", "", "seq2", "ss1", "ss2")
    order = (3, 0, 1, 2, 4)
    for start in range(0, len(rows[0]), LINE_WIDTH):
        for k in order:
            out.append(f"  {labels[k]:<5}{rows[k][start:start + LINE_WIDTH]}")
        out.append("")
    return "\n".join(out).rstrip("\n") + "\n"


def machine_report(result: AlignmentResult, forest1: StructureForest, forest2: StructureForest) -> str:
    """One tab-separated record per trace element; contains no timing so output is reproducible."""
    lines = [f"#score\t{format_score(result.score)}"]
    cell = result.best_cell
    lines.append(f"#best_cell\t{cell[0]}\t{cell[1]}" if cell else "#best_cell\t-\t-")
    lines.append("op\tnode1\tkind1\tnode2\tkind2\tcase\tgamma\tpositions1\tpositions2")
    for st in result.trace:
        n1 = forest1.node(st.i) if st.i else None
        n2 = forest2.node(st.j) if st.j else None
        lines.append("\t".join([
            st.op,
            str(st.i) if st.i else "-",
            n1.kind if n1 else "-",
            str(st.j) if st.j else "-",
            n2.kind if n2 else "-",
            str(st.case),
            format_score(st.gamma),
            ",".join(map(str, n1.positions())) if n1 else "-",
            ",".join(map(str, n2.positions())) if n2 else "-",
        ]))
    return "\n".join(lines) + "\n"
