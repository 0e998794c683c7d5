"""Word error rate scoring: alignment, corpus aggregation, reporting."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path


# ---------------------------------------------------------------------------
# alignment
# ---------------------------------------------------------------------------


@dataclass
class AlignmentResult:
    """Edit-distance alignment counts between a reference and a hypothesis."""

    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        if self.ref_len == 0:
            return 0.0
        return self.errors / self.ref_len


def align(ref: list[str], hyp: list[str]) -> AlignmentResult:
    """Align ``hyp`` against ``ref`` with unit edit costs.

    Cost ties are resolved in favor of substitutions over insert plus delete
    pairs.  An empty reference only has a defined rate when the hypothesis is
    empty as well.
    """
    if not ref:
        if hyp:
            raise ValueError("WER is undefined for an empty reference and non-empty hypothesis")
        return AlignmentResult(0, 0, 0, 0)
    n_ref, n_hyp = len(ref), len(hyp)
    # dist[i][j]: edit distance from ref[:i] to hyp[:j]
    dist = [[0] * (n_hyp + 1) for _ in range(n_ref + 1)]
    for i in range(n_ref + 1):
        dist[i][0] = i
    for j in range(n_hyp + 1):
        dist[0][j] = j
    for i in range(1, n_ref + 1):
        row = dist[i]
        prev = dist[i - 1]
        ref_tok = ref[i - 1]
        for j in range(1, n_hyp + 1):
            diag = prev[j - 1] + (0 if ref_tok == hyp[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)
    subs = dels = ins = 0
    i, j = n_ref, n_hyp
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            i -= 1
            j -= 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return AlignmentResult(substitutions=subs, deletions=dels, insertions=ins, ref_len=n_ref)


# ---------------------------------------------------------------------------
# corpus aggregation
# ---------------------------------------------------------------------------


def corpus_wer(pairs: list[tuple[list[str], list[str]]]) -> float:
    """Error-mass weighted WER over (reference, hypothesis) pairs.

    Pairs with an empty reference are excluded with a warning; the total is
    the summed error count divided by the summed reference length.
    """
    if not pairs:
        raise ValueError("corpus_wer needs at least one (reference, hypothesis) pair")
    total_errors = 0
    total_ref = 0
    for ref, hyp in pairs:
        if not ref:
            warnings.warn("skipping empty-reference utterance in corpus WER", stacklevel=2)
            continue
        result = align(ref, hyp)
        total_errors += result.errors
        total_ref += result.ref_len
    if total_ref == 0:
        raise ValueError("total reference length is zero: corpus WER is undefined")
    return total_errors / total_ref


def relative_reduction(base_wer: float, new_wer: float) -> float:
    """Percentage reduction of ``new_wer`` relative to ``base_wer``."""
    if base_wer <= 0.0:
        raise ValueError(f"base WER must be positive, got {base_wer}")
    return 100.0 * (base_wer - new_wer) / base_wer


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


@dataclass
class MethodResult:
    """One evaluation row: a selection method and its corpus WER."""

    method: str
    wer: float
    n: int | None = None
    seed: int | None = None


def format_report(results: list[MethodResult]) -> str:
    """Render an aligned plain-text WER table."""
    if not results:
        raise ValueError("no results to report")
    headers = ["method", "wer%", "n", "seed"]
    rows = []
    for res in results:
        rows.append(
            [
                res.method,
                f"{100.0 * res.wer:.2f}",
                "" if res.n is None else str(res.n),
                "" if res.seed is None else str(res.seed),
            ]
        )
    widths = [max(len(headers[k]), max(len(r[k]) for r in rows)) for k in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[k]) for k, h in enumerate(headers))]
    lines.append("  ".join("-" * widths[k] for k in range(len(headers))))
    for r in rows:
        lines.append("  ".join(r[k].ljust(widths[k]) for k in range(len(headers))))
    return "\n".join(lines)


def write_records(path: str | Path, results: list[MethodResult]) -> None:
    """Write one machine-readable JSON record per result row."""
    lines = []
    for res in results:
        record = {"method": res.method, "wer": res.wer, "n": res.n, "seed": res.seed}
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
