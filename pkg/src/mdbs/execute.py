"""Fan-out execution of plans and composition of sub-results.

Sub-queries run concurrently up to a parallelism cap; every planned
site gets exactly one status entry.  Composition itself is pure and
single-threaded per query.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional

from mdbs.errors import (
    MdbsError,
    PartialUnsupported,
    SchemaDrift,
    SiteUnavailable,
)
from mdbs.plan import (
    DecompositionPlan,
    Filter,
    JoinOn,
    Leaf,
    Limit,
    Node,
    Project,
    Sort,
    SubQuery,
    UnionAll,
    WritePlan,
)
from mdbs.predicate import eval_predicate
from mdbs.sites.connect import (
    AgentDenied,
    AgentError,
    AgentTimeout,
    AgentUnavailable,
    SiteConnection,
)
from mdbs.types import CanonicalType, Value

Row = list[Value]

OK = "OK"
DENIED = "DENIED"
TIMEOUT = "TIMEOUT"
ADAPTER_ERROR = "ADAPTER_ERROR"

FAIL_FAST = "FAIL_FAST"
PARTIAL = "PARTIAL"


@dataclass(frozen=True)
class ExecOptions:
    timeout_ms: int = 2000
    failure_mode: str = FAIL_FAST
    max_parallel: int = 8

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be at least 1")
        if self.failure_mode not in (FAIL_FAST, PARTIAL):
            raise ValueError(f"unknown failure mode {self.failure_mode!r}")


@dataclass
class PerSiteStatus:
    site_id: str
    outcome: str
    rows_or_affected: int = 0
    elapsed_ms: float = 0.0
    message: str = ""

    def to_json(self) -> dict:
        return {
            "site": self.site_id,
            "outcome": self.outcome,
            "rows_or_affected": self.rows_or_affected,
            "elapsed_ms": round(self.elapsed_ms, 3),
            "message": self.message,
        }


@dataclass
class ResultSet:
    columns: tuple[str, ...]
    rows: list[Row]
    partial: bool = False


def _normalize_row(row: Row, sq: SubQuery) -> Row:
    out = []
    for value, col in zip(row, sq.columns):
        if (
            value is not None
            and col.out_type is CanonicalType.FLOAT
            and isinstance(value, int)
            and not isinstance(value, bool)
        ):
            value = float(value)
        out.append(value)
    return out


def _fetch(conn: SiteConnection, sq: SubQuery, timeout_s: float):
    started = time.monotonic()
    try:
        rows, skipped = conn.run_subquery(sq, timeout_s)
        elapsed = (time.monotonic() - started) * 1000
        message = f"skipped_casts={skipped}" if skipped else ""
        status = PerSiteStatus(sq.site_id, OK, len(rows), elapsed, message)
        return status, [_normalize_row(list(r), sq) for r in rows]
    except AgentDenied as exc:
        outcome, message = DENIED, str(exc)
    except (AgentTimeout, AgentUnavailable) as exc:
        outcome, message = TIMEOUT, str(exc)
    except (AgentError, MdbsError) as exc:
        outcome, message = ADAPTER_ERROR, str(exc)
    elapsed = (time.monotonic() - started) * 1000
    return PerSiteStatus(sq.site_id, outcome, 0, elapsed, message), None


def execute_plan(
    plan: DecompositionPlan,
    connections: Mapping[str, SiteConnection],
    opts: ExecOptions = ExecOptions(),
) -> tuple[ResultSet, list[PerSiteStatus]]:
    for sq in plan.subqueries:
        if sq.site_id not in connections:
            raise SiteUnavailable(f"no connection for site {sq.site_id!r}")

    timeout_s = opts.timeout_ms / 1000.0
    workers = min(opts.max_parallel, max(len(plan.subqueries), 1))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_fetch, connections[sq.site_id], sq, timeout_s)
            for sq in plan.subqueries
        ]
        outcomes = [f.result() for f in futures]

    statuses = [status for status, _ in outcomes]
    failed = [s for s in statuses if s.outcome != OK]
    if failed:
        if opts.failure_mode == FAIL_FAST:
            raise SiteUnavailable(
                f"site {failed[0].site_id} {failed[0].outcome}", statuses=statuses
            )
        if plan.kind == "VERTICAL":
            raise PartialUnsupported(
                "a vertical join cannot be answered partially "
                f"(site {failed[0].site_id} {failed[0].outcome})",
                statuses=statuses,
            )

    sub_results = {
        i: rows for i, (status, rows) in enumerate(outcomes) if status.outcome == OK
    }
    leaf_columns = {
        i: tuple(c.out for c in sq.columns) for i, sq in enumerate(plan.subqueries)
    }
    expected = {i: len(sq.columns) for i, sq in enumerate(plan.subqueries)}
    result = compose(sub_results, plan.tree, leaf_columns, expected)
    result.partial = bool(failed)
    return result, statuses


def compose(
    sub_results: Mapping[int, list[Row]],
    tree: Node,
    leaf_columns: Mapping[int, tuple[str, ...]],
    expected_arity: Optional[Mapping[int, int]] = None,
) -> ResultSet:
    """Deterministic evaluation of a composition tree over sub-results.

    ``sub_results`` may omit leaves (partial unions); filters apply the
    two-valued NULL rule; the sort is stable with NULLs first ascending
    and last descending.
    """
    if expected_arity:
        for index, rows in sub_results.items():
            want = expected_arity.get(index)
            for row in rows:
                if want is not None and len(row) != want:
                    raise SchemaDrift(
                        f"leaf {index} returned {len(row)} columns, expected {want}"
                    )
    columns, rows = _eval_node(tree, sub_results, leaf_columns)
    return ResultSet(columns=tuple(columns), rows=rows)


def _eval_node(node: Node, sub_results, leaf_columns) -> tuple[list[str], list[Row]]:
    if isinstance(node, Leaf):
        cols = list(leaf_columns[node.index])
        return cols, [list(r) for r in sub_results.get(node.index, [])]
    if isinstance(node, UnionAll):
        cols: Optional[list[str]] = None
        rows: list[Row] = []
        for child in node.inputs:
            ccols, crows = _eval_node(child, sub_results, leaf_columns)
            if cols is None:
                cols = ccols
            rows.extend(crows)
        return cols or [], rows
    if isinstance(node, JoinOn):
        parts = [_eval_node(child, sub_results, leaf_columns) for child in node.inputs]
        cols, rows = parts[0]
        for rcols, rrows in parts[1:]:
            cols, rows = _hash_join(cols, rows, rcols, rrows, node.key)
        return cols, rows
    if isinstance(node, Filter):
        cols, rows = _eval_node(node.input, sub_results, leaf_columns)
        kept = [
            row for row in rows if eval_predicate(node.predicate, dict(zip(cols, row)))
        ]
        return cols, kept
    if isinstance(node, Sort):
        cols, rows = _eval_node(node.input, sub_results, leaf_columns)
        return cols, sort_rows(cols, rows, node.attr, node.direction)
    if isinstance(node, Limit):
        cols, rows = _eval_node(node.input, sub_results, leaf_columns)
        return cols, rows[: node.n]
    if isinstance(node, Project):
        cols, rows = _eval_node(node.input, sub_results, leaf_columns)
        idx = [cols.index(name) for name in node.attrs]
        return list(node.attrs), [[row[i] for i in idx] for row in rows]
    raise TypeError(f"unknown composition node {node!r}")


def _hash_join(
    lcols: list[str], lrows: list[Row], rcols: list[str], rrows: list[Row], key: str
) -> tuple[list[str], list[Row]]:
    li = lcols.index(key)
    ri = rcols.index(key)
    keep = [i for i, name in enumerate(rcols) if name not in lcols]
    index: dict = {}
    for row in rrows:
        k = row[ri]
        if k is None:
            continue
        index.setdefault(k, []).append(row)
    cols = lcols + [rcols[i] for i in keep]
    rows: list[Row] = []
    for lrow in lrows:
        k = lrow[li]
        if k is None:
            continue
        for rrow in index.get(k, ()):
            rows.append(lrow + [rrow[i] for i in keep])
    return cols, rows


def sort_rows(cols: list[str], rows: list[Row], attr: str, direction: str) -> list[Row]:
    i = cols.index(attr)
    nulls = [r for r in rows if r[i] is None]
    present = [r for r in rows if r[i] is not None]
    if direction == "DESC":
        present.sort(key=lambda r: r[i], reverse=True)
        return present + nulls
    present.sort(key=lambda r: r[i])
    return nulls + present


def execute_write(
    plan: WritePlan,
    connections: Mapping[str, SiteConnection],
    opts: ExecOptions = ExecOptions(),
) -> list[PerSiteStatus]:
    """Apply sub-writes one site at a time in declaration order.

    There is no cross-site rollback: a mixed outcome is reported, not
    repaired, and earlier sites keep their applied writes.
    """
    timeout_s = opts.timeout_ms / 1000.0
    statuses = []
    for sw in plan.subwrites:
        conn = connections.get(sw.site_id)
        started = time.monotonic()
        if conn is None:
            statuses.append(
                PerSiteStatus(sw.site_id, ADAPTER_ERROR, 0, 0.0, "no connection")
            )
            continue
        try:
            affected = conn.apply_write(sw, timeout_s)
            elapsed = (time.monotonic() - started) * 1000
            statuses.append(PerSiteStatus(sw.site_id, OK, affected, elapsed))
        except AgentDenied as exc:
            elapsed = (time.monotonic() - started) * 1000
            statuses.append(PerSiteStatus(sw.site_id, DENIED, 0, elapsed, str(exc)))
        except (AgentTimeout, AgentUnavailable) as exc:
            elapsed = (time.monotonic() - started) * 1000
            statuses.append(PerSiteStatus(sw.site_id, TIMEOUT, 0, elapsed, str(exc)))
        except (AgentError, MdbsError) as exc:
            elapsed = (time.monotonic() - started) * 1000
            statuses.append(
                PerSiteStatus(sw.site_id, ADAPTER_ERROR, 0, elapsed, str(exc))
            )
    return statuses
