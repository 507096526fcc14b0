"""Verification records shared by the transport and verification modules."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

PASS, FAIL, REPORTED = "pass", "fail", "reported"


def _params_text(params) -> str:
    return json.dumps(params or {}, sort_keys=True, separators=(",", ":"), default=float)


@dataclass(frozen=True)
class VerificationRecord:
    """One checked identity or inequality.

    ``margin`` is ``|lhs - rhs|`` for identities and ``rhs - lhs`` for
    inequalities ``lhs <= rhs``; reported records carry a signed margin but
    no pass/fail semantics.
    """

    check_id: str
    paper_anchor: str
    measure_id: str
    params: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    status: str
    kind: str

    @property
    def failed(self) -> bool:
        return self.status == FAIL


def identity(check_id, anchor, measure_id, params, lhs, rhs, tolerance, relative=False,
             floor=0.0):
    """Record for ``lhs == rhs``.

    With ``relative`` the margin is scaled by ``max(|lhs|, |rhs|, floor)``;
    the floor keeps the relative gap meaningful when both sides vanish.
    """
    lhs, rhs = float(lhs), float(rhs)
    if math.isinf(lhs) and lhs == rhs:
        margin = 0.0
    else:
        margin = abs(lhs - rhs)
        if relative:
            scale = max(abs(lhs), abs(rhs), floor)
            margin = margin / scale if scale > 0 else 0.0
    status = PASS if margin <= tolerance else FAIL
    return VerificationRecord(check_id, anchor, measure_id, _params_text(params), lhs, rhs,
                              margin, float(tolerance), status, "identity")


def inequality(check_id, anchor, measure_id, params, lhs, rhs, tolerance):
    """Record for ``lhs <= rhs`` with slack ``tolerance``."""
    lhs, rhs = float(lhs), float(rhs)
    if math.isinf(rhs) and rhs > 0 and not (math.isinf(lhs) and lhs > 0):
        margin = math.inf
    else:
        margin = rhs - lhs
    status = PASS if margin >= -tolerance else FAIL
    return VerificationRecord(check_id, anchor, measure_id, _params_text(params), lhs, rhs,
                              margin, float(tolerance), status, "inequality")


def reported(check_id, anchor, measure_id, params, lhs, rhs, margin):
    """Diagnostic record without pass/fail semantics."""
    return VerificationRecord(check_id, anchor, measure_id, _params_text(params), float(lhs),
                              float(rhs), float(margin), 0.0, REPORTED, "reported")
