"""Per-site request filter in front of every adapter.

Ordered rules over (principal pattern, operation kind); first match
wins, the terminal default applies otherwise.  DENY answers explicitly;
DROP never answers, so the caller can only observe a timeout.
"""
from __future__ import annotations

from dataclasses import dataclass
from fnmatch import fnmatchcase

FORWARD = "FORWARD"
DENY = "DENY"
DROP = "DROP"

ACTIONS = (FORWARD, DENY, DROP)
OP_KINDS = ("READ", "WRITE", "SCHEMA")

# principal name a request is demoted to when authentication fails
UNKNOWN_PRINCIPAL = "?"


@dataclass(frozen=True)
class FirewallRule:
    principal: str  # fnmatch-style pattern
    op: str  # READ | WRITE | SCHEMA | *
    action: str


@dataclass(frozen=True)
class FirewallPolicy:
    rules: tuple[FirewallRule, ...] = ()
    default: str = DENY


def firewall_decide(policy: FirewallPolicy, principal: str, op: str) -> str:
    for rule in policy.rules:
        if rule.op not in ("*", op):
            continue
        if fnmatchcase(principal, rule.principal):
            return rule.action
    return policy.default


def server_only_policy(principal: str = "mdbs-server") -> FirewallPolicy:
    """Ships as the default: the multidatabase server may do anything,
    everyone else is denied."""
    return FirewallPolicy(rules=(FirewallRule(principal, "*", FORWARD),), default=DENY)


def policy_from_json(doc: dict) -> FirewallPolicy:
    rules = tuple(
        FirewallRule(r["principal"], r.get("op", "*"), r["action"])
        for r in doc.get("rules", [])
    )
    return FirewallPolicy(rules=rules, default=doc.get("default", DENY))
