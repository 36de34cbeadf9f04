"""Ordered allow/deny access rules over dotted namespaces.

Rules are evaluated in declaration order, first match wins, and anything
no rule matches is denied. Patterns are namespace globs: ``*`` matches one
dot-separated segment, a trailing ``**`` matches the namespace itself and
everything below it, and the participant pattern ``ANY`` matches every
participant.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from smartpark.errors import ConfigurationError


class AclOperation(Enum):
    CREATE = "CREATE"
    READ = "READ"
    UPDATE = "UPDATE"
    DELETE = "DELETE"
    ALL = "ALL"


class AclAction(Enum):
    ALLOW = "ALLOW"
    DENY = "DENY"


TIMESHEET_NAMESPACE = "parking.timesheet"
TIMESHEET_RESOURCE = TIMESHEET_NAMESPACE + ".Timesheet"
SYSTEM_NAMESPACE = "system"


def _compile_pattern(pattern: str) -> re.Pattern:
    if pattern == "ANY":
        return re.compile(r".*", re.DOTALL)
    if not pattern:
        raise ConfigurationError("empty namespace pattern")
    segments = pattern.split(".")
    parts: list[str] = []
    for i, segment in enumerate(segments):
        if segment == "**":
            if i != len(segments) - 1:
                raise ConfigurationError(
                    f"'**' is only valid as the final segment: {pattern!r}"
                )
            # matches the parent namespace itself or any deeper path
            if parts:
                prefix = r"\.".join(parts)
                return re.compile(rf"^{prefix}(\..*)?$", re.DOTALL)
            return re.compile(r".*", re.DOTALL)
        if segment == "*":
            parts.append(r"[^.]+")
        elif segment == "":
            raise ConfigurationError(f"empty segment in pattern: {pattern!r}")
        else:
            parts.append(re.escape(segment))
    return re.compile(r"^" + r"\.".join(parts) + r"$")


@dataclass(frozen=True)
class AclRule:
    participant_pattern: str
    operation: AclOperation
    resource_pattern: str
    action: AclAction


class AclPolicy:
    def __init__(self, rules: list[AclRule]):
        self._rules = []
        for rule in rules:
            if not isinstance(rule.operation, AclOperation) or not isinstance(
                rule.action, AclAction
            ):
                raise ConfigurationError(f"malformed rule: {rule!r}")
            self._rules.append(
                (
                    _compile_pattern(rule.participant_pattern),
                    rule.operation,
                    _compile_pattern(rule.resource_pattern),
                    rule.action,
                    rule,
                )
            )

    @property
    def rules(self) -> list[AclRule]:
        return [r[-1] for r in self._rules]

    def check(self, participant: str, operation: AclOperation, resource: str) -> AclAction:
        """First matching rule's action; DENY when nothing matches."""
        for participant_re, rule_op, resource_re, action, _ in self._rules:
            op_matches = rule_op is AclOperation.ALL or rule_op is operation
            if op_matches and participant_re.match(participant) and resource_re.match(resource):
                return action
        return AclAction.DENY

    def allows(self, participant: str, operation: AclOperation, resource: str) -> bool:
        return self.check(participant, operation, resource) is AclAction.ALLOW


def default_policy() -> AclPolicy:
    """Every participant may touch the parking namespace; system participants
    keep the system namespace; everything else is denied."""
    return AclPolicy(
        [
            AclRule("ANY", AclOperation.ALL, "parking.**", AclAction.ALLOW),
            AclRule("system.**", AclOperation.ALL, "system.**", AclAction.ALLOW),
        ]
    )
