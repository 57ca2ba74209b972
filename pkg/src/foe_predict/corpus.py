"""Bundled rule files (``rules/*.foe``)."""
from __future__ import annotations

from importlib import resources

from .ast import AnalyticRule
from .parser import parse_rule


def rule_names() -> list[str]:
    root = resources.files(__package__) / "rules"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".foe"))


def rule_text(name: str) -> str:
    return (resources.files(__package__) / "rules" / f"{name}.foe").read_text(encoding="utf-8")


def load_rule(name: str) -> AnalyticRule:
    return parse_rule(rule_text(name))


def load_all() -> dict[str, AnalyticRule]:
    return {name: load_rule(name) for name in rule_names()}
