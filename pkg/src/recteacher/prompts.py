"""Prompt template loading and rendering.

Templates ship as package data under ``templates/``. Rendering replaces only
``{word}`` placeholders whose key is supplied; everything else (including JSON
examples with braces) passes through untouched.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from pathlib import Path
import re
from typing import Mapping, Sequence

DEFAULT_DOMAIN = "goodreads"

TEMPLATE_FILES: tuple[str, ...] = (
    "planner.txt",
    "profile.txt",
    "historical.txt",
    "recent.txt",
    "divergence.txt",
    "reflector.txt",
    "ranker.txt",
    "tool_protocol.txt",
    "subtask_output.txt",
    "item_evidence_system.txt",
    "user_evidence_system.txt",
    "evidence_user.txt",
    "history_summary.txt",
    "history_summary_user.txt",
    "student_system.txt",
)

# Wire name of each analysis agent -> its system template.
SUBTASK_TEMPLATES: Mapping[str, str] = {
    "User_Profile_Summary": "profile.txt",
    "Historical_Interest_Analysis": "historical.txt",
    "Recent_Interest_Analysis": "recent.txt",
    "Interest_Divergence_Reasoning": "divergence.txt",
}

# Only lowercase word placeholders; JSON braces in examples never match.
_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@lru_cache(maxsize=None)
def _packaged(name: str) -> str:
    return (resources.files(__package__) / "templates" / name).read_text(encoding="utf-8")


def load_template(name: str, directory: Path | None = None) -> str:
    """Return raw template text, from `directory` if given else package data."""
    if name not in TEMPLATE_FILES:
        raise KeyError(f"unknown template {name!r}")
    if directory is not None:
        return (Path(directory) / name).read_text(encoding="utf-8")
    return _packaged(name)


def render(text: str, values: Mapping[str, str]) -> str:
    return _PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), text)


def _load_rendered(name: str, values: Mapping[str, str], directory: Path | None) -> str:
    return render(load_template(name, directory), values)


def planner_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    return _load_rendered("planner.txt", {"domain": domain}, directory)


def subtask_system(agent_name: str, domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    try:
        template = SUBTASK_TEMPLATES[agent_name]
    except KeyError:
        raise KeyError(f"unknown agent name {agent_name!r}") from None
    values = {
        "domain": domain,
        "tool_protocol": load_template("tool_protocol.txt", directory).rstrip("\n"),
        "subtask_output": load_template("subtask_output.txt", directory).rstrip("\n"),
    }
    return _load_rendered(template, values, directory)


def reflector_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    return _load_rendered("reflector.txt", {"domain": domain}, directory)


def ranker_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    values = {
        "domain": domain,
        "tool_protocol": load_template("tool_protocol.txt", directory).rstrip("\n"),
    }
    return _load_rendered("ranker.txt", values, directory)


def student_system(directory: Path | None = None) -> str:
    return load_template("student_system.txt", directory)


def history_summary_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    return _load_rendered("history_summary.txt", {"domain": domain}, directory)


def history_summary_user(
    user_block: str,
    previous_summary: str,
    chunk_block: str,
    directory: Path | None = None,
) -> str:
    values = {
        "user_block": user_block,
        "previous_summary": previous_summary if previous_summary else "(no previous summary)",
        "chunk_block": chunk_block,
    }
    return _load_rendered("history_summary_user.txt", values, directory)


def item_evidence_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    return _load_rendered("item_evidence_system.txt", {"domain": domain}, directory)


def user_evidence_system(domain: str = DEFAULT_DOMAIN, directory: Path | None = None) -> str:
    return _load_rendered("user_evidence_system.txt", {"domain": domain}, directory)


def evidence_user(
    target_block: str,
    neighbor_header: str,
    neighbor_block: str,
    extra_keys: Sequence[str] = (),
    directory: Path | None = None,
) -> str:
    extra = "\n".join(f"> {key} (Item attribute)" for key in extra_keys)
    values = {
        "extra_key_definitions": extra,
        "target_block": target_block,
        "neighbor_header": neighbor_header,
        "neighbor_block": neighbor_block,
    }
    return _load_rendered("evidence_user.txt", values, directory)


def render_item_line(item: str, title: str, attributes: Mapping[str, str]) -> str:
    parts = [f"item_id: {item}", f"title: {title}"]
    parts.extend(f"{key}: {attributes[key]}" for key in sorted(attributes))
    return " | ".join(parts)


def render_user_line(user: str, attributes: Mapping[str, str]) -> str:
    parts = [f"user_id: {user}"]
    parts.extend(f"{key}: {attributes[key]}" for key in sorted(attributes))
    return " | ".join(parts)


def render_instance_prompt(
    user: str,
    user_attributes: Mapping[str, str],
    long_term_summary: str,
    recent_lines: Sequence[str],
    candidate_lines: Sequence[str],
    item_keys: Sequence[str] = (),
) -> str:
    """Assemble the per-instance user prompt fed to planner/subtask/ranker agents."""
    lines: list[str] = ["# User Information"]
    lines.append("> User Key Definitions:")
    lines.append(f"> user_id: User's unique identifier. (Value: {user})")
    for key in sorted(user_attributes):
        lines.append(f"> {key}: {user_attributes[key]}")
    lines.append("# Long-term User Behavior Summary")
    lines.append(long_term_summary if long_term_summary else "(no long-term summary)")
    lines.append("# User Behavior (Recent Activity)")
    lines.append("> Item Key Definition:")
    lines.append("> item_id (Unique item identifier)")
    lines.append("> title (Item title)")
    for key in item_keys:
        lines.append(f"> {key} (Item attribute)")
    for index, text in enumerate(recent_lines, start=1):
        lines.append(f"{index}. {text}")
    lines.append("# Candidate Item Information")
    for index, text in enumerate(candidate_lines, start=1):
        lines.append(f"{index}. {text}")
    return "\n".join(lines)
