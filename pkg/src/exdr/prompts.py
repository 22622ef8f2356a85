"""Default prompt templates and the override mechanism.

Two system prompts cover the two generation settings: plain detection, and
detection with two retrieved in-context examples prepended.  Each template
can be overridden by dropping a same-named ``.txt`` file into a prompt
directory (``--prompt-dir``).
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union

PLAIN_SYSTEM = (
    "You are a knowledgeable and analytical fact-checking assistant. Your task is to "
    "determine whether a social text-image pair is fake.\n"
    "\n"
    "Your response should be either \"The pair is fake because {explanation of your "
    "reasoning}.\" if the text and image present false, misleading, or manipulated "
    "content, or \"The pair is real because {explanation of your reasoning}.\" if the "
    "text and image are consistent and factually aligned.\n"
    "\n"
    "Your explanation must be concise and clear, highlighting linguistic, visual, or "
    "contextual cues that support your conclusion."
)

AUGMENTED_SYSTEM = (
    "You are a knowledgeable and analytical fact-checking assistant. Your task is to "
    "determine whether a social text-image pair is fake.\n"
    "\n"
    "Your response should be either \"The pair is fake because {explanation of your "
    "reasoning}.\" if the text and image present false, misleading, or manipulated "
    "content, or \"The pair is real because {explanation of your reasoning}.\" if the "
    "text and image are consistent and factually aligned.\n"
    "\n"
    "Your explanation should be concise and clear, highlighting any linguistic, "
    "visual, or contextual cues that support your conclusion."
)

PLAIN_USER = "the image <image> and the text {content}."
FIRST_EXAMPLE_USER = "Refer to these examples:\nthe first image <image> and the text {content}."
SECOND_EXAMPLE_USER = "the second image <image> and the text {content}."
QUERY_USER = "Now determine the following:\nthe third image <image> and the text {content}."
EXAMPLE_ASSISTANT = "The pair is {verdict} because {explanation}"


@dataclass(frozen=True)
class PromptSet:
    plain_system: str = PLAIN_SYSTEM
    augmented_system: str = AUGMENTED_SYSTEM
    plain_user: str = PLAIN_USER
    first_example_user: str = FIRST_EXAMPLE_USER
    second_example_user: str = SECOND_EXAMPLE_USER
    query_user: str = QUERY_USER
    example_assistant: str = EXAMPLE_ASSISTANT

    @classmethod
    def from_dir(cls, prompt_dir: Optional[Union[str, Path]]) -> "PromptSet":
        """Load overrides from ``<prompt_dir>/<field>.txt``; defaults elsewhere."""
        if prompt_dir is None:
            return cls()
        prompt_dir = Path(prompt_dir)
        overrides = {}
        for spec in fields(cls):
            candidate = prompt_dir / f"{spec.name}.txt"
            if candidate.is_file():
                overrides[spec.name] = candidate.read_text(encoding="utf-8").rstrip("\n")
        return cls(**overrides)


DEFAULT_PROMPTS = PromptSet()
