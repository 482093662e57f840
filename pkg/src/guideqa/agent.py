"""Agentic layer: planning, per-document tool selection, observation memo, aggregation.

The loop follows a reason-then-act pattern: every step the model sees the
question, the plan, the tool catalogue and all prior (action, observation)
pairs, and must answer in a line-oriented grammar:

    THOUGHT: <free text>
    ACTION: <tool_id> | <query>        (run one scoped retrieval pipeline)
or
    THOUGHT: <free text>
    FINISH: <answer>

Completed (tool_id, query) pairs are memoized, so a repeated call is served
from memory instead of re-running the underlying pipeline.
"""

from __future__ import annotations

import re
import time
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from dataclasses import dataclass, field
from typing import Callable, Union

from .answer import Answer, Citation, Mode
from .errors import (
    AgentError,
    AggregationError,
    PlanningError,
    RegistryError,
    ValidationError,
)
from .providers import LanguageProvider


@dataclass(frozen=True)
class Tool:
    """A scoped retrieval pipeline over one document or section."""

    tool_id: str
    description: str
    pipeline: Callable[[str], Answer]


class ToolRegistry:
    def __init__(self):
        self._tools: dict[str, Tool] = {}

    def __len__(self) -> int:
        return len(self._tools)

    def __contains__(self, tool_id: str) -> bool:
        return tool_id in self._tools

    def get(self, tool_id: str) -> Tool | None:
        return self._tools.get(tool_id)

    def list(self) -> list[Tool]:
        return list(self._tools.values())


def register_tool(registry: ToolRegistry, tool: Tool) -> ToolRegistry:
    if not tool.description:
        raise ValidationError(f"tool {tool.tool_id!r} needs a non-empty description")
    if tool.tool_id in registry:
        raise RegistryError(f"tool id {tool.tool_id!r} is already registered")
    registry._tools[tool.tool_id] = tool
    return registry


@dataclass(frozen=True)
class CallTool:
    tool_id: str
    query: str


@dataclass(frozen=True)
class Finish:
    answer: str


AgentAction = Union[CallTool, Finish]


@dataclass(frozen=True)
class AgentStep:
    thought: str
    action: AgentAction
    observation: str | None = None

    def __post_init__(self):
        if isinstance(self.action, Finish) and self.observation is not None:
            raise ValidationError("a finish step carries no observation")


@dataclass
class AgentTrace:
    steps: list[AgentStep] = field(default_factory=list)
    completed_tasks: set[str] = field(default_factory=set)
    truncated: bool = False


def step_to_dict(step: AgentStep) -> dict:
    if isinstance(step.action, CallTool):
        action = {"type": "call_tool", "tool_id": step.action.tool_id, "query": step.action.query}
    else:
        action = {"type": "finish", "answer": step.action.answer}
    out = {"thought": step.thought, "action": action}
    if step.observation is not None:
        out["observation"] = step.observation
    return out


def trace_to_json(trace: AgentTrace) -> list[dict]:
    """Serialize the step list for the service's inspection surface."""
    return [step_to_dict(step) for step in trace.steps]


@dataclass(frozen=True)
class AgentConfig:
    max_steps: int = 8
    tool_timeout_s: float = 60.0
    planner_prompt_template: str = (
        "Break the question into the retrieval subtasks needed to answer it, "
        "one per line, using the available sources. Output only the subtasks.\n\n"
        "Available sources:\n{tools}\n\nQuestion: {question}"
    )

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValidationError("max_steps must be >= 1")
        if self.tool_timeout_s <= 0:
            raise ValidationError("tool_timeout_s must be positive")


PLANNER_SYSTEM = "You plan retrieval over a catalogue of guideline documents."

AGENT_SYSTEM = (
    "You select retrieval tools to answer questions about vaccination "
    "guidelines. Reply with THOUGHT: followed by either "
    "'ACTION: <tool_id> | <query>' or 'FINISH: <answer>'."
)

STEP_TEMPLATE = (
    "Question: {question}\n\nPlan:\n{plan}\n\nAvailable tools:\n{tools}\n\n"
    "{history}"
    "Decide the next action. Reply with:\n"
    "THOUGHT: <your reasoning>\n"
    "ACTION: <tool_id> | <query>\n"
    "or, when you can answer:\n"
    "THOUGHT: <your reasoning>\n"
    "FINISH: <answer>"
)

FORMAT_REMINDER = (
    "\n\nYour previous reply did not follow the required format. Reply with "
    "exactly one 'ACTION: <tool_id> | <query>' line naming a listed tool, or "
    "one 'FINISH: <answer>' line."
)

AGGREGATION_SYSTEM = (
    "You are finalizing an answer for healthcare professionals from the "
    "findings below."
)
AGGREGATION_TEMPLATE = (
    "Findings gathered from the consulted sources:\n\n{observations}\n\n"
    "Check these findings against each other for coherence and factual "
    "correctness, then write the final answer. Keep every citation marker "
    "(like [1]) that supports a statement you retain."
)

_NUMBERING_RE = re.compile(r"^\s*(?:\d+\s*[.)]\s*|[-*]\s+)")


def _tool_lines(registry: ToolRegistry) -> str:
    return "\n".join(f"- {t.tool_id}: {t.description}" for t in registry.list())


def plan(question: str, registry: ToolRegistry, llm: LanguageProvider) -> list[str]:
    """Subtasks parsed one per line; an empty plan falls back to the question."""
    if len(registry) == 0:
        raise ValidationError("cannot plan over an empty tool registry")
    prompt = AgentConfig().planner_prompt_template.format(
        tools=_tool_lines(registry), question=question
    )
    try:
        raw = llm.generate(PLANNER_SYSTEM, prompt)
    except Exception as exc:
        raise PlanningError(f"planning failed: {exc}") from exc
    subtasks = []
    for line in raw.splitlines():
        candidate = _NUMBERING_RE.sub("", line).strip()
        if candidate:
            subtasks.append(candidate)
    return subtasks or [question]


def _parse_action(raw: str) -> tuple[str, AgentAction] | None:
    thought_parts: list[str] = []
    lines = raw.splitlines()
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith("THOUGHT:"):
            thought_parts.append(stripped[len("THOUGHT:") :].strip())
        elif stripped.startswith("ACTION:"):
            rest = stripped[len("ACTION:") :]
            if "|" not in rest:
                return None
            tool_id, _, query = rest.partition("|")
            tool_id, query = tool_id.strip(), query.strip()
            if not tool_id or not query:
                return None
            return " ".join(thought_parts), CallTool(tool_id=tool_id, query=query)
        elif stripped.startswith("FINISH:"):
            remainder = [stripped[len("FINISH:") :].strip()]
            remainder.extend(lines[i + 1 :])
            return " ".join(thought_parts), Finish(answer="\n".join(remainder).strip())
    return None


def _run_with_timeout(tool: Tool, query: str, timeout_s: float) -> Answer:
    with ThreadPoolExecutor(max_workers=1) as pool:
        future = pool.submit(tool.pipeline, query)
        try:
            return future.result(timeout=timeout_s)
        except FutureTimeoutError as exc:
            future.cancel()
            raise AgentError(
                f"tool {tool.tool_id!r} timed out after {timeout_s}s on query {query!r}"
            ) from exc


def aggregate(observations: list[tuple[str, str]], llm: LanguageProvider) -> str:
    """Global validation pass over (tool_id, answer text) observations."""
    if not observations:
        raise ValidationError("aggregation requires at least one observation")
    body = "\n\n".join(f"[{tool_id}]\n{text}" for tool_id, text in observations)
    try:
        return llm.generate(AGGREGATION_SYSTEM, AGGREGATION_TEMPLATE.format(observations=body))
    except Exception as exc:
        raise AggregationError(f"aggregation failed: {exc}") from exc


def _history_block(steps: list[AgentStep]) -> str:
    if not steps:
        return ""
    lines = []
    for n, step in enumerate(steps, start=1):
        assert isinstance(step.action, CallTool)
        lines.append(f"Step {n} action: {step.action.tool_id} | {step.action.query}")
        lines.append(f"Step {n} observation: {step.observation}")
    return "Previous steps:\n" + "\n".join(lines) + "\n\n"


def run_agent(
    question: str,
    registry: ToolRegistry,
    llm: LanguageProvider,
    config: AgentConfig | None = None,
) -> tuple[Answer, AgentTrace]:
    """Drive the tool-selection loop to a finished, cited answer.

    The final answer text comes from the aggregation pass when any tool was
    consulted, and its citations are the union of the invoked tools' citations.
    Hitting the step cap synthesizes a best-effort Finish instead of failing:
    a partially cited answer beats none for this product.
    """
    if len(registry) == 0:
        raise ValidationError("cannot run the agent over an empty tool registry")
    config = config or AgentConfig()
    started = time.perf_counter()

    plan_items = plan(question, registry, llm)
    trace = AgentTrace()
    memo: dict[tuple[str, str], Answer] = {}
    invocation_order: list[tuple[str, str]] = []
    finish_text: str | None = None

    for _ in range(config.max_steps):
        prompt = STEP_TEMPLATE.format(
            question=question,
            plan="\n".join(f"- {item}" for item in plan_items),
            tools=_tool_lines(registry),
            history=_history_block(trace.steps),
        )
        parsed = None
        for attempt in range(2):
            try:
                raw = llm.generate(AGENT_SYSTEM, prompt if attempt == 0 else prompt + FORMAT_REMINDER)
            except Exception as exc:
                raise AgentError(f"agent step failed: {exc}") from exc
            parsed = _parse_action(raw)
            if parsed is not None and (
                isinstance(parsed[1], Finish) or parsed[1].tool_id in registry
            ):
                break
            parsed = None
        if parsed is None:
            raise AgentError("provider kept emitting malformed actions after a format reminder")

        thought, action = parsed
        if isinstance(action, Finish):
            trace.steps.append(AgentStep(thought=thought, action=action))
            finish_text = action.answer
            break

        key = (action.tool_id, action.query)
        if key in memo:
            observation = memo[key].text
        else:
            tool = registry.get(action.tool_id)
            assert tool is not None
            answer = _run_with_timeout(tool, action.query, config.tool_timeout_s)
            memo[key] = answer
            invocation_order.append(key)
            observation = answer.text
        trace.completed_tasks.add(f"{action.tool_id} | {action.query}")
        trace.steps.append(AgentStep(thought=thought, action=action, observation=observation))
    else:
        summary_lines = [f"[{tool_id}] {memo[(tool_id, query)].text}" for tool_id, query in invocation_order]
        finish_text = (
            "Step limit reached; partial findings:\n" + "\n".join(summary_lines)
            if summary_lines
            else "Step limit reached before any source could be consulted."
        )
        trace.steps.append(
            AgentStep(thought="step limit reached", action=Finish(answer=finish_text))
        )
        trace.truncated = True

    observations = [(tool_id, memo[(tool_id, query)].text) for tool_id, query in invocation_order]
    if observations and not trace.truncated:
        final_text = aggregate(observations, llm)
    else:
        assert finish_text is not None
        final_text = finish_text

    citations: list[Citation] = []
    seen_chunks: set[str] = set()
    for key in invocation_order:
        for citation in memo[key].citations:
            if citation.chunk_id not in seen_chunks:
                seen_chunks.add(citation.chunk_id)
                citations.append(citation)

    final = Answer(
        text=final_text,
        citations=tuple(citations),
        mode=Mode.AGENTIC,
        latency_s=time.perf_counter() - started,
    )
    return final, trace
