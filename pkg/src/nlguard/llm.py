"""Chat-completion backend for the three agent roles.

Requests go to an OpenAI-compatible ``/chat/completions`` endpoint. The
system message is the role's prompt; the user message carries the step
and the page content as ``{id, description, type}`` lines. The reply text
must be the role's JSON template, anything else is an ``Error`` outcome.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Optional

import httpx

from nlguard.agents import AgentOutcome, Status
from nlguard.aut import SimSession, apply_action
from nlguard.model import AssertionExpr, NavAction, PageSnapshot, render_expr
from nlguard.steps import strict_action_of

ENDPOINT_ENV = "NLGUARD_LLM_ENDPOINT"
API_KEY_ENV = "NLGUARD_LLM_API_KEY"

NAV_PROMPT = """\
You are an autonomous agent whose role is to perform
interactions on Web pages with a web browser.

# ROLE AND OBJECTIVE
You will be given an instruction that describes an
interaction to be performed on the web page. Your task
is to execute the corresponding interaction on the page.

# PROCESS
1. Identify the element in the instruction
2. Find the exact corresponding element in the page.
3. Use a function to interact with the page
4. Generate a set of facts that are contained in the output

# Common functions:
click, fill, type, press, or any other playwright locator
method

# OUTPUT FORMAT
You must respond with valid JSON strictly using the
following format:
{{ "facts": ["fact 1", "fact 2", "..."], "task_accomplished"
: "Success|Failed|Unknown" }}"""

READINESS_PROMPT = """\
You are an evaluation agent tasked with
determining whether an action can be performed
on a Web page.

#ROLE AND OBJECTIVE
You will be given a page content and an action.
Your task is to check if an action can be
performed on the page.
The page content is a list of elements
formatted as {{id, description, type'}}
Read the descriptions and the types of the
elements carefully
Respond 'True' if the action can be performed
on the page and 'False' otherwise.
Let think step by step and return the final
response.

# PROCESS
1. Identify all the elements related to the
action (link, statictext, etc.) in the given
page content
2. Extract the descriptions and types of the
elements
3. Check if the interaction given in the
action is possible
3. Conclude if the action can be performed

#OUTPUT FORMAT
You must respond with valid JSON strictly
using the following format:
{{ "facts": ["fact 1", "fact 2", "..."],
"result": true|false }}"""

ASSERT_PROMPT = """\
You are an evaluation agent tasked to evaluate
an Assertion of a test case.

#ROLE AND OBJECTIVE
You will be given a page content and an
assertion.
Your task is to evaluate the assertion on the
page content.
The page content is a list of elements
formatted as {{id, description, type'}}
Read the descriptions and the types of the
elements carefully
Respond 'True' if the Assertion is True and
'False' otherwise
Let think step by step and return the final
response.

# PROCESS
1. Identify all the elements related to the
assertion (link, statictext, etc.) in the
given page content
2. Extract the descriptions and types of the
elements
2. Check if some elements meet the assertion
3. Conclude on the result of the assertion
based on your observations

#OUTPUT FORMAT
You must respond with valid JSON strictly
 using the following format:
{{ "facts": ["fact 1", "fact 2", "..."],
"Verdict": true|false }}"""

# Templates are format strings; rendering turns {{ }} into literal braces.
PROMPTS = {"nav": NAV_PROMPT, "readiness": READINESS_PROMPT, "assert": ASSERT_PROMPT}
RESULT_FIELD = {"nav": "task_accomplished", "readiness": "result", "assert": "Verdict"}


def system_prompt(role: str) -> str:
    return PROMPTS[role].format()


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str
    model: str
    timeout_s: float = 60.0
    api_key: Optional[str] = None
    temperature: float = 0.0

    @classmethod
    def load(cls, path=None, **overrides) -> "LlmConfig":
        """Read a JSON config file, then apply the endpoint env var and overrides."""
        doc = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        if os.environ.get(ENDPOINT_ENV):
            doc["endpoint"] = os.environ[ENDPOINT_ENV]
        if os.environ.get(API_KEY_ENV):
            doc["api_key"] = os.environ[API_KEY_ENV]
        doc.update({k: v for k, v in overrides.items() if v is not None})
        if "timeout_ms" in doc:
            doc["timeout_s"] = float(doc.pop("timeout_ms")) / 1000.0
        if not doc.get("endpoint"):
            raise ValueError(f"no LLM endpoint configured (set {ENDPOINT_ENV} or --endpoint)")
        doc.setdefault("model", "llama3.1:70b")
        known = {"endpoint", "model", "timeout_s", "api_key", "temperature"}
        return cls(**{k: v for k, v in doc.items() if k in known})


def format_page(page: PageSnapshot) -> str:
    return "\n".join(f"{{{e.id}, {e.description}, {e.elem_type}}}" for e in page.elements)


def build_messages(role: str, step_text: str, page: PageSnapshot) -> list[dict]:
    heading = {"nav": "Instruction", "readiness": "Action", "assert": "Assertion"}[role]
    user = f"{heading}: {step_text}\n\nPage content:\n{format_page(page)}"
    return [
        {"role": "system", "content": system_prompt(role)},
        {"role": "user", "content": user},
    ]


_FENCE_RE = re.compile(r"^```(?:json)?\s*(.*?)\s*```$", re.DOTALL)


def parse_reply(role: str, text: str) -> AgentOutcome:
    """Parse a reply against the role's template, bit-exact field names."""
    body = text.strip()
    m = _FENCE_RE.match(body)
    if m:
        body = m.group(1)
    try:
        doc = json.loads(body)
    except json.JSONDecodeError:
        return AgentOutcome.error("reply is not JSON", text)
    field = RESULT_FIELD[role]
    if not isinstance(doc, dict) or "facts" not in doc or field not in doc:
        return AgentOutcome.error(f"reply lacks 'facts' or {field!r}", text)
    facts = doc["facts"]
    if not isinstance(facts, list) or not all(isinstance(f, str) for f in facts):
        return AgentOutcome.error("'facts' must be a list of strings", text)
    value = doc[field]
    if role == "nav":
        try:
            status = Status(value)
        except ValueError:
            return AgentOutcome.error(f"bad task_accomplished {value!r}", text)
        if status is Status.ERROR:
            return AgentOutcome.error("bad task_accomplished 'Error'", text)
        return AgentOutcome(status, None, tuple(facts))
    if not isinstance(value, bool):
        return AgentOutcome.error(f"{field} must be true or false", text)
    return AgentOutcome(Status.SUCCESS, value, tuple(facts))


def llm_request(config: LlmConfig, role: str, step_text: str, page: PageSnapshot,
                client: Optional[httpx.Client] = None) -> AgentOutcome:
    """One chat-completion round trip. Transport problems become ``Error``."""
    payload = {
        "model": config.model,
        "messages": build_messages(role, step_text, page),
        "temperature": config.temperature,
    }
    headers = {"Authorization": f"Bearer {config.api_key}"} if config.api_key else {}
    own = client is None
    client = client or httpx.Client(timeout=config.timeout_s)
    try:
        resp = client.post(config.endpoint, json=payload, headers=headers, timeout=config.timeout_s)
        resp.raise_for_status()
        text = resp.json()["choices"][0]["message"]["content"]
    except httpx.TimeoutException as exc:
        return AgentOutcome.error(f"timeout: {exc}")
    except httpx.HTTPError as exc:
        return AgentOutcome.error(f"transport: {exc}")
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        return AgentOutcome.error(f"unexpected response shape: {exc}")
    finally:
        if own:
            client.close()
    if not isinstance(text, str):
        return AgentOutcome.error("response content is not text")
    return parse_reply(role, text)


class LlmAgent:
    """Agent backed by a chat-completion endpoint.

    The model decides; the simulator plays the browser. When the navigation
    agent reports success, the step's strict form (if any) is applied to
    the session.
    """

    def __init__(self, config: LlmConfig, client: Optional[httpx.Client] = None):
        self.config = config
        self.client = client

    def fork(self, seed: int) -> "LlmAgent":
        return self

    def perform(self, action: NavAction, session: SimSession) -> AgentOutcome:
        out = llm_request(self.config, "nav", action.raw_text, session.page, self.client)
        if out.status is Status.SUCCESS:
            strict = strict_action_of(action)
            if strict is not None:
                apply_action(session, strict)
        return out

    def readiness(self, action: NavAction, page: PageSnapshot) -> AgentOutcome:
        return llm_request(self.config, "readiness", action.raw_text, page, self.client)

    def evaluate(self, expr: AssertionExpr, page: PageSnapshot) -> AgentOutcome:
        return llm_request(self.config, "assert", render_expr(expr), page, self.client)
