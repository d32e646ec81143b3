import math

import numpy as np
import pytest
from hypothesis import strategies as st

from qep.core import Params, XState

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
phase = st.floats(min_value=0.0, max_value=2 * math.pi, allow_nan=False)


@st.composite
def params(draw, gamma_max=5.0, gamma_min=0.0):
    gamma = draw(st.floats(min_value=gamma_min, max_value=gamma_max, allow_nan=False))
    u = draw(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
    return Params(gamma, gamma * u)


@st.composite
def xstates(draw):
    w = np.array([draw(unit) for _ in range(4)]) + 1e-3
    a, b, c = w[:3] / w.sum()
    d = 1.0 - a - b - c
    d = max(d, 0.0)
    h = math.sqrt(a * d) * draw(unit) * complex(math.cos(theta := draw(phase)), math.sin(theta))
    m = math.sqrt(b * c) * draw(unit) * complex(math.cos(phi := draw(phase)), math.sin(phi))
    return XState(a, b, c, d, h, m)


def random_xstate(rng: np.random.Generator) -> XState:
    w = rng.dirichlet(np.ones(4))
    a, b, c = w[:3]
    d = max(1.0 - a - b - c, 0.0)
    h = math.sqrt(a * d) * rng.uniform() * np.exp(1j * rng.uniform(0, 2 * math.pi))
    m = math.sqrt(b * c) * rng.uniform() * np.exp(1j * rng.uniform(0, 2 * math.pi))
    return XState(a, b, c, d, complex(h), complex(m))


def random_params(rng: np.random.Generator, gamma_max: float = 5.0) -> Params:
    g = rng.uniform(0.0, gamma_max)
    return Params(g, g * rng.uniform(-1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance reporting: one line per numbered criterion in the terminal summary

_RESULTS: dict[int, dict] = {}


@pytest.fixture
def detail(request):
    """Attach a short human-readable measurement to the current acceptance test."""

    def note(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call" and not rep.failed:
        return
    number, title = marker.args
    entry = _RESULTS.setdefault(number, {"title": title, "ok": True, "details": []})
    if rep.failed:
        entry["ok"] = False
        crash = getattr(rep.longrepr, "reprcrash", None)
        reason = crash.message.splitlines()[0] if crash is not None else "error"
        entry["details"].append(f"{item.name} failed ({reason})")
    if rep.when == "call":
        entry["details"] += [v for k, v in item.user_properties if k == "detail"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "PASS" if entry["ok"] else "FAIL"
        line = f"[{status}] {number}. {entry['title']}"
        if entry["details"]:
            line += ": " + "; ".join(entry["details"])
        terminalreporter.write_line(line)
