import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ssflab",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ssflab")


def random_hermitian(rng, n, norm=None, kind="hs"):
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = 0.5 * (G + G.conj().T)
    if norm is None:
        return A
    scale = np.linalg.norm(A) if kind == "hs" else np.abs(np.linalg.eigvalsh(A)).max()
    return A * (norm / scale)


def random_pair(seed, n, h0_op=1.0, v_hs=1.0):
    rng = np.random.default_rng(seed)
    return random_hermitian(rng, n, h0_op, "op"), random_hermitian(rng, n, v_hs, "hs")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py::test_criterion_" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            lines.append((props.get("criterion", 0), outcome.upper()[:4], props.get("title", rep.nodeid),
                          props.get("detail", "")))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, title, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {num:2d}  {status}  {title}  {detail}".rstrip())
