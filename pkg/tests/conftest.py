import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from pqvrf.drbg import KeccakDrbg
from pqvrf.group import get_group
from pqvrf.vrf import SecurityConfig, gen

DATA = Path(__file__).parent / "data"

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def load_json(name: str):
    return json.loads((DATA / name).read_text())


@pytest.fixture(scope="session")
def toy64():
    return get_group("toy64")


@pytest.fixture(scope="session")
def toy23():
    return get_group("toy23")


@pytest.fixture(scope="session")
def modp():
    return get_group("modp2048")


@pytest.fixture
def rng():
    return KeccakDrbg(b"test-rng")


@pytest.fixture(scope="session")
def km_toy():
    return gen(SecurityConfig("toy64", "R256", 5), KeccakDrbg(b"km-toy"))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], "PASS" if outcome == "passed" else "FAIL", props.get("title", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, verdict, title in sorted(lines):
            terminalreporter.write_line(f"criterion {num:>2}: {verdict}  {title}")
