"""Shared fixtures, hypothesis profiles, and the acceptance summary hook."""

import os
from datetime import timedelta

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", deadline=timedelta(milliseconds=2000), suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("dev", max_examples=25)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

# One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def desk_lexicon():
    from ctxprobe.deskdata import make_lexicon

    return make_lexicon("en-de")
