import os

import pytest
from hypothesis import HealthCheck, settings

from revshor import _kernels_py, kernels

settings.register_profile(
    "repo", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def _compiled():
    try:
        from revshor import _kernels
    except ImportError:
        return None
    return _kernels


KERNEL_BACKENDS = ["python"] + (["cython"] if _compiled() is not None else [])


@pytest.fixture(params=KERNEL_BACKENDS)
def kernel_backend(request, monkeypatch):
    """Run the test once per available simulation kernel."""
    mod = _kernels_py if request.param == "python" else _compiled()
    monkeypatch.setattr(kernels, "simulate_packed", mod.simulate_packed)
    monkeypatch.setattr(kernels, "asap_depth", mod.asap_depth)
    monkeypatch.setattr(kernels, "BACKEND", request.param)
    return request.param


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance check; returns the verdict so tests can assert it."""

    def record(cid: str, label: str, ok: bool, detail: str) -> bool:
        request.config.stash[ACCEPTANCE].append((cid, label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for cid, label, ok, detail in lines:
        terminalreporter.write_line(f"{cid:<4} {'PASS' if ok else 'FAIL'}  {label}: {detail}")
    verdicts: dict[str, list[bool]] = {}
    for cid, _, ok, _ in lines:
        verdicts.setdefault(cid.split(".")[0], []).append(ok)
    terminalreporter.section("acceptance summary")
    for cid in sorted(verdicts, key=lambda c: int(c[1:])):
        oks = verdicts[cid]
        state = "PASS" if all(oks) else "FAIL"
        terminalreporter.write_line(f"{cid:<4} {state}  {sum(oks)}/{len(oks)} checks")
