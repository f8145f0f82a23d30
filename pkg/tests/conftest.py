import pytest

_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Print one PASS/FAIL line for an acceptance criterion and keep it for the summary."""
    cfg = request.config
    lines = cfg.stash.setdefault(_LINES, [])

    def emit(number, title, passed, detail="", sub=()):
        line = f"{'PASS' if passed else 'FAIL'}  [{number}] {title}" + (f": {detail}" if detail else "")
        lines.append(line)
        tr = cfg.pluginmanager.get_plugin("terminalreporter")
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
            for s in sub:
                tr.write_line(f"        {s}")
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
