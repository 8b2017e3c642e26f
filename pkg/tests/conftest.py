import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# evaluators raise the limit lazily; doing it up front keeps hypothesis quiet
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
