import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def conv2d_bruteforce(x, kernel, bias, stride=1):
    """Direct zero-padded convolution, one output element at a time."""
    h, w, cin = x.shape
    k = kernel.shape[0]
    p = k // 2
    out = np.zeros((h // stride, w // stride, kernel.shape[3]))
    for i in range(0, h, stride):
        for j in range(0, w, stride):
            for o in range(kernel.shape[3]):
                acc = bias[o]
                for di in range(k):
                    for dj in range(k):
                        y, z = i + di - p, j + dj - p
                        if 0 <= y < h and 0 <= z < w:
                            acc += np.dot(x[y, z], kernel[di, dj, :, o])
                out[i // stride, j // stride, o] = acc
    return out


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are repeated in the terminal summary."""
    def record(number, title, passed, detail):
        status = "PASS" if passed else "FAIL"
        if passed is None:
            status = "INFO"
        line = f"[{status}] criterion {number:>2}: {title} | {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert passed is not False, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
