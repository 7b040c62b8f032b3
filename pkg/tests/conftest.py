import numpy as np
import pytest

from gfid_sim import ConvLayerConfig, FilterBank, Tensor3

MODES = [(1, 1), (3, 1), (5, 1), (7, 2), (11, 4)]

# Lines collected by the acceptance module, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def random_conv(rng, w_f, s, max_dim=16, max_ch=8, groups=1):
    """Random layer in mode (w_f, s) whose input fits in max_dim x max_dim."""
    h_f = int(rng.integers(1, w_f + 1))
    h_out = int(rng.integers(1, (max_dim - h_f) // s + 2))
    w_out = int(rng.integers(1, (max_dim - w_f) // s + 2))
    c_in = groups * int(rng.integers(1, max_ch // groups + 1))
    c_out = groups * int(rng.integers(1, max_ch // groups + 1))
    return ConvLayerConfig(s * (h_out - 1) + h_f, s * (w_out - 1) + w_f, c_in, h_f, w_f, s,
                           c_out, groups)


def random_operands(cfg, rng, amp=None):
    """Raw int16 operands small enough that no accumulator saturates."""
    fan_in = cfg.h_f * cfg.w_f * cfg.c_in_per_group
    amp = amp or min(8191, ((1 << 23) - 512) // fan_in)
    x = Tensor3(rng.integers(-amp, amp + 1, (cfg.c_in, cfg.h_in, cfg.w_in), dtype=np.int16))
    w = FilterBank(
        rng.integers(-32767, 32768, (cfg.h_f, cfg.w_f, cfg.c_in_per_group, cfg.c_out), dtype=np.int16),
        rng.integers(-256, 256, cfg.c_out, dtype=np.int16),
    )
    return x, w


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
