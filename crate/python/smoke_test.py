"""Smoke test for the `nnc` Python extension.

Build and install first, e.g.:
    pip install maturin && maturin develop --release -m crates/py/Cargo.toml
"""

import math

import nnc


def main():
    g = nnc.StateGraph.fixture("fig3")
    assert (g.node_count, g.edge_count) == (7, 9), g
    h = g.perron_entropy()
    assert abs(h - 0.3063) < 5e-4, h
    assert g.select(1.38).node_count == 7
    assert g.reduce(10.0).edge_count == 0

    src = nnc.MarkovSource.parry(g)
    assert abs(src.entropy_rate() - h) < 1e-6
    assert abs(sum(src.stationary()) - 1.0) < 1e-12

    trace = nnc.simulate(src, "1..2", 0.05, 30, seed=7)
    assert len(trace.states) == 30
    assert trace.jump_times[-1] == len(trace.samples)

    post = nnc.forward_backward(src, "1..2", 0.05, trace.samples, 30, s0=trace.s0)
    for row in post.single:
        assert abs(sum(row) - 1.0) < 1e-9
    assert math.isfinite(post.log_evidence)

    path = nnc.viterbi(src, "1..2", 0.05, trace.samples, 30, s0=trace.s0)
    assert path.states == trace.states
    assert path.jump_times == trace.jump_times[1:]

    est = nnc.monte_carlo_rate(src, "1", 0.1, m_total=2000, block_len=200, seed=1)
    assert abs(est.rate - 0.3063) < 0.01, est.rate
    assert est.t_term <= 1e-12

    try:
        nnc.simulate(src, "1..2", -1.0, 10, seed=1)
    except ValueError:
        pass
    else:
        raise AssertionError("negative sigma accepted")

    print(f"nnc smoke test ok: H={h:.4f} rate={est.rate:.4f}")


if __name__ == "__main__":
    main()
