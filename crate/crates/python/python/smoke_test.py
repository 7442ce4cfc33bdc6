"""Quick end-to-end check of the Python bindings."""

import math
import pathlib
import tempfile

import potential_play as pp


def main():
    game = pp.FlowControlGame([1.0, 1.0])
    assert abs(game.potential([0.0, 0.0]) - (math.log(3) - 6 * math.log(2))) < 1e-12
    analytic, fd = game.check_identity(samples=200)
    assert analytic < 1e-10 and fd < 1e-5

    ok, report = pp.validate_schedule(0.6, 0.13)
    assert ok, report
    assert not pp.validate_schedule(0.4, mode="comm")[0]

    mc = pp.mc_mixed_gradient(game, [0.5, -0.5], 1.0, n_samples=50_000, seed=1)
    est = pp.estimator_moments(game, [0.5, -0.5], 1.0, mode="two-point", n_samples=50_000, seed=2)
    for m, e, s1, s2 in zip(mc["mean"], est["mean"], mc["stderr"], est["stderr"]):
        assert abs(m - e) < 5 * math.hypot(s1, s2)

    graphs = pp.generate_graphs(5, 40, window=4, seed=3)
    assert pp.verify_graphs(5, graphs, 4) is None

    big = pp.FlowControlGame.random(10, 1)
    comm = pp.run_comm(big, 4000, seed=1, initial=[3.0] * 10)
    assert comm["grad_norm_xbar"][-1] < 0.05, comm["grad_norm_xbar"][-1]
    pay = pp.run_payoff(big, 4000, seed=1, mu0=[2.0] * 10)
    assert pay["diverged_at"] is None
    assert pay["grad_norm_mu"][-1] < pay["grad_norm_mu"][0]

    with tempfile.TemporaryDirectory() as tmp:
        cfg = pathlib.Path(tmp) / "tiny.toml"
        cfg.write_text(
            'name = "tiny"\nalgorithm = "comm"\nhorizon = 500\nseeds = [1, 2]\n'
            '[game]\nkind = "flow-control"\nn = 3\n'
            "[schedules]\ngamma = { coefficient = 40.0, exponent = 0.9 }\n"
        )
        runs = pp.run_experiment(str(cfg), str(pathlib.Path(tmp) / "out"))
        assert [r["seed"] for r in runs] == [1, 2]
        groups = pp.summarize(str(pathlib.Path(tmp) / "out"))
        assert groups[0]["runs"] == 2

    print("python bindings ok")


if __name__ == "__main__":
    main()
