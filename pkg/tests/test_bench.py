import filecmp
from dataclasses import replace

import pytest

from qmp import cli
from qmp.bench import EXPERIMENTS, default_config, load_config, run
from qmp.bench.config import _parse_list
from qmp.exceptions import ConfigError
from qmp.utils.seeding import mix, splitmix64


def test_splitmix_reference_and_mixing():
    # first output of the reference SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    seeds = {mix(1, k, t) for k in range(20) for t in range(20)}
    assert len(seeds) == 400
    assert mix(1, 2, 3) != mix(1, 3, 2)


def test_list_and_range_parsing():
    assert _parse_list("0.45:0.7:0.05", float) == (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)
    assert _parse_list("8, 9", int) == (8, 9)


def test_load_config_overlays_defaults(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(
        "[experiment]\nexperiment = fig-dbsize\ntrials = 3\n"
        "[lattice]\nL = 24\nr = 0.5, 0.6\n"
        "[dynamics]\nK = 1.9, -7.5, 1.0, 7.0\nstep_h = 0.05\n"
    )
    cfg = load_config(path)
    assert cfg.experiment == "fig-dbsize" and cfg.n == (8, 9)
    assert (cfg.trials, cfg.L, cfg.r) == (3, 24, (0.5, 0.6))
    assert cfg.dynamics_config().step_h == 0.05


def test_ini_round_trip():
    cfg = replace(default_config("fig-l1"), trials=7, r=(0.5, 0.55))
    text = []
    cp = cfg.to_ini()
    for sec in cp.sections():
        text.append(f"[{sec}]")
        text.extend(f"{k} = {v}" for k, v in cp.items(sec))
    assert load_config(text="\n".join(text)) == cfg


@pytest.mark.parametrize(
    "body",
    [
        "[lattice]\nbogus = 1\n",
        "[lattice]\nr = 1.5\n",
        "[planner]\nn = 20\n",
        "[dynamics]\nA = 1, 2, 3\n",
        "[dynamics]\nmode = rk4\n",
        "[experiment]\ntrials = zero\n",
        "not an ini",
    ],
)
def test_bad_configs_raise_config_error(body):
    with pytest.raises(ConfigError):
        load_config(text=body)


def test_unknown_experiment():
    with pytest.raises(ConfigError):
        default_config("fig-99")


def small(exp):
    cfg = default_config(exp)
    shrink = {
        "fig-oracle-vs-r": dict(trials=2, r=(0.5, 0.7), L=32),
        "fig-dbsize": dict(trials=2, r=(0.6,), L=32),
        "fig-pstar": dict(r=(0.5,), L_values=(16,), estimate_trials=100, lattices=2),
        "fig-pstar-hist": dict(trials=3),
        "fig-l1": dict(r=(0.5,), D_values=(2.0, 4.0), estimate_trials=100, lattices=2),
        "fig-l1-budget": dict(lattices=2, db_n=8),
        "completeness": dict(trials=2, M=30),
    }
    return replace(cfg, **shrink.get(exp, {}))


@pytest.mark.parametrize("exp", sorted(EXPERIMENTS))
def test_every_experiment_runs_and_keeps_all_trials(exp, tmp_path):
    cfg = small(exp)
    paths, partial = run(cfg, tmp_path)
    assert not partial
    rows = open(paths[""]).read().splitlines()
    if exp in ("fig-oracle-vs-r", "fig-dbsize"):
        per_trial = 1 + len(cfg.n)
        assert len(rows) - 1 == len(cfg.r) * cfg.trials * per_trial


def test_parallel_and_serial_runs_are_identical(tmp_path):
    cfg = small("fig-oracle-vs-r")
    a, _ = run(cfg, tmp_path / "a")
    b, _ = run(replace(cfg, workers=2), tmp_path / "b")
    assert filecmp.cmp(a[""], b[""], shallow=False)


def test_paired_trials_share_lattice_and_start(tmp_path):
    cfg = small("fig-dbsize")
    paths, _ = run(cfg, tmp_path)
    lines = open(paths[""]).read().splitlines()[1:]
    seeds = [line.split(",")[0] for line in lines]
    # one rrt row and one row per n share each trial seed
    assert all(seeds.count(s) == 3 for s in set(seeds))


def test_theory_table_columns(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["theory", "--out", str(out)]) == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header[:4] == ["x", "p_bad", "p_bad_int", "linear_approx"]


def test_cli_round_trip(tmp_path, capsys):
    lat = tmp_path / "lat.txt"
    tree = tmp_path / "tree.csv"
    assert cli.main(["gen-lattice", "--seed", "42", "--L", "32", "--r", "0.5", "--out", str(lat)]) == 0
    assert cli.main(["components", "--lattice", str(lat), "--out", str(tmp_path / "c1.csv")]) == 0
    first = capsys.readouterr().out
    assert cli.main(["components", "--lattice", str(lat), "--out", str(tmp_path / "c2.csv")]) == 0
    assert capsys.readouterr().out == first
    assert cli.main(["qrrt", "--lattice", str(lat), "--seed", "1", "--M", "8", "--n", "7", "--out", str(tree)]) == 0
    assert cli.main(["verify-tree", "--tree", str(tree), "--lattice", str(lat)]) == 0
    assert "unreachable=0" in capsys.readouterr().err


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["bench", "no-such-thing"]) == 2
    assert "fig-oracle-vs-r" in capsys.readouterr().err
    bad = tmp_path / "bad.ini"
    bad.write_text("[lattice]\nL = -3\nbogus = 1\n")
    assert cli.main(["bench", "theory", "--config", str(bad)]) == 2
    wall = tmp_path / "wall.txt"
    wall.write_text("qmplattice v1 d=2 L=4 r=0.9375 seed=0 periodic=0\n####\n####\n####\n#.##\n")
    ini = tmp_path / "few.ini"
    ini.write_text("[planner]\nmax_retries = 2\n")
    code = cli.main(
        ["qrrt", "--config", str(ini), "--lattice", str(wall), "--start", "1.5,3.5", "--M", "6", "--n", "2"]
    )
    assert code == 3
    assert ",partial" in capsys.readouterr().out


def test_documented_example_config_parses():
    import pathlib

    text = (pathlib.Path(__file__).parents[1] / "docs" / "config.md").read_text()
    block = text.split("```ini\n", 1)[1].split("```", 1)[0]
    cfg = load_config(text=block)
    assert cfg.experiment == "fig-oracle-vs-r"
    assert cfg.r == (0.45, 0.5, 0.55, 0.6, 0.65, 0.7)
    assert cfg.D_values == tuple(float(d) for d in range(1, 49))
    assert cfg == default_config("fig-oracle-vs-r")
