import pytest

from mcvd import ConfigError, TrainingConfig, parse_config
from mcvd.config import parse_overrides, parse_payoff, parse_text
from mcvd.envs import OMG_PAYOFF


def test_matrix_defaults():
    c = parse_config(overrides={"env": "matrix_game"})
    assert (c.gamma, c.alpha, c.n_steps, c.sigma) == (0.99, 0.5, 20_000, 1.0)
    assert (c.lr, c.batch_size, c.buffer_size, c.target_update_cycle) == (5e-4, 32, 5000, 200)
    assert (c.max_epsilon, c.min_epsilon, c.anneal_steps, c.grad_norm_clip) == (1.0, 0.05, 50_000, 10.0)
    assert (c.evaluate_fre, c.evaluate_epoch, c.hidden_dim, c.train_fre) == (5000, 32, 64, 1)
    assert c.last_action and c.reuse_network and c.seed == 123
    assert (c.payoff_table() == OMG_PAYOFF).all()


def test_nav_defaults():
    c = parse_config(overrides={"env": "particlenav"})
    assert (c.gamma, c.alpha, c.n_steps) == (0.9, 0.1, 500_000)


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    assert parse_config(path, ["--env", "matrix_game"]) == parse_config(overrides={"env": "matrix_game"})


def test_flags_win(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("sigma = 2  # bandwidth\nloss = mcvd\n")
    assert parse_config(path).sigma == 2.0
    assert parse_config(path, ["--sigma", "5"]).sigma == 5.0


def test_bad_sigma_names_key():
    with pytest.raises(ConfigError) as info:
        parse_config(overrides={"sigma": "-1"})
    assert info.value.key == "sigma"
    assert "sigma" in str(info.value)


@pytest.mark.parametrize("key, value", [("loss", "huber"), ("mixer", "attention"), ("env", "starcraft"),
                                        ("batch_size", "2.5"), ("use_joint_net", "maybe"), ("bogus", "1")])
def test_invalid_values(key, value):
    with pytest.raises(ConfigError) as info:
        parse_config(overrides={key: value})
    assert info.value.key == key


def test_round_trip(tmp_path):
    c = parse_config(overrides={"env": "gridnav", "loss": "ow", "seed": "9", "use_joint_net": "false"})
    path = tmp_path / "config.resolved"
    path.write_text(c.to_text())
    assert parse_config(path) == c


def test_overrides_forms():
    assert parse_overrides(["--sigma=5", "--target-update-unit", "steps"]) == {
        "sigma": "5", "target_update_unit": "steps"}
    with pytest.raises(ConfigError):
        parse_overrides(["sigma", "5"])
    with pytest.raises(ConfigError):
        parse_overrides(["--sigma"])


def test_parse_text_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_text("sigma 5")


def test_payoff_parsing(tmp_path):
    assert parse_payoff("1,2;3,4").tolist() == [[1, 2], [3, 4]]
    with pytest.raises(ConfigError):
        parse_payoff("1,2;3")
    path = tmp_path / "payoff.txt"
    path.write_text("1,0\n0,2\n")
    assert parse_config(overrides={"payoff_file": str(path)}).make_env().payoff.tolist() == [[1, 0], [0, 2]]


def test_replace_revalidates():
    c = TrainingConfig()
    with pytest.raises(ConfigError):
        parse_config().replace(alpha=0.0)
    assert c.alpha is None
