import pytest

from reinsopt import ConfigError, default_config, parse_config, serialize_config
from reinsopt.config import load_config


class TestParsing:
    def test_round_trip_is_identity(self):
        cfg = default_config()
        assert parse_config(serialize_config(cfg)) == cfg

    def test_round_trip_from_text(self):
        text = serialize_config(default_config())
        again = serialize_config(parse_config(text))
        assert again == text

    def test_comments_and_blank_lines(self):
        text = """
        # surplus model
        a = 0.2
        b = 0.5   # reinsurer drift
        sigma = 1.2

        x = 2.0
        T = 5.0
        k_tilde = 5.0
        """
        cfg = parse_config(text)
        assert cfg.b == 0.5
        assert cfg.constraint_kind == "all"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("a = 0.2\nbogus = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("a = 0.2\na = 0.3\n")

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="missing required"):
            parse_config("a = 0.2\n")

    def test_malformed_number(self):
        with pytest.raises(ConfigError, match="sigma"):
            parse_config("a = 0.2\nb = 0.5\nsigma = fast\nx = 2\nT = 5\nk_tilde = 5\n")

    def test_bad_kind(self):
        with pytest.raises(ConfigError, match="constraint.kind"):
            parse_config(
                "a = 0.2\nb = 0.5\nsigma = 1.2\nx = 2\nT = 5\nk_tilde = 5\n"
                "constraint.kind = sometimes\n")

    def test_seeds_list(self):
        cfg = parse_config(
            "a = 0.2\nb = 0.5\nsigma = 1.2\nx = 2\nT = 5\nk_tilde = 5\n"
            "simulation.seeds = 5, 6,7\n")
        assert cfg.seeds == (5, 6, 7)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")


class TestValidation:
    def test_default_is_valid(self):
        default_config().validate()

    def test_regime_specific_requirements(self):
        cfg = default_config().with_overrides(epsilon=None, constraint_kind="var")
        with pytest.raises(ConfigError, match="constraint.epsilon"):
            cfg.validate()

    def test_nu_requirement(self):
        cfg = default_config().with_overrides(nu=None, constraint_kind="es_p")
        with pytest.raises(ConfigError, match="constraint.nu"):
            cfg.validate()

    def test_floor_requirement(self):
        cfg = default_config().with_overrides(C_tilde=None, constraint_kind="strict")
        with pytest.raises(ConfigError, match="constraint.C_tilde"):
            cfg.validate()

    def test_simulation_block_bounds(self):
        with pytest.raises(ConfigError, match="n_steps"):
            default_config().with_overrides(n_steps=0).validate()
        with pytest.raises(ConfigError, match="mc_samples"):
            default_config().with_overrides(mc_samples=10).validate()

    def test_regimes_expansion(self):
        assert default_config().regimes() == (
            "unconstrained", "strict", "var", "es_p", "es_q")
        assert default_config().with_overrides(constraint_kind="var").regimes() == ("var",)
