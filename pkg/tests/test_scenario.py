import json

import pytest

from fluidrelay import InfeasibleError
from fluidrelay.scenario import build_scenario, dbm_to_watts, load_scenario, parse_scenario


def scenario_doc(**overrides):
    doc = {
        "grid": {"n1": 2, "n2": 2, "w1": 1.0, "w2": 1.0},
        "system": {"total_bw_hz": 5e6, "xi_bits": 0.1, "seed": 7, "trials": 4},
        "users": [
            {
                "alpha_ur": 1e-9,
                "alpha_ub": 1e-11,
                "alpha_rb": 1e-9,
                "sigma2_relay_dbm": -120,
                "sigma2_bs_dbm": -120,
                "p_user_max_w": 0.1,
                "p_relay_max_w": 0.1,
                "rate_min_bps": 5e5,
            }
        ],
    }
    doc.update(overrides)
    return doc


class TestParsing:
    def test_round_trip(self):
        spec = parse_scenario(scenario_doc())
        assert spec.grid.n1 == 2
        assert spec.total_bw == 5e6
        assert spec.users[0].budget.sigma2_relay == pytest.approx(1e-15)

    def test_dbm_conversion(self):
        assert dbm_to_watts(-120.0) == pytest.approx(1e-15)
        assert dbm_to_watts(30.0) == pytest.approx(1.0)

    def test_unknown_top_level_key(self):
        with pytest.raises(ValueError, match="unknown key: antenna"):
            parse_scenario(scenario_doc(antenna={}))

    def test_unknown_nested_key_names_path(self):
        doc = scenario_doc()
        doc["users"][0]["alpha_urr"] = 1.0
        with pytest.raises(ValueError, match=r"unknown key: users\[0\]\.alpha_urr"):
            parse_scenario(doc)

    def test_missing_key_named(self):
        doc = scenario_doc()
        del doc["system"]["seed"]
        with pytest.raises(ValueError, match="missing key: system.seed"):
            parse_scenario(doc)

    def test_positivity_enforced(self):
        doc = scenario_doc()
        doc["users"][0]["alpha_ur"] = 0.0
        with pytest.raises(ValueError, match=r"users\[0\]\.alpha_ur"):
            parse_scenario(doc)

    def test_integer_fields_strict(self):
        doc = scenario_doc()
        doc["system"]["trials"] = 2.5
        with pytest.raises(ValueError, match="system.trials"):
            parse_scenario(doc)

    def test_sweep_parsing(self):
        doc = scenario_doc(
            sweep={"variable": "num_ports", "values": [1, 2, 4], "schemes": ["proposed", "tas"]}
        )
        spec = parse_scenario(doc)
        assert spec.sweep.variable == "num_ports"
        assert spec.sweep.values == (1, 2, 4)
        assert spec.sweep.schemes == ("proposed", "tas")

    def test_sweep_defaults_all_schemes(self):
        doc = scenario_doc(sweep={"variable": "num_users", "values": [1]})
        spec = parse_scenario(doc)
        assert len(spec.sweep.schemes) == 4

    def test_sweep_decreasing_values_rejected(self):
        doc = scenario_doc(sweep={"variable": "num_ports", "values": [4, 2]})
        with pytest.raises(ValueError, match="sweep"):
            parse_scenario(doc)

    def test_json_error_carries_byte_offset(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"grid": }')
        with pytest.raises(ValueError, match="byte offset 9"):
            load_scenario(str(path))


class TestBuildScenario:
    def test_min_powers_derived(self):
        scenario = build_scenario(parse_scenario(scenario_doc()))
        user = scenario.users[0]
        floor = user.p_user_min * user.budget.gamma_bar_ub + user.p_relay_min * user.budget.gamma_bar_rb
        assert floor >= scenario.c_th
        assert 0 < user.p_user_min < user.p_user_max

    def test_explicit_min_powers_respected(self):
        doc = scenario_doc()
        doc["users"][0]["p_user_min_w"] = 0.02
        doc["users"][0]["p_relay_min_w"] = 0.03
        scenario = build_scenario(parse_scenario(doc))
        assert scenario.users[0].p_user_min == 0.02
        assert scenario.users[0].p_relay_min == 0.03

    def test_power_infeasible_scenario_raises_on_build(self):
        doc = scenario_doc()
        doc["users"][0]["p_user_max_w"] = 1e-9
        doc["users"][0]["p_relay_max_w"] = 1e-9
        spec = parse_scenario(doc)  # parsing alone must succeed
        with pytest.raises(InfeasibleError):
            build_scenario(spec)
