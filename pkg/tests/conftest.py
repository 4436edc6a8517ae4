import pytest

from offloadsim.reports import run_fig5
from offloadsim.scenario import load_scenario, scenario_from_dict
from offloadsim.simnet import run_scenario

FIG5_SEED = 20260810


@pytest.fixture(scope="session")
def fig5_outputs(tmp_path_factory):
    """One full fig5 run with all report files written; shared across tests."""
    out_dir = tmp_path_factory.mktemp("fig5")
    config = load_scenario("fig5")
    result, summary = run_fig5(config, FIG5_SEED, out_dir, make_plots=False)
    return config, result, summary, out_dir


def mixed_scenario():
    return scenario_from_dict(
        {
            "horizon_s": 12.0,
            "seed": 3,
            "arrival_mode": "poisson",
            "firm_rate_per_s": 40.0,
            "soft_rate_per_s": 40.0,
            "nonrt_rate_per_s": 20.0,
            "edge_default_service_ms": 1.0,
            "edge_service_windows": [[3.0, 7.0, 40.0]],
            "cloud_default_service_ms": 20.0,
            "edge_capacity_tasks_per_s": 100,
            "threshold_ms": 25.0,
            "notify_period_ms": 500.0,
            "offload_phases": [[0.0, 12.0, True]],
        },
        name="mixed",
    )


@pytest.fixture(scope="session")
def mixed_result():
    """Mixed-class run (firm/soft/nonrt) exercising a load spike and a decision flip."""
    return run_scenario(mixed_scenario(), 3)
