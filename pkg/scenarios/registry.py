from scenarios.spectra import StaircaseScenario
from scenarios.spectra import PhsGatesScenario
from scenarios.spectra import SnrScanScenario
from scenarios.spectra import PeakAndHoldScenario
from scenarios.moments import FanoCoherentScenario
from scenarios.moments import EpsVsGateScenario
from scenarios.moments import FanoThermalScenario
from scenarios.statistics import StatsCoherentScenario
from scenarios.statistics import StatsThermalScenario
from scenarios.statistics import CorrelationsScenario
from custom_exceptions.exception import UnknownScenario

BUILTIN_SCENARIOS = {
    scenario.name: scenario
    for scenario in (
        StaircaseScenario,
        PhsGatesScenario,
        SnrScanScenario,
        FanoCoherentScenario,
        EpsVsGateScenario,
        FanoThermalScenario,
        StatsCoherentScenario,
        StatsThermalScenario,
        CorrelationsScenario,
        PeakAndHoldScenario,
    )
}


def get_scenario(name: str):
    """
    Resolves a builtin scenario class by name.

    Raises:
    UnknownScenario: If the name is not a builtin; the value lists the known names.
    """
    if name not in BUILTIN_SCENARIOS:
        raise UnknownScenario(f"Unknown scenario '{name}'. Known scenarios: {', '.join(BUILTIN_SCENARIOS)}.",
                              list(BUILTIN_SCENARIOS))
    return BUILTIN_SCENARIOS[name]
