from abc import ABC
from abc import abstractmethod

from experiment_functions.config import ExperimentConfig
from experiment_functions.funcs import ExperimentFunctionManager


class SimCommandInterface(ABC):
    """
    An abstract base class that defines the interface of a command.
    """
    @abstractmethod
    def execute(self):
        """
        Abstract method to execute the command.
        """
        ...


class SimulateCommand(SimCommandInterface):
    """
    Simulate the configured source through the detector.
    """
    def __init__(self, func_manager: ExperimentFunctionManager, config: ExperimentConfig, out_dir: str,
                 traces: int = 0):
        """
        Parameters:
            func_manager: The experiment function manager instance.
            config: The validated configuration.
            out_dir: Output directory.
            traces: Number of traces to dump.
        """
        self.func_manager = func_manager
        self.config = config
        self.out_dir = out_dir
        self.traces = traces

    def execute(self):
        self.func_manager.simulate(self.config, self.out_dir, self.traces)


class AnalyzeCommand(SimCommandInterface):
    """
    Analyze a recorded trace dump.
    """
    def __init__(self, func_manager: ExperimentFunctionManager, config: ExperimentConfig, out_dir: str,
                 trace_file: str, peak_hold: bool = False, bin_width: float = None):
        """
        Parameters:
            func_manager: The experiment function manager instance.
            config: The validated configuration.
            out_dir: Output directory.
            trace_file: Path of the trace dump.
            peak_hold: Use the peak-and-hold search window instead of the gates.
            bin_width: Spectrum bin width in output units.
        """
        self.func_manager = func_manager
        self.config = config
        self.out_dir = out_dir
        self.trace_file = trace_file
        self.peak_hold = peak_hold
        self.bin_width = bin_width

    def execute(self):
        self.func_manager.analyze(self.config, self.trace_file, self.out_dir, self.peak_hold, self.bin_width)


class ReproduceCommand(SimCommandInterface):
    """
    Run a builtin scenario and write its results bundle.
    """
    def __init__(self, func_manager: ExperimentFunctionManager, config: ExperimentConfig, out_dir: str,
                 scenario: str):
        self.func_manager = func_manager
        self.config = config
        self.out_dir = out_dir
        self.scenario = scenario

    def execute(self):
        self.func_manager.reproduce(self.scenario, self.config, self.out_dir)


class ListScenariosCommand(SimCommandInterface):
    """
    List the builtin scenarios.
    """
    def __init__(self, func_manager: ExperimentFunctionManager):
        self.func_manager = func_manager

    def execute(self):
        self.func_manager.list_scenarios()


class ValidateCommand(SimCommandInterface):
    """
    Print the normalized configuration.
    """
    def __init__(self, func_manager: ExperimentFunctionManager, config: ExperimentConfig):
        self.func_manager = func_manager
        self.config = config

    def execute(self):
        self.func_manager.validate(self.config)
