import logging

from experiment_functions.funcs import ExperimentFunctionManager
from command_mapper.commands import SimulateCommand
from command_mapper.commands import AnalyzeCommand
from command_mapper.commands import ReproduceCommand
from command_mapper.commands import ListScenariosCommand
from command_mapper.commands import ValidateCommand
from command_mapper.sim_command_executor import SimCommandExecutor
from custom_exceptions.exception import CustomException
from custom_exceptions.exception import UnknownScenario
from custom_exceptions.exception import FailedToLoadYamlFile
from custom_exceptions.exception import InvalidFileExtension
from custom_exceptions.exception import InvalidExperimentConfig
from custom_exceptions.exception import UnsupportedOperationProvided

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3

CONFIG_ERRORS = (InvalidExperimentConfig, UnknownScenario, FailedToLoadYamlFile, InvalidFileExtension,
                 UnsupportedOperationProvided, FileNotFoundError)


class SimManager:
    """
    A class that manages the simulation operations by encapsulating command execution logic.

    Attributes:
        command_parameters (dict): Parameters passed to the commands.
        executor (SimCommandExecutor): An executor to manage command execution.
    """
    def __init__(self, parameters):
        """
        Parameters:
            parameters (dict): The parsed command-line parameters, without the operation.
        """
        self.command_parameters = parameters
        self.command_parameters["func_manager"] = ExperimentFunctionManager()
        self.executor = SimCommandExecutor()
        self._register_commands()

    def _register_commands(self):
        """
        Registers available commands to the executor.
        """
        self.executor.register_command('simulate', SimulateCommand)
        self.executor.register_command('analyze', AnalyzeCommand)
        self.executor.register_command('reproduce', ReproduceCommand)
        self.executor.register_command('list-scenarios', ListScenariosCommand)
        self.executor.register_command('validate', ValidateCommand)

    def _resolve_config(self):
        """
        Replaces the configuration arguments by the validated configuration; --seed, --trials
        and --jobs act as overrides.
        """
        if "config_path" not in self.command_parameters:
            return
        overrides = list(self.command_parameters.pop("overrides", None) or [])
        for key in ("seed", "trials", "jobs"):
            value = self.command_parameters.pop(key, None)
            if value is not None:
                overrides.append(f"{key}={value}")
        func_manager = self.command_parameters["func_manager"]
        self.command_parameters["config"] = func_manager.load(self.command_parameters.pop("config_path"), overrides)

    def execute_operation(self, operation) -> int:
        """
        Executes an operation.

        Parameters:
            operation (str): The name of the operation to be executed.

        Returns:
            int: 0 on success, 2 for configuration errors, 3 for failures at run time.
        """
        try:
            self._resolve_config()
            self.executor.execute_command(operation, self.command_parameters)
        except CONFIG_ERRORS as ex:
            logger.error("Configuration error: %s", getattr(ex, "message", ex))
            return EXIT_CONFIG_ERROR
        except CustomException as ex:
            logger.error("Error: %s", ex.message)
            return EXIT_RUNTIME_ERROR
        return EXIT_OK
