class CustomException(Exception):
    def __init__(self, message, value=None):
        """
        Base class for custom exceptions in the SiPM simulation toolkit.

        Parameters:
        message (str): String describing the exception.
        value: Additional data or value associated with the exception.
        """
        super().__init__(message)
        self.message = message
        self.value = value


class InvalidDistribution(CustomException):
    """
    Exception raised when a probability mass function is not normalized or has entries outside [0, 1].
    """
    ...


class InvalidSourceSpec(CustomException):
    """
    Exception raised for light-source parameters outside their domain.
    """
    ...


class InvalidDetectorParams(CustomException):
    """
    Exception raised for detector parameters outside their domain.
    """
    ...


class InvalidPulseShape(CustomException):
    """
    Exception raised for an inconsistent single-cell pulse shape.
    """
    ...


class InvalidTemporalParams(CustomException):
    """
    Exception raised for invalid prompt/delayed cross-talk parameters.
    """
    ...


class InvalidDigitizerSpec(CustomException):
    """
    Exception raised for an invalid digitizer description.
    """
    ...


class EventOutsideWindow(CustomException):
    """
    Exception raised when an avalanche is placed outside the acquisition window.
    """
    ...


class InvalidGate(CustomException):
    """
    Exception raised when an integration or search gate does not fit inside the trace window.
    """
    ...


class InvalidTraceFile(CustomException):
    """
    Exception raised when a trace dump cannot be decoded.
    """
    ...


class EmptyInput(CustomException):
    """
    Exception raised when an estimator receives no data.
    """
    ...


class InsufficientData(CustomException):
    """
    Exception raised when there are not enough points or shots for an estimate.
    """
    ...


class InsufficientPeaks(CustomException):
    """
    Exception raised when a pulse-height spectrum shows fewer peaks than required.
    """
    ...


class MissingPeak(CustomException):
    """
    Exception raised when the 1-photon peak cannot be located.
    """
    ...


class DegenerateData(CustomException):
    """
    Exception raised for zero-mean or zero-variance data where a ratio is required.
    """
    ...


class FitDidNotConverge(CustomException):
    """
    Exception raised when the least-squares engine fails to converge.
    """
    ...


class FitOutOfDomain(CustomException):
    """
    Exception raised when a fitted parameter lands outside its physical domain.
    """
    ...


class TheoryDomainError(CustomException):
    """
    Exception raised when a closed-form expression is evaluated outside its domain.
    """
    ...


class InvalidSpectrum(CustomException):
    """
    Exception raised for a pulse-height spectrum with inconsistent bins or a non-positive bin width.
    """
    ...


class InvalidResult(CustomException):
    """
    Exception raised when a fit result or a curve is internally inconsistent.
    """
    ...


class FailedToLoadYamlFile(CustomException):
    """
    Exception raised when loading of a YAML file fails.
    """
    ...


class InvalidFileExtension(CustomException):
    """
    Exception raised for invalid file extensions.
    """
    ...


class InvalidExperimentConfig(CustomException):
    """
    Exception raised when the experiment configuration is invalid. The value holds the list of field errors.
    """
    ...


class UnknownScenario(CustomException):
    """
    Exception raised when a scenario name does not resolve to a builtin scenario.
    """
    ...


class ScenarioStageFailed(CustomException):
    """
    Exception raised when one stage of a scenario fails. The message names the stage.
    """
    ...


class UnsupportedOperationProvided(CustomException):
    """
    Exception raised when an unsupported CLI operation is provided.
    """
    ...


class FailedToCreateLocalDir(CustomException):
    """
    Exception raised when a directory creation is failed.
    """
    ...
