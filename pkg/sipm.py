import sys
import logging

from command_mapper.sim_manager import SimManager
from command_line_parser.parser import SiPMToolParser

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def main(args=None) -> int:
    parameters = vars(SiPMToolParser().parse_args(args))
    logging.basicConfig(level=logging.DEBUG if parameters.pop("verbose") else logging.INFO, format=LOG_FORMAT)
    operation = parameters.pop("operation")
    return SimManager(parameters).execute_operation(operation)


if __name__ == "__main__":
    sys.exit(main())
