import argparse

from experiment_functions.funcs import default_out_dir


class SiPMToolParser:
    def __init__(self):
        """
        Initializes an argument parser for the SiPM simulation commands.
        """
        self.__parser = argparse.ArgumentParser(
            prog="sipm",
            description="SiPM photon-counting simulator and analysis toolkit",
            epilog="This tool simulates light sources seen by a silicon photomultiplier, digitizes the "
                   "detector output and runs the statistical analyses of the builtin scenarios."
        )
        self.__parser.add_argument('-v', '--verbose', action='store_true', help='Log debug messages')
        self.__subparsers = self.__parser.add_subparsers(
            dest='operation',
            title='Operations',
            description='Supported operations',
            help='Description',
            required=True
        )
        self.__add_simulate_parser()
        self.__add_analyze_parser()
        self.__add_reproduce_parser()
        self.__add_list_scenarios_parser()
        self.__add_validate_parser()

    def parse_args(self, args=None):
        """
        Parses the command-line arguments provided to the script.

        Parameters:
        args (list[str]): Arguments to parse instead of sys.argv.

        Returns:
        argparse.Namespace: An object containing all the parsed command-line arguments.
        """
        return self.__parser.parse_args(args)

    def __config_parameters(self, parser):
        """
        Adds the configuration file, overrides and run-size arguments to a given parser.

        Parameters:
        parser (argparse.ArgumentParser): The parser to which the configuration arguments are added.
        """
        parser.add_argument('-c', '--config', dest='config_path', default=None,
                            help='Path to the YAML configuration (defaults are used without it)')
        parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                            help='Override a configuration value, e.g. --set detector.eps=0.05 (repeatable)')
        parser.add_argument('--seed', type=int, default=None, help='Seed of every random stream')
        parser.add_argument('--trials', type=int, default=None, help='Number of laser shots per data set')
        parser.add_argument('-j', '--jobs', type=int, default=None, help='Worker threads')

    def __out_parameter(self, parser):
        parser.add_argument('-o', '--out', dest='out_dir', default=default_out_dir(),
                            help='Output directory (default: $SIPM_OUT_DIR or ./results)')

    def __add_simulate_parser(self):
        """
        Adds a subparser for the 'simulate' operation.

        The 'simulate' operation runs source, detector and optionally the waveform chain.
        """
        parser = self.__subparsers.add_parser(
            'simulate',
            help='Simulate shots and fired-cell counts',
            description='Simulate the configured source through the detector at every gate and write '
                        'the counts, the analytic distributions and optionally a trace dump.'
        )
        parser.add_argument('--traces', type=int, default=0, help='Also dump the first N digitized traces')
        self.__config_parameters(parser)
        self.__out_parameter(parser)

    def __add_analyze_parser(self):
        """
        Adds a subparser for the 'analyze' operation.

        The 'analyze' operation reads a trace dump and runs the spectrum and counting analyses.
        """
        parser = self.__subparsers.add_parser(
            'analyze',
            help='Analyze a trace dump',
            description='Integrate gates (or peak-hold) on recorded traces, fit the gain and test the '
                        'reconstructed counts.'
        )
        parser.add_argument('-t', '--traces', dest='trace_file', required=True,
                            help='Binary trace dump or single-trace CSV')
        parser.add_argument('--peak-hold', action='store_true', help='Use the peak-and-hold search window')
        parser.add_argument('--bin-width', type=float, default=None, help='Spectrum bin width in output units')
        self.__config_parameters(parser)
        self.__out_parameter(parser)

    def __add_reproduce_parser(self):
        """
        Adds a subparser for the 'reproduce' operation.

        The 'reproduce' operation runs one builtin scenario and writes its results bundle.
        """
        parser = self.__subparsers.add_parser(
            'reproduce',
            help='Run a builtin scenario',
            description='Run a builtin scenario and write its tables, fits and curves.'
        )
        parser.add_argument('scenario', help='Scenario name, see list-scenarios')
        self.__config_parameters(parser)
        self.__out_parameter(parser)

    def __add_list_scenarios_parser(self):
        self.__subparsers.add_parser(
            'list-scenarios',
            help='List the builtin scenarios',
            description='List the builtin scenarios.'
        )

    def __add_validate_parser(self):
        """
        Adds a subparser for the 'validate' operation.

        The 'validate' operation prints the normalized configuration or every problem found in it.
        """
        parser = self.__subparsers.add_parser(
            'validate',
            help='Validate a configuration',
            description='Fill in defaults, check every field and print the normalized configuration.'
        )
        self.__config_parameters(parser)
