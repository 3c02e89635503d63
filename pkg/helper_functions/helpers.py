import io
import os
import csv
import json
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from ruamel.yaml import YAML

from custom_exceptions.exception import FailedToLoadYamlFile
from custom_exceptions.exception import InvalidFileExtension
from custom_exceptions.exception import FailedToCreateLocalDir

logger = logging.getLogger(__name__)

BATCH_SIZE = 8192


class Helpers:
    batch_size = BATCH_SIZE

    @classmethod
    def load_yaml(cls, file_path: str):
        """
        Loads and returns the contents of a single-document YAML file.

        Parameters:
        file_path (str): The path to the YAML file to be loaded.

        Returns:
        dict: The mapping stored in the file, or an empty dict for an empty file.

        Raises:
        InvalidFileExtension: If the file extension is not .yaml or .yml.
        FileNotFoundError: If the YAML file does not exist at the specified path.
        FailedToLoadYamlFile: If there is an error during the loading of the YAML file.
        """
        if not any(map(lambda extension: file_path.endswith(extension), [".yaml", ".yml"])):
            raise InvalidFileExtension("The correct file extension is .yaml or .yml", file_path)
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"The file {os.path.basename(file_path)} does not found.", file_path)
        yaml = YAML(typ="safe")
        try:
            with open(file_path, "r") as file:
                content = yaml.load(file)
        except Exception as ex:
            raise FailedToLoadYamlFile(f"Failed to load {file_path} file.", ex)
        if content is None:
            return {}
        if not isinstance(content, dict):
            raise FailedToLoadYamlFile(f"The file {file_path} must contain a mapping of sections.", type(content))
        return content

    @classmethod
    def dump_yaml(cls, data: dict) -> str:
        """
        Renders a plain mapping as block-style YAML text.
        """
        yaml = YAML(typ="safe")
        yaml.default_flow_style = False
        stream = io.StringIO()
        yaml.dump(data, stream)
        return stream.getvalue()

    @classmethod
    def parse_scalar(cls, text: str):
        """
        Parses a command-line override value with YAML scalar rules ("0.05" -> float, "[50, 70]" -> list).
        """
        yaml = YAML(typ="safe")
        try:
            return yaml.load(text)
        except Exception:
            return text

    @classmethod
    def apply_overrides(cls, data: dict, overrides) -> dict:
        """
        Applies dotted KEY=VALUE overrides to a nested mapping.

        Parameters:
        data (dict): The configuration mapping, modified in place.
        overrides (list[str]): Items of the form "section.key=value".

        Returns:
        dict: The updated mapping.

        Raises:
        FailedToLoadYamlFile: If an override is not of the form KEY=VALUE.
        """
        for item in overrides or []:
            if "=" not in item:
                raise FailedToLoadYamlFile(f"Override '{item}' is not of the form KEY=VALUE.", item)
            key, raw = item.split("=", 1)
            node = data
            parts = key.strip().split(".")
            for part in parts[:-1]:
                if not isinstance(node.get(part), dict):
                    node[part] = {}
                node = node[part]
            node[parts[-1]] = cls.parse_scalar(raw.strip())
        return data

    @classmethod
    def create_directory(cls, directory):
        """
        Create a directory at the specified path if it does not already exist.

        Parameters:
        directory (str): The file system path where the directory is to be created.

        Raises:
        FailedToCreateLocalDir: An exception indicating that the directory was not created.
        """
        try:
            logger.debug("Creating '%s' if not exist.", directory)
            os.makedirs(directory, exist_ok=True)
        except OSError:
            raise FailedToCreateLocalDir(f"Failed to create {directory} directory.", directory)

    @classmethod
    def batch_generators(cls, seed: int, trials: int, batch_size: int = None):
        """
        Splits a run of trials into fixed-size batches, each with its own generator spawned from the seed.

        The batch layout depends only on (seed, trials), so results are identical for any worker count.

        Returns:
        list[tuple[np.random.Generator, int]]: One (generator, batch size) pair per batch.
        """
        size = batch_size or cls.batch_size
        n_batches = max(1, -(-trials // size))
        children = np.random.SeedSequence(seed).spawn(n_batches)
        sizes = [size] * (n_batches - 1) + [trials - size * (n_batches - 1)]
        return [(np.random.default_rng(child), size) for child, size in zip(children, sizes)]

    @classmethod
    def derive_seed(cls, seed: int, *keys) -> int:
        """
        Seed of an independent stream keyed by names, e.g. derive_seed(7, "fano-thermal", 50.0).

        Non-integer keys are hashed, so a stream never depends on the order streams are created.
        """
        entropy = [int(seed)]
        for key in keys:
            if isinstance(key, (int, np.integer)) and not isinstance(key, bool) and key >= 0:
                entropy.append(int(key))
            else:
                key = float(key) if isinstance(key, (float, np.floating)) else key
                digest = hashlib.sha256(repr(key).encode("utf-8")).digest()
                entropy.append(int.from_bytes(digest[:8], "little"))
        return int(np.random.SeedSequence(entropy).generate_state(1, np.uint32)[0])

    @classmethod
    def run_batches(cls, func, seed: int, trials: int, jobs: int = 1, batch_size: int = None):
        """
        Runs func(rng, start, size) over all batches and returns the per-batch results in batch order.
        """
        batches = cls.batch_generators(seed, trials, batch_size)
        starts = np.cumsum([0] + [size for _, size in batches[:-1]])
        tasks = [(rng, int(start), size) for (rng, size), start in zip(batches, starts)]
        logger.debug("Running %d trials in %d batches on %d workers.", trials, len(tasks), jobs)
        if jobs <= 1 or len(tasks) == 1:
            return [func(*task) for task in tasks]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda task: func(*task), tasks))

    @classmethod
    def write_csv(cls, file_path: str, header, rows, comment: str = None):
        """
        Writes rows to a CSV file, optionally preceded by a '# comment' line.
        """
        cls.create_directory(os.path.dirname(os.path.abspath(file_path)))
        with open(file_path, "w", newline="") as file:
            if comment:
                file.write(f"# {comment}\n")
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([cls.format_number(value) for value in row])

    @classmethod
    def write_json(cls, file_path: str, payload: dict):
        """
        Writes a payload as canonical (sorted, indented) JSON.
        """
        cls.create_directory(os.path.dirname(os.path.abspath(file_path)))
        with open(file_path, "w") as file:
            json.dump(payload, file, indent=2, sort_keys=True, default=cls.json_default)
            file.write("\n")

    @classmethod
    def json_default(cls, value):
        if isinstance(value, np.integer):
            return int(value)
        if isinstance(value, np.floating):
            return float(value)
        if isinstance(value, np.ndarray):
            return value.tolist()
        raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")

    @classmethod
    def canonical_hash(cls, payload: dict) -> str:
        """
        SHA-256 of the canonical JSON rendering of a mapping.
        """
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=cls.json_default)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    @classmethod
    def format_number(cls, value):
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        if isinstance(value, np.integer):
            return int(value)
        return value

    @classmethod
    def format_table(cls, rows, columns) -> str:
        """
        Renders a list of row mappings as an aligned-column text table.

        Parameters:
        rows (list[dict]): One mapping per table row.
        columns (list[str]): Column keys, in display order.
        """
        def cell(value):
            if isinstance(value, (float, np.floating)):
                return f"{value:.4g}" if abs(value) < 1e-3 or abs(value) >= 1e5 else f"{value:.4f}"
            if isinstance(value, (tuple, list)):
                return "(" + ", ".join(cell(item) for item in value) + ")"
            return str(value)

        body = [[cell(row.get(column, "")) for column in columns] for row in rows]
        widths = [max([len(column)] + [len(line[i]) for line in body]) for i, column in enumerate(columns)]
        lines = ["  ".join(column.rjust(width) for column, width in zip(columns, widths))]
        lines.append("  ".join("-" * width for width in widths))
        lines.extend("  ".join(value.rjust(width) for value, width in zip(line, widths)) for line in body)
        return "\n".join(lines) + "\n"
