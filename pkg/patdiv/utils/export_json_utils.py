import logging
import os
import tempfile

import ujson as json

from patdiv.analysis.survivors import survivor_report_from_dict, survivor_report_to_dict
from patdiv.binary.program import program_from_dict, program_to_dict, variant_from_dict, variant_to_dict
from patdiv.patterns.pattern_set import pattern_set_from_dict, pattern_set_to_dict
from patdiv.utils.errors import ValidationError

logger = logging.getLogger(__name__)


def load_json(json_file_path):
    try:
        with open(json_file_path) as json_file:
            return json.load(json_file)
    except FileNotFoundError as err:
        raise ValidationError("no such file: %s" % json_file_path) from err
    except ValueError as err:
        raise ValidationError("%s is not valid JSON: %s" % (json_file_path, err)) from err


def save_json(json_data, json_file_path):
    """Write JSON next to the target and rename it into place, so readers never see a partial file."""
    directory = os.path.dirname(os.path.abspath(json_file_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmpPath = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fp:
            json.dump(json_data, fp, indent=2)
            fp.flush()
            os.fsync(fp.fileno())
        os.replace(tmpPath, json_file_path)
    except BaseException:
        if os.path.exists(tmpPath):
            os.remove(tmpPath)
        raise
    logger.debug("wrote %s", json_file_path)


def load_program_from_json(json_file_path):
    return program_from_dict(load_json(json_file_path))


def save_program_to_json(program, json_file_path):
    save_json(program_to_dict(program), json_file_path)


def load_pattern_set_from_json(json_file_path):
    return pattern_set_from_dict(load_json(json_file_path))


def save_pattern_set_to_json(pattern_set, json_file_path):
    save_json(pattern_set_to_dict(pattern_set), json_file_path)


def load_variants_from_json(json_file_path):
    doc = load_json(json_file_path)
    try:
        return [variant_from_dict(vdoc) for vdoc in doc["variants"]], doc.get("program_hash")
    except (KeyError, TypeError, ValueError) as err:
        raise ValidationError("malformed variants file %s: %s" % (json_file_path, err)) from err


def save_variants_to_json(variants, json_file_path, program_hash=None):
    save_json({"program_hash": program_hash, "variants": [variant_to_dict(variant) for variant in variants]}, json_file_path)


def load_report_from_json(json_file_path):
    """Returns the label (may be None), the SurvivorReport and the stored entropy in bits."""
    doc = load_json(json_file_path)
    return doc.get("label"), survivor_report_from_dict(doc), doc.get("entropy_bits")


def save_report_to_json(report, entropy_report, json_file_path, label=None):
    save_json(survivor_report_to_dict(report, entropy_report, label), json_file_path)
