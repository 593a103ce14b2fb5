import json
import logging
import os
import tempfile
import pandas as pd

__author__ = "qdcformer developers"

logger = logging.getLogger("qdcformer")


def make_dir(path):
    if path and not os.path.isdir(path):
        print("Making directory:", path)
        os.makedirs(path)


def atomic_write_text(text, filename):
    """ Write text to a temporary file in the destination directory and
        rename it over filename, so readers never see a partial file.

    """
    directory = os.path.dirname(os.path.abspath(filename))
    make_dir(directory)
    fd, tmpname = tempfile.mkstemp(dir=directory, prefix=".tmp_",
        suffix=os.path.basename(filename))
    try:
        with os.fdopen(fd, "w") as outfile:
            outfile.write(text)
        os.replace(tmpname, filename)
    except BaseException:
        if os.path.exists(tmpname):
            os.remove(tmpname)
        raise


def write_json_report(report, filename):
    """ Write a dict as indented JSON with sorted keys."""
    atomic_write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", filename)
    logger.info("Wrote %s to file.", filename)


def write_dataframe(df, filename):
    """ Write a DataFrame as CSV with a fixed header and no index.

        INPUTS:

        :df: (pandas DataFrame) columns in the order they should appear
        :filename: (string) output csv

    """
    atomic_write_text(df.to_csv(index=False, float_format="%.10g"), filename)
    logger.info("Wrote %s to file.", filename)


def read_dataframe(filename):
    return pd.read_csv(filename)
