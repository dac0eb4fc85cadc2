import configparser
import logging
import os
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent

"""
Settings descriptions and their default values keyed by their name.
These settings appear in the `settings` subcommand and seed the parser below.
"""
setting_info = {
    "log-level":           ["Development log level. <30 is for developers.", 30],
    "seed":                ["Master seed for every random stream (SSC_SEED overrides).", 20240601],
    "workers":             ["Parallel trial workers (SSC_WORKERS overrides).", 1],
    "mmp-paths":           ["MMP child expansions per node (L).", 2],
    "mmp-beam":            ["MMP surviving paths per depth.", 4],
    "channel-taps":        ["Rayleigh taps per block, uniform power-delay profile.", 4],
    "cyclic-prefix":       ["Cyclic prefix length; auto means taps - 1.", "auto"],
    "modulation":          ["QAM order of the non-zero values (4 or 16).", 4],
    "min-errors":          ["Stop an SNR point after this many block errors.", 200],
    "max-trials":          ["Upper bound on packets per SNR point.", 100000],
    "batch-size":          ["Packets per work unit; fixes the early-stop granularity.", 250],
    "transmit-path":       ["Channel model path: frequency or time.", "frequency"],
    "complexity-packets":  ["Packets averaged per row of the complexity report.", 20],
    "complexity-snr":      ["SNR (dB) used for complexity report decodes.", 10.0],
    "color-scheme":        ["Terminal color scheme file.", "interface/colors-full.ini"],
    "backup-color-scheme": ["Color scheme used without prompt_toolkit.", "interface/colors-classic.ini"],
}

config = configparser.ConfigParser()
config.read_dict({"Settings": {k: str(v[1]) for k, v in setting_info.items()}})
config.read([REPO_ROOT / "config.ini", "config.ini"])
settings = config["Settings"]


def _read_colors(name):
    colorconfig = configparser.ConfigParser()
    path = Path(name)
    colorconfig.read([path if path.is_absolute() else REPO_ROOT / path])
    if not colorconfig.has_section("Colors"):
        colorconfig.read_dict({"Colors": {"displaymethod": "classic"}})
    return colorconfig["Colors"]


ptcolors = _read_colors(settings["color-scheme"])
colors = _read_colors(settings["backup-color-scheme"])

logger = logging.getLogger(__name__)
logLevel = settings.getint("log-level")
oneLevelUp = 20

logging.basicConfig(
    format="%(asctime)s - %(levelname)s - %(message)s",
    datefmt="%m/%d/%Y %H:%M:%S",
    level=logLevel + oneLevelUp,
)
logger.setLevel(logLevel)


def get_seed():
    """Get the master seed from environment, falling back to settings."""
    return int(os.environ.get("SSC_SEED", settings.getint("seed")))


def get_workers():
    """Get the worker count from environment, falling back to settings."""
    return max(1, int(os.environ.get("SSC_WORKERS", settings.getint("workers"))))


def get_cyclic_prefix(channel_taps):
    value = settings.get("cyclic-prefix", "auto").strip().lower()
    return channel_taps - 1 if value == "auto" else int(value)


# Keep the displayed settings consistent with the environment
settings["seed"] = str(get_seed())
settings["workers"] = str(get_workers())
