import os

DATA_DIR = os.path.dirname(os.path.abspath(__file__))

GERMANY17_FILE = os.path.join(DATA_DIR, "germany17.json")
ABILENE12_FILE = os.path.join(DATA_DIR, "abilene12.json")
PHY_CONFIG_FILE = os.path.join(DATA_DIR, "phy_config.json")
VERSION_FILE = os.path.join(DATA_DIR, "version.txt")

BUNDLED_TOPOLOGIES = {
    "germany17": GERMANY17_FILE,
    "abilene12": ABILENE12_FILE,
    "us-abilene": ABILENE12_FILE,
}

OUTPUT_DIR_ENV = "PERIPLAN_OUTPUT_DIR"
