import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = str(Path(__file__).parent.parent)

THREADS = max(1, int(os.getenv("OMEGA_THREADS", "1")))
LOG_LEVEL = os.getenv("OMEGA_LOG_LEVEL", "WARNING")

# Exhaustive searches abort instead of sampling once they pass these sizes.
MAX_CANDIDATES = int(os.getenv("OMEGA_MAX_CANDIDATES", str(10**7)))
MAX_TABLE_ORDER = int(os.getenv("OMEGA_MAX_TABLE_ORDER", "2000"))

SCHEMAS_DIR = os.path.join(BASE_DIR, "omega_orbits", "schemas")
AVAILABLE_SCHEMAS = sorted(
    f.split(".")[0] for f in os.listdir(SCHEMAS_DIR) if f.endswith(".json")
)
