from dotenv import load_dotenv
import os

load_dotenv()

LOG_LEVEL = os.getenv("SYMBION_LOG_LEVEL", "INFO").upper()
DEFAULT_JOBS = max(1, int(os.getenv("SYMBION_JOBS", "1")))
DEBUG_VALIDATE = os.getenv("SYMBION_DEBUG", "0").lower() in ("1", "true", "yes")
OUT_DIR = os.getenv("SYMBION_OUT_DIR", "out")
