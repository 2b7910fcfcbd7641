import os

TOLERANCE: float = float(os.environ.get("SINGLERAIL_TOLERANCE", "1e-10"))
LOG_LEVEL: str = os.environ.get("SINGLERAIL_LOG_LEVEL", "WARNING")
TRUNCATION: int = int(os.environ.get("SINGLERAIL_TRUNCATION", "4"))
