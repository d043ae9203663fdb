import os
from dotenv import load_dotenv

load_dotenv()


def _env_bool(name: str, default: str = "False") -> bool:
    return os.getenv(name, default).lower() == "true"


class Settings:
    """Laboratory settings"""

    # Size limits
    VERTEX_BUDGET: int = int(os.getenv("VERTEX_BUDGET", "4096"))
    ENUMERATION_BUDGET: int = int(os.getenv("ENUMERATION_BUDGET", "36"))
    PAIR_ENUMERATION_BUDGET: int = int(os.getenv("PAIR_ENUMERATION_BUDGET", "24"))
    LEGAL_COVER_BUDGET: int = int(os.getenv("LEGAL_COVER_BUDGET", "20"))
    TREE_COUNT_BUDGET: int = int(os.getenv("TREE_COUNT_BUDGET", "64"))

    # Sampling
    BATCH_COUNT: int = int(os.getenv("BATCH_COUNT", "100"))

    # Application
    APP_NAME: str = "Hard-core Lab"
    DEBUG: bool = _env_bool("DEBUG")
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")


settings = Settings()
