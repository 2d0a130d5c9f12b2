# File: database/connection.py

import os
from functools import lru_cache
from pathlib import Path

from dotenv import load_dotenv
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

from database.models import Base

# Load environment variables
load_dotenv()

DEFAULT_OUT_DIR = "results"
DB_FILE = "results.db"


def out_dir() -> Path:
    """Output directory from RELCHANGE_OUT_DIR, `results` by default."""
    return Path(os.getenv("RELCHANGE_OUT_DIR", DEFAULT_OUT_DIR))


def database_url(directory: str | Path | None = None) -> str:
    """RELCHANGE_DB_URL, or a SQLite file in the output directory."""
    url = os.getenv("RELCHANGE_DB_URL")
    if url:
        return url
    directory = Path(directory) if directory is not None else out_dir()
    directory.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{directory / DB_FILE}"


@lru_cache(maxsize=None)
def get_engine(url: str):
    """Engine for the registry at url, with its tables created."""
    engine = create_engine(url)
    Base.metadata.create_all(bind=engine)
    return engine


def get_session_factory(url: str):
    return sessionmaker(autocommit=False, autoflush=False, bind=get_engine(url))


def get_db(url: str | None = None):
    """Dependency to get a database session."""
    db = get_session_factory(url or database_url())()
    try:
        yield db
    finally:
        db.close()
