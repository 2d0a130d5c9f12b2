# File: database/models.py

from datetime import datetime, timezone

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


def _utcnow():
    return datetime.now(timezone.utc)


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    config_hash = Column(String(16), index=True)
    test_kind = Column(String)
    j = Column(Integer)
    delta = Column(Float)
    seed = Column(Integer)
    replicates = Column(Integer)
    config_json = Column(Text)
    created_at = Column(DateTime, default=_utcnow)

    rows = relationship("RejectionRecord", back_populates="run", cascade="all, delete-orphan")


class RejectionRecord(Base):
    __tablename__ = "rejection_records"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id"))
    n = Column(Integer)
    magnitude = Column(Float)
    rate = Column(Float)
    se = Column(Float)
    mean_theta_hat = Column(Float)
    median_abs_error = Column(Float)
    replicates = Column(Integer)

    run = relationship("ExperimentRun", back_populates="rows")


class AnalysisRun(Base):
    __tablename__ = "analysis_runs"

    id = Column(Integer, primary_key=True, index=True)
    source = Column(String)
    n_years = Column(Integer)
    k_hat = Column(Integer)
    theta_hat = Column(Float)
    split_year = Column(Integer)
    settings_json = Column(Text)
    created_at = Column(DateTime, default=_utcnow)

    cells = relationship("RelevanceCellRecord", back_populates="run", cascade="all, delete-orphan")


class RelevanceCellRecord(Base):
    __tablename__ = "relevance_cells"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("analysis_runs.id"))
    kind = Column(String)
    j = Column(Integer)
    threshold = Column(String)
    delta = Column(Float)
    p_value = Column(Float)
    rejected = Column(Boolean)

    run = relationship("AnalysisRun", back_populates="cells")
