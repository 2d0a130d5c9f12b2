# File: services/results_service.py

import json

from sqlalchemy.exc import SQLAlchemyError
from sqlalchemy.orm import Session

from database.models import AnalysisRun, ExperimentRun, RejectionRecord, RelevanceCellRecord
from services.analysis_service import AnalysisReport
from services.harness import RejectionTable


def record_experiment(db: Session, table: RejectionTable) -> tuple[bool, str]:
    """Store an experiment run and its rejection rows."""
    if not table.rows:
        return False, "Rejection table has no rows."

    config = table.config
    try:
        run = ExperimentRun(
            config_hash=config.hash,
            test_kind=config.test_kind,
            j=config.j,
            delta=config.resolved_delta,
            seed=config.seed,
            replicates=config.replicates,
            config_json=json.dumps(config.to_dict(), sort_keys=True),
        )
        run.rows = [
            RejectionRecord(
                n=row.n,
                magnitude=row.magnitude,
                rate=row.rate,
                se=row.se,
                mean_theta_hat=row.mean_theta_hat,
                median_abs_error=row.median_abs_error,
                replicates=row.replicates,
            )
            for row in table.rows
        ]
        db.add(run)
        db.commit()
        return True, f"Experiment {config.hash} recorded with {len(table.rows)} rows."
    except SQLAlchemyError as e:
        db.rollback()
        return False, f"An error occurred while recording the experiment: {str(e)}"


def record_analysis(db: Session, report: AnalysisReport) -> tuple[bool, str]:
    """Store an analysis run and all of its relevance cells."""
    try:
        run = AnalysisRun(
            source=report.source,
            n_years=len(report.years),
            k_hat=report.k_hat,
            theta_hat=report.theta_hat,
            split_year=report.split_year,
            settings_json=json.dumps(report.settings.to_dict(), sort_keys=True),
        )
        run.cells = [
            RelevanceCellRecord(
                kind=cell.kind,
                j=cell.j,
                threshold=cell.label,
                delta=cell.delta,
                p_value=cell.p_value,
                rejected=cell.rejected,
            )
            for cell in report.eigenfunction_cells + report.eigenvalue_cells
        ]
        db.add(run)
        db.commit()
        return True, f"Analysis of {report.source} recorded."
    except SQLAlchemyError as e:
        db.rollback()
        return False, f"An error occurred while recording the analysis: {str(e)}"


def fetch_experiment_runs(db: Session, config_hash: str | None = None) -> list[ExperimentRun]:
    """Fetch experiment runs, newest first, optionally for one config hash."""
    query = db.query(ExperimentRun)
    if config_hash:
        query = query.filter(ExperimentRun.config_hash == config_hash)
    return query.order_by(ExperimentRun.id.desc()).all()


def fetch_analysis_runs(db: Session, source: str | None = None) -> list[AnalysisRun]:
    """Fetch analysis runs, newest first."""
    query = db.query(AnalysisRun)
    if source:
        query = query.filter(AnalysisRun.source == source)
    return query.order_by(AnalysisRun.id.desc()).all()
