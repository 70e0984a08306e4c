""" Database model for finished simulation runs """
import json
from datetime import datetime

from sqlalchemy.exc import IntegrityError

from __init__ import app, db


class RunRecord(db.Model):
    """
    RunRecord Model

    One finished run. The headline numbers get their own columns so runs can
    be listed and sorted; the full RunReport is kept as JSON.

    Attributes:
        id (Column): Primary key.
        _selector (Column): selection scheme name.
        _trace (Column): digest of the simulated trace.
        _config_digest (Column): digest of the experiment configuration.
        _coverage (Column): fraction of shadow misses covered.
        _accuracy (Column): useful / issued prefetches.
        _report (Column): RunReport as JSON text.
        _created_at (Column): when the run was stored.
    """
    __tablename__ = 'run_records'

    id = db.Column(db.Integer, primary_key=True)
    _selector = db.Column(db.String(32), nullable=False)
    _trace = db.Column(db.String(16), nullable=False)
    _config_digest = db.Column(db.String(16), nullable=False)
    _coverage = db.Column(db.Float, nullable=False)
    _accuracy = db.Column(db.Float, nullable=False)
    _report = db.Column(db.Text, nullable=False)
    _created_at = db.Column(db.DateTime, default=datetime.utcnow)

    def __init__(self, report):
        self._selector = report.selector
        self._trace = report.trace
        self._config_digest = report.config_digest
        self._coverage = report.coverage
        self._accuracy = report.accuracy
        self._report = json.dumps(report.read(), sort_keys=True)
        self._created_at = datetime.utcnow()

    @property
    def selector(self):
        return self._selector

    @property
    def trace(self):
        return self._trace

    @property
    def coverage(self):
        return self._coverage

    @property
    def accuracy(self):
        return self._accuracy

    @property
    def report(self):
        return json.loads(self._report)

    def create(self):
        try:
            db.session.add(self)
            db.session.commit()
            return self
        except IntegrityError:
            db.session.rollback()
            app.logger.warning("could not store run for %s", self._selector)
            return None

    def read(self, full=False):
        data = {
            "id": self.id,
            "selector": self._selector,
            "trace": self._trace,
            "config_digest": self._config_digest,
            "coverage": self._coverage,
            "accuracy": self._accuracy,
            "created_at": self._created_at.isoformat() if self._created_at else None,
        }
        if full:
            data["report"] = self.report
        return data

    def delete(self):
        db.session.delete(self)
        db.session.commit()
        return None

    @staticmethod
    def recent(limit=20):
        """Most recently stored runs first."""
        return RunRecord.query.order_by(RunRecord._created_at.desc(), RunRecord.id.desc()).limit(limit).all()
