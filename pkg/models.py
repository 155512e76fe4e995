import json
from datetime import datetime, timezone

from extensions import db


class FactoringRun(db.Model):
    """One invocation of the ``factor`` command and its outcome"""

    id = db.Column(db.Integer, primary_key=True)
    n = db.Column(db.String(400), nullable=False)  # decimal string
    p = db.Column(db.String(400), nullable=True)
    q = db.Column(db.String(400), nullable=True)
    status = db.Column(db.String(30), nullable=False)  # 'factored', 'budget-exhausted', 'failed'
    method = db.Column(db.String(30), default="lattice")  # 'lattice' or 'trial-division'
    seed = db.Column(db.Integer, default=0)
    m = db.Column(db.Integer, default=0)
    big_m = db.Column(db.Integer, default=0)
    lattices_consumed = db.Column(db.Integer, default=0)
    relations_used = db.Column(db.Integer, default=0)
    collisions = db.Column(db.Integer, default=0)
    collision_rate = db.Column(db.Float, default=0.0)
    tau_trials = db.Column(db.Integer, default=0)
    elapsed_seconds = db.Column(db.Float, default=0.0)
    report_json = db.Column(db.Text)
    created_at = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc))

    relations = db.relationship(
        "StoredRelation", backref="run", cascade="all, delete-orphan", order_by="StoredRelation.id"
    )

    @classmethod
    def from_report(cls, report) -> "FactoringRun":
        doc = report.to_dict()
        p, q = report.factors if report.factors else (None, None)
        run = cls(
            n=str(report.n),
            p=str(p) if p is not None else None,
            q=str(q) if q is not None else None,
            status=report.status,
            method=report.method,
            seed=report.seed,
            m=report.m,
            big_m=report.big_m,
            lattices_consumed=report.lattices_consumed,
            relations_used=report.relations_used,
            collisions=report.collisions,
            collision_rate=report.collision_rate,
            tau_trials=report.tau_trials,
            elapsed_seconds=report.elapsed,
            report_json=json.dumps(doc, sort_keys=True),
        )
        for pair in report.relations:
            run.relations.append(StoredRelation.from_pair(pair))
        return run

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "N": self.n,
            "factors": [self.p, self.q] if self.p else None,
            "status": self.status,
            "method": self.method,
            "seed": self.seed,
            "m": self.m,
            "M": self.big_m,
            "lattices_consumed": self.lattices_consumed,
            "relations_used": self.relations_used,
            "collisions": self.collisions,
            "collision_rate": self.collision_rate,
            "tau_trials": self.tau_trials,
            "elapsed": self.elapsed_seconds,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }


class StoredRelation(db.Model):
    """An sr-pair kept by a factoring run"""

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey("factoring_run.id"), nullable=False)
    u = db.Column(db.String(400), nullable=False)
    v = db.Column(db.String(400), nullable=False)
    lattice_id = db.Column(db.Integer, default=0)
    sweep_index = db.Column(db.Integer, default=0)
    exponents_json = db.Column(db.Text)  # {"e": ..., "e_prime": ...}

    @classmethod
    def from_pair(cls, pair) -> "StoredRelation":
        record = pair.to_record()
        return cls(
            u=record["u"],
            v=record["v"],
            lattice_id=pair.lattice_id,
            sweep_index=pair.sweep_index,
            exponents_json=json.dumps({"e": record["e"], "e_prime": record["e_prime"]}),
        )

    def to_record(self) -> dict:
        exps = json.loads(self.exponents_json) if self.exponents_json else {}
        return {
            "u": self.u,
            "v": self.v,
            "e": exps.get("e"),
            "e_prime": exps.get("e_prime"),
            "lattice_id": self.lattice_id,
            "sweep_index": self.sweep_index,
        }
