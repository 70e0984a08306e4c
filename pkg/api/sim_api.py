from flask import Blueprint, request, jsonify, current_app
from flask_restful import Api, Resource  # used for REST API building

from __init__ import db
from model.alecto import storage_report
from model.errors import ConfigError
from model.experiment import compare_experiments, config_from_mapping, load_records, run_experiment
from model.metrics import emit_csv
from model.run_record import RunRecord
from model.trace import PatternError, TraceError

sim_api = Blueprint('sim_api', __name__,
                    url_prefix='/api/sim')

# API docs https://flask-restful.readthedocs.io/en/latest/api.html
api = Api(sim_api)

INPUT_ERRORS = (ConfigError, PatternError, TraceError)


def _config(mapping):
    """Experiment config from a JSON body section mapping; only inline patterns are accepted."""
    config = config_from_mapping(mapping)
    if config.trace_path:
        raise ConfigError("trace files are not accepted over HTTP, use [pattern.*] sections")
    total = sum(p.count for p in config.patterns)
    if total > current_app.config['SIM_MAX_RECORDS']:
        raise ConfigError(f"{total} records exceeds the limit of {current_app.config['SIM_MAX_RECORDS']}")
    return config


class SimAPI:
    """
    Endpoints for running simulations and reading stored runs.

    - /storage: table budget for P prefetchers
    - /run: simulate one experiment and store its report
    - /compare: simulate several experiments on one shared trace
    - /runs: stored runs, newest first
    """

    class _Storage(Resource):
        def get(self):
            try:
                prefetchers = int(request.args.get('P', 3))
                return jsonify(storage_report(prefetchers))
            except (ValueError, ConfigError) as e:
                return {'message': f'Invalid P: {e}'}, 400

    class _Run(Resource):
        def post(self):
            body = request.get_json(silent=True)
            if not isinstance(body, dict) or not body:
                return {'message': 'Experiment sections are missing'}, 400
            try:
                config = _config(body)
                report = run_experiment(config, load_records(config))
            except INPUT_ERRORS as e:
                return {'message': str(e)}, 400
            db.create_all()
            record = RunRecord(report).create()
            data = report.read()
            data['id'] = record.id if record else None
            return jsonify(data)

    class _Compare(Resource):
        def post(self):
            body = request.get_json(silent=True)
            experiments = body.get('experiments') if isinstance(body, dict) else None
            if not isinstance(experiments, list) or not experiments:
                return {'message': 'experiments must be a non-empty list'}, 400
            try:
                configs = [_config(e) for e in experiments]
                reports = compare_experiments(configs)
            except INPUT_ERRORS as e:
                return {'message': str(e)}, 400
            return jsonify({'rows': [r.read() for r in reports], 'csv': emit_csv(reports)})

    class _Runs(Resource):
        def get(self):
            limit = request.args.get('limit', 20, type=int)
            return jsonify([r.read() for r in RunRecord.recent(limit)])

    class _RunById(Resource):
        def get(self, run_id):
            record = RunRecord.query.get(run_id)
            if record is None:
                return {'message': f'Run {run_id} not found'}, 404
            return jsonify(record.read(full=True))

        def delete(self, run_id):
            record = RunRecord.query.get(run_id)
            if record is None:
                return {'message': f'Run {run_id} not found'}, 404
            record.delete()
            return {'message': f'Run {run_id} deleted'}, 200

    api.add_resource(_Storage, '/storage')
    api.add_resource(_Run, '/run')
    api.add_resource(_Compare, '/compare')
    api.add_resource(_Runs, '/runs')
    api.add_resource(_RunById, '/runs/<int:run_id>')
