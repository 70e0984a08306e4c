# imports from flask
from flask import jsonify

# import "objects" from "this" project
from __init__ import app, db  # Key Flask objects
# API endpoints
from api.sim_api import sim_api
# CLI command group
from cli import sim_cli
# database models
from model.run_record import RunRecord
from model.experiment import SELECTORS
from model.prefetchers import ENGINE_ORDER


# register URIs for api endpoints
app.register_blueprint(sim_api)

# Ensure database tables exist
with app.app_context():
    try:
        db.create_all()
    except Exception as e:
        app.logger.warning("db.create_all() failed: %s", e)


@app.route('/')  # connects default URL to index() function
def index():
    return jsonify({
        "service": "prefetcher selection simulator",
        "selectors": list(SELECTORS),
        "engines": list(ENGINE_ORDER),
        "runs": RunRecord.query.count(),
    })


@app.errorhandler(404)  # catch for URL not found
def page_not_found(e):
    return jsonify({'message': 'Not found'}), 404


# Register the sim command group with the Flask application
app.cli.add_command(sim_cli)

# this runs the flask application on the development server
if __name__ == "__main__":
    host = "0.0.0.0"
    base_port = app.config.get('FLASK_PORT', 8402)
    max_tries = 5
    current_port = base_port
    app.logger.info("Server attempting to start at http://localhost:%s", base_port)

    for attempt in range(max_tries):
        try:
            app.run(debug=True, host=host, port=current_port, use_reloader=False)
            break
        except OSError as e:
            err = str(e).lower()
            if 'address already in use' in err:
                app.logger.warning("Port %s is in use. Trying next port...", current_port)
                current_port += 1
            else:
                # unexpected OSError - re-raise
                raise
    else:
        app.logger.error("Unable to bind to a port between %s and %s.", base_port, current_port)
