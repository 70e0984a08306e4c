from flask import Flask
from flask_sqlalchemy import SQLAlchemy
from dotenv import load_dotenv
import logging
import os

# Load environment variables from .env file
load_dotenv()


# Setup of key Flask object (app)
app = Flask(__name__)

# Configure Flask Port, default to 8402 which is same as Docker setup
app.config['FLASK_PORT'] = int(os.environ.get('FLASK_PORT') or 8402)

# Configure Flask to handle JSON with UTF-8 encoding versus default ASCII
app.config['JSON_AS_ASCII'] = False


# Simulation settings
app.config['SIM_MAX_RECORDS'] = int(os.environ.get('SIM_MAX_RECORDS') or 200000)  # cap on records a single HTTP request may simulate
app.config['SIM_LOG_LEVEL'] = (os.environ.get('SIM_LOG_LEVEL') or 'WARNING').upper()
app.logger.setLevel(app.config['SIM_LOG_LEVEL'])
logging.getLogger('model').setLevel(app.config['SIM_LOG_LEVEL'])


# Database settings
dbName = 'sim_runs'
dbURI = os.environ.get('SIM_DATABASE_URI') or None
if not dbURI:
    # Development - Use SQLite stored under the Flask instance folder
    instance_volumes = os.path.join(app.instance_path, 'volumes')
    os.makedirs(instance_volumes, exist_ok=True)
    db_file_path = os.path.join(instance_volumes, dbName + '.db')
    dbURI = 'sqlite:///' + db_file_path
    app.config['SQLALCHEMY_DATABASE_FILE'] = db_file_path
app.config['SQLALCHEMY_DATABASE_NAME'] = dbName
app.config['SQLALCHEMY_DATABASE_URI'] = dbURI
app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
db = SQLAlchemy(app)
