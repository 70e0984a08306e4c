#!/usr/bin/env python3

""" db_init.py
Generates the database schema for the run store.
- Drops and recreates the run_records table.
- Optionally stores one run per experiment config passed on the command line.

Usage: Run from the terminal as such:

Goto the scripts directory:
> cd scripts; ./db_init.py

Or run from the root of the project:
> scripts/db_init.py configs/alecto.ini configs/ipcp.ini

"""
import sys
import os

# Add the directory containing main.py to the Python path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
# Import application object
from main import app, db
from model.experiment import load_config, run_experiment
from model.run_record import RunRecord


def main(config_paths):

    # Step 0: Warning to the user
    with app.app_context():
        inspector = db.inspect(db.engine)
        if inspector.get_table_names():
            print("Warning, you are about to lose all stored runs!")
            if os.getenv('FORCE_YES') == 'true':
                response = 'y'
            else:
                print("Do you want to continue? (y/n)")
                response = input()
            if response.lower() != 'y':
                print("Exiting without making changes.")
                sys.exit(0)

    # Step 1: Build New schema and seed runs
    try:
        with app.app_context():
            db.drop_all()
            db.create_all()
            print("All tables created.")
            for path in config_paths:
                report = run_experiment(load_config(path))
                RunRecord(report).create()
                print(f"Stored {report.selector} run from {path}")
    except Exception as e:
        print(f"An error occurred: {e}")
        sys.exit(1)

    print("Database initialized!")


if __name__ == "__main__":
    main(sys.argv[1:])
