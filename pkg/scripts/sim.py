#!/usr/bin/env python3

""" sim.py
Runs the `sim` command group without starting the server.

Usage: Run from the root of the project:
> scripts/sim.py storage -P 3
> scripts/sim.py gen --config configs/patterns.ini --out /tmp/mixed.trace
> scripts/sim.py run --config configs/alecto.ini --trace /tmp/mixed.trace --out /tmp/alecto.json
> scripts/sim.py compare --config configs/alecto.ini --config configs/ipcp.ini --trace /tmp/mixed.trace
"""
import sys
import os

# Add the directory containing main.py to the Python path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
# Import application object
from main import app
from cli import sim_cli


if __name__ == "__main__":
    with app.app_context():
        sim_cli.main(prog_name="sim")
