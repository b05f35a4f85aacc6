import json
import pathlib

from momentsos import problem_from_json

ROOT = pathlib.Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"


def load_problem(name):
    with open(PROBLEMS / name) as fh:
        return problem_from_json(json.load(fh))
