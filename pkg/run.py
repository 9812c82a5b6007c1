"""Run the CLI from a source checkout: python run.py solve --problem toy --runs 10"""
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent / "src"))

from mpcc_newton.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
