import argparse
import logging

from pylint.lint import Run

logging.getLogger().setLevel(logging.INFO)

# matrix and derivative names (K_rt, G_st, dT_dC) follow the math, not snake case
MATH_NAMES = "invalid-name"

parser = argparse.ArgumentParser(prog="LINT")

parser.add_argument(
    "-p",
    "--path",
    help="package directories to run pylint on | " "Default: %(default)s | " "Type: %(type)s ",
    default=["./isomotor"],
    nargs="+",
    type=str,
)

parser.add_argument(
    "-t",
    "--threshold",
    help="score threshold to fail pylint runner | " "Default: %(default)s | " "Type: %(type)s ",
    default=7,
    type=float,
)

parser.add_argument(
    "--ignore",
    help="directory names skipped while linting | " "Default: %(default)s | " "Type: %(type)s ",
    default="tests,data",
    type=str,
)

args = parser.parse_args()
threshold = float(args.threshold)

failures = []
for path in args.path:
    logging.info("PyLint Starting | " "Path: {} | " "Threshold: {} ".format(path, threshold))
    results = Run([path, f"--ignore={args.ignore}", f"--disable={MATH_NAMES}"], exit=False)
    score = results.linter.stats.global_note
    message = f"PyLint {'Failed' if score < threshold else 'Passed'} | " f"Path: {path} | " f"Score: {score:.2f} "
    if score < threshold:
        logging.error(message)
        failures.append(message)
    else:
        logging.info(message)

if failures:
    raise Exception(" || ".join(failures))

exit(0)
