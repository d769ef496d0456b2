"""
Scoring completions with edit distances
=======================================

Two views of prediction quality: the full Levenshtein distance penalizes
everything the model got wrong including rambling past the answer, while
the optimal-prefix distance asks how close the best stopping point was.
The gap between them measures overshoot.
"""

import csv
import io

from scopekit import aggregate_report, evaluate, levenshtein, opt_prefix_distance
from scopekit.metrics import write_report_csv  # noqa: F401  (same writer the pipeline uses)

# Plain distances first.
print("levenshtein('kitten', 'sitting') =", levenshtein("kitten", "sitting"))
print("levenshtein('', 'abc')          =", levenshtein("", "abc"))

# A prediction that contains the truth verbatim, then keeps talking.
truth = "return total;\n}"
prediction = truth + "\n// helpful extra commentary nobody asked for"
full = levenshtein(prediction, truth)
opt, opt_len = opt_prefix_distance(prediction, truth)
print(f"\ntruth      : {truth!r}")
print(f"prediction : {prediction!r}")
print(f"full distance = {full}  (pays for every junk character)")
print(f"opt distance  = {opt} at prefix length {opt_len}  (truth appears verbatim)")
print(f"conciseness delta = {full - opt}")

# evaluate() scores batches of (test_id, category, prediction, truth) and
# aggregate_report() rolls them up per category.
tests = [
    ("t0", "func_body", "int x = 1;\nreturn x;\n}", "int x = 1;\nreturn x;\n}"),
    ("t1", "func_body", "int x = 2;\nreturn x;\n}", "int x = 1;\nreturn x;\n}"),
    ("t2", "if_body", "count += 1;\n}", "count += 1;\n} else {"),
    ("t3", "if_body", "count -= 1;\n} // done", "count += 1;\n}"),
]
records = evaluate(tests)
print("\nper-test records:")
for r in records:
    print(f"  {r.test_id} {r.category:9s} full={r.full_distance:2d} opt={r.opt_distance:2d}"
          f" opt_prefix_len={r.opt_prefix_len:2d} delta={r.conciseness_delta}")

report = aggregate_report(records)
buf = io.StringIO()
writer = csv.writer(buf)
writer.writerow(["category", "n", "mean_opt", "median_opt", "mean_full", "median_full"])
for row in report:
    writer.writerow([row.category, row.n_tests, f"{row.mean_opt:.4f}", f"{row.median_opt:.4f}",
                     f"{row.mean_full:.4f}", f"{row.median_full:.4f}"])
print("\naggregated report (same shape the pipeline writes to report.csv):")
print(buf.getvalue())
