#!/usr/bin/env python3
"""Brute-force recount of a JSONL submission log.

Recomputes, straight from the raw records, the per-problem statistics the
server reports: students attempted/solved, mean submissions per attempting
student, mean prompt word count, and the per-attempt-number series.

    python3 scripts/recount_log.py LOG --course ID [--expect PROBLEM=SUBS,SOLVED,WORDS ...]
                                   [--expect-first PROBLEM=SUBMITTERS,WORDS]

With --expect the script exits non-zero unless every listed problem matches
at display rounding (one decimal for submissions, whole words).
"""
import argparse
import json
import sys
from decimal import Decimal, ROUND_HALF_UP


def rounded(value, places):
    q = Decimal(1).scaleb(-places)
    return Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP)


def recount(rows, course, problem):
    mine = [r for r in rows if r["course_id"] == course and r["problem_id"] == problem]
    sessions = sorted({r["session_id"] for r in mine})
    solved = [s for s in sessions if any(r["outcome"]["passed_all"] for r in mine if r["session_id"] == s)]
    words = [len(r["student_text"].split()) for r in mine]
    series = []
    k = 1
    while True:
        kth = [r for r in mine if r["submission_index"] == k]
        if not kth and k > max([r["submission_index"] for r in mine] or [0]):
            break
        series.append((k, len(kth), sum(len(r["student_text"].split()) for r in kth) / len(kth) if kth else 0.0))
        k += 1
    return {
        "attempted": len(sessions),
        "solved": len(solved),
        "avg_submissions": len(mine) / len(sessions) if sessions else 0.0,
        "avg_words": sum(words) / len(words) if words else 0.0,
        "series": series,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("log")
    ap.add_argument("--course", required=True)
    ap.add_argument("--expect", action="append", default=[])
    ap.add_argument("--expect-first", action="append", default=[])
    args = ap.parse_args()

    with open(args.log, encoding="utf-8") as f:
        rows = [json.loads(line) for line in f if line.strip()]
    problems = []
    for r in rows:
        if r["course_id"] == args.course and r["problem_id"] not in problems:
            problems.append(r["problem_id"])

    ok = True
    stats = {p: recount(rows, args.course, p) for p in problems}
    for p, s in stats.items():
        print(f"{p}: attempted={s['attempted']} solved={s['solved']} "
              f"avg_submissions={rounded(s['avg_submissions'], 1)} ({s['avg_submissions']:.4f}) "
              f"avg_words={rounded(s['avg_words'], 0)} ({s['avg_words']:.4f}) "
              f"first=({s['series'][0][1]}, {s['series'][0][2]:.4f})")

    for spec in args.expect:
        p, values = spec.split("=")
        subs, solved, words = values.split(",")
        s = stats.get(p)
        got = (str(rounded(s["avg_submissions"], 1)), str(s["solved"]), str(rounded(s["avg_words"], 0))) if s else None
        if got != (subs, solved, words):
            print(f"MISMATCH {p}: expected ({subs}, {solved}, {words}) got {got}")
            ok = False
    for spec in args.expect_first:
        p, values = spec.split("=")
        submitters, words = values.split(",")
        s = stats.get(p)
        got = (str(s["series"][0][1]), str(rounded(s["series"][0][2], 0))) if s else None
        if got != (submitters, words):
            print(f"MISMATCH {p} first submission: expected ({submitters}, {words}) got {got}")
            ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
