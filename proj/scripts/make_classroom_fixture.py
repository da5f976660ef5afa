#!/usr/bin/env python3
"""Builds fixtures/classroom_log.jsonl, a synthetic classroom submission log.

The log is constructed so that the intro-python course summarizes to these
target statistics:

    problem   avg submissions   students solved   avg words
    hello          2.7                43              13
    ages           2.2                32              38
    judges         6.4                19              36

plus 54 students making a first submission to problem 1 with an average
first-prompt length of 15 words. "avg submissions" is taken over every
student who attempted the problem. The construction is deterministic
(fixed seed), so re-running reproduces the file byte for byte.

    python3 scripts/make_classroom_fixture.py [output.jsonl]
"""
import json
import random
import sys
from pathlib import Path

PREAMBLE = ("You are a code generator. Respond with a single complete Python program only. "
            "Output no explanations, no comments, and no text outside one fenced code block.")
PREFIX = "Write a Python program that"
COURSE = "intro-python"
MODEL = "gpt-3.5-turbo"

# problem id, attempters, solvers, total submissions, mean words, tests, max attempts
PLAN = [
    ("hello", 54, 43, 146, 13, 3, 8),
    ("ages", 37, 32, 80, 38, 5, 8),
    ("judges", 25, 19, 160, 36, 3, 16),
]
FIRST_WORDS_HELLO = 15  # mean length of the first prompt on problem 1

VOCAB = ("asks the user to enter their name and then prints a greeting message that says hello "
         "followed by name input reads age number prints category child teenager adult if less "
         "than thirteen between nineteen otherwise takes five decimal numbers separated by spaces "
         "removes highest lowest value calculates average of remaining three rounded two places "
         "output result").split()


def split_total(rng, n, total, low, high):
    """n integers in [low, high] summing to total."""
    assert n * low <= total <= n * high
    parts = [low] * n
    rest = total - n * low
    while rest:
        i = rng.randrange(n)
        if parts[i] < high:
            parts[i] += 1
            rest -= 1
    return parts


def prompt_text(rng, words):
    return " ".join(rng.choice(VOCAB) for _ in range(words))


def record(rng, sid, problem, index, text, passed, tests, created_at):
    code = "print('attempt')" if not passed else "print('solution')"
    verdicts = []
    for t in range(tests):
        ok = passed or t > 0
        verdicts.append({"test_index": t, "passed": ok,
                         "actual": "expected" if ok else "something else",
                         "expected": "expected", "outcome_class": "ok"})
    return {
        "submission_id": "%032x" % rng.getrandbits(128),
        "session_id": sid,
        "course_id": COURSE,
        "problem_id": problem,
        "submission_index": index,
        "student_text": text,
        "rendered_prompt": PREAMBLE + "\n\n" + PREFIX + " " + text,
        "responses": [{"raw_text": "```python\n" + code + "\n```", "model_id": MODEL,
                       "variant_index": 0, "latency_ms": 900 + rng.randrange(1200)}],
        "extracted_source": code,
        "rejected_generations": 0,
        "outcome": {"passed_all": passed, "first_failure": None if passed else 0,
                    "verdicts": verdicts},
        "created_at": created_at,
    }


def build():
    rng = random.Random(20230717)
    students = ["%032x" % rng.getrandbits(128) for _ in range(54)]
    clock = 1689552000000  # 2023-07-17T00:00:00Z
    records = []
    for problem, attempters, solvers, total, mean_words, tests, cap in PLAN:
        sessions = students[:attempters]
        counts = split_total(rng, attempters, total, 1, cap)
        word_total = mean_words * total
        if problem == "hello":
            first = split_total(rng, attempters, FIRST_WORDS_HELLO * attempters, 8, 24)
            later = split_total(rng, total - attempters, word_total - sum(first), 4, 20)
        else:
            everything = split_total(rng, total, word_total, 10, 70)
            first, later = everything[:attempters], everything[attempters:]
        later_iter = iter(later)
        solved = set(rng.sample(range(attempters), solvers))
        for s, (sid, n) in enumerate(zip(sessions, counts)):
            for k in range(1, n + 1):
                words = first[s] if k == 1 else next(later_iter)
                clock += 1000 * (20 + rng.randrange(90))
                passed = s in solved and k == n
                records.append(record(rng, sid, problem, k, prompt_text(rng, words), passed, tests, clock))
    return records


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else \
        Path(__file__).resolve().parent.parent / "fixtures" / "classroom_log.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as f:
        for r in build():
            f.write(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
