"""Acceptance criteria A1-A9.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
each becomes a test and a PASS/FAIL line is printed in the terminal
summary; ``python3 tests/test_acceptance.py`` prints the same lines.
"""

import json
import math
import random
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import pca_oracle, privacy_oracle, ridge_gd_oracle  # noqa: E402

from cotsynth.cli import main as cli_main  # noqa: E402
from cotsynth.corpus import Split, load_corpus, select_split  # noqa: E402
from cotsynth.cot_pipeline import load_records, run_generation, summarize_many  # noqa: E402
from cotsynth.embedding_store import EmbeddingProvider, EmbeddingStore, EmbeddingVector  # noqa: E402
from cotsynth.errors import ParseError  # noqa: E402
from cotsynth.evaluation import (  # noqa: E402
    COMBINED,
    REAL_ONLY,
    SYNTHETIC_ONLY,
    fit_ridge,
    histogram_report,
    labeled_records,
    labeled_summaries,
    mae,
    min_distance_report,
    pca_2d,
    rmse,
    utility_experiment,
)
from cotsynth.fixtures import imbalanced_sessions, write_corpus  # noqa: E402
from cotsynth.inference import ChatClient, EndpointConfig, GenerationParams  # noqa: E402
from cotsynth.mock_server import MockChatServer, Template  # noqa: E402
from cotsynth.outputs import parse_model_json  # noqa: E402
from cotsynth.prompt_kit import (  # noqa: E402
    ItemKind,
    SamplingMode,
    SamplingStrategy,
    render_summary_prompt,
    render_synthesis_prompt,
    severity_description,
)

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"
SEED = 7

# regression values from the first run of A5/A6 at seed 7
A5_PINNED = {REAL_ONLY: 4.9441, SYNTHETIC_ONLY: 2.6912, COMBINED: 2.8794}
A6_PINNED = {"real": math.inf, "combined": 17.0}

RESULTS: dict[str, tuple[bool, str, float]] = {}


def vecs(rows):
    return [EmbeddingVector(str(i), np.asarray(r, dtype=float)) for i, r in enumerate(rows)]


def a1():
    cases = [([2, 5], [1, 3], math.sqrt(2.5), 1.5), ([4], [1], 3.0, 3.0), ([1, 2, 3], [1, 2, 3], 0.0, 0.0),
             ([0, 0, 0, 0], [1, -1, 1, -1], 1.0, 1.0), ([10, 0], [7, 4], math.sqrt(12.5), 3.5),
             ([0.5, 1.5, 2.5], [0, 0, 0], math.sqrt(8.75 / 3), 1.5)]
    ok = all(abs(rmse(p, t) - r) <= 1e-9 and abs(mae(p, t) - m) <= 1e-9 for p, t, r, m in cases)
    ok &= abs(rmse([2, 5], [1, 3]) - 1.5811388) < 1e-7
    rng = random.Random(SEED)
    for i in range(1000):
        n = rng.randint(1, 10)
        p = [rng.uniform(-5, 5) for _ in range(n)]
        t = list(p) if i % 2 == 0 else [x + (rng.choice([-1, 1]) * 10 ** rng.randint(-12, 1) if j == rng.randrange(n) else 0)
                                      for j, x in enumerate(p)]
        ok &= (rmse(p, t) == 0.0) == (p == t)
    return ok, f"{len(cases)} pinned cases, 1000 random pairs"


def a2():
    rng = random.Random(SEED)
    worst = worst_orth = 0.0
    for _ in range(50):
        rows = [[rng.gauss(0, 1) for _ in range(5)] for _ in range(8)]
        pts, ratios, basis = pca_oracle(rows)
        rep = pca_2d(vecs(rows), ["real"] * 8)
        got = np.array([[p[2], p[3]] for p in rep.points])
        worst = max(worst, np.max(np.abs(got - np.array(pts))), np.max(np.abs(rep.component_basis - np.array(basis))),
                    np.max(np.abs(np.array(rep.explained_variance_ratio) - ratios)))
        B = rep.component_basis
        worst_orth = max(worst_orth, np.max(np.abs(B @ B.T - np.eye(2))))
    col = pca_2d(vecs([[0, 0], [1, 1], [2, 2], [3, 3]]), ["real"] * 4).explained_variance_ratio
    ok = worst <= 1e-6 and worst_orth <= 1e-9 and abs(col[0] - 1) < 1e-12 and abs(col[1]) < 1e-12
    return ok, f"max |diff| {worst:.2e}, orthonormality error {worst_orth:.2e}, collinear {col}"


def a3():
    rng = random.Random(SEED)
    exact = inv = trans = True
    for _ in range(100):
        d = rng.randint(1, 32)
        base = [[rng.uniform(-2, 2) for _ in range(d)] for _ in range(rng.randint(2, 64))]
        query = [[rng.uniform(-2, 2) for _ in range(d)] for _ in range(rng.randint(1, 64))]
        rep = min_distance_report(vecs(base), vecs(query))
        exact &= (rep.min_dist, rep.avg_min_dist) == privacy_oracle(base, query)
        rr = min_distance_report(vecs(base), vecs(base), exclude_self=True)
        exact &= (rr.min_dist, rr.avg_min_dist) == privacy_oracle(base, base, exclude_self=True)
        inv &= 0 <= rep.min_dist <= rep.avg_min_dist and 0 <= rr.min_dist <= rr.avg_min_dist
        shift = [rng.uniform(-50, 50) for _ in range(d)]
        moved = min_distance_report(vecs([[a + s for a, s in zip(r, shift)] for r in base]),
                                    vecs([[a + s for a, s in zip(r, shift)] for r in query]))
        trans &= abs(moved.min_dist - rep.min_dist) <= 1e-9 and abs(moved.avg_min_dist - rep.avg_min_dist) <= 1e-9
    tri = min_distance_report(vecs([[0, 0]]), vecs([[3, 4]]))
    ok = exact and inv and trans and (tri.min_dist, tri.avg_min_dist) == (5.0, 5.0)
    return ok, f"exact={exact} invariants={inv} translation={trans} 3-4-5={tri.min_dist}/{tri.avg_min_dist}"


def a4():
    tmp = Path(tempfile.mkdtemp())
    try:
        outputs = []
        for name in ("run1", "run2"):
            root = tmp / name
            shutil.copytree(DATA / "fixture5", root, ignore=shutil.ignore_patterns("out"))
            cfg = str(root / "config.json")
            codes = (cli_main(["ingest", "--config", cfg]),
                     cli_main(["generate", "--config", cfg, "--mock", "template", "--seed", str(SEED)]))
            if codes != (0, 0):
                return False, f"exit codes {codes}"
            outputs.append({f: (root / "out" / f).read_bytes()
                            for f in ("summaries.jsonl", "synthetic.jsonl", "run.json")})
        records = load_records(tmp / "run1" / "out" / "synthetic.jsonl")
        identical = outputs[0] == outputs[1]
        strict = all(not r.meta["repaired"] for r in records)
        in_range = all(0 <= r.target_phq8 <= 24 for r in records)
        bands = all(r.severity_text == severity_description(r.target_phq8) for r in records)
        table = [severity_description(s) for s in range(25)]
        expected = (["minimal or no depressive symptoms"] * 5 + ["mild depressive symptoms"] * 5
                    + ["moderate depression"] * 5 + ["moderately severe depression"] * 5
                    + ["severe depression"] * 5)
        ok = len(records) == 15 and identical and strict and in_range and bands and table == expected
        return ok, (f"{len(records)} records, byte-identical={identical}, strict={strict}, "
                    f"in range={in_range}, band table ok={table == expected}")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


def _a5_world():
    tmp = Path(tempfile.mkdtemp())
    try:
        paths = write_corpus(tmp, imbalanced_sessions(), seed=SEED)
        corpus = load_corpus(paths["corpus_dir"], paths["labels"], paths["splits"])
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    train = select_split(corpus, Split.TRAIN)
    test = select_split(corpus, Split.TEST)
    client = ChatClient(EndpointConfig("http://mock", "mock"),
                        transport=MockChatServer(Template()).transport(), env={})
    params = GenerationParams()
    low = [t for t in train if t.phq8 < 10]
    res = run_generation(low, 3, SamplingStrategy(SamplingMode.UNIFORM, SEED), client, params)
    real_pairs, _ = summarize_many(train, client, params)
    test_pairs, _ = summarize_many(test, client, params)
    client.close()
    return corpus, train, test, low, res, real_pairs, test_pairs


_WORLD = {}


def world():
    if not _WORLD:
        _WORLD["w"] = _a5_world()
    return _WORLD["w"]


def a5():
    corpus, train, test, low, res, real_pairs, test_pairs = world()
    labels = {t.session_id: t.phq8 for t in corpus}
    store = EmbeddingStore(EmbeddingProvider(dim=256))
    rep = utility_experiment(labeled_summaries(real_pairs, labels), labeled_records(res.records),
                             labeled_summaries(test_pairs, labels), store, 1.0)
    r = {row.config: row.rmse for row in rep.rows}
    shape = (sum(t.phq8 < 10 for t in train), sum(t.phq8 >= 10 for t in train), len(res.records), len(test))
    ordering = r[COMBINED] <= r[REAL_ONLY] and r[SYNTHETIC_ONLY] < r[REAL_ONLY]
    pinned = all(abs(r[k] - v) < 1e-4 for k, v in A5_PINNED.items())
    ok = ordering and pinned and shape == (40, 5, 120, 50)
    return ok, ("RMSE " + ", ".join(f"{k}={v:.4f}" for k, v in r.items())
                + f"; train low/high={shape[0]}/{shape[1]}, synthetic={shape[2]}, test={shape[3]}; pinned={pinned}")


def a6():
    _, train, _, _, res, _, _ = world()
    real = [t.phq8 for t in train]
    h = histogram_report({"real": real, "combined": real + [r.target_phq8 for r in res.records]})
    r_real, r_comb = h.max_min_ratio("real"), h.max_min_ratio("combined")
    ok = r_comb < r_real and r_real == A6_PINNED["real"] and r_comb == A6_PINNED["combined"]
    return ok, f"max/min ratio real={r_real}, combined={r_comb}"


A7_VALUE = "The participant reports low mood."


def a7_cases():
    obj = json.dumps({"synopsis": A7_VALUE})
    compact = json.dumps({"synopsis": A7_VALUE}, separators=(",", ":"))
    prefixes = ["Sure! ", "Here is the output:\n", "Certainly, here you go: ", "Output: ", "\n\n"]
    suffixes = [" Hope this helps.", "\nLet me know if you need more.", " (end)", ",", "\n"]
    cases = []
    for i, (p, s) in enumerate(zip(prefixes, suffixes)):
        cases += [p + obj + s, p + compact, compact + s]
    cases += [f"```json\n{obj}\n```", f"```\n{compact}\n```", f"Sure:\n```json\n{obj}\n```\nDone.",
              f"```JSON\n{compact}\n```"]
    cases += [compact + ",", obj + ",\n", compact + ", ", "Result: " + compact + ",",
              '{"synopsis":"' + A7_VALUE + '",}', '{"synopsis": "' + A7_VALUE + '" ,}',
              '```json\n{"synopsis":"' + A7_VALUE + '",}\n```']
    cases += ['{"Synopsis":"' + A7_VALUE + '"}', '  ' + compact + '  ', compact + compact,
              'noise {"note":"x"} ' + compact, "Answer -> " + compact + " <- answer",
              '{"synopsis":"' + A7_VALUE + '"}\n{"synopsis":"other"}', "﻿" + compact,
              "Sure! " + compact + " Note: {not json}", "text " + obj + " more text {", "[" + compact + "]",
              "Here it is.\n\n" + obj, "Okay. " + obj + " Thanks!", "```json\n" + compact + ",\n```",
              "Sure! " + compact + ", Hope this helps."]
    garbage = ["not json at all", "Sure! synopsis = the participant is sad", "{broken", "```\n```",
               '{"synopsis": }', "}{", "synopsis: The participant reports low mood.", ""]
    return cases, garbage


def a7():
    cases, garbage = a7_cases()
    ok_count = 0
    for raw in cases:
        try:
            ok_count += parse_model_json(raw, "synopsis").value == A7_VALUE
        except ParseError:
            pass
    garbage_err = 0
    for raw in garbage:
        try:
            parse_model_json(raw, "synopsis")
        except ParseError:
            garbage_err += 1
    rate = ok_count / len(cases)
    ok = len(cases) == 40 and rate >= 0.95 and garbage_err == len(garbage)
    return ok, f"{ok_count}/{len(cases)} recovered ({rate:.1%}), {garbage_err}/{len(garbage)} garbage cases error"


def a8():
    rng = random.Random(SEED)
    worst = 0.0
    for _ in range(20):
        X = [[rng.gauss(0, 1) for _ in range(3)] for _ in range(10)]
        y = [rng.gauss(0, 3) for _ in range(10)]
        lam = rng.choice([0.01, 0.1, 1.0, 10.0])
        worst = max(worst, float(np.max(np.abs(fit_ridge(X, y, lam) - ridge_gd_oracle(X, y, lam)))))
    Xn = np.array([[rng.gauss(0, 1) for _ in range(4)] for _ in range(15)])
    yn = np.array([rng.gauss(0, 1) for _ in range(15)])
    norms = [float(np.linalg.norm(fit_ridge(Xn, yn, lam)[1:])) for lam in (0.01, 0.1, 1, 10)]
    monotone = all(a >= b for a, b in zip(norms, norms[1:]))
    return worst <= 1e-4 and monotone, f"max |w - w_gd| {worst:.2e}, norms {[round(n, 4) for n in norms]}"


def a9():
    summary = render_summary_prompt(ItemKind.SYNOPSIS, "Participant: i moved here for work")
    synthesis = render_synthesis_prompt(ItemKind.SENTIMENT, "The participant is calm.", 17)
    golden = (summary == (GOLDEN / "summary_synopsis.txt").read_text(encoding="utf-8")
              and synthesis == (GOLDEN / "synthesis_sentiment_17.txt").read_text(encoding="utf-8"))
    needles = {"only as a reference": (synthesis,),
               "Do not use first-person pronouns.": (summary, synthesis),
               "compact JSON format on a single line": (summary, synthesis)}
    present = all(n in text for n, texts in needles.items() for text in texts)
    return golden and present, f"golden match={golden}, sentences present={present}"


CRITERIA = [("A1", a1, 1.0), ("A2", a2, 10.0), ("A3", a3, 5.0), ("A4", a4, 5.0), ("A5", a5, 60.0),
            ("A6", a6, 5.0), ("A7", a7, 1.0), ("A8", a8, 10.0), ("A9", a9, 1.0)]


def evaluate(name, fn, limit):
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < limit
    RESULTS[name] = (ok, f"{detail}; {elapsed:.2f}s (limit {limit:g}s)", elapsed)
    return ok, RESULTS[name][1]


def result_line(name):
    ok, detail, _ = RESULTS[name]
    return f"{name}: {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("name,fn,limit", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(name, fn, limit):
    if name == "A6":
        world()  # shared with A5; build outside A6's timer
    ok, detail = evaluate(name, fn, limit)
    print(result_line(name))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, fn, limit in CRITERIA:
        if name == "A6":
            world()
        evaluate(name, fn, limit)
        print(result_line(name))
        failed += not RESULTS[name][0]
    sys.exit(1 if failed else 0)
