"""Acceptance gate: ten pinned behavioral criteria, one reported line each.

Every test prints a PASS or FAIL line (visible even under capture) so the
suite output doubles as a checklist. Tolerances and runtime budgets are part
of the criteria and are asserted, not just observed.
"""

import contextlib
import json
import math
import time
from types import SimpleNamespace

import numpy as np
import pytest

from conftest import utc
from oracles import adjusted_rand_index, brute_force_dbi, lloyd_reference
from revloc.cli import main
from revloc.clustering import ConstraintSet, close_constraints, cop_kmeans
from revloc.errors import InfeasibleAssignmentError
from revloc.evaluation import dbi, ndcg_of_vector
from revloc.localization import CommitEntry, FilePair, dice_sim, interpolated_sim, rank_files
from revloc.segmentation import segment_atomic
from revloc.vsm import DfTable, pca_reduce, reconstruct


@contextlib.contextmanager
def criterion(capsys, num, label):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"\nFAIL: criterion {num:2d} - {label}")
        raise
    elapsed = time.perf_counter() - start
    with capsys.disabled():
        print(f"\nPASS: criterion {num:2d} - {label} ({elapsed:.1f}s)")


def weights_table(weights: dict) -> DfTable:
    vocab = tuple(sorted(weights))
    return DfTable(
        vocab=vocab,
        occurrence=tuple(0 for _ in vocab),
        df=tuple(float(weights[w]) for w in vocab),
    )


def test_criterion_01_constraints_always_honored(capsys):
    with criterion(capsys, 1, "every successful constrained run satisfies all pairs"):
        start = time.perf_counter()
        rng = np.random.default_rng(101)
        successes = 0
        for _ in range(200):
            m = int(rng.integers(4, 51))
            r = int(rng.integers(1, 6))
            k = int(rng.integers(2, min(m - 1, 6) + 1))
            points = rng.normal(size=(m, r))
            groups = rng.integers(0, k, size=m)
            must, cannot = [], []
            for _ in range(int(rng.integers(0, m // 2 + 1))):
                a, b = (int(x) for x in rng.integers(0, m, size=2))
                if a == b:
                    continue
                (must if groups[a] == groups[b] else cannot).append((a, b))
            constraints = ConstraintSet.from_pairs(must, cannot)
            try:
                got = cop_kmeans(points, k, constraints=constraints,
                                 seed=int(rng.integers(0, 1000)),
                                 max_iter=25, restarts=2)
            except InfeasibleAssignmentError:
                continue
            closed = close_constraints(constraints)
            for a, b in closed.must:
                assert got.labels[a] == got.labels[b], ("must", a, b)
            for a, b in closed.cannot:
                assert got.labels[a] != got.labels[b], ("cannot", a, b)
            successes += 1
        assert successes >= 100, f"only {successes}/200 runs converged"
        for trial in range(10):
            points = np.random.default_rng(trial).normal(size=(6, 2))
            clique = ConstraintSet.from_pairs([], [(0, 1), (0, 2), (1, 2)])
            with pytest.raises(InfeasibleAssignmentError):
                cop_kmeans(points, 2, constraints=clique, seed=trial)
        assert time.perf_counter() - start < 30.0


def test_criterion_02_unconstrained_equals_reference_lloyd(capsys):
    with criterion(capsys, 2, "no constraints reduces to plain Lloyd's k-means"):
        start = time.perf_counter()
        rng = np.random.default_rng(202)
        for _ in range(100):
            m = int(rng.integers(6, 26))
            r = int(rng.integers(1, 4))
            k = int(rng.integers(1, 6))
            seed = int(rng.integers(0, 10_000))
            points = rng.normal(size=(m, r)) * float(rng.uniform(0.5, 3.0))
            got = cop_kmeans(points, k, seed=seed, max_iter=40, restarts=2)
            want_labels, want_inertia = lloyd_reference(
                points, k, seed=seed, max_iter=40, restarts=2)
            assert list(got.labels) == list(want_labels)
            assert math.isclose(got.inertia, want_inertia,
                                rel_tol=1e-9, abs_tol=1e-12)
        assert time.perf_counter() - start < 10.0


def test_criterion_03_dbi_matches_brute_force(capsys):
    with criterion(capsys, 3, "DBI agrees with a brute-force oracle"):
        rng = np.random.default_rng(303)
        for _ in range(100):
            K = int(rng.integers(2, 9))
            m = int(rng.integers(max(2 * K, 10), 101))
            r = int(rng.integers(1, 5))
            points = rng.normal(size=(m, r)) * 2.0
            labels = np.concatenate([np.arange(K), rng.integers(0, K, size=m - K)])
            assert abs(dbi(points, labels) - brute_force_dbi(points, labels)) <= 1e-9
        square = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 2.0]])
        assert abs(dbi(square, [0, 0, 1, 1]) - 0.2) <= 1e-12


def test_criterion_04_ndcg_worked_example(capsys):
    with criterion(capsys, 4, "NDCG@5 of (1,0,1,0,1) matches the hand derivation"):
        got = ndcg_of_vector([1, 0, 1, 0, 1], 5)
        want = (1 + 1 / math.log2(4) + 1 / math.log2(6)) / (
            1 + 1 / math.log2(3) + 1 / math.log2(4))
        assert abs(got - want) <= 1e-6
        assert abs(want - 0.8854) < 1e-4


def test_criterion_05_segmentation_fidelity(capsys):
    with criterion(capsys, 5, "stem duplication and adversative truncation verbatim"):
        got = segment_atomic(
            "I wish there was a pattern lock feature and a camera shortcut "
            "for the lockscreen"
        )
        assert got == [
            "I wish there was a pattern lock feature for the lockscreen",
            "I wish there was a camera shortcut for the lockscreen",
        ]
        got = segment_atomic(
            "This app is good, but it is lacking a key feature for anyone "
            "who uses mailing lists: Reply-To-List"
        )
        assert got == [
            "it is lacking a key feature for anyone who uses mailing "
            "lists: Reply-To-List"
        ]


def test_criterion_06_interpolation_boundaries(capsys):
    with criterion(capsys, 6, "gamma boundaries and the history cutoff hold"):
        rng = np.random.default_rng(606)
        vocab = [f"w{i:02d}" for i in range(40)]
        review_time = utc(2023, 6, 1)
        for _ in range(100):
            df = weights_table({w: float(rng.uniform(0.2, 3.0)) for w in vocab})
            review = [str(w) for w in
                      rng.choice(vocab[:20], size=int(rng.integers(2, 8)), replace=False)]
            code = {str(w): 1 for w in
                    rng.choice(vocab, size=int(rng.integers(2, 12)), replace=False)}

            # no review word in any prior commit: pure code similarity
            other = [w for w in vocab if w not in review]
            cold_entries = tuple(
                CommitEntry(utc(2023, 1, 1 + j),
                            {str(w): 1 for w in rng.choice(other, size=3, replace=False)})
                for j in range(int(rng.integers(0, 3)))
            )
            score, gamma, length = interpolated_sim(
                review, FilePair("a/F.java", code, cold_entries), review_time, df)
            assert gamma == 0
            assert length == len(review)
            assert abs(score - dice_sim(review, code.keys(), df)) <= 1e-12

            # history covering every review word: pure commit similarity
            extra = [str(w) for w in rng.choice(vocab, size=4)]
            full_entries = (
                CommitEntry(utc(2023, 2, 1), {w: 1 for w in review + extra}),
            )
            score, gamma, length = interpolated_sim(
                review, FilePair("a/F.java", code, full_entries), review_time, df)
            assert gamma == length == len(review)
            assert abs(score - dice_sim(review, set(review) | set(extra), df)) <= 1e-12

            # commits at or after the review instant never move the score
            mixed = cold_entries + (
                CommitEntry(utc(2023, 3, 1), {review[0]: 1}),
            )
            base = interpolated_sim(
                review, FilePair("a/F.java", code, mixed), review_time, df)
            noise = (
                CommitEntry(review_time, {w: 1 for w in review}),
                CommitEntry(utc(2023, 7, 1),
                            {str(w): 2 for w in rng.choice(vocab, size=5)}),
            )
            noisy = interpolated_sim(
                review, FilePair("a/F.java", code, mixed + noise), review_time, df)
            assert noisy == base


def test_criterion_07_df_scale_invariance(capsys):
    with criterion(capsys, 7, "rescaling df changes no similarity or ranking order"):
        rng = np.random.default_rng(707)
        vocab = [f"t{i:02d}" for i in range(30)]
        for _ in range(50):
            df = weights_table({w: float(rng.uniform(0.1, 4.0)) for w in vocab})
            scaled = df.rescaled(float(rng.uniform(0.05, 20.0)))
            review = [str(w) for w in
                      rng.choice(vocab, size=int(rng.integers(2, 9)), replace=False)]
            files = []
            for f in range(int(rng.integers(2, 7))):
                code = {str(w): 1 for w in
                        rng.choice(vocab, size=int(rng.integers(1, 10)), replace=False)}
                entries = tuple(
                    CommitEntry(utc(2023, 1, 1 + e),
                                {str(w): 1 for w in
                                 rng.choice(vocab, size=int(rng.integers(1, 6)),
                                            replace=False)})
                    for e in range(int(rng.integers(0, 3)))
                )
                files.append(FilePair(f"src/F{f}.java", code, entries))
                assert math.isclose(
                    dice_sim(review, code.keys(), df),
                    dice_sim(review, code.keys(), scaled),
                    rel_tol=1e-9, abs_tol=1e-12)
                bag = set().union(*(e.words.keys() for e in entries)) if entries else set()
                assert math.isclose(
                    dice_sim(review, bag, df),
                    dice_sim(review, bag, scaled),
                    rel_tol=1e-9, abs_tol=1e-12)
            base = rank_files(review, files, df, review_time=None)
            other = rank_files(review, files, scaled, review_time=None)
            assert [p for p, _ in base.entries] == [p for p, _ in other.entries]
            assert (base.gamma, base.review_len) == (other.gamma, other.review_len)
            for (_, s1), (_, s2) in zip(base.entries, other.entries):
                assert math.isclose(s1, s2, rel_tol=1e-9, abs_tol=1e-12)


TOPICS = (
    ("alarm", "clock", "snooze", "morning", "ring", "wake"),
    ("theme", "color", "dark", "palette", "icon", "contrast"),
    ("sync", "backup", "cloud", "upload", "restore", "account"),
)
TOPIC_FILES = ("src/AlarmService.java", "src/ThemeManager.java", "src/SyncEngine.java")


def plant_corpus(root):
    """Build a 30-review, 3-topic corpus with a matching repo and history."""
    reviews_path = root / "reviews.jsonl"
    rows = []
    for i in range(30):
        topic = TOPICS[i // 10]
        words = [topic[(i + j) % len(topic)] for j in range(4)]
        rows.append({"id": f"r{i:02d}", "app_id": "demo",
                     "text": " ".join(words) + ".",
                     "timestamp": "2023-06-15T00:00:00Z",
                     "category": "feature_request"})
    reviews_path.write_text(
        "".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")

    repo = root / "repo"
    (repo / "src").mkdir(parents=True)
    for topic, rel in zip(TOPICS, TOPIC_FILES):
        stem = rel.rsplit("/", 1)[1].removesuffix(".java")
        body = (f"/** {' '.join(topic)} */\n"
                f"class {stem} {{ void {topic[0]}{topic[1].title()}() {{ }} }}\n")
        (repo / rel).write_text(body, encoding="utf-8")

    commits_path = root / "commits.jsonl"
    commit_rows = []
    for t, (topic, rel) in enumerate(zip(TOPICS, TOPIC_FILES)):
        for j in range(2):
            commit_rows.append({
                "sha": f"c{t}{j}",
                "title": f"Fix {topic[j]} {topic[j + 1]} handling",
                "description": " ".join(topic),
                "timestamp": f"2023-0{j + 1}-10T00:00:00Z",
                "files": [rel],
            })
    commits_path.write_text(
        "".join(json.dumps(r) + "\n" for r in commit_rows), encoding="utf-8")

    truth_path = root / "truth.json"
    truth_path.write_text(json.dumps(
        {f"r{i:02d}": [TOPIC_FILES[i // 10]] for i in range(30)}), encoding="utf-8")

    constraints_path = root / "constraints.json"
    constraints_path.write_text(json.dumps({
        "must": [["r00:0", "r01:0"], ["r03:0", "r04:0"], ["r10:0", "r11:0"],
                 ["r13:0", "r14:0"], ["r20:0", "r21:0"]],
        "cannot": [["r00:0", "r10:0"], ["r00:0", "r20:0"], ["r10:0", "r20:0"],
                   ["r05:0", "r15:0"], ["r15:0", "r25:0"]],
    }), encoding="utf-8")

    out_dir = root / "pre"
    assert main(["preprocess", "--reviews", str(reviews_path),
                 "--out-dir", str(out_dir)]) == 0
    return SimpleNamespace(
        docs=out_dir / "docs.jsonl", commits=commits_path, repo=repo,
        truth=truth_path, constraints=constraints_path)


def test_criterion_08_planted_topics_end_to_end(tmp_path, capsys):
    with criterion(capsys, 8, "planted 3-topic corpus: ARI >= 0.8 and Top-1 = 1.0"):
        start = time.perf_counter()
        corpus = plant_corpus(tmp_path)
        docs = [json.loads(l) for l in corpus.docs.read_text().splitlines()]
        assert len(docs) == 30
        planted = [int(row["doc_id"][1:3]) // 10 for row in docs]

        scores = []
        for seed in range(10):
            out = tmp_path / f"clusters_{seed}.json"
            assert main(["cluster", "--docs", str(corpus.docs),
                         "--out", str(out), "--k", "3", "--seed", str(seed),
                         "--constraints", str(corpus.constraints)]) == 0
            got = [row["cluster"] for row in json.loads(out.read_text())]
            scores.append(adjusted_rand_index(planted, got))
        mean_ari = sum(scores) / len(scores)
        assert mean_ari >= 0.8, f"mean ARI {mean_ari:.3f} over seeds 0..9"

        rankings = tmp_path / "rankings.jsonl"
        assert main(["localize", "--docs", str(corpus.docs),
                     "--commits", str(corpus.commits),
                     "--repo", str(corpus.repo),
                     "--out", str(rankings)]) == 0
        for line in rankings.read_text().splitlines():
            row = json.loads(line)
            rid = row["review_id"].partition(":")[0]
            expected = TOPIC_FILES[int(rid[1:3]) // 10]
            assert row["entries"][0]["path"] == expected, rid

        report_path = tmp_path / "report.json"
        assert main(["evaluate", "--rankings", str(rankings),
                     "--truth", str(corpus.truth),
                     "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["top_k"]["1"] == 1.0
        assert time.perf_counter() - start < 60.0


def test_criterion_09_pca_checks(capsys):
    with criterion(capsys, 9, "PCA: orthonormal, monotone reconstruction, isometry"):
        rng = np.random.default_rng(909)
        base = rng.normal(size=(12, 7)) * rng.uniform(0.5, 3.0, size=7)
        errors = []
        for r in range(1, 8):
            red = pca_reduce(base, r=r)
            comps = red.components
            assert np.allclose(comps @ comps.T, np.eye(len(comps)), atol=1e-9)
            errors.append(float(np.linalg.norm(reconstruct(red) - base)))
        for lower_r, higher_r in zip(errors, errors[1:]):
            assert higher_r <= lower_r + 1e-9
        assert errors[-1] <= 1e-6
        full = pca_reduce(base, r=7)
        d_orig = np.linalg.norm(base[:, None, :] - base[None, :, :], axis=2)
        d_red = np.linalg.norm(
            full.points[:, None, :] - full.points[None, :, :], axis=2)
        assert np.allclose(d_red, d_orig, atol=1e-6)


def test_criterion_10_artifact_determinism(tmp_path, capsys):
    with criterion(capsys, 10, "fixed seed and inputs give byte-identical artifacts"):
        corpus = plant_corpus(tmp_path)
        outputs = []
        for run in ("one", "two"):
            out_dir = tmp_path / run
            out_dir.mkdir()
            clusters = out_dir / "clusters.json"
            rankings = out_dir / "rankings.jsonl"
            assert main(["cluster", "--docs", str(corpus.docs),
                         "--out", str(clusters), "--k", "3", "--seed", "4",
                         "--constraints", str(corpus.constraints)]) == 0
            assert main(["localize", "--docs", str(corpus.docs),
                         "--commits", str(corpus.commits),
                         "--repo", str(corpus.repo),
                         "--out", str(rankings)]) == 0
            outputs.append((clusters.read_bytes(),
                            clusters.with_suffix(".meta.json").read_bytes(),
                            rankings.read_bytes()))
        assert outputs[0] == outputs[1]
