"""End-to-end acceptance gate.

Nine criteria, one test each, every tolerance stated inline. Criteria 1-3
share ten seeded 1000x1000 rank-100 runs through a module fixture; the rest
build their own instances. Each test prints a single
"criterion N: PASS|FAIL - detail" line.
"""

import json
import time

import numpy as np
import pytest

from krysvd import (BidiagConfig, FixedRankPoint, RsgdConfig, RsvdConfig,
                    TangentVector, bench, bidiagonal_matrix, bidiagonalize,
                    dense_svd_oracle, embed_point, embed_tangent, estimate_rank,
                    fsvd, gaussian_matrix, hinge_grad, low_rank_synth,
                    project_tangent, retract, rsvd, synth_task, train,
                    truncate_to_rank, PairBatch)
from krysvd.cli import argv_from_config, main, read_embedded_config

N_SEEDS = 10
SIZE = 1000
RANK = 100
R_EXTRACT = 20


def _report(cid: int, ok: bool, detail: str):
    line = f"criterion {cid}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def thousand_runs():
    """Ten seeded 1000x1000 rank-100 instances, everything criteria 1-3 need."""
    runs = []
    for seed in range(N_SEEDS):
        A = low_rank_synth(SIZE, SIZE, RANK, seed=seed)
        cfg = BidiagConfig(k_max=SIZE, seed=seed)

        t0 = time.perf_counter()
        rep = estimate_rank(A, cfg=cfg)
        rank_seconds = time.perf_counter() - t0

        full_def = fsvd(A, k=SIZE, r=SIZE, cfg=cfg)
        full_raw = fsvd(A, k=SIZE, r=SIZE, cfg=cfg, orthonormalize_u=False)
        sketch = rsvd(A, RsvdConfig(target_rank=R_EXTRACT, oversampling=10,
                                    seed=seed))
        runs.append({
            "seed": seed,
            "rank": rep.rank,
            "k_prime": rep.k_prime,
            "seconds": rank_seconds,
            "err_rel_def": bench.err_rel(A, full_def.top(R_EXTRACT)),
            "err_rel_raw": bench.err_rel(A, full_raw.top(R_EXTRACT)),
            "err_rel_rsvd": bench.err_rel(A, sketch),
            "err_res_fsvd_full": bench.err_res(A, full_def),
            "err_res_rsvd": bench.err_res(A, sketch),
        })
    return runs


def test_criterion_1_rank_recovery(thousand_runs):
    exact = sum(r["rank"] == RANK for r in thousand_runs)
    k_ok = all(100 <= r["k_prime"] <= 110 for r in thousand_runs)
    t_max = max(r["seconds"] for r in thousand_runs)
    ok = exact >= 9 and k_ok and t_max <= 10.0
    _report(1, ok, f"rank==100 in {exact}/10 seeds, "
                   f"k' range [{min(r['k_prime'] for r in thousand_runs)}, "
                   f"{max(r['k_prime'] for r in thousand_runs)}], "
                   f"slowest run {t_max:.2f}s (limit 10s)")


def test_criterion_2_relative_error(thousand_runs):
    tol_def = max(r["err_rel_def"] for r in thousand_runs)
    tol_raw = max(r["err_rel_raw"] for r in thousand_runs)
    ordered = all(r["err_rel_raw"] <= r["err_rel_rsvd"] for r in thousand_runs)
    ok = tol_def <= 1e-12 and tol_raw <= 1e-12 and ordered
    _report(2, ok, f"max err_rel {tol_def:.2e} (orthonormalized recovery) / "
                   f"{tol_raw:.2e} (raw recovery), both <= 1e-12; "
                   f"fsvd <= rsvd (raw recovery) on "
                   f"{sum(r['err_rel_raw'] <= r['err_rel_rsvd'] for r in thousand_runs)}/10 seeds")


def test_criterion_3_residual_gap(thousand_runs):
    f_max = max(r["err_res_fsvd_full"] for r in thousand_runs)
    s_min = min(r["err_res_rsvd"] for r in thousand_runs)
    ok = f_max <= 1e-6 and s_min >= 1e2
    _report(3, ok, f"fsvd full-capture err_res max {f_max:.2e} <= 1e-6, "
                   f"rsvd(r=20, p=10) err_res min {s_min:.2e} >= 1e2")


def test_criterion_4_triplet_quality():
    A = low_rank_synth(200, 200, 100, seed=0)
    oracle = dense_svd_oracle(A).top(50)
    f = fsvd(A, k=200, r=50, cfg=BidiagConfig(k_max=200, seed=0))
    s = rsvd(A, RsvdConfig(target_rank=50, oversampling=10, seed=0))
    qf = bench.triplet_quality(oracle, f, "fsvd")
    qs = bench.triplet_quality(oracle, s, "rsvd")
    sig_dev = float(np.max(np.abs(qf.sigma_method - qf.sigma_oracle)))
    ok = (np.min(qf.q) >= 0.999 and sig_dev <= 1e-10 * oracle.sigma[0]
          and np.min(qs.q) < 0.99)
    _report(4, ok, f"fsvd min q {np.min(qf.q):.6f} >= 0.999, "
                   f"sigma dev {sig_dev:.2e} <= 1e-10*sigma_1, "
                   f"rsvd min q {np.min(qs.q):.2e} < 0.99")


def test_criterion_5_oracle_equivalence():
    rng = np.random.default_rng(2026)
    t0 = time.perf_counter()
    worst_sig, worst_angle = 0.0, 0.0
    for case in range(50):
        m = int(rng.integers(20, 201))
        n = int(rng.integers(20, 201))
        l = int(rng.integers(1, min(60, min(m, n)) + 1))
        A = low_rank_synth(m, n, l, seed=1000 + case)
        psvd = fsvd(A, k=min(m, n), r=l,
                    cfg=BidiagConfig(k_max=min(m, n), seed=1000 + case))
        ref = dense_svd_oracle(A)
        assert psvd.sigma.shape[0] == l
        worst_sig = max(worst_sig, float(np.max(
            np.abs(psvd.sigma - ref.sigma[:l]) / ref.sigma[:l])))
        for X, Y in ((psvd.U, ref.U[:, :l]), (psvd.V, ref.V[:, :l])):
            cosines = np.linalg.svd(X.T @ Y, compute_uv=False)
            angles = np.arccos(np.clip(cosines, -1.0, 1.0))
            worst_angle = max(worst_angle, float(np.max(angles)))
    elapsed = time.perf_counter() - t0
    ok = worst_sig <= 1e-10 and worst_angle <= 1e-6 and elapsed <= 60.0
    _report(5, ok, f"50 cases: worst sigma rel err {worst_sig:.2e} <= 1e-10, "
                   f"worst principal angle {worst_angle:.2e} <= 1e-6, "
                   f"suite {elapsed:.1f}s <= 60s")


def test_criterion_6_bidiag_invariants():
    rng = np.random.default_rng(77)
    specs = [(2000, 1000, 250)]
    while len(specs) < 20:
        m = int(rng.integers(200, 2001))
        n = int(rng.integers(100, 1001))
        l = int(rng.integers(5, min(250, min(m, n) - 5) + 1))
        specs.append((m, n, l))
    worst_q = worst_p = worst_fact = 0.0
    k_max_seen = 0
    for i, (m, n, l) in enumerate(specs):
        A = low_rank_synth(m, n, l, seed=500 + i)
        st = bidiagonalize(A, BidiagConfig(k_max=min(300, m, n), seed=500 + i))
        k_max_seen = max(k_max_seen, st.k_prime)
        B = bidiagonal_matrix(st)
        if st.Q.shape[1] == st.k_prime:
            B = B[: st.k_prime, :]
        worst_q = max(worst_q, float(np.max(np.abs(
            st.Q.T @ st.Q - np.eye(st.Q.shape[1])))))
        worst_p = max(worst_p, float(np.max(np.abs(
            st.P.T @ st.P - np.eye(st.P.shape[1])))))
        worst_fact = max(worst_fact, float(
            np.linalg.norm(A @ st.P - st.Q @ B) / np.linalg.norm(A)))
    ok = worst_q <= 1e-10 and worst_p <= 1e-10 and worst_fact <= 1e-10 \
        and k_max_seen <= 300
    _report(6, ok, f"20 instances up to 2000x1000: max |Q'Q-I| {worst_q:.2e}, "
                   f"max |P'P-I| {worst_p:.2e}, max |AP-QB|/|A| {worst_fact:.2e}, "
                   f"all <= 1e-10; max k' {k_max_seen} <= 300")


def _fd_point(seed):
    """One generic check point: factored W, batch, gradient, direction."""
    rng = np.random.default_rng(seed)
    d1, d2, r, b = 20, 15, 3, 30
    W = truncate_to_rank(gaussian_matrix(d1, d2, seed=seed), r,
                         inner_k=d2, backend="dense", seed=seed)
    batch = PairBatch(rng.standard_normal((b, d1)),
                      rng.standard_normal((b, d2)),
                      np.where(rng.standard_normal(b) > 0, 1.0, -1.0))
    from krysvd import scores
    margin = batch.y * scores(W, batch)
    if np.min(np.abs(margin - 1.0)) < 1e-3:
        return None  # too close to a hinge kink, redraw
    loss, G = hinge_grad(batch, W)
    if not np.any(G):
        return None  # flat spot, no direction to test
    xi = project_tangent(W, rng.standard_normal((d1, d2)))
    emb = embed_tangent(W, xi)
    xi = xi.scaled(1.0 / np.linalg.norm(emb))
    return W, batch, G, xi


def test_criterion_7_gradient_and_retraction():
    # finite differences of the batch loss along retraction curves against
    # the inner product with the projected gradient
    points, seed = [], 0
    while len(points) < 10:
        pt = _fd_point(3000 + seed)
        seed += 1
        if pt is not None:
            points.append(pt)
    h = 1e-6
    worst_rel = 0.0
    for W, batch, G, xi in points:
        lp = hinge_grad(batch, retract(W, xi, h, backend="dense"))[0]
        lm = hinge_grad(batch, retract(W, xi, -h, backend="dense"))[0]
        fd = (lp - lm) / (2 * h)
        analytic = float(np.sum(G * embed_tangent(W, xi)))
        worst_rel = max(worst_rel, abs(fd - analytic) / max(abs(analytic), 1e-12))

    W, _, G, xi = points[0]
    ts = np.array([1e-1, 1e-2, 1e-3])
    errs = [np.linalg.norm(embed_point(retract(W, xi, float(t), seed=1))
                           - (embed_point(W) + t * embed_tangent(W, xi)))
            for t in ts]
    slope = float(np.polyfit(np.log(ts), np.log(errs), 1)[0])
    ok = worst_rel <= 1e-5 and slope >= 1.9
    _report(7, ok, f"10 FD points: worst relative mismatch {worst_rel:.2e} "
                   f"<= 1e-5; retraction log-log slope {slope:.3f} >= 1.9")


def test_criterion_8_similarity_training():
    out = bench.cmd_rsl(64, 32, 5, ["fsvd"], steps=2000, eta=0.3, batch=32,
                        seed=0, n_seeds=3, modes=("default",), r_true=5,
                        n_train=2000, n_test=1000, eval_every=0)
    accs = sorted(row["final_accuracy"] for row in out["summary"])
    median_acc = accs[1]

    task = synth_task(512, 512, 5, n_train=2000, n_test=1000, seed=0)
    cfg = RsgdConfig(eta=0.3, rank=5, n_steps=60, batch_size=32, seed=0)
    _, hist_f = train(task.train, cfg, svd_backend="fsvd", test=task.test,
                      eval_every=0)
    _, hist_d = train(task.train, cfg, svd_backend="dense", test=task.test,
                      eval_every=0)
    step_f = float(np.median(hist_f.seconds))
    step_d = float(np.median(hist_d.seconds))
    acc_gap = abs(hist_f.final_accuracy - hist_d.final_accuracy)
    ok = median_acc >= 0.90 and step_f < step_d and acc_gap <= 0.01
    _report(8, ok, f"64x32 3-seed median accuracy {median_acc:.3f} >= 0.90 "
                   f"(all: {', '.join(f'{a:.3f}' for a in accs)}); 512x512 "
                   f"per-step median fsvd {step_f * 1e3:.2f}ms < dense "
                   f"{step_d * 1e3:.2f}ms, accuracy gap {acc_gap:.4f} <= 0.01")


def _scrub_timing(doc):
    if isinstance(doc, dict):
        return {k: _scrub_timing(v) for k, v in doc.items() if "seconds" not in k}
    if isinstance(doc, list):
        return [_scrub_timing(v) for v in doc]
    return doc


def _strip_timing_text(text):
    lines = text.strip().split("\n")
    out, table_at = [], None
    for ln in lines:
        if ln.startswith("# "):
            tag, _, body = ln[2:].partition(": ")
            out.append(f"# {tag}: " + json.dumps(_scrub_timing(json.loads(body)),
                                                 separators=(",", ":")))
        else:
            if table_at is None:
                table_at = len(out)
            out.append(ln)
    cols = out[table_at].split(",")
    keep = [i for i, c in enumerate(cols) if "seconds" not in c]
    for j in range(table_at, len(out)):
        cells = out[j].split(",")
        out[j] = ",".join(cells[i] for i in keep)
    return "\n".join(out)


def test_criterion_9_cli_determinism(tmp_path):
    commands = {
        "rank": ["rank", "--sizes", "40x30", "--rank-true", "6",
                 "--repeats", "1", "--seed", "11"],
        "svd": ["svd", "--size", "50x40", "--rank-true", "8", "--r", "5",
                "--repeats", "1", "--seed", "12"],
        "compare": ["compare", "--sizes", "50x40", "--rank-true", "8",
                    "--r", "4", "--repeats", "1", "--seed", "13"],
        "triplets": ["triplets", "--size", "50x40", "--rank-true", "8",
                     "--r", "4", "--seed", "14"],
        "rsl": ["rsl", "--d1", "10", "--d2", "8", "--rank", "2", "--r-true",
                "2", "--steps", "5", "--batch", "4", "--n-train", "40",
                "--n-test", "20", "--eval-every", "2", "--seed", "15"],
    }
    failures = []
    for name, argv in commands.items():
        first = tmp_path / f"{name}_a.csv"
        second = tmp_path / f"{name}_b.csv"
        assert main(argv + ["--out", str(first)]) == 0
        replay = argv_from_config(read_embedded_config(first))
        assert main(replay + ["--out", str(second)]) == 0
        if _strip_timing_text(first.read_text()) != \
                _strip_timing_text(second.read_text()):
            failures.append(name)
    ok = not failures
    _report(9, ok, "replay from embedded config byte-identical after "
                   "dropping timing fields for rank, svd, compare, triplets, "
                   "rsl" + (f"; MISMATCH: {failures}" if failures else ""))
