"""Acceptance suite: seven go/no-go checks over the whole pipeline.

Each test prints exactly one PASS/FAIL line (bypassing capture) with the
measured quantities and wall time, then asserts. Tolerances and runtime
budgets are pinned in-line. Everything runs against the mock backend and
local fixtures; no network, no model weights.
"""

import json
import math
import os
from time import perf_counter

import numpy as np
import pytest
from click.testing import CliRunner

from fnpc.cli import main
from fnpc.core import (
    BinaryMask2D,
    BoundingBox,
    GrayImage2D,
    GrayVolume3D,
    PipelineConfig,
    ScalarMap2D,
)
from fnpc.correction import (
    false_negative_mask,
    false_positive_mask,
    fnpc_compose,
    run_fnpc_2d,
)
from fnpc.ensemble import (
    frequency_map,
    majority_mask,
    uncertainty_mask,
    uncertainty_raw,
)
from fnpc.fileio import save_gray_png, save_mask_png
from fnpc.harness import (
    CoarsenessLevel,
    LobeSpec,
    NotchSpec,
    PhantomSpec,
    box_from_mask,
    evaluate,
    make_phantom,
)
from fnpc.metrics import compute_report, dice
from fnpc.segmenter import MockBackend, MockOracleConfig
from fnpc.ss2v import run_ss2v, tight_box

from oracles import (
    oracle_dice,
    oracle_frequency,
    oracle_majority,
    oracle_surface_metrics,
    oracle_uncertainty,
)


def announce(capsys, index, label, ok, detail):
    status = "PASS" if ok else "FAIL"
    with capsys.disabled():
        print(f"\n[acceptance {index}/7] {label}: {status} ({detail})")


def random_mask(rng, h, w, p):
    return BinaryMask2D((rng.random((h, w)) < p).astype(np.uint8))


def test_criterion_1_ensemble_matches_enumeration_oracle(capsys):
    # 200 seeded ensembles of at most 7 masks on an 8x8 raster; frequency,
    # majority vote, and both uncertainty formulas must match per-pixel
    # enumeration to 1e-12 (frequency and vote are expected exactly equal).
    rng = np.random.Generator(np.random.PCG64(101))
    h = w = 8
    budget_s = 5.0
    max_err = 0.0
    mismatches = 0
    t0 = perf_counter()
    for i in range(200):
        n = int(rng.integers(1, 8))
        p = float(rng.uniform(0.15, 0.85))
        masks = [random_mask(rng, h, w, p) for _ in range(n)]
        grids = [m.data.tolist() for m in masks]
        t_ave = float(rng.choice([0.0, 0.3, 0.5, 0.7]))
        formula = "variance" if i % 2 == 0 else "entropy"
        f = frequency_map(masks)
        vote = majority_mask(f, t_ave)
        uc = uncertainty_raw(f, formula=formula, epsilon=1e-7)
        for y in range(h):
            for x in range(w):
                of = oracle_frequency(grids, x, y)
                max_err = max(max_err, abs(float(f.data[y, x]) - of))
                if int(vote.data[y, x]) != oracle_majority(grids, x, y, t_ave):
                    mismatches += 1
                ou = oracle_uncertainty(of, formula, 1e-7)
                max_err = max(max_err, abs(float(uc.data[y, x]) - ou))
    elapsed = perf_counter() - t0
    ok = max_err <= 1e-12 and mismatches == 0 and elapsed < budget_s
    announce(
        capsys, 1, "ensemble matches enumeration oracle", ok,
        f"200 ensembles, max |err| {max_err:.1e}, {mismatches} vote mismatches, "
        f"{elapsed:.2f}s < {budget_s:.0f}s",
    )
    assert max_err <= 1e-12
    assert mismatches == 0
    assert elapsed < budget_s


def test_criterion_2_correction_algebra(capsys):
    # 1000 seeded random (image, m_ave, uc_mask, windows) instances; the
    # correction masks must respect disjointness/containment, compose as
    # pure set algebra, vanish with an empty uncertainty mask, and grow
    # monotonically as their intensity windows widen (FN) or shrink (FP).
    rng = np.random.Generator(np.random.PCG64(202))
    h = w = 12
    budget_s = 10.0
    violations = 0
    empty = BinaryMask2D.zeros(w, h)
    t0 = perf_counter()
    for _ in range(1000):
        image = GrayImage2D(rng.integers(0, 256, (h, w), dtype=np.uint8))
        m_ave = random_mask(rng, h, w, float(rng.uniform(0.2, 0.8)))
        uc = random_mask(rng, h, w, float(rng.uniform(0.2, 0.8)))
        fn_lo, fp_lo = rng.uniform(0.0, 100.0, 2)
        fn_hi, fp_hi = rng.uniform(150.0, 255.0, 2)
        m_fn = false_negative_mask(image, m_ave, uc, fn_lo, fn_hi)
        m_fp = false_positive_mask(image, m_ave, uc, fp_lo, fp_hi)
        composed = fnpc_compose(m_ave, m_fn, m_fp)
        if np.any(m_fn.data & m_ave.data):
            violations += 1
        if np.any(m_fp.data & ~m_ave.data):
            violations += 1
        reference = (m_ave.data | m_fn.data) & ~m_fp.data
        if not np.array_equal(composed.data, reference):
            violations += 1
        fn0 = false_negative_mask(image, m_ave, empty, fn_lo, fn_hi)
        fp0 = false_positive_mask(image, m_ave, empty, fp_lo, fp_hi)
        if not (fn0.is_empty and fp0.is_empty):
            violations += 1
        elif not np.array_equal(fnpc_compose(m_ave, fn0, fp0).data, m_ave.data):
            violations += 1
        fn_wide = false_negative_mask(image, m_ave, uc, fn_lo - 10.0, fn_hi + 10.0)
        if np.any(m_fn.data & ~fn_wide.data):
            violations += 1
        fp_more = false_positive_mask(image, m_ave, uc, fp_lo + 5.0, fp_hi - 5.0)
        if np.any(m_fp.data & ~fp_more.data):
            violations += 1
    elapsed = perf_counter() - t0
    ok = violations == 0 and elapsed < budget_s
    announce(
        capsys, 2, "correction mask algebra", ok,
        f"1000 instances, {violations} violations, {elapsed:.2f}s < {budget_s:.0f}s",
    )
    assert violations == 0
    assert elapsed < budget_s


def test_criterion_3_uncertainty_formulas_rank_alike(capsys):
    # On 100 random frequency maps the variance and entropy forms must order
    # every pixel pair identically (pairs with |df| <= 1e-6 exempt), and the
    # thresholded uncertainty mask must be bit-identical under any positive
    # rescaling of the raw map.
    rng = np.random.Generator(np.random.PCG64(303))
    h = w = 8
    rank_violations = 0
    rescale_violations = 0
    scales = (1e-3, 0.5, 2.0, 3.7, 1e3, math.pi)
    cuts = (0.0, 0.25, 0.5, 0.9, 1.0)
    t0 = perf_counter()
    for _ in range(100):
        f = ScalarMap2D(rng.random((h, w)))
        v = uncertainty_raw(f, formula="variance").data.ravel()
        e = uncertainty_raw(f, formula="entropy").data.ravel()
        fv = f.data.ravel()
        dv = v[:, None] - v[None, :]
        de = e[:, None] - e[None, :]
        df = fv[:, None] - fv[None, :]
        considered = np.abs(df) > 1e-6
        agree = ((dv == 0) & (de == 0)) | (dv * de > 0)
        rank_violations += int(np.count_nonzero(considered & ~agree))
        vmap = ScalarMap2D(v.reshape(h, w))
        for t_uc in cuts:
            base = uncertainty_mask(vmap, t_uc)
            for s in scales:
                scaled = uncertainty_mask(ScalarMap2D(vmap.data * s), t_uc)
                if not np.array_equal(base.data, scaled.data):
                    rescale_violations += 1
    elapsed = perf_counter() - t0
    ok = rank_violations == 0 and rescale_violations == 0
    announce(
        capsys, 3, "uncertainty formulas rank alike", ok,
        f"100 maps, {rank_violations} rank and {rescale_violations} rescale "
        f"violations, {elapsed:.2f}s",
    )
    assert rank_violations == 0
    assert rescale_violations == 0


def test_criterion_4_correction_flattens_box_coarseness(capsys):
    # 20 phantoms (128x128, dim appendage the thresholding backend over-
    # segments into, plus a dark notch it misses) scored at fine and coarse
    # box sloppiness. Corrected masks must (a) beat plain averaging by at
    # least 0.02 mean Dice and (b) lose at most half as much Dice from fine
    # to coarse boxes as the single-box baseline loses.
    budget_s = 60.0
    backend = MockBackend(MockOracleConfig(intensity_threshold=60))
    cfg = PipelineConfig(
        n_samples=30, radius_ratio=4.0, t_ave=0.5, t_uc=0.1,
        t_fn_low=90.0, t_fn_high=200.0, t_fp_low=90.0, t_fp_high=200.0,
        seed=424242,
    )
    dataset = []
    t0 = perf_counter()
    for k in range(20):
        spec = PhantomSpec(
            dims=(128, 128), center=(64, 64), radii=(22, 17),
            fg_intensity=120, bg_intensity=30, noise_amplitude=6,
            fp_lobe=LobeSpec(length=12, thickness=24, intensity=70),
            fn_notch=NotchSpec(radius=4, intensity=45),
            seed=1000 + k,
        )
        image, gt = make_phantom(spec)
        dataset.append((image, gt, CoarsenessLevel.FINE))
        dataset.append((image, gt, CoarsenessLevel.COARSE))
    outcome = evaluate(dataset, cfg, backend)
    elapsed = perf_counter() - t0
    assert not outcome.failures

    def mean_dice(method, level=None):
        vals = [
            r.report.dice
            for r in outcome.rows
            if r.method == method and r.report.defined
            and (level is None or r.level == level)
        ]
        assert vals
        return float(np.mean(vals))

    gain = mean_dice("fnpc") - mean_dice("average")
    drop_single = mean_dice("single", "fine") - mean_dice("single", "coarse")
    drop_fnpc = mean_dice("fnpc", "fine") - mean_dice("fnpc", "coarse")
    ok = gain >= 0.02 and drop_fnpc <= 0.5 * drop_single and elapsed < budget_s
    announce(
        capsys, 4, "correction flattens box coarseness", ok,
        f"20 phantoms x 2 levels, corrected-vs-average gain {gain:+.4f} >= 0.02, "
        f"fine->coarse drop {drop_fnpc:+.4f} vs single {drop_single:+.4f}, "
        f"{elapsed:.1f}s < {budget_s:.0f}s",
    )
    assert gain >= 0.02
    assert drop_fnpc <= 0.5 * drop_single
    assert elapsed < budget_s


def test_criterion_5_volume_propagation_invariants(capsys):
    # 64^3 ellipsoid phantom: every consecutive recorded box pair must obey
    # the per-coordinate corner update rule exactly, the propagated volume
    # must reach Dice >= 0.85 against the phantom label, and a single-slice
    # volume must reduce bit-exactly to the 2-D pipeline.
    budget_s = 60.0
    spec = PhantomSpec(
        dims=(64, 64, 64), center=(32.0, 32.0, 32.0), radii=(20.0, 16.0, 22.0),
        fg_intensity=120, bg_intensity=30, noise_amplitude=4, seed=77,
    )
    volume, gt = make_phantom(spec)
    cfg = PipelineConfig(
        n_samples=12, radius_ratio=4.0, t_ave=0.5, t_uc=0.1,
        t_fn_low=90.0, t_fn_high=200.0, t_fp_low=90.0, t_fp_high=200.0,
        t_b=2, seed=555,
    )
    backend = MockBackend(MockOracleConfig(intensity_threshold=60))
    start = 32
    box = box_from_mask(gt[start], CoarsenessLevel.FINE, seed=5)
    t0 = perf_counter()
    result = run_ss2v(volume, start, box, cfg, backend)
    elapsed = perf_counter() - t0

    # Corner rule, re-derived from scratch: each coordinate moves to the
    # tight-box candidate iff the move is at most t_b, else stays.
    rule_violations = 0
    checked_pairs = 0
    for step in (1, -1):
        i = start
        while i + step in result.boxes_per_slice:
            prev_box = result.boxes_per_slice[i]
            cand = tight_box(result.per_slice_results[i].m_fnpc)
            expected = tuple(
                c if abs(c - p) <= cfg.t_b else p
                for p, c in zip(prev_box.as_tuple(), cand.as_tuple())
            )
            if result.boxes_per_slice[i + step].as_tuple() != expected:
                rule_violations += 1
            checked_pairs += 1
            i += step
    volume_dice = dice(result.mask_volume, gt)

    single = GrayVolume3D((volume[start],))
    reduced = run_ss2v(single, 0, box, cfg, backend)
    flat = run_fnpc_2d(volume[start], box, cfg, backend)
    bit_exact = (
        np.array_equal(reduced.mask_volume[0].data, flat.m_fnpc.data)
        and np.array_equal(reduced.per_slice_results[0].f_map.data, flat.f_map.data)
        and np.array_equal(reduced.per_slice_results[0].uc_raw.data, flat.uc_raw.data)
    )
    ok = (
        rule_violations == 0 and checked_pairs > 0 and volume_dice >= 0.85
        and bit_exact and elapsed < budget_s
    )
    announce(
        capsys, 5, "volume propagation invariants", ok,
        f"{checked_pairs} box pairs, {rule_violations} rule violations, "
        f"volume Dice {volume_dice:.4f} >= 0.85, single-slice bit-exact: "
        f"{bit_exact}, {elapsed:.1f}s < {budget_s:.0f}s",
    )
    assert rule_violations == 0
    assert checked_pairs > 0
    assert volume_dice >= 0.85
    assert bit_exact
    assert elapsed < budget_s


def test_criterion_6_metrics_match_brute_force(capsys):
    # 500 random 16x16 mask pairs: dice/assd/hd/hd95 must equal the all-pairs
    # oracle bit for bit; identity, known-distance, and translation
    # properties must hold exactly.
    rng = np.random.Generator(np.random.PCG64(606))
    h = w = 16
    budget_s = 10.0
    mismatches = 0
    t0 = perf_counter()
    for i in range(500):
        a = random_mask(rng, h, w, float(rng.uniform(0.2, 0.8)))
        b = random_mask(rng, h, w, float(rng.uniform(0.2, 0.8)))
        if i % 97 == 0:
            a = BinaryMask2D.zeros(w, h)
        report = compute_report(a, b)
        if report.dice != oracle_dice(a.data.tolist(), b.data.tolist()):
            mismatches += 1
        if a.is_empty or b.is_empty:
            if report.defined or not all(
                math.isnan(v) for v in (report.assd, report.hd, report.hd95)
            ):
                mismatches += 1
            continue
        o_assd, o_hd, o_hd95 = oracle_surface_metrics(a.data.tolist(), b.data.tolist())
        if (report.assd, report.hd, report.hd95) != (o_assd, o_hd, o_hd95):
            mismatches += 1

    property_violations = 0
    ident = random_mask(rng, h, w, 0.5)
    r_id = compute_report(ident, ident)
    if (r_id.dice, r_id.assd, r_id.hd, r_id.hd95) != (1.0, 0.0, 0.0, 0.0):
        property_violations += 1
    pa = np.zeros((h, w), np.uint8)
    pb = np.zeros((h, w), np.uint8)
    pa[3, 2] = 1
    pb[7, 5] = 1  # offset (3, 4): every surface distance is exactly 5
    r_px = compute_report(BinaryMask2D(pa), BinaryMask2D(pb))
    if (r_px.dice, r_px.assd, r_px.hd, r_px.hd95) != (0.0, 5.0, 5.0, 5.0):
        property_violations += 1
    base_a = np.zeros((h, w), np.uint8)
    base_b = np.zeros((h, w), np.uint8)
    base_a[2:8, 2:9] = 1
    base_b[4:9, 3:7] = 1
    shifted_a = np.roll(np.roll(base_a, 3, axis=0), 2, axis=1)
    shifted_b = np.roll(np.roll(base_b, 3, axis=0), 2, axis=1)
    r0 = compute_report(BinaryMask2D(base_a), BinaryMask2D(base_b))
    r1 = compute_report(BinaryMask2D(shifted_a), BinaryMask2D(shifted_b))
    if (r0.dice, r0.assd, r0.hd, r0.hd95) != (r1.dice, r1.assd, r1.hd, r1.hd95):
        property_violations += 1
    elapsed = perf_counter() - t0
    ok = mismatches == 0 and property_violations == 0 and elapsed < budget_s
    announce(
        capsys, 6, "metrics match brute force", ok,
        f"500 pairs, {mismatches} oracle mismatches, {property_violations} "
        f"property violations, {elapsed:.2f}s < {budget_s:.0f}s",
    )
    assert mismatches == 0
    assert property_violations == 0
    assert elapsed < budget_s


def test_criterion_7_end_to_end_determinism(capsys, tmp_path):
    # Both CLI entry points, run twice with the same seed and mock backend
    # into the same locations, must leave byte-identical files behind.
    runner = CliRunner()
    spec = PhantomSpec(
        dims=(96, 96), center=(48, 48), radii=(18, 14),
        fg_intensity=150, bg_intensity=25, noise_amplitude=5, seed=13,
    )
    image, gt = make_phantom(spec)
    save_gray_png(image, str(tmp_path / "image.png"))
    save_mask_png(gt, str(tmp_path / "gt.png"))
    box = box_from_mask(gt, CoarsenessLevel.MEDIUM, seed=4)
    box_text = ",".join(str(v) for v in box.as_tuple())
    (tmp_path / "dataset.json").write_text(json.dumps({
        "samples": [
            {"id": "p0", "image": "image.png", "gt": "gt.png", "level": "fine"},
            {"id": "p1", "image": "image.png", "gt": "gt.png", "level": "coarse"},
        ]
    }))

    def snapshot(root):
        out = {}
        for dirpath, _, names in os.walk(root):
            for name in names:
                path = os.path.join(dirpath, name)
                out[os.path.relpath(path, root)] = open(path, "rb").read()
        return out

    seg_out = tmp_path / "seg"
    seg_args = [
        "seg2d", str(tmp_path / "image.png"), "--box", box_text,
        "--out", str(seg_out), "--seed", "99",
        "--mock-threshold", "80", "--n-samples", "10",
    ]
    eval_out = tmp_path / "scores" / "run.csv"
    eval_args = [
        "eval", str(tmp_path / "dataset.json"), "--out", str(eval_out),
        "--seed", "99", "--mock-threshold", "80", "--n-samples", "10",
    ]
    for args in (seg_args, eval_args):
        result = runner.invoke(main, args, catch_exceptions=False)
        assert result.exit_code == 0, result.output
    first = {"seg": snapshot(seg_out), "eval": snapshot(tmp_path / "scores")}
    for args in (seg_args, eval_args):
        result = runner.invoke(main, args, catch_exceptions=False)
        assert result.exit_code == 0, result.output
    second = {"seg": snapshot(seg_out), "eval": snapshot(tmp_path / "scores")}

    identical = first == second
    n_files = sum(len(v) for v in first.values())
    differing = [
        f"{group}/{name}"
        for group in first
        for name in first[group]
        if first[group].get(name) != second[group].get(name)
    ]
    announce(
        capsys, 7, "end-to-end determinism", identical,
        f"{n_files} files byte-compared across reruns"
        + (f", differing: {differing}" if differing else ""),
    )
    assert first["seg"].keys() == second["seg"].keys()
    assert first["eval"].keys() == second["eval"].keys()
    assert identical
