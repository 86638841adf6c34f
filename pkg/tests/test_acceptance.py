"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import itertools
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from geonc.analytics import eta_subspace, prob_full_rank, residual_snc
from geonc.channel import ChannelScenario, monte_carlo
from geonc.cli import main
from geonc.exceptions import DecodeIncomplete, InvalidTransition
from geonc.gf import FieldMatrix, ReductionState, get_field, mat_rank, random_matrix
from geonc.lifecycle import CodingFunction, Event, State, lifecycle_step
from geonc.optimizer import (
    BETA0_HIGH,
    BETA0_LOW,
    connectivity,
    node_costs,
    optimize_checked,
    optimize_rate,
    uncoded_horizon,
)
from geonc.rate_region import area_ratio, default_axis, iso_product_curve, max_rate_e2e, region_grid, square_diagnostic
from geonc.rng import derive_trial_seed, make_rng
from geonc.snc import GeneratorMatrix, SncParams, encode, random_generation
from geonc.subspace import LiftedGenerator, mix, subspace_decode, subspace_encode
from geonc.geo import GeoStore


def report(num, ok, detail):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def test_c01_codec_roundtrip():
    t0 = time.perf_counter()
    rng = make_rng(2024)
    decoded = mismatches = 0
    for trial in range(1000):
        k = int(rng.integers(1, 21))
        n = k + int(rng.integers(0, 11))
        m = int(rng.integers(1, 33))
        q = int(rng.choice([1, 4, 8]))
        eps = float(rng.uniform(0, 0.5))
        p = SncParams(k, n, m, q)
        S = random_generation(p, rng)
        pk = encode(S, GeneratorMatrix.random(p, rng))
        state = ReductionState(k, m, p.field)
        for x in pk:
            if rng.random() >= eps:
                state.insert(x.coeffs, x.payload)
        if state.complete:
            decoded += 1
            mismatches += state.solution() != S
    dt = time.perf_counter() - t0
    report(1, mismatches == 0 and dt < 30 and decoded > 300,
           f"{decoded}/1000 trials reached rank k, {mismatches} mismatches, {dt:.1f}s")


def test_c02_analytic_vs_simulated():
    t0 = time.perf_counter()
    worst = 0.0
    parts = []
    ok = True
    for n in (22, 24, 28):
        for eps in (0.1, 0.15):
            st = monte_carlo(ChannelScenario(SncParams(20, n, 1, 8), (eps,), seed=1000 + n), 100_000)
            est = st.residual
            eta = residual_snc(20, n, 8, eps)
            z = abs(est.mean - eta) / est.stderr
            worst = max(worst, z)
            ok &= est.within(eta, 3.0)
            parts.append(f"n={n},eps={eps}: {est.mean:.5f}+-{est.stderr:.5f} vs {eta:.5f}")
    dt = time.perf_counter() - t0
    report(2, ok and dt < 120, f"max |z|={worst:.2f}, {dt:.0f}s; " + "; ".join(parts))


def test_c03_full_rank_enumeration():
    f = get_field(1)
    got = []
    for k in (1, 2, 3):
        hits = sum(
            mat_rank(FieldMatrix(np.array(b, np.uint8).reshape(k, k), f)) == k
            for b in itertools.product((0, 1), repeat=k * k)
        )
        got.append((k, hits / 2 ** (k * k), prob_full_rank(k, 2)))
    ok = all(a == b for _, a, b in got)
    report(3, ok, ", ".join(f"k={k}: enum {a} formula {b}" for k, a, b in got))


def test_c04_uncoded_horizons():
    a, b = uncoded_horizon(0.1, 0.80), uncoded_horizon(0.1, 0.85)
    report(4, (a, b) == (2, 1), f"h(0.80)={a}, h(0.85)={b}")


def test_c05_rate_region_width():
    t0 = time.perf_counter()
    ax = default_axis(61, 0.6)
    nc = region_grid(ax, ax, 0.05, 0.5, 1.0, 50, 8, "nc")
    e2e = region_grid(ax, ax, 0.05, 0.5, 1.0, 50, 8, "e2e")
    ar = area_ratio(nc, e2e)
    dt = time.perf_counter() - t0
    sym = np.array_equal(nc.feasible, nc.feasible.T) and np.array_equal(e2e.feasible, e2e.feasible.T)
    sym &= np.array_equal(nc.r_star, nc.r_star.T, equal_nan=True) and np.array_equal(e2e.r_star, e2e.r_star.T, equal_nan=True)
    nested = bool(np.all(region_grid(ax, ax, 0.15).feasible >= nc.feasible))
    iso = True
    for A in (0.9, 0.72, 0.5):
        e1, e2 = iso_product_curve(A, np.linspace(0, 0.6, 25))
        iso &= len({max_rate_e2e(x, y, 0.05).r_star for x, y in zip(e1, e2)} - {math.nan}) <= 1
    ok = 1.6 <= ar.ratio <= 2.3 and dt < 60 and sym and nested and iso
    report(5, ok, f"ratio={ar.ratio:.4f} ({ar.nc_cells}/{ar.e2e_cells}), symmetric={sym}, nested={nested}, iso-constant={iso}, {dt:.1f}s")


def test_c06_square_shape():
    d = square_diagnostic(0.1, 0.05, r_min=0.3, r_max=1.0, k=70)
    e2 = np.round(d.eps2, 6).tolist()
    ratio = d.eta2[e2.index(0.1)] / d.eta2[e2.index(0.07)]
    bp = d.breakpoint
    below = d.eps2 < bp
    flat = bool(np.all(d.r_star[below] == d.r0))
    ok = ratio >= 5 and not math.isnan(bp) and bp < 0.1 and flat
    # reference value at the smaller generation size, reported only
    d50 = square_diagnostic(0.1, 0.05, r_min=0.3, r_max=1.0, k=50)
    e50 = np.round(d50.eps2, 6).tolist()
    r50 = d50.eta2[e50.index(0.1)] / d50.eta2[e50.index(0.07)]
    report(6, ok, f"k=70: r0={d.r0:.3f}, eta2(0.07)={d.eta2[e2.index(0.07)]:.4f}, eta2(0.10)={d.eta2[e2.index(0.1)]:.4f}, "
                  f"ratio={ratio:.2f}, breakpoint={bp}, rate flat below it={flat}; k=50 ratio={r50:.2f}")


def test_c07_optimizer():
    rng = make_rng(77)
    agree = ternary_miss = 0
    non_qc = []
    for i in range(200):
        k = int(rng.integers(5, 60))
        m = int(rng.integers(1, 120))
        eps = float(rng.uniform(0, 0.4))
        hops = int(rng.integers(1, 12))
        rho0 = float(rng.uniform(0.5, 0.99))
        budget = node_costs(k, k + int(rng.integers(1, 40)), m).beta_r
        path = (eps,) * hops
        ex = optimize_rate(k, m, 8, path, rho0, budget, "exhaustive")
        got, qc = optimize_checked(k, m, 8, path, rho0, budget)
        if not qc:
            non_qc.append(i)
            ternary_miss += optimize_rate(k, m, 8, path, rho0, budget, "ternary") != ex
        agree += got == ex
    gam = {(e, b): connectivity(50, 100, 8, e, 0.8, b).gamma for e in (0.1, 0.15) for b in (BETA0_LOW, BETA0_HIGH)}
    mono = all(gam[(e, BETA0_HIGH)] >= gam[(e, BETA0_LOW)] for e in (0.1, 0.15))
    hi = gam[(0.1, BETA0_HIGH)]
    ok = agree == 200 and mono and hi >= 10
    report(7, ok, f"checked search == exhaustive {agree}/200; non-quasi-concave instances {non_qc} "
                  f"logged and scanned (plain ternary would miss {ternary_miss}); "
                  f"gamma={ {f'{e},{int(b)}': g for (e, b), g in gam.items()} }, high-budget gamma={hi:g}")


def test_c08_subspace_noncoherence():
    rng = make_rng(8)
    bad = used = 0
    for _ in range(500):
        q = int(rng.choice([1, 8]))
        f = get_field(q)
        k = int(rng.integers(1, 9))
        n = k + int(rng.integers(0, 4))
        m = int(rng.integers(1, 9))
        X = random_matrix(k, m, f, rng)
        pk = subspace_encode(X, LiftedGenerator.random(k, n, f, rng))
        M = random_matrix(n, n, f, rng)
        while mat_rank(M) < n:
            M = random_matrix(n, n, f, rng)
        used += 1
        bad += subspace_decode(mix(pk, M, k), k, m, f) != X
    report(8, bad == 0, f"{used} invertible mixers, {bad} decode changes")


def test_c09_lifecycle():
    declared = {
        (State.INACTIVE, Event.REQUEST_ACTIVATE): State.INSTANTIATING,
        (State.INSTANTIATING, Event.INSTANTIATION_ACK): State.ACTIVE,
        (State.ACTIVE, Event.STATS_UPDATE): State.ACTIVE,
        (State.ACTIVE, Event.MONITOR_TICK): State.ACTIVE,
        (State.ACTIVE, Event.REQUEST_TERMINATE): State.TERMINATING,
        (State.TERMINATING, Event.TERMINATION_ACK): State.INACTIVE,
    }
    table_ok = invalid = 0
    for s, e in itertools.product(State, Event):
        try:
            nxt, _ = lifecycle_step(s, e)
            table_ok += declared.get((s, e)) == nxt
        except InvalidTransition:
            invalid += (s, e) not in declared
    fn = CodingFunction(GeoStore(), ())
    for ev in ("RequestActivate", "InstantiationAck", "RequestTerminate", "TerminationAck"):
        fn.handle(ev)
    ok = table_ok == 6 and invalid == 18 and fn.state is State.INACTIVE
    report(9, ok, f"declared pairs correct {table_ok}/6, undeclared rejected {invalid}/18, cycle ends {fn.state.value}")


def test_c10_cli_determinism(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cfg.json").write_text(json.dumps({"k": 8, "n": [9, 10], "paths": [[0.1], [0.1, 0.2]], "trials": 300, "seed": 4}))
    (tmp_path / "recs.csv").write_text("node_id,peer_id,lat,lon,eps_est,samples,updated_at\nA,B,1,2,0.1,4,5\nB,C,1,2,0.12,4,5\n")
    (tmp_path / "ev.txt").write_text("RequestActivate\nInstantiationAck\nMonitorTick\nRequestTerminate\nTerminationAck\n")
    commands = [
        ["analyze", "--k", "50", "--eps", "0.1,0.1", "-o", "out.txt"],
        ["simulate", "--config", "cfg.json", "-o", "out.txt"],
        ["rate-region", "--grid", "21", "-o", "out.txt"],
        ["rate-region", "--diagnostic", "0.1", "--r-min", "0.3", "--k", "70", "-o", "out.txt"],
        ["optimize", "--k", "50", "--eps", "0.1,0.1,0.1", "--beta0", str(BETA0_LOW), "-o", "out.txt"],
        ["connectivity", "--k", "50", "--eps", "0.1,0.15", "--beta0", f"{BETA0_LOW},{BETA0_HIGH}", "-o", "out.txt"],
        ["geo", "ingest", "recs.csv", "--store", "store.csv", "-o", "out.txt"],
        ["lifecycle", "--script", "ev.txt", "--store", "store.csv", "--path", "A,B,C", "-o", "out.txt"],
    ]
    same = 0
    for cmd in commands:
        outs = []
        for _ in range(2):
            if (tmp_path / "store.csv").exists() and cmd[0] == "geo":
                (tmp_path / "store.csv").unlink()
            assert main(cmd) == 0, cmd
            outs.append((tmp_path / "out.txt").read_bytes())
        same += outs[0] == outs[1]
    report(10, same == len(commands), f"{same}/{len(commands)} commands byte-identical on rerun")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
