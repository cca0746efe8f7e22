"""Acceptance criteria, one test each.

Every test records its criterion number so the terminal summary prints one
PASS/FAIL line per criterion; each also prints its own line when run with -s.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import stats

from conftest import load_json
from pqvrf import SecurityConfig, eval_vrf, gen, verify
from pqvrf.delegation import DelegationError, delegate_key, recover_delegated_key, verify_binding
from pqvrf.dleq import DleqProof, DleqStatement, commit, dleq_prove, dleq_verify, relations_hold, respond
from pqvrf.drbg import KeccakDrbg
from pqvrf.group import encode_scalar, get_group, group_exp, group_inv, group_mul
from pqvrf.keccak import keccak256
from pqvrf.ledger import EVENT_FINISHED, EVENT_SEED_READY, Ledger, Phase, canonical_state
from pqvrf.nist import BitSequence, closed_form_entropy, empirical_shannon_entropy, ones_ratio_blocks, run_suite
from pqvrf.nist import battery
from pqvrf.complexity import COMPONENTS, complexity_report
from pqvrf.protocol import RoundDriver
from pqvrf.ringsig import Ring, RingSig, VrfProof, ring_sign, ring_verify
from pqvrf.rlwe import (
    ByteSource,
    RingPoly,
    discrete_gaussian_pmf,
    fwd_ntt,
    get_params,
    inv_ntt,
    negacyclic_schoolbook,
    rlwe_decrypt,
    rlwe_enc2,
    rlwe_keygen,
    sampler_for,
)
from pqvrf.stream import StreamReader

pytestmark = pytest.mark.slow

R256 = get_params("R256")
TOY = get_group("toy64")


@contextmanager
def criterion(record_property, number, title):
    record_property("criterion", number)
    record_property("title", title)
    try:
        yield
    except BaseException:
        print(f"criterion {number:>2}: FAIL  {title}")
        raise
    print(f"criterion {number:>2}: PASS  {title}")


@pytest.fixture(scope="module")
def km_modp():
    return gen(SecurityConfig("modp2048", "R256", 5), KeccakDrbg(b"acceptance-keys"))


@pytest.fixture(scope="module")
def pipeline_stream():
    """16 x 2^20 bits of VRF output (2 MiB) and the seconds it took to produce."""
    keys = rlwe_keygen(R256, KeccakDrbg(b"acceptance-stream-keys"))
    reader = StreamReader(keys, 5, b"acceptance-stream")
    t0 = time.perf_counter()
    data = reader(16 * (1 << 20) // 8)
    return data, time.perf_counter() - t0


def test_01_ntt_matches_schoolbook(record_property):
    with criterion(record_property, 1, "NTT product == schoolbook negacyclic product, 1000 pairs, < 10 s"):
        r = np.random.default_rng(2024)
        t0 = time.perf_counter()
        mismatches = 0
        for _ in range(1000):
            a, b = r.integers(0, R256.q, R256.n), r.integers(0, R256.q, R256.n)
            prod = inv_ntt(fwd_ntt(RingPoly(R256, a)) * fwd_ntt(RingPoly(R256, b)))
            mismatches += not np.array_equal(prod.coeffs, negacyclic_schoolbook(a, b, R256.q))
        elapsed = time.perf_counter() - t0
        assert mismatches == 0
        assert elapsed < 10, f"{elapsed:.1f}s"


def test_02_rlwe_round_trip(record_property):
    with criterion(record_property, 2, "RLWE encrypt/decrypt of 1000 messages with 0 failures, < 30 s"):
        rng = KeccakDrbg(b"acceptance-rlwe")
        t0 = time.perf_counter()
        failed, bit_errors = 0, 0
        for i in range(1000):
            if i % 10 == 0:
                kp = rlwe_keygen(R256, rng)
            m = [rng.getrandbits(1) for _ in range(R256.n)]
            got = rlwe_decrypt(kp.r2, rlwe_enc2(kp.a, kp.p, m, ByteSource.from_rng(rng)))
            wrong = sum(x != y for x, y in zip(got, m))
            bit_errors += wrong
            failed += wrong > 0
        elapsed = time.perf_counter() - t0
        print(f"  rlwe: {failed} failed messages, {bit_errors} flipped bits, {elapsed:.1f}s")
        assert elapsed < 30, f"{elapsed:.1f}s"
        assert failed == 0, f"{failed}/1000 messages decrypted with bit errors ({bit_errors} bits)"


def test_03_knuth_yao_fidelity(record_property):
    with criterion(record_property, 3, "Knuth-Yao 1e6 samples: chi-square p > 0.001, |mean| < 0.02"):
        sampler = sampler_for(R256)
        raw = np.random.default_rng(99).integers(0, 256, (1_050_000, sampler.slot_bytes), dtype=np.uint8)
        values, ok = sampler.decode_slots(raw)
        samples = values[ok][:1_000_000]
        assert samples.size == 1_000_000
        pmf = [float(x) for x in discrete_gaussian_pmf(R256.sigma, R256.tail_bound)]
        support = np.arange(-R256.tail_bound, R256.tail_bound + 1)
        expected = np.array([pmf[abs(k)] for k in support]) * samples.size
        observed = np.bincount(samples + R256.tail_bound, minlength=support.size).astype(float)
        # pool the tails until every cell expects at least 5
        keep = expected >= 5
        lo, hi = np.argmax(keep), len(keep) - 1 - np.argmax(keep[::-1])
        exp_cells = np.concatenate(([expected[:lo].sum()], expected[lo:hi + 1], [expected[hi + 1:].sum()]))
        obs_cells = np.concatenate(([observed[:lo].sum()], observed[lo:hi + 1], [observed[hi + 1:].sum()]))
        exp_cells *= obs_cells.sum() / exp_cells.sum()
        p = stats.chisquare(obs_cells, exp_cells).pvalue
        mean = float(samples.mean())
        print(f"  knuth-yao: chi-square p={p:.4f}, mean={mean:+.5f}")
        assert p > 0.001
        assert abs(mean) < 0.02


def _ring(n, rng):
    sks = [rng.randrange(1, TOY.order_o) for _ in range(n)]
    return sks, Ring.from_pks([group_exp(TOY, TOY.generator_g, x) for x in sks])


def test_04_ring_signature(record_property):
    with criterion(record_property, 4, "ring signatures: complete for n=1..10, single-field tampering always rejected"):
        rng = KeccakDrbg(b"acceptance-ring")
        o = TOY.order_o
        verified = tampered = rejected = 0
        for n in range(1, 11):
            sks, ring = _ring(n, rng)
            for idx in range(n):
                seed, out = rng.randbytes(32), rng.randbytes(32)
                sig = ring_sign(TOY, sks[idx], idx, seed, out, ring)
                assert ring_verify(TOY, VrfProof(out, seed, sig), ring)
                verified += 1
                variants = []
                for i in range(n):
                    for delta in (1, o - 1, rng.randrange(2, o - 1)):
                        cs = list(sig.challenges)
                        cs[i] = (cs[i] + delta) % o
                        variants.append(VrfProof(out, seed, RingSig(tuple(cs), sig.responses)))
                        ss = list(sig.responses)
                        ss[i] = (ss[i] + delta) % o
                        variants.append(VrfProof(out, seed, RingSig(sig.challenges, tuple(ss))))
                for pos in range(32):
                    for mask in (0x01, 0x80):
                        s2 = bytearray(seed)
                        s2[pos] ^= mask
                        variants.append(VrfProof(out, bytes(s2), sig))
                        o2 = bytearray(out)
                        o2[pos] ^= mask
                        variants.append(VrfProof(bytes(o2), seed, sig))
                tampered += len(variants)
                rejected += sum(not ring_verify(TOY, v, ring) for v in variants)
        print(f"  ring: {verified} honest signatures verified, {rejected}/{tampered} tampered rejected")
        assert rejected == tampered


def test_05_dleq(record_property):
    with criterion(record_property, 5, "DLEQ toy example s=5 / check 8, 1000 honest proofs, 1e4 forgeries rejected"):
        # hand arithmetic on p=23, o=11
        p, o, g1, g2, x, r, c = 23, 11, 2, 4, 5, 3, 7
        h1, h2 = pow(g1, x, p), pow(g2, x, p)
        s_direct = (r + c * x) % o
        check_direct = pow(g1, s_direct, p) * pow(pow(h1, c, p), -1, p) % p
        assert (s_direct, check_direct) == (5, 8)
        toy23 = get_group("toy23")
        stmt = DleqStatement(g1, g2, h1, h2)
        t1, t2 = commit(toy23, stmt, r)
        s = respond(toy23, x, r, c)
        check = group_mul(toy23, group_exp(toy23, g1, s), group_inv(toy23, group_exp(toy23, h1, c)))
        assert (s, check, t1) == (5, 8, 8)
        assert relations_hold(toy23, stmt, t1, t2, c, s)

        rng = KeccakDrbg(b"acceptance-dleq")
        g, h = TOY.generator_g, TOY.generator_h
        honest = 0
        for i in range(1000):
            w = rng.randrange(1, TOY.order_o)
            st = DleqStatement(g, h, group_exp(TOY, g, w), group_exp(TOY, h, w))
            honest += dleq_verify(TOY, st, dleq_prove(TOY, w, st, i.to_bytes(4, "big"), rng))
        assert honest == 1000

        accepted = 0
        w = rng.randrange(1, TOY.order_o)
        st = DleqStatement(g, h, group_exp(TOY, g, w), group_exp(TOY, h, w))
        good = dleq_prove(TOY, w, st, b"ctx", rng)
        for i in range(10_000):
            kind = i % 4
            if kind == 0:  # random transcript
                forged = DleqProof(
                    group_exp(TOY, g, rng.randrange(1, TOY.order_o)),
                    group_exp(TOY, h, rng.randrange(1, TOY.order_o)),
                    rng.randrange(TOY.order_o),
                    b"ctx",
                )
                accepted += dleq_verify(TOY, st, forged)
            elif kind == 1:  # honest proof against a statement with unequal logs
                bad = DleqStatement(g, h, st.h1, group_exp(TOY, h, w + 1 + rng.randrange(TOY.order_o - 2)))
                accepted += dleq_verify(TOY, bad, good)
            elif kind == 2:  # response nudged
                delta = 1 + rng.randrange(TOY.order_o - 1)
                accepted += dleq_verify(TOY, st, DleqProof(good.t1, good.t2, (good.s + delta) % TOY.order_o, b"ctx"))
            else:  # replay under another context
                accepted += dleq_verify(TOY, st, DleqProof(good.t1, good.t2, good.s, rng.randbytes(8)))
        print(f"  dleq: 1000/1000 honest, {accepted}/10000 forgeries accepted")
        assert accepted == 0


def test_06_eval_determinism(record_property, km_modp):
    with criterion(record_property, 6, "100 repeated evaluations give byte-identical output and proof"):
        ring = km_modp.ring()
        seed = keccak256(b"acceptance-eval")
        first_out, first_pi = eval_vrf(seed, km_modp, ring, 2)
        blob = first_pi.to_bytes(km_modp.group)
        assert verify(km_modp.group, first_pi, ring)
        for _ in range(99):
            out, pi = eval_vrf(seed, km_modp, ring, 2)
            assert out == first_out
            assert pi.to_bytes(km_modp.group) == blob


def test_07_end_to_end_round(record_property, km_modp):
    with criterion(record_property, 7, "n=5 round reaches ComputationFinished, replay exact, tampering gives status 0"):
        d = RoundDriver(km_modp, KeccakDrbg(b"acceptance-e2e"), chain_seed=b"acceptance-e2e")
        res = d.run_round()
        assert res.status == 1
        assert [ev.kind for ev in d.ledger.state.event_log] == [EVENT_SEED_READY, EVENT_FINISHED]
        again = Ledger.replay(d.ledger.dump_log())
        assert canonical_state(again.state, again.chain) == canonical_state(d.ledger.state, d.ledger.chain)

        def flip(b, i=0):
            return b[:i] + bytes([b[i] ^ 0x40]) + b[i + 1:]

        g = km_modp.group
        filters = {
            "c1": lambda c1, c2, pi: (flip(c1, 5), c2, pi),
            "c2": lambda c1, c2, pi: (c1, flip(c2, 300), pi),
            "pi": lambda c1, c2, pi: (c1, c2, VrfProof.from_bytes(g, flip(pi.to_bytes(g), 80))),
        }
        for name, filt in filters.items():
            dt = RoundDriver(km_modp, KeccakDrbg(b"acceptance-e2e"), chain_seed=b"acceptance-e2e", submission_filter=filt)
            r = dt.run_round()
            assert r.status == 0, name
            assert dt.phase == Phase.SEED_READY and not dt.finished_events()


def test_08_nist_worked_examples(record_property):
    with criterion(record_property, 8, "SP800-22 worked examples: monobit, block frequency, runs and the other 8 within 1e-4"):
        fix = load_json("nist_fixtures.json")
        short = {c["test"]: c for c in fix["short"]}
        gate = {"frequency_monobit": 0.527089, "block_frequency": 0.801252, "runs": 0.147232}
        for name, want in gate.items():
            case = short[name]
            assert case["p"][0] == want
            got = getattr(battery, name)(BitSequence.from_bits(case["bits"]), **case["kwargs"]).p_value
            assert abs(got - want) < 1e-4, name

        for name in ("non_overlapping_template", "serial", "approximate_entropy", "cumulative_sums"):
            case = short[name]
            got = getattr(battery, name)(BitSequence.from_bits(case["bits"]), **case["kwargs"]).p_values
            assert all(abs(a - b) < 1e-4 for a, b in zip(got, case["p"])), name
        lr = fix["longest_run_128"]
        assert abs(battery.longest_run_of_ones(BitSequence.from_bits(lr["bits"])).p_value - lr["p"]) < 1e-4

        import mpmath

        n = 1_000_000
        mpmath.mp.prec = n + 64
        e_bits = BitSequence.from_bits(bin(int(mpmath.floor(mpmath.e * mpmath.mpf(2) ** (n - 2))))[2 : n + 2])
        mpmath.mp.prec = 53
        wanted = {
            "dft_spectral": ({}, 0.847187),
            "overlapping_template": ({"m": 9}, 0.110434),
            "linear_complexity": ({"m": 1000}, 0.845406),
        }
        for name, (kwargs, want) in wanted.items():
            got = getattr(battery, name)(e_bits, **kwargs).p_value
            assert abs(got - want) < 1e-4, name


def test_09_table_style_reproduction(record_property, pipeline_stream):
    with criterion(record_property, 9, "16 x 2^20 pipeline bits: pass rate >= 95%, mean p in [0.35, 0.65], < 10 min"):
        data, gen_seconds = pipeline_stream
        chunk = len(data) // 16
        t0 = time.perf_counter()
        report = run_suite(iter([data[i * chunk:(i + 1) * chunk] for i in range(16)]), 16, 1 << 20, 0.01)
        elapsed = gen_seconds + time.perf_counter() - t0
        total = report.total
        print(report.to_table(), end="")
        print(f"  suite: {total.total} results, pass {report.pass_rate:.4f}, mean p {total.average_p:.4f}, {elapsed:.0f}s")
        assert total.total == 176
        assert report.pass_rate >= 0.95
        assert 0.35 <= total.average_p <= 0.65
        assert elapsed < 600


def test_10_distribution_checks(record_property, pipeline_stream):
    with criterion(record_property, 10, "ones ratio in [0.48, 0.52], byte entropy >= 7.9 over 1 MB, closed form H(1,1) = 256"):
        data = pipeline_stream[0][: 1 << 20]
        _, mean = ones_ratio_blocks(BitSequence.from_bytes(data), 128)
        entropy = empirical_shannon_entropy(data)
        print(f"  distribution: ones ratio {mean:.5f}, byte entropy {entropy:.5f}")
        assert 0.48 <= mean <= 0.52
        assert entropy >= 7.9
        assert closed_form_entropy(1, 1) == 256


def test_11_complexity(record_property):
    with criterion(record_property, 11, "complexity contributions for k=256, n=10, M=1024, log p=11"):
        rep = complexity_report(256, 10, 1024, 11)
        assert [rep.raw[c] for c in COMPONENTS] == [256, 10, 10240, 110, 11]
        for c, want in zip(COMPONENTS, (8.0, 3.3, 13.3, 6.8, 3.5)):
            assert abs(rep.log2[c] - want) <= 0.1


def test_12_delegation_confidentiality(record_property, km_modp):
    with criterion(record_property, 12, "100 rounds never expose sk' on the ledger; 100/100 binding mismatches rejected"):
        g = km_modp.group
        d = RoundDriver(km_modp, KeccakDrbg(b"acceptance-conf"), chain_seed=b"acceptance-conf")
        seeds, outputs = set(), set()
        for _ in range(100):
            res = d.run_round()
            assert res.status == 1
            seeds.add(res.seed)
            outputs.add(res.outcome.vrf_output)
        assert len(seeds) == len(outputs) == 100
        text = (canonical_state(d.ledger.state, d.ledger.chain) + d.ledger.dump_log()).lower()
        for k in km_modp.participants:
            sk = k.delegation.sk
            for needle in (encode_scalar(g, sk).hex(), format(sk, "x"), str(sk)):
                assert needle not in text

        rng = KeccakDrbg(b"acceptance-binding")
        ring = km_modp.ring()
        n = len(km_modp.participants)
        rejected = 0
        for trial in range(100):
            src = trial % n
            dst = (src + 1 + trial // n % (n - 1)) % n
            pkg = delegate_key(g, km_modp.participants[src], dst, km_modp.offchain.pk_off, trial, rng)
            wrong_binding = not verify_binding(g, pkg, ring.pks[dst], trial)
            try:
                recover_delegated_key(g, km_modp.offchain.sk_off, pkg, ring, trial)
                refused = False
            except DelegationError:
                refused = True
            rejected += wrong_binding and refused
        print(f"  binding: {rejected}/100 mismatched packages rejected")
        assert rejected == 100
