"""Smoke tests for the python extension: a few pinned values per module."""

import math

import numpy as np

import spkanon


def check(name, cond):
    if not cond:
        raise SystemExit(f"FAIL {name}")
    print(f"ok {name}")


def test_soft_distribution():
    cb = spkanon.SoftUnitCodebook(
        embeddings=np.array([[1.0, 0.0], [0.0, 1.0]]),
        projection=np.eye(2),
        temperature=0.1,
    )
    p = spkanon.soft_distribution(np.array([1.0, 0.0]), cb)
    expected = math.exp(10.0) / (math.exp(10.0) + 1.0)
    check("soft_distribution sum", abs(p.sum() - 1.0) < 1e-12)
    check("soft_distribution value", abs(p[0] - expected) < 1e-9)

    loss, d_z, d_w = spkanon.ce_loss(np.array([1.0, 0.0]), cb, 0)
    check("ce_loss shape", d_z.shape == (2,) and d_w.shape == (2, 2))
    check("ce_loss value", loss >= 0.0)


def test_metrics():
    eer, _ = spkanon.compute_eer(
        [0.9, 0.7, 0.6, 0.65, 0.3, 0.2], [1, 1, 1, 0, 0, 0]
    )
    check("eer example", abs(eer - 100.0 / 3.0) < 1e-9)
    dcf = spkanon.compute_min_dcf([0.5, 0.5], [1, 0])
    check("min_dcf degenerate", abs(dcf - 1.0) < 1e-12)
    check("wer", abs(spkanon.error_rate("a b c", "a x c d") - 200.0 / 3.0) < 1e-9)


def test_pool():
    rng = np.random.default_rng(0)
    pool = spkanon.EmbeddingPool()
    for i in range(30):
        v = rng.normal(size=8)
        v /= np.linalg.norm(v)
        gender = "female" if i % 2 == 0 else "male"
        pool.add(spkanon.SpeakerEmbedding(v, f"spk{i}", gender))
    src = spkanon.SpeakerEmbedding(np.eye(8)[0], "src", "female")
    a = spkanon.generate_pseudo_embedding(pool, src, n_far=10, n_avg=4, seed=7)
    b = spkanon.generate_pseudo_embedding(pool, src, n_far=10, n_avg=4, seed=7)
    check("pseudo determinism", np.array_equal(a.vector, b.vector))
    check("pseudo unit norm", abs(np.linalg.norm(a.vector) - 1.0) < 1e-12)
    check("pseudo gender", a.gender == "female")
    check("pseudo id", a.speaker_id == "pseudo:src:7")
    check(
        "cosine",
        abs(spkanon.cosine_distance(np.array([1.0, 0.0]), np.array([0.0, 1.0])) - 1.0)
        < 1e-12,
    )


def speech_like(n=6400, pitch_hz=120.0, sr=16000):
    rng = np.random.default_rng(3)
    excitation = np.zeros(n)
    excitation[:: int(sr / pitch_hz)] = 1.0
    excitation += 0.01 * rng.uniform(-1.0, 1.0, size=n)
    out = excitation
    for freq, bw in ((500.0, 80.0), (1500.0, 120.0), (2500.0, 160.0)):
        r = math.exp(-math.pi * bw / sr)
        a1, a2 = 2.0 * r * math.cos(2.0 * math.pi * freq / sr), -r * r
        y = np.zeros(n)
        y1 = y2 = 0.0
        for i in range(n):
            y[i] = out[i] + a1 * y1 + a2 * y2
            y2, y1 = y1, y[i]
        out = y
    return 0.7 * out / np.abs(out).max()


def test_dsp():
    t = np.arange(16000) / 16000.0
    tone = 0.5 * np.sin(2 * np.pi * 220.0 * t)
    mel = spkanon.mel_spectrogram(tone, n_fft=512, win=400, hop=160, n_mels=64)
    check("mel shape", mel.shape[0] == 64 and mel.shape[1] > 90)
    check("mel nonneg", (mel >= 0.0).all())

    voice = speech_like()
    out = spkanon.mcadams_anonymize(voice, alpha=1.0)
    rel = np.linalg.norm(out - voice) / np.linalg.norm(voice)
    check("mcadams identity", rel <= 1e-3)
    shifted = spkanon.mcadams_anonymize(voice, alpha=0.8)
    rel = np.linalg.norm(shifted - voice) / np.linalg.norm(voice)
    check("mcadams shifts formants", rel > 1e-3)

    f0, voiced = spkanon.extract_f0(tone)
    interior = slice(3, len(f0) - 3)
    check("f0 voiced", voiced[interior].all())
    check("f0 value", np.abs(f0[interior] - 220.0).max() <= 3.0)


def test_assembly_and_losses():
    up = spkanon.upsample_frames(np.array([[0.0], [2.0]]), 2, mode="linear")
    check("upsample", np.allclose(up.ravel(), [0.0, 1.0, 2.0, 2.0]))

    fm = spkanon.feature_matching_loss([[[1.0, 2.0]]], [[[2.0, 4.0]]])
    check("fm example", abs(fm - 1.5) < 1e-12)
    adv_g, adv_d = spkanon.adversarial_losses([[0.8]], [[0.5]])
    check("adv examples", abs(adv_g - 0.25) < 1e-12 and abs(adv_d - 0.29) < 1e-12)

    spk = spkanon.SpeakerEmbedding(np.array([0.6, 0.8]), "s", "male")
    z = spkanon.assemble(
        np.full((5, 3), 0.25), np.full(10, 100.0), [True] * 10, spk
    )
    check("assemble shape", z.shape == (10, 3 + 2 + 2))


def test_scenario():
    rng = np.random.default_rng(1)
    enroll = spkanon.EmbeddingPool()
    test = spkanon.EmbeddingPool()
    trials = []
    for s in range(4):
        v = rng.normal(size=8)
        v /= np.linalg.norm(v)
        enroll.add(spkanon.SpeakerEmbedding(v, f"spk{s}", "female"))
        test.add(spkanon.SpeakerEmbedding(v, f"spk{s}-utt", "female"))
        for o in range(4):
            trials.append((f"spk{o}", f"spk{s}-utt", o == s))
    report = spkanon.run_scenario(enroll, test, trials, scenario="OO")
    check("scenario eer", report["eer_percent"] == 0.0)
    check("scenario counts", report["trials"] == 16)


def main():
    test_soft_distribution()
    test_metrics()
    test_pool()
    test_dsp()
    test_assembly_and_losses()
    test_scenario()
    print("python smoke tests passed")


if __name__ == "__main__":
    main()
