import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faultlab.config import ConfigError, VisionParams
from faultlab.vision import (NOISE, EffectParams, detect_lanes, dbscan, dbscan_mask, edge_mask,
                             perturb, read_raw, render_scene, translate_image, write_raw)

VP = VisionParams()
CLEAN = render_scene(1.85, 0.0, 0.0)


def brute_dbscan(points, eps, min_pts):
    """Textbook density-connectivity labelling by exhaustive distances.

    Clusters are numbered in order of their first core point; a border point
    joins the cluster of its nearest core neighbour (ties to the lowest
    index), matching the implementation's convention.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    nb = dist <= eps
    core = nb.sum(1) >= min_pts
    labels = np.full(n, NOISE)
    c = 0
    for i in range(n):
        if not core[i] or labels[i] != NOISE:
            continue
        stack = [i]
        labels[i] = c
        while stack:
            j = stack.pop()
            for k in np.flatnonzero(nb[j] & core):
                if labels[k] == NOISE:
                    labels[k] = c
                    stack.append(k)
        c += 1
    for i in np.flatnonzero(~core):
        cand = np.flatnonzero(nb[i] & core)
        if cand.size:
            labels[i] = labels[cand[np.argmin(dist[i, cand])]]
    return labels


def same_partition(a, b):
    """Equal up to renumbering of clusters."""
    if not np.array_equal(a == NOISE, b == NOISE):
        return False
    pairs = set(zip(a[a != NOISE].tolist(), b[b != NOISE].tolist()))
    return len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})


def test_dbscan_two_groups():
    rng = np.random.default_rng(1)
    g = rng.normal(0, 1.0, (20, 2))
    labels = dbscan(np.vstack([g, g + [100, 0]]), 6.0, 5)
    assert sorted(set(labels.tolist())) == [0, 1]


def test_dbscan_all_noise():
    pts = np.stack([np.arange(30) * 10.0, np.zeros(30)], 1)
    assert (dbscan(pts, 6.0, 12) == NOISE).all()


def _random_sets():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        n = int(rng.integers(1, 201))
        centers = rng.uniform(0, 80, (int(rng.integers(1, 5)), 2))
        pts = centers[rng.integers(0, len(centers), n)] + rng.normal(0, 4, (n, 2))
        yield np.round(pts)  # lattice points exercise distance ties


def test_dbscan_matches_brute_force():
    for pts in _random_sets():
        for eps, mp in ((6.0, 12), (3.0, 4)):
            got, ref = dbscan(pts, eps, mp), brute_dbscan(pts, eps, mp)
            assert np.array_equal(got == NOISE, ref == NOISE)
            nb = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)) <= eps
            core = nb.sum(1) >= mp
            assert same_partition(got[core], ref[core])
            # a border point may join any cluster that reaches it
            for i in np.flatnonzero(~core & (got != NOISE)):
                assert got[i] in set(got[nb[i] & core].tolist())


@given(st.integers(0, 2**32 - 1), st.floats(0.02, 0.3))
def test_dbscan_mask_matches_generic(seed, density):
    mask = np.random.default_rng(seed).random((40, 60)) < density
    pts, labels = dbscan_mask(mask, 3.0, 5)
    assert np.array_equal(pts, np.argwhere(mask))
    assert same_partition(labels, brute_dbscan(pts, 3.0, 5))


def test_render_symmetric():
    cols = np.flatnonzero(CLEAN[-1] == VP.marker_intensity)
    assert np.allclose(sorted(cols), sorted(639 - cols))
    assert np.array_equal(CLEAN, render_scene(1.85, 0.0, 0.0))


def test_render_offset_shift():
    moved = render_scene(1.85, 0.5, 0.0)
    a = np.flatnonzero(CLEAN[-1] == VP.marker_intensity)
    b = np.flatnonzero(moved[-1] == VP.marker_intensity)
    assert np.array_equal(b, a - 50)


def test_translate():
    assert np.array_equal(translate_image(CLEAN, 0.0), CLEAN)
    assert np.array_equal(translate_image(CLEAN, 0.1), render_scene(1.85, 0.1, 0.0))
    back = translate_image(translate_image(CLEAN, 0.237), -0.237)
    cols = lambda im: np.flatnonzero(im[-1] == VP.marker_intensity)  # noqa: E731
    assert np.abs(cols(back) - cols(CLEAN)).max() <= 1


def test_raw_roundtrip(tmp_path):
    write_raw(CLEAN, tmp_path / "f.raw")
    assert (tmp_path / "f.raw").read_bytes().startswith(b"640 480\n")
    assert np.array_equal(read_raw(tmp_path / "f.raw"), CLEAN)


def test_effect_identities():
    assert np.array_equal(perturb(CLEAN, EffectParams("Rain", thickness=0), 1), CLEAN)
    img = np.full((4, 4), 200, np.uint8)
    out = perturb(img, EffectParams("Brightness", bias=(100, 100)), 1)
    assert (out == 255).all()


def test_occlusion_reproducible():
    p = EffectParams("Occlusion")
    assert np.array_equal(perturb(CLEAN, p, 42), perturb(CLEAN, p, 42))
    assert not np.array_equal(perturb(CLEAN, p, 42), perturb(CLEAN, p, 43))


@given(effect=st.sampled_from(["Rain", "Fog", "Snow", "Occlusion", "Contrast", "Brightness", "Blur"]),
       seed=st.integers(0, 2**32))
def test_perturb_pure_and_closed(effect, seed):
    p = EffectParams(effect)
    src = CLEAN.copy()
    a, b = perturb(src, p, seed), perturb(src, p, seed)
    assert np.array_equal(src, CLEAN)
    assert np.array_equal(a, b)
    assert a.dtype == np.uint8 and a.shape == CLEAN.shape


def test_effect_param_validation():
    with pytest.raises(ConfigError):
        EffectParams("Hail")
    with pytest.raises(ConfigError):
        EffectParams("Rain", thickness=11)
    with pytest.raises(ConfigError):
        EffectParams("Blur", blur_kind="median", kernel=7)
    with pytest.raises(ConfigError):
        EffectParams.from_dict({"effect": "Fog", "density": 3})


def test_pinned_draws_once():
    p = EffectParams("Fog").pinned(np.random.default_rng(0))
    lo, hi = p.fog_alpha
    assert lo == hi and 0.4 <= lo <= 0.9
    assert p.blur_kind is not None and p.kernel is not None


def test_edge_mask_marks_marker_edges():
    m = edge_mask(CLEAN, VP.sobel_threshold)
    assert m[-1].sum() == 8  # two columns per edge, four edges


def test_detect_clean_centered():
    det = detect_lanes(CLEAN)
    assert det.left_x == pytest.approx(-1.85, abs=0.1)
    assert det.right_x == pytest.approx(1.85, abs=0.1)


def test_detect_failure_on_blank():
    assert detect_lanes(np.full((480, 640), 40, np.uint8)) is None


def test_detect_under_small_blur():
    img = perturb(CLEAN, EffectParams("Blur", blur_kind="average", kernel=3), 0)
    det = detect_lanes(img)
    assert det.left_x == pytest.approx(-1.85, abs=0.15)
    assert det.right_x == pytest.approx(1.85, abs=0.15)


def _failure_rate(effect, n=20, **kw):
    fails = 0
    for s in range(n):
        rng = np.random.default_rng(s)
        p = EffectParams(effect, **kw).pinned(rng)
        det = detect_lanes(perturb(CLEAN, p, s))
        fails += det is None or abs(det.left_x + 1.85) > 0.5 or abs(det.right_x - 1.85) > 0.5
    return fails / n


def test_degradation_ordering():
    blur, fog, rain = _failure_rate("Blur"), _failure_rate("Fog"), _failure_rate("Rain")
    assert 0.0 <= blur <= fog < rain
