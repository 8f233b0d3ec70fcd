"""Manifests, image I/O, preprocessing, and augmentation."""

import json

import numpy as np
import pytest

from sbsr.data import (
    BlankImageError,
    ImageFormatError,
    ManifestError,
    affine_warp,
    augment_sketch,
    ink_to_png_bytes,
    load_image,
    load_manifest,
    materialize_augmentations,
    png_bytes_to_ink,
    preprocess,
    save_pgm,
)
from sbsr.data.preprocess import ink_bbox


def write_pgm(path, pixels: np.ndarray):
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode())
        fh.write(pixels.astype(np.uint8).tobytes())


def manifest_lines(entries):
    return "\n".join(json.dumps(e) for e in entries) + "\n"


class TestManifest:
    def test_three_line_manifest(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_lines([
            {"id": "s1", "class_label": "cup", "domain": "sketch", "image_path": "s1.pgm"},
            {"id": "m_v1", "class_label": "cup", "domain": "view", "image_path": "a.pgm", "model_id": "m"},
            {"id": "m_v2", "class_label": "cup", "domain": "view", "image_path": "b.pgm", "model_id": "m"},
        ]))
        manifest = load_manifest(path)
        assert len(manifest) == 3
        assert len(manifest.sketches()) == 1 and len(manifest.views()) == 2

    def test_empty_file_is_valid(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(load_manifest(path)) == 0

    def test_duplicate_id_names_line(self, tmp_path):
        entries = [
            {"id": f"s{i}", "class_label": "c", "domain": "sketch", "image_path": "x.pgm"}
            for i in range(4)
        ]
        entries.append(entries[2] | {"id": "s1"})  # duplicate on line 5
        path = tmp_path / "dup.jsonl"
        path.write_text(manifest_lines(entries))
        with pytest.raises(ManifestError, match="line 5"):
            load_manifest(path)

    def test_view_without_model_id_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(manifest_lines([
            {"id": "v", "class_label": "c", "domain": "view", "image_path": "x.pgm"},
        ]))
        with pytest.raises(ManifestError, match="model_id"):
            load_manifest(path)

    def test_model_with_one_view_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(manifest_lines([
            {"id": "v1", "class_label": "c", "domain": "view", "image_path": "x.pgm",
             "model_id": "m"},
        ]))
        with pytest.raises(ManifestError, match="expected 2"):
            load_manifest(path)

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "domain": "sketch"}\n')
        with pytest.raises(ManifestError, match="line 1"):
            load_manifest(path)


class TestLoadImage:
    def test_all_bright_page_is_blank(self, tmp_path):
        path = tmp_path / "white.pgm"
        write_pgm(path, np.full((4, 4), 255))
        img = load_image(path)
        assert (img == 0).all()

    def test_all_dark_page_is_blank_with_warning(self, tmp_path, caplog):
        path = tmp_path / "black.pgm"
        write_pgm(path, np.zeros((4, 4)))
        with caplog.at_level("WARNING"):
            img = load_image(path)
        assert (img == 0).all()
        assert any("degenerate" in r.message for r in caplog.records)

    def test_checkerboard_is_exact(self, tmp_path):
        board = np.zeros((4, 4))
        board[::2, ::2] = 255
        board[1::2, 1::2] = 255
        path = tmp_path / "board.pgm"
        write_pgm(path, board)
        img = load_image(path)
        # mean is exactly 0.5: no inversion, bright squares load as ink
        expected = board / 255.0
        np.testing.assert_array_equal(img, expected)
        assert set(np.unique(img)) == {0.0, 1.0}

    def test_dark_strokes_on_white_become_ink(self, tmp_path):
        page = np.full((8, 8), 255)
        page[3, 2:6] = 0  # a dark stroke
        path = tmp_path / "stroke.pgm"
        write_pgm(path, page)
        img = load_image(path)
        assert img[3, 2] == 1.0 and img[0, 0] == 0.0

    def test_pgm_roundtrip_through_save(self, tmp_path, rng):
        ink = (rng.random((6, 6)) > 0.7).astype(np.float32)
        path = tmp_path / "ink.pgm"
        save_pgm(path, ink)
        np.testing.assert_array_equal(load_image(path), ink)

    def test_png_roundtrip(self, rng):
        ink = (rng.random((10, 10)) > 0.8).astype(np.float32)
        np.testing.assert_array_equal(png_bytes_to_ink(ink_to_png_bytes(ink)), ink)

    def test_wrong_maxval_rejected(self, tmp_path):
        path = tmp_path / "16bit.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 8)
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_unknown_format_rejected(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"GIF89a....")
        with pytest.raises(ImageFormatError):
            load_image(path)


class TestPreprocess:
    def test_centered_active_box_unchanged(self):
        img = np.zeros((100, 100), dtype=np.float32)
        img[5:95, 5:95] = 1.0  # exactly the 90x90 active box
        out = preprocess(img)
        assert out.shape == (1, 100, 100)
        np.testing.assert_allclose(out[0], img, atol=1e-6)

    def test_output_contract(self, rng):
        img = (rng.random((200, 200)) > 0.95).astype(np.float32)
        out = preprocess(img)
        assert out.shape == (1, 100, 100)
        assert out.dtype == np.float32
        assert out.min() >= 0.0 and out.max() <= 1.0
        # the ink box now spans the 90 px active area on its longer side
        r0, r1, c0, c1 = ink_bbox(out[0])
        assert max(r1 - r0, c1 - c0) + 1 >= 88  # rasterization tolerance

    def test_single_pixel_centers(self):
        img = np.zeros((50, 50), dtype=np.float32)
        img[10, 10] = 1.0
        out = preprocess(img)[0]
        total = out.sum()
        assert total > 0
        ys, xs = np.mgrid[0:100, 0:100]
        cy = float((ys * out).sum() / total)
        cx = float((xs * out).sum() / total)
        assert abs(cy - 49.5) <= 1.0 and abs(cx - 49.5) <= 1.0

    def test_blank_rejected(self):
        with pytest.raises(BlankImageError):
            preprocess(np.zeros((32, 32), dtype=np.float32))


class TestAugment:
    def test_identity_draw_is_exact(self, rng):
        img = (rng.random((40, 40)) > 0.8).astype(np.float32)
        out = augment_sketch(
            img, rng, rotation_deg=0.0, scale=1.0, translate=(0.0, 0.0)
        )
        np.testing.assert_allclose(out, img, atol=1e-6)

    def test_same_seed_bitwise_identical(self):
        img = np.zeros((32, 32), dtype=np.float32)
        img[10:20, 12:22] = 1.0
        a = augment_sketch(img, np.random.default_rng(9))
        b = augment_sketch(img, np.random.default_rng(9))
        assert a.tobytes() == b.tobytes()

    def test_rotation_roundtrip_keeps_centroid(self):
        img = np.zeros((60, 60), dtype=np.float32)
        img[20:40, 25:35] = 1.0
        rng = np.random.default_rng(3)
        fwd = augment_sketch(img, rng, rotation_deg=10.0, scale=1.0, translate=(0.0, 0.0))
        back = augment_sketch(fwd, rng, rotation_deg=-10.0, scale=1.0, translate=(0.0, 0.0))

        def centroid(x):
            ys, xs = np.mgrid[0 : x.shape[0], 0 : x.shape[1]]
            t = x.sum()
            return float((ys * x).sum() / t), float((xs * x).sum() / t)

        cy0, cx0 = centroid(img)
        cy1, cx1 = centroid(back)
        assert abs(cy1 - cy0) <= 1.5 and abs(cx1 - cx0) <= 1.5

    def test_materialize_writes_two_copies(self, tmp_path, rng):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        ink = np.zeros((30, 30), dtype=np.float32)
        ink[5:25, 5:25] = 1.0
        save_pgm(img_dir / "a.pgm", ink)
        mpath = tmp_path / "m.jsonl"
        mpath.write_text(manifest_lines([
            {"id": "a", "class_label": "c", "domain": "sketch", "image_path": "imgs/a.pgm"},
        ]))
        manifest = load_manifest(mpath)
        new_entries = materialize_augmentations(manifest, rng)
        assert [e.id for e in new_entries] == ["a_aug1", "a_aug2"]
        assert (img_dir / "a_aug1.pgm").exists() and (img_dir / "a_aug2.pgm").exists()
        for e in new_entries:
            assert load_image(manifest.base_dir / e.image_path).sum() > 0


class TestAffineWarp:
    def test_identity_matrix_exact(self, rng):
        img = rng.random((17, 23)).astype(np.float32)
        out = affine_warp(img, np.eye(3))
        np.testing.assert_array_equal(out, img)

    def test_translation_by_integer_pixels(self, rng):
        img = rng.random((10, 10)).astype(np.float32)
        m = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 3.0], [0.0, 0.0, 1.0]])
        out = affine_warp(img, m)
        np.testing.assert_allclose(out[3:, 2:], img[:-3, :-2], atol=1e-7)
        assert (out[:3, :] == 0).all() and (out[:, :2] == 0).all()
