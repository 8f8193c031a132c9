import numpy as np
import pytest
from PIL import Image

from frost2ffpe.errors import GeometryError, SlideReadError
from frost2ffpe.wsi.slide import ArraySlide, RasterSlide, SlideRecord, open_slide


def test_record_rejects_nonpositive_dims():
    with pytest.raises(GeometryError):
        SlideRecord("s", "p", (0, 10), ((0, 1.0),))


def test_record_rejects_bad_downsample_order():
    with pytest.raises(GeometryError):
        SlideRecord("s", "p", (100, 100), ((0, 1.0), (1, 1.0)))
    with pytest.raises(GeometryError):
        SlideRecord("s", "p", (100, 100), ((0, 2.0),))


def test_level_for_magnification():
    rec = SlideRecord("s", "p", (1000, 800), ((0, 1.0), (1, 2.0), (2, 4.0)), base_magnification=20.0)
    assert rec.level_for_magnification(20.0) == 0
    assert rec.level_for_magnification(10.0) == 1
    assert rec.level_for_magnification(5.0) == 2
    with pytest.raises(GeometryError) as exc:
        rec.level_for_magnification(40.0)
    assert "available" in str(exc.value)


def test_array_slide_region_read():
    pixels = np.arange(64 * 48 * 3, dtype=np.uint32).reshape(48, 64, 3).astype(np.uint8)
    slide = ArraySlide(pixels, "mem")
    region = slide.read_region(8, 4, 0, (16, 12))
    assert np.array_equal(region, pixels[4:16, 8:24])
    with pytest.raises(GeometryError):
        slide.read_region(60, 0, 0, (16, 16))


def test_raster_slide_missing_file(tmp_path):
    with pytest.raises(SlideReadError) as exc:
        RasterSlide(tmp_path / "nope.png")
    assert "nope.png" in str(exc.value)


def test_raster_slide_single_level(tmp_path, rng):
    pixels = rng.integers(0, 255, size=(40, 60, 3), dtype=np.uint8)
    path = tmp_path / "slide.png"
    Image.fromarray(pixels).save(path)
    slide = open_slide(path)
    assert slide.record.base_dimensions == (60, 40)
    assert slide.record.magnification_levels == ((0, 1.0),)
    assert np.array_equal(slide.read_level(0), pixels)


def test_raster_slide_pyramid_tiff(tmp_path, rng):
    base = rng.integers(0, 255, size=(64, 128, 3), dtype=np.uint8)
    half = np.asarray(Image.fromarray(base).resize((64, 32)))
    quarter = np.asarray(Image.fromarray(base).resize((32, 16)))
    path = tmp_path / "pyramid.tiff"
    Image.fromarray(base).save(
        path, save_all=True, append_images=[Image.fromarray(half), Image.fromarray(quarter)]
    )
    slide = open_slide(path)
    assert slide.record.levels == (0, 1, 2)
    assert slide.record.downsample(1) == 2.0
    assert slide.record.downsample(2) == 4.0
    assert slide.level_dimensions(2) == (32, 16)
    # base coords map onto the level raster
    region = slide.read_region(16, 8, 1, (8, 8))
    assert np.array_equal(region, half[4:12, 8:16])
